from math import comb

import numpy as np
import pytest

from attrakt.polycore import Polynomial
from attrakt.sdp import SdpStatus
from attrakt.sosprog import BilinearError, DegreeOverflowError, SosProgram, gram_basis, monomial_basis

from conftest import poly


def x1(text):
    return poly(text, ["x"])


def close(p, q, tol):
    return all(abs(p.coeff(m) - q.coeff(m)) <= tol for m in set(p.terms) | set(q.terms))


def test_monomial_basis_examples():
    assert monomial_basis(2, 1, 1) == [(1, 0), (0, 1)]
    assert monomial_basis(2, 0, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(monomial_basis(3, 1, 2)) == 9


@pytest.mark.parametrize("n, lo, hi", [(1, 0, 5), (2, 2, 4), (3, 0, 3), (4, 1, 2)])
def test_monomial_basis_count(n, lo, hi):
    assert len(monomial_basis(n, lo, hi)) == sum(comb(n + d - 1, d) for d in range(lo, hi + 1))


def test_square_is_sos():
    prog = SosProgram(1)
    prog.add_sos(x1("(x^2 + 1)^2"), "c")
    sol = prog.solve()
    assert sol.feasible
    total = Polynomial.zero(1)
    for basis, Q in sol.constraint_grams("c"):
        assert np.linalg.eigvalsh(Q).min() >= -1e-7
        z = [Polynomial(1, {m: 1.0}) for m in basis]
        for i in range(len(z)):
            for j in range(len(z)):
                total = total + z[i] * z[j] * float(Q[i, j])
    assert np.allclose([total.coeff((k,)) for k in range(5)], [1, 0, 2, 0, 1], atol=1e-7)


def test_negative_square_is_infeasible():
    prog = SosProgram(1)
    prog.add_sos(x1("-x^2"))
    assert prog.solve().status == SdpStatus.PRIMAL_INFEASIBLE


def test_maximize_scalar_and_extract():
    prog = SosProgram(1)
    b = prog.new_scalar()
    prog.add_sos(x1("x^2 + 1") - b * x1("2*x"))
    prog.maximize(b)
    sol = prog.solve()
    assert sol.feasible
    # discriminant oracle: 4b^2 - 4 <= 0
    assert sol.scalar(b) == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(1.0, abs=1e-6)
    ext = sol.value(x1("x^2 + 1") - b * x1("2*x"))
    assert close(ext, x1("x^2 - 2*x + 1"), 1e-5)


def test_unused_decision_poly_extracts_zero():
    prog = SosProgram(2)
    q = prog.new_free_poly(3)
    prog.add_sos(poly("x1^2 + x2^2"))
    sol = prog.solve()
    assert sol.feasible
    assert sol.value(q).is_zero()


def test_extract_respects_basis_support():
    prog = SosProgram(2)
    basis = [(1, 0), (1, 1)]
    q = prog.new_free(basis)
    prog.add_sos(q + poly("x1^2 + x2^2 + 1"))
    prog.add_eq(q - poly("0.5*x1 + 0.25*x1*x2"))
    sol = prog.solve()
    assert sol.feasible
    v = sol.value(q)
    assert set(v.terms) <= set(basis)
    assert close(v, poly("0.5*x1 + 0.25*x1*x2"), 1e-7)


def test_bilinear_products_rejected():
    prog = SosProgram(1)
    a = prog.new_free_poly(1)
    s = prog.new_sos(1)
    with pytest.raises(BilinearError):
        _ = a * s
    # constant * decision is fine
    _ = (a * x1("x^2")) * 3.0


def test_degree_overflow():
    prog = SosProgram(1)
    with pytest.raises(DegreeOverflowError):
        prog.add_sos(x1("x^6 + 1"), max_half_degree=2)


def test_hand_gram_reproduces_coefficients():
    prog = SosProgram(1)
    prog.add_sos(x1("x^4 + 2*x^2 + 1"), "c")
    sdp = prog.compile()
    # parity trim splits [1, x, x^2] into even [1, x^2] and odd [x]
    assert [g.basis for g in prog.grams] == [[(0,), (2,)], [(1,)]]
    full = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])
    X = [full[np.ix_([0, 2], [0, 2])], full[np.ix_([1], [1])]]
    assert np.array_equal(sdp.apply_A(X), sdp.b)


def test_parity_trim_and_newton_box():
    assert gram_basis([(4, 0), (0, 4), (2, 2)], 2) == [[(2, 0), (1, 1), (0, 2)]]
    blocks = gram_basis([(2,), (4,), (0,)], 1)
    assert blocks == [[(0,), (2,)], [(1,)]]
    assert gram_basis([(1,), (2,)], 1) == [[(1,)]]


def _gram_form(basis, Q, z):
    Z = np.stack([np.prod(z ** np.array(m), axis=-1) for m in basis], axis=-1)
    return np.einsum("ki,ij,kj->k", Z, Q, Z)


def test_gram_identity_and_nonnegativity(rng):
    # a small Lyapunov-style program: find V with V - eps|x|^2 and -dV/dt - eps|x|^2 SOS
    f = [poly("-x1 - x1^3 + x2"), poly("-x2 - x2^3")]
    prog = SosProgram(2)
    r2 = poly("x1^2 + x2^2")
    # fixing the quadratic part keeps the feasible set from being a cone
    V = prog.new_free_poly(4, 3) + r2
    prog.add_sos(V - r2 * 1e-3, "pos")
    prog.add_sos(-V.lie_derivative(f) - r2 * 1e-3, "dec")
    sol = prog.solve()
    assert sol.feasible
    z = rng.uniform(-2, 2, size=(100, 2))
    for c in prog.constraints:
        expr = sol.value(c.expr)
        gram_sum = sum(_gram_form(basis, Q, z) for basis, Q in sol.constraint_grams(c.name))
        assert np.max(np.abs(expr.evaluate(z) - gram_sum)) <= 1e-6
        for _, Q in sol.constraint_grams(c.name):
            assert np.linalg.eigvalsh(Q).min() >= -1e-7
    zz = rng.uniform(-2, 2, size=(1000, 2))
    assert sol.value(prog.constraints[0].expr).evaluate(zz).min() >= -1e-6
    assert sol.value(prog.constraints[1].expr).evaluate(zz).min() >= -1e-6


def test_sos_decision_poly_nonnegative(rng):
    prog = SosProgram(2)
    s = prog.new_sos(2, 1)
    prog.add_eq(s - poly("x1^4 + x1^2*x2^2 + 2*x2^2 - 2*x1*x2 + x1^2"))
    sol = prog.solve()
    assert sol.feasible
    assert sol.value(s).evaluate(rng.uniform(-2, 2, size=(1000, 2))).min() >= -1e-6
