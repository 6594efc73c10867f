import numpy as np
import pytest

from attrakt.sdp import (BACKENDS, Block, SdpProblem, SdpStatus, dump_sparse, hsd_solve, load_sparse,
                         register_backend, solve, verify_solution)


def _single_block(C, As, b):
    n = len(C)
    return SdpProblem([Block("s", n)], [np.asarray(C, float)], [np.asarray(As, float).reshape(-1, n, n)], b)


def _trace_problem():
    # min tr(X) s.t. X11 = 1
    return _single_block(np.eye(2), [[[1, 0], [0, 0]]], [1.0])


def test_trace_example():
    prob = _trace_problem()
    sol = solve(prob)
    assert sol.status == SdpStatus.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(sol.X[0], [[1, 0], [0, 0]], atol=1e-6)
    rep = verify_solution(prob, sol)
    assert rep.primal_residual <= 1e-8 and rep.dual_residual <= 1e-8
    assert rep.worst_min_eig >= -1e-9


def test_negative_diagonal_is_infeasible():
    prob = _single_block(np.zeros((2, 2)), [[[1, 0], [0, 0]]], [-1.0])
    sol = solve(prob)
    assert sol.status == SdpStatus.PRIMAL_INFEASIBLE
    # Farkas certificate: A'y + S = 0, S psd, b'y = 1
    y, S = sol.ray["y"], sol.ray["S"]
    assert prob.b @ y == pytest.approx(1.0)
    resid = prob.apply_At(y)[0] + S[0]
    assert np.max(np.abs(resid)) <= 1e-6
    assert np.linalg.eigvalsh(S[0]).min() >= -1e-8


def test_min_eigen_direction_example():
    C = [[0.0, 1.0], [1.0, 0.0]]
    prob = _single_block(C, [np.eye(2)], [1.0])
    sol = solve(prob)
    assert sol.optimal
    # oracle: min eigenvalue of C and its eigenvector
    w, V = np.linalg.eigh(C)
    assert sol.primal_objective == pytest.approx(w[0], abs=1e-7)
    assert np.allclose(sol.X[0], np.outer(V[:, 0], V[:, 0]), atol=1e-5)
    assert np.allclose(sol.X[0], 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-5)


def test_verify_detects_perturbation():
    prob = _trace_problem()
    sol = solve(prob)
    sol.X[0] = sol.X[0] + np.array([[1.0, 0.0], [0.0, 0.0]])
    assert verify_solution(prob, sol).primal_residual == pytest.approx(1.0, abs=1e-6)


def _random_feasible(rng, sizes, m, with_lp=0):
    blocks = [Block("s", s) for s in sizes]
    X0 = []
    for s in sizes:
        G = rng.normal(size=(s, s))
        X0.append(G @ G.T + 0.5 * np.eye(s))
    if with_lp:
        blocks.append(Block("l", with_lp))
        X0.append(rng.uniform(0.5, 2.0, with_lp))
    A = []
    for blk in blocks:
        if blk.kind == "s":
            R = rng.normal(size=(m, blk.size, blk.size))
            A.append(R + R.transpose(0, 2, 1))
        else:
            A.append(rng.normal(size=(m, blk.size)))
    # C = A'y0 + S0 with S0 interior keeps the dual strictly feasible too
    y0 = rng.normal(size=m)
    C = []
    for blk, Aj in zip(blocks, A):
        if blk.kind == "s":
            G = rng.normal(size=(blk.size, blk.size))
            C.append(np.tensordot(y0, Aj, axes=1) + G @ G.T + 0.5 * np.eye(blk.size))
        else:
            C.append(Aj.T @ y0 + rng.uniform(0.5, 2.0, blk.size))
    prob = SdpProblem(blocks, C, A, np.zeros(m))
    prob.b = prob.apply_A(X0)
    return prob


def test_random_feasible_verified():
    rng = np.random.default_rng(3)
    prob = _random_feasible(rng, [3], 4)
    sol = solve(prob)
    assert sol.optimal
    assert verify_solution(prob, sol).worst_min_eig >= -1e-8


def test_random_strictly_feasible_instances():
    rng = np.random.default_rng(11)
    for k in range(50):
        sizes = list(rng.integers(1, 6, size=int(rng.integers(1, 4))))
        m = int(rng.integers(1, 10))
        prob = _random_feasible(rng, sizes, m, with_lp=int(k % 3))
        sol = solve(prob)
        assert sol.status == SdpStatus.OPTIMAL, k
        assert sol.iterations <= 100
        assert sol.gap <= 1e-8
        rep = verify_solution(prob, sol)
        # the solver's residuals are relative to 1 + |b| in the equilibrated rows
        assert rep.primal_residual <= 1e-7 * (1.0 + np.linalg.norm(prob.b))
        assert rep.worst_min_eig >= -1e-8
        # weak duality on iterates that are feasible to tolerance
        for h in sol.history:
            if h["pres"] <= 1e-8 and h["dres"] <= 1e-8:
                assert h["pobj"] >= h["dobj"] - 1e-7 * (1.0 + abs(h["pobj"]) + abs(h["dobj"]))


def test_planted_infeasibility():
    rng = np.random.default_rng(5)
    for k in range(10):
        prob = _random_feasible(rng, [3, 2], 3)
        e = np.zeros((1, 3, 3))
        j = k % 3
        e[0, j, j] = 1.0
        A = [np.concatenate([prob.A[0], e]), np.concatenate([prob.A[1], np.zeros((1, 2, 2))])]
        bad = SdpProblem(prob.blocks, prob.C, A, np.append(prob.b, -1.0))
        assert solve(bad).status == SdpStatus.PRIMAL_INFEASIBLE


def test_dual_infeasible_lp():
    # min -x  s.t.  x - y = 0, x, y >= 0 is unbounded below
    prob = SdpProblem([Block("l", 2)], [np.array([-1.0, 0.0])], [np.array([[1.0, -1.0]])], [0.0])
    sol = solve(prob)
    assert sol.status == SdpStatus.DUAL_INFEASIBLE
    ray = sol.ray["X"][0]
    assert prob.objective(sol.ray["X"]) < 0 and ray.min() >= -1e-8


def test_free_block():
    # min t  s.t.  t - X11 = 0, X12 = 1 (X 2x2 psd, X22 = 1): t = X11 >= 1
    A_free = np.array([[1.0], [0.0], [0.0]])
    A_s = np.zeros((3, 2, 2))
    A_s[0, 0, 0] = -1.0
    A_s[1, 0, 1] = A_s[1, 1, 0] = 0.5
    A_s[2, 1, 1] = 1.0
    prob = SdpProblem([Block("f", 1), Block("s", 2)], [np.array([1.0]), np.zeros((2, 2))], [A_free, A_s],
                      [0.0, 1.0, 1.0])
    sol = solve(prob)
    assert sol.optimal
    assert sol.X[0][0] == pytest.approx(1.0, abs=1e-6)


def test_against_external_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(21)
    for _ in range(5):
        prob = _random_feasible(rng, [4], 5)
        X = cp.Variable((4, 4), PSD=True)
        cons = [cp.trace(prob.A[0][i] @ X) == prob.b[i] for i in range(prob.m)]
        ref = cp.Problem(cp.Minimize(cp.trace(prob.C[0] @ X)), cons)
        ref.solve(solver=cp.CLARABEL)
        sol = solve(prob)
        assert sol.optimal
        assert sol.primal_objective == pytest.approx(ref.value, rel=1e-6, abs=1e-6)


def test_dump_load_round_trip():
    rng = np.random.default_rng(2)
    prob = _random_feasible(rng, [3, 2], 4, with_lp=2)
    back = load_sparse(dump_sparse(prob))
    assert [b for b in back.blocks] == prob.blocks
    assert np.array_equal(back.b, prob.b)
    for a, b in zip(back.A + back.C, prob.A + prob.C):
        assert np.allclose(a, b, rtol=0, atol=0)


def test_backend_selection(monkeypatch):
    calls = []

    def fake(problem, tol_feas, tol_gap, max_iters):
        calls.append(max_iters)
        return hsd_solve(problem, tol_feas=tol_feas, tol_gap=tol_gap, max_iters=max_iters)

    register_backend("fake", fake)
    try:
        monkeypatch.setenv("ATTRAKT_SOLVER", "fake")
        assert solve(_trace_problem(), max_iters=50).optimal
        assert calls == [50]
        monkeypatch.setenv("ATTRAKT_SOLVER", "missing")
        with pytest.raises(ValueError):
            solve(_trace_problem())
    finally:
        BACKENDS.pop("fake", None)


def test_max_iterations_is_not_optimal():
    rng = np.random.default_rng(4)
    prob = _random_feasible(rng, [5], 6)
    assert solve(prob, max_iters=2).status == SdpStatus.MAX_ITERATIONS
