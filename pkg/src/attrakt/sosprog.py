"""Sum-of-squares programs compiled to block SDPs.

Decision polynomials are affine in a table of scalar decision variables.
Free polynomials own one free variable per basis monomial. SOS polynomials
own the upper triangle of a Gram matrix Q and expand to z'Qz, where z is the
monomial basis. A constraint ``expr in SOS`` adds a fresh Gram matrix and
matches coefficients, with the basis pruned to the Newton box of the
support of ``expr``.

Products of two non-constant affine expressions are rejected: the programs
here are linear in the decision variables by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .polycore import Polynomial, grlex_key
from .sdp import Block, SdpProblem, SdpSolution, SdpStatus, solve


class BilinearError(TypeError):
    """A product of two decision-dependent expressions was requested."""


class DegreeOverflowError(ValueError):
    """A constraint needs a Gram basis beyond the allowed half-degree."""


def monomial_basis(nvars: int, deg_min: int, deg_max: int) -> list[tuple[int, ...]]:
    """All monomials with total degree in ``[deg_min, deg_max]`` in grlex order."""
    out = []
    for d in range(max(deg_min, 0), deg_max + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    out.sort(key=grlex_key)
    return out


def _add_mono(a, b):
    return tuple(x + y for x, y in zip(a, b))


class AffineExpr:
    """Polynomial whose coefficients are affine functions of decision variables.

    ``lin[mono][var] = coeff`` holds the linear part and ``const`` the
    decision-free part.
    """

    __slots__ = ("nvars", "lin", "const")

    def __init__(self, nvars: int, lin: dict | None = None, const: Polynomial | None = None):
        self.nvars = nvars
        self.lin = lin if lin is not None else {}
        self.const = const if const is not None else Polynomial.zero(nvars)

    @classmethod
    def lift(cls, value, nvars: int) -> "AffineExpr":
        if isinstance(value, AffineExpr):
            return value
        if isinstance(value, Polynomial):
            if value.nvars != nvars:
                raise ValueError("dimension mismatch")
            return cls(nvars, {}, value)
        if isinstance(value, (int, float, np.integer, np.floating)):
            return cls(nvars, {}, Polynomial.constant(nvars, float(value)))
        raise TypeError(f"cannot use {type(value).__name__} in an affine expression")

    def is_constant(self) -> bool:
        return not any(self.lin.values())

    def variables(self) -> set[int]:
        return {v for row in self.lin.values() for v in row}

    def support(self) -> set[tuple[int, ...]]:
        mons = {m for m, row in self.lin.items() if row}
        mons.update(self.const.terms)
        return mons

    def copy(self) -> "AffineExpr":
        return AffineExpr(self.nvars, {m: dict(r) for m, r in self.lin.items()}, self.const)

    def __add__(self, other):
        o = AffineExpr.lift(other, self.nvars)
        lin = {m: dict(r) for m, r in self.lin.items()}
        for m, row in o.lin.items():
            tgt = lin.setdefault(m, {})
            for v, c in row.items():
                tgt[v] = tgt.get(v, 0.0) + c
        return AffineExpr(self.nvars, lin, self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-AffineExpr.lift(other, self.nvars))

    def __rsub__(self, other):
        return AffineExpr.lift(other, self.nvars) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            k = float(other)
            return AffineExpr(self.nvars, {m: {v: c * k for v, c in r.items()} for m, r in self.lin.items()},
                              self.const * k)
        if isinstance(other, AffineExpr):
            if self.is_constant():
                return other * self.const
            if other.is_constant():
                return self * other.const
            raise BilinearError("product of two decision-dependent polynomials is not affine")
        if isinstance(other, Polynomial):
            lin: dict = {}
            for m1, row in self.lin.items():
                for m2, c2 in other.terms.items():
                    tgt = lin.setdefault(_add_mono(m1, m2), {})
                    for v, c in row.items():
                        tgt[v] = tgt.get(v, 0.0) + c * c2
            return AffineExpr(self.nvars, lin, self.const * other)
        return NotImplemented

    __rmul__ = __mul__

    def diff(self, i: int) -> "AffineExpr":
        lin = {}
        for m, row in self.lin.items():
            if m[i] > 0:
                dm = list(m)
                dm[i] -= 1
                lin[tuple(dm)] = {v: c * m[i] for v, c in row.items()}
        return AffineExpr(self.nvars, lin, self.const.diff(i))

    def lie_derivative(self, f: Sequence[Polynomial]) -> "AffineExpr":
        """<grad self, f> for a fixed polynomial vector field."""
        if len(f) != self.nvars:
            raise ValueError("vector field dimension mismatch")
        out = AffineExpr(self.nvars)
        for i, fi in enumerate(f):
            out = out + self.diff(i) * fi
        return out

    def value(self, x: np.ndarray) -> Polynomial:
        """Substitute decision values ``x`` (indexed by variable id)."""
        terms = dict(self.const.terms)
        for m, row in self.lin.items():
            s = sum(c * x[v] for v, c in row.items())
            terms[m] = terms.get(m, 0.0) + s
        return Polynomial(self.nvars, terms)

    @property
    def degree(self) -> int:
        mons = self.support()
        return max((sum(m) for m in mons), default=-1)


class DecisionPoly(AffineExpr):
    """A free or SOS decision polynomial owned by a :class:`SosProgram`."""

    __slots__ = ("kind", "basis", "var_ids", "gram_index")

    def __init__(self, nvars, lin, kind, basis, var_ids, gram_index=None):
        super().__init__(nvars, lin, None)
        self.kind = kind
        self.basis = basis
        self.var_ids = var_ids
        self.gram_index = gram_index


@dataclass
class _Gram:
    basis: list
    var_ids: np.ndarray  # (s, s) symmetric array of variable ids
    label: str = ""


@dataclass
class SosConstraint:
    name: str
    expr: AffineExpr
    grams: list[int]  # indices into program.grams


@dataclass
class SosSolution:
    status: SdpStatus
    x: np.ndarray | None
    sdp: SdpSolution
    program: "SosProgram"

    @property
    def feasible(self) -> bool:
        return self.status == SdpStatus.OPTIMAL

    def value(self, expr) -> Polynomial:
        if self.x is None:
            raise RuntimeError(f"no primal solution available (status {self.status.value})")
        return AffineExpr.lift(expr, self.program.nvars).value(self.x)

    def scalar(self, expr) -> float:
        return self.value(expr).constant_term()

    def gram(self, index: int) -> np.ndarray:
        g = self.program.grams[index]
        return self.x[g.var_ids]

    def constraint_grams(self, name: str) -> list[tuple[list, np.ndarray]]:
        c = self.program.constraint(name)
        return [(self.program.grams[i].basis, self.gram(i)) for i in c.grams]

    @property
    def objective(self) -> float:
        return self.program.objective_sign * self.sdp.primal_objective


@dataclass
class SosProgram:
    nvars: int
    n_vars_total: int = 0
    free_ids: list[int] = field(default_factory=list)
    grams: list[_Gram] = field(default_factory=list)
    constraints: list[SosConstraint] = field(default_factory=list)
    equalities: list[tuple[str, AffineExpr]] = field(default_factory=list)
    objective_expr: AffineExpr | None = None
    objective_sign: float = 1.0

    # -- decision variables ----------------------------------------------
    def _new_ids(self, k: int) -> list[int]:
        ids = list(range(self.n_vars_total, self.n_vars_total + k))
        self.n_vars_total += k
        return ids

    def new_free(self, basis: Iterable[tuple[int, ...]]) -> DecisionPoly:
        basis = sorted(set(map(tuple, basis)), key=grlex_key)
        ids = self._new_ids(len(basis))
        self.free_ids.extend(ids)
        lin = {m: {v: 1.0} for m, v in zip(basis, ids)}
        return DecisionPoly(self.nvars, lin, "free", basis, ids)

    def new_free_poly(self, deg_max: int, deg_min: int = 0) -> DecisionPoly:
        return self.new_free(monomial_basis(self.nvars, deg_min, deg_max))

    def new_scalar(self) -> AffineExpr:
        return self.new_free([(0,) * self.nvars])

    def _new_gram(self, basis, label="") -> int:
        s = len(basis)
        ids = np.zeros((s, s), dtype=np.int64)
        for i in range(s):
            for j in range(i, s):
                (v,) = self._new_ids(1)
                ids[i, j] = ids[j, i] = v
        self.grams.append(_Gram(list(basis), ids, label))
        return len(self.grams) - 1

    def _gram_expr(self, index: int) -> dict:
        g = self.grams[index]
        lin: dict = {}
        s = len(g.basis)
        for i in range(s):
            for j in range(i, s):
                m = _add_mono(g.basis[i], g.basis[j])
                tgt = lin.setdefault(m, {})
                v = int(g.var_ids[i, j])
                tgt[v] = tgt.get(v, 0.0) + (1.0 if i == j else 2.0)
        return lin

    def new_sos(self, half_deg_max: int, half_deg_min: int = 0, label: str = "") -> DecisionPoly:
        """SOS polynomial z'Qz with z the monomials of degree ``half_deg_min..half_deg_max``."""
        basis = monomial_basis(self.nvars, half_deg_min, half_deg_max)
        idx = self._new_gram(basis, label)
        return DecisionPoly(self.nvars, self._gram_expr(idx), "sos", basis, None, idx)

    # -- constraints -------------------------------------------------------
    def add_sos(self, expr, name: str | None = None, max_half_degree: int | None = None) -> str:
        expr = AffineExpr.lift(expr, self.nvars)
        name = name or f"sos{len(self.constraints)}"
        if any(c.name == name for c in self.constraints):
            raise ValueError(f"duplicate constraint name {name!r}")
        support = expr.support()
        grams = []
        if support:
            blocks = gram_basis(support, self.nvars)
            top = max((sum(m) for blk in blocks for m in blk), default=0)
            if max_half_degree is not None and top > max_half_degree:
                raise DegreeOverflowError(
                    f"constraint {name!r} needs half-degree {top}, limit is {max_half_degree}")
            for blk in blocks:
                if blk:
                    grams.append(self._new_gram(blk, name))
        self.constraints.append(SosConstraint(name, expr, grams))
        return name

    def add_eq(self, expr, name: str | None = None) -> None:
        """Coefficient-wise equality ``expr == 0``."""
        self.equalities.append((name or f"eq{len(self.equalities)}", AffineExpr.lift(expr, self.nvars)))

    def constraint(self, name: str) -> SosConstraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def maximize(self, expr) -> None:
        self._set_objective(expr, -1.0)

    def minimize(self, expr) -> None:
        self._set_objective(expr, 1.0)

    def _set_objective(self, expr, sign):
        expr = AffineExpr.lift(expr, self.nvars)
        if any(sum(m) > 0 for m in expr.support()):
            raise ValueError("objective must be a scalar (degree 0) expression")
        self.objective_expr = expr
        self.objective_sign = sign

    # -- compilation -------------------------------------------------------
    def _rows(self):
        """Yield (row dict var->coeff, rhs) for every coefficient equation."""
        for c in self.constraints:
            diff = c.expr.copy()
            for gi in c.grams:
                diff = diff - AffineExpr(self.nvars, self._gram_expr(gi))
            yield from _coefficient_rows(diff)
        for _, e in self.equalities:
            yield from _coefficient_rows(e)

    def compile(self) -> SdpProblem:
        rows = list(self._rows())
        m = len(rows)
        where = {}  # var id -> (block, i, j)
        blocks = []
        if self.free_ids:
            blocks.append(Block("f", len(self.free_ids)))
            for k, v in enumerate(self.free_ids):
                where[v] = (0, k, k)
        for g in self.grams:
            bi = len(blocks)
            blocks.append(Block("s", len(g.basis)))
            s = len(g.basis)
            for i in range(s):
                for j in range(i, s):
                    where[int(g.var_ids[i, j])] = (bi, i, j)
        A = [np.zeros((m, blk.size)) if blk.kind == "f" else np.zeros((m, blk.size, blk.size)) for blk in blocks]
        C = [np.zeros(blk.size) if blk.kind == "f" else np.zeros((blk.size, blk.size)) for blk in blocks]
        b = np.zeros(m)
        for r, (row, rhs) in enumerate(rows):
            b[r] = rhs
            for v, coeff in row.items():
                _place(A, blocks, where[v], coeff, r)
        if self.objective_expr is not None:
            for v, coeff in (self.objective_expr.lin.get((0,) * self.nvars) or {}).items():
                _place_obj(C, blocks, where[v], coeff * self.objective_sign)
        if not blocks:
            blocks = [Block("f", 1)]
            A = [np.zeros((m, 1))]
            C = [np.zeros(1)]
            self._dummy = True
        self._where = where
        self._blocks = blocks
        return SdpProblem(blocks, C, A, b)

    def solve(self, tol_feas: float = 1e-8, tol_gap: float = 1e-8, max_iters: int = 100,
              backend: str | None = None) -> SosSolution:
        problem = self.compile()
        sdp = solve(problem, tol_feas=tol_feas, tol_gap=tol_gap, max_iters=max_iters, backend=backend)
        x = None
        if sdp.status in (SdpStatus.OPTIMAL, SdpStatus.MAX_ITERATIONS, SdpStatus.NUMERICAL_FAILURE):
            x = np.zeros(self.n_vars_total)
            for v, (bi, i, j) in self._where.items():
                Xb = sdp.X[bi]
                x[v] = Xb[i] if Xb.ndim == 1 else Xb[i, j]
        return SosSolution(sdp.status, x, sdp, self)


def _coefficient_rows(expr: AffineExpr):
    for mono in expr.support():
        row = {v: c for v, c in (expr.lin.get(mono) or {}).items() if c != 0.0}
        rhs = -expr.const.coeff(mono)
        if row or rhs != 0.0:
            yield row, rhs


def _place(A, blocks, loc, coeff, r):
    bi, i, j = loc
    if blocks[bi].kind == "f":
        A[bi][r, i] += coeff
    elif i == j:
        A[bi][r, i, i] += coeff
    else:
        A[bi][r, i, j] += 0.5 * coeff
        A[bi][r, j, i] += 0.5 * coeff


def _place_obj(C, blocks, loc, coeff):
    bi, i, j = loc
    if blocks[bi].kind == "f":
        C[bi][i] += coeff
    elif i == j:
        C[bi][i, i] += coeff
    else:
        C[bi][i, j] += 0.5 * coeff
        C[bi][j, i] += 0.5 * coeff


def gram_basis(support: Iterable[tuple[int, ...]], nvars: int) -> list[list[tuple[int, ...]]]:
    """Monomial basis for a Gram representation of a polynomial with the given support.

    Monomials are kept inside the Newton box: total degree between
    ceil(mindeg/2) and floor(maxdeg/2), and each exponent between half the
    smallest and half the largest exponent of that variable. When every
    support monomial has even degree the basis splits into even- and
    odd-degree blocks, since mixed products cannot appear.
    """
    support = list(support)
    if not support:
        return []
    degs = [sum(m) for m in support]
    lo = math.ceil(min(degs) / 2)
    hi = max(degs) // 2
    emax = [max(m[j] for m in support) // 2 for j in range(nvars)]
    emin = [math.ceil(min(m[j] for m in support) / 2) for j in range(nvars)]
    basis = [z for z in monomial_basis(nvars, lo, hi)
             if all(emin[j] <= z[j] <= emax[j] for j in range(nvars))]
    if all(d % 2 == 0 for d in degs):
        even = [z for z in basis if sum(z) % 2 == 0]
        odd = [z for z in basis if sum(z) % 2 == 1]
        return [blk for blk in (even, odd) if blk]
    return [basis]
