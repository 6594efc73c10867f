"""Sparse multivariate polynomials with real coefficients.

A polynomial in ``n`` variables is a map from exponent tuples (monomials) to
float coefficients. Instances are treated as immutable values; every
arithmetic operation returns a new polynomial with coefficients below
``CLEANUP_TOL`` removed.
"""

from __future__ import annotations

import math
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

CLEANUP_TOL = 1e-12

Monomial = tuple  # tuple[int, ...] of length nvars


def grlex_key(mono: Monomial):
    """Sort key for graded-lexicographic order (x1 before x2 within a degree)."""
    return (sum(mono), tuple(-e for e in mono))


def _format_coeff(c: float) -> str:
    # shortest round-tripping form, with integral values printed without ".0"
    if c.is_integer() and abs(c) < 1e15:
        return str(int(c))
    return repr(c)


def _clean(terms: Mapping[Monomial, float]) -> dict:
    return {m: float(c) for m, c in terms.items() if abs(c) >= CLEANUP_TOL}


class Polynomial:
    __slots__ = ("nvars", "_terms", "_arrays")

    def __init__(self, nvars: int, terms: Mapping[Monomial, float] | None = None):
        self.nvars = int(nvars)
        cleaned = _clean(terms or {})
        for m in cleaned:
            if len(m) != self.nvars:
                raise ValueError(f"monomial {m} does not have {self.nvars} exponents")
            if any((not isinstance(e, (int, np.integer))) or e < 0 for e in m):
                raise ValueError(f"invalid exponents {m}")
        self._terms = {tuple(int(e) for e in m): c for m, c in cleaned.items()}
        self._arrays = None

    @classmethod
    def _make(cls, nvars: int, terms: dict) -> "Polynomial":
        # trusted path for internal arithmetic: monomials already valid
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = _clean(terms)
        p._arrays = None
        return p

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: float) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: float = 1.0) -> "Polynomial":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def variables(cls, nvars: int) -> list["Polynomial"]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    # -- accessors --------------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, float]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> list[tuple[Monomial, float]]:
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))

    def coeff(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    @property
    def min_degree(self) -> int:
        if not self._terms:
            return -1
        return min(sum(m) for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def constant_term(self) -> float:
        return self._terms.get((0,) * self.nvars, 0.0)

    def homogeneous_part(self, deg: int) -> "Polynomial":
        return Polynomial._make(self.nvars, {m: c for m, c in self._terms.items() if sum(m) == deg})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def __len__(self) -> int:
        return len(self._terms)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars} variables")
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Polynomial.constant(self.nvars, float(other))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for m, c in o._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial._make(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._make(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Polynomial._make(self.nvars, {m: c * float(other) for m, c in self._terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial._make(self.nvars, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    __hash__ = None

    def almost_equal(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        return (self - other).max_abs_coeff() <= tol

    # -- calculus ---------------------------------------------------------
    def diff(self, i: int) -> "Polynomial":
        out = {}
        for m, c in self._terms.items():
            if m[i] > 0:
                dm = list(m)
                dm[i] -= 1
                out[tuple(dm)] = c * m[i]
        return Polynomial._make(self.nvars, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.nvars)]

    # -- evaluation -------------------------------------------------------
    def _exponent_arrays(self):
        if self._arrays is None:
            items = self.sorted_terms()
            exps = np.array([m for m, _ in items], dtype=np.int64).reshape(len(items), self.nvars)
            coeffs = np.array([c for _, c in items], dtype=float)
            self._arrays = (exps, coeffs)
        return self._arrays

    def evaluate(self, point) -> float | np.ndarray:
        """Evaluate at a point (shape ``(n,)``) or a batch of points (shape ``(..., n)``)."""
        z = np.asarray(point, dtype=float)
        if z.shape[-1:] != (self.nvars,) and not (self.nvars == 0 and z.size == 0):
            raise ValueError(f"expected points with {self.nvars} coordinates, got shape {z.shape}")
        exps, coeffs = self._exponent_arrays()
        if len(coeffs) == 0:
            return 0.0 if z.ndim <= 1 else np.zeros(z.shape[:-1])
        values = _monomial_values(z, exps) @ coeffs
        return float(values) if z.ndim <= 1 else values

    __call__ = evaluate

    # -- text -------------------------------------------------------------
    def to_text(self, var_names: Sequence[str] | None = None) -> str:
        names = list(var_names) if var_names is not None else [f"x{i + 1}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        parts = []
        for idx, (m, c) in enumerate(self.sorted_terms()):
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = _format_coeff(abs(c))
            if factors:
                body = "*".join(factors) if mag == "1" else mag + "*" + "*".join(factors)
            else:
                body = mag
            if idx == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.to_text()!r})"

    # -- serialization ----------------------------------------------------
    def to_json(self) -> list[dict]:
        return [{"exponents": list(m), "coeff": c} for m, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars: int, data: Iterable[Mapping]) -> "Polynomial":
        terms = {}
        for item in data:
            m = tuple(int(e) for e in item["exponents"])
            terms[m] = terms.get(m, 0.0) + float(item["coeff"])
        return cls(nvars, terms)


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    return a + b


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    return a * b


def evaluate(p: Polynomial, point) -> float:
    return p.evaluate(point)


def gradient(p: Polynomial) -> list[Polynomial]:
    return p.gradient()


def lie_derivative(V: Polynomial, f: Sequence[Polynomial]) -> Polynomial:
    """Return <grad V, f> = sum_i dV/dx_i * f_i."""
    if len(f) != V.nvars:
        raise ValueError(f"vector field has {len(f)} components, expected {V.nvars}")
    out = Polynomial.zero(V.nvars)
    for dV, fi in zip(V.gradient(), f):
        if fi.nvars != V.nvars:
            raise ValueError("dimension mismatch between V and f")
        out = out + dV * fi
    return out


def _monomial_values(z: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Monomials ``z**exps`` for points ``(..., n)``; returns ``(..., M)``.

    Powers come from a table built by repeated multiplication, which is much
    cheaper than elementwise ``**`` on every monomial.
    """
    n = exps.shape[1]
    if n == 0:
        return np.ones(z.shape[:-1] + (exps.shape[0],))
    dmax = int(exps.max(initial=0))
    table = np.empty(z.shape + (dmax + 1,))
    table[..., 0] = 1.0
    for k in range(1, dmax + 1):
        table[..., k] = table[..., k - 1] * z
    out = table[..., 0, exps[:, 0]]
    for v in range(1, n):
        out = out * table[..., v, exps[:, v]]
    return out


class FieldEvaluator:
    """Vector field compiled to one exponent table and a coefficient matrix."""

    def __init__(self, f: Sequence[Polynomial]):
        f = list(f)
        n = f[0].nvars if f else 0
        monos = sorted({m for fi in f for m in fi.terms}, key=grlex_key)
        index = {m: k for k, m in enumerate(monos)}
        self.exps = np.array(monos, dtype=np.int64).reshape(len(monos), n)
        self.coeffs = np.zeros((len(monos), len(f)))
        for j, fi in enumerate(f):
            for m, c in fi.terms.items():
                self.coeffs[index[m], j] = c

    def __call__(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=float)
        return _monomial_values(z, self.exps) @ self.coeffs


def evaluate_field(f: Sequence[Polynomial], points) -> np.ndarray:
    """Evaluate a vector field at points of shape ``(..., n)``; returns the same shape."""
    return FieldEvaluator(f)(points)


def sum_of_squares_norm(nvars: int, k: int = 1) -> Polynomial:
    """(x1^2 + ... + xn^2)^k."""
    s = Polynomial.zero(nvars)
    for x in Polynomial.variables(nvars):
        s = s + x * x
    return s ** k


def binomial_count(nvars: int, deg_min: int, deg_max: int) -> int:
    return sum(math.comb(nvars + d - 1, d) for d in range(deg_min, deg_max + 1))
