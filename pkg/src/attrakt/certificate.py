"""Certificate data model and deterministic JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polycore import Polynomial


class PiecewiseMax:
    """R_M(x) = max(R_1(x), ..., R_d(x))."""

    def __init__(self, pieces: Sequence[Polynomial]):
        pieces = list(pieces)
        if not pieces:
            raise ValueError("PiecewiseMax needs at least one piece")
        n = pieces[0].nvars
        if any(p.nvars != n for p in pieces):
            raise ValueError("all pieces must share nvars")
        self.pieces = pieces
        self.nvars = n

    def __len__(self):
        return len(self.pieces)

    def evaluate(self, x):
        vals = np.stack([np.asarray(p.evaluate(x), dtype=float) for p in self.pieces], axis=-1)
        out = vals.max(axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def piece_values(self, x) -> np.ndarray:
        return np.stack([np.asarray(p.evaluate(x), dtype=float) for p in self.pieces], axis=-1)


def evaluate_level_function(R, x):
    """Evaluate a Polynomial or PiecewiseMax at points."""
    return R.evaluate(x)


@dataclass
class GramBlock:
    basis: list[tuple[int, ...]]
    Q: np.ndarray

    def to_json(self):
        return {"basis": [list(m) for m in self.basis], "Q": np.asarray(self.Q).tolist()}

    @classmethod
    def from_json(cls, d):
        return cls([tuple(int(e) for e in m) for m in d["basis"]], np.array(d["Q"], dtype=float).reshape(
            len(d["basis"]), len(d["basis"])))

    def polynomial(self, nvars: int) -> Polynomial:
        terms: dict = {}
        for i, zi in enumerate(self.basis):
            for j, zj in enumerate(self.basis):
                m = tuple(a + b for a, b in zip(zi, zj))
                terms[m] = terms.get(m, 0.0) + float(self.Q[i, j])
        return Polynomial(nvars, terms)


@dataclass
class ContainmentLink:
    """SOS proof that E(R_prev, gamma_prev) lies inside E(R, gamma).

    ``(gamma_cont - R) - m3*(gamma_prev_cont - R_prev)`` is SOS with Gram
    ``gram``, ``gamma_prev <= gamma_prev_cont`` and ``gamma_cont <= gamma``.
    Inside one alternating run both levels are the Step-2 level; a link
    between two separate runs keeps each set at its own level.
    """

    R_prev: Polynomial
    gamma_prev: float
    R: Polynomial
    gamma: float
    gamma_cont: float
    m3: Polynomial
    gram: list[GramBlock]
    m3_gram: list[GramBlock]
    gamma_prev_cont: float | None = None

    def __post_init__(self):
        if self.gamma_prev_cont is None:
            self.gamma_prev_cont = self.gamma_cont

    def identity(self) -> Polynomial:
        """The polynomial that ``gram`` certifies to be SOS."""
        n = self.R.nvars
        outer = Polynomial.constant(n, self.gamma_cont) - self.R
        inner = Polynomial.constant(n, self.gamma_prev_cont) - self.R_prev
        return outer - self.m3 * inner

    @property
    def levels_ordered(self) -> bool:
        return self.gamma_prev <= self.gamma_prev_cont and self.gamma_cont <= self.gamma

    def to_json(self):
        return {
            "R_prev": self.R_prev.to_json(),
            "gamma_prev": self.gamma_prev,
            "R": self.R.to_json(),
            "gamma": self.gamma,
            "gamma_cont": self.gamma_cont,
            "gamma_prev_cont": self.gamma_prev_cont,
            "m3": self.m3.to_json(),
            "gram": [g.to_json() for g in self.gram],
            "m3_gram": [g.to_json() for g in self.m3_gram],
        }

    @classmethod
    def from_json(cls, n, d):
        return cls(Polynomial.from_json(n, d["R_prev"]), float(d["gamma_prev"]), Polynomial.from_json(n, d["R"]),
                   float(d["gamma"]), float(d["gamma_cont"]), Polynomial.from_json(n, d["m3"]),
                   [GramBlock.from_json(g) for g in d["gram"]], [GramBlock.from_json(g) for g in d["m3_gram"]],
                   float(d.get("gamma_prev_cont", d["gamma_cont"])))


@dataclass
class EraCertificate:
    """Certified inner estimate E(R, gamma) of the region of attraction.

    For a piecewise certificate ``pieces`` is set, ``R`` is ``None`` and
    ``p``, ``m0``, ``m1`` (and ``m2``) are lists with one entry per piece.
    """

    var_names: list[str]
    gamma: float
    V_N: Polynomial
    m0: Polynomial | list[Polynomial]
    m1: Polynomial | list[Polynomial]
    p: Polynomial | list[Polynomial]
    R: Polynomial | None = None
    pieces: list[Polynomial] | None = None
    m2: Polynomial | list[Polynomial] | None = None
    s: dict[str, Polynomial] = field(default_factory=dict)
    m3_chain: list[ContainmentLink] = field(default_factory=list)
    eps_margin: float = 1e-6
    iteration: int = 0
    config: dict = field(default_factory=dict)
    grams: dict[str, list[GramBlock]] = field(default_factory=dict)

    @property
    def nvars(self) -> int:
        return len(self.var_names)

    @property
    def piecewise(self) -> bool:
        return self.pieces is not None

    @property
    def level_function(self):
        return PiecewiseMax(self.pieces) if self.piecewise else self.R

    @property
    def rational(self) -> bool:
        return self.m2 is not None

    def rational_lf(self, x):
        """V = V_N/(gamma - R) at points; ``inf`` outside the open set."""
        num = np.asarray(self.V_N.evaluate(x), dtype=float)
        den = self.gamma - np.asarray(self.level_function.evaluate(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        def poly_or_list(v):
            if v is None:
                return None
            if isinstance(v, list):
                return [q.to_json() for q in v]
            return v.to_json()

        d = {"nvars": self.nvars, "var_names": list(self.var_names)}
        if self.piecewise:
            d["pieces"] = [q.to_json() for q in self.pieces]
        else:
            d["R"] = self.R.to_json()
        d.update({
            "gamma": self.gamma,
            "V_N": self.V_N.to_json(),
            "m0": poly_or_list(self.m0),
            "m1": poly_or_list(self.m1),
            "p": poly_or_list(self.p),
        })
        if self.m2 is not None:
            d["m2"] = poly_or_list(self.m2)
        if self.s:
            d["s"] = {k: self.s[k].to_json() for k in sorted(self.s)}
        d["m3_chain"] = [link.to_json() for link in self.m3_chain]
        d["eps_margin"] = self.eps_margin
        d["iteration"] = self.iteration
        d["config"] = dict(sorted(self.config.items()))
        d["grams"] = {k: [g.to_json() for g in self.grams[k]] for k in sorted(self.grams)}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "EraCertificate":
        n = int(d["nvars"])
        names = list(d["var_names"])
        if len(names) != n:
            raise ValueError("var_names length does not match nvars")

        def load(v):
            if v is None:
                return None
            if v and isinstance(v[0], list):
                return [Polynomial.from_json(n, q) for q in v]
            return Polynomial.from_json(n, v)

        pieces = [Polynomial.from_json(n, q) for q in d["pieces"]] if "pieces" in d else None
        R = Polynomial.from_json(n, d["R"]) if "R" in d else None
        if (R is None) == (pieces is None):
            raise ValueError("certificate must have exactly one of 'R' and 'pieces'")
        multipliers = {}
        for key in ("m0", "m1", "p", "m2"):
            v = d.get(key)
            if pieces is not None and v is not None:
                multipliers[key] = [Polynomial.from_json(n, q) for q in v]
            else:
                multipliers[key] = load(v) if key == "m2" else Polynomial.from_json(n, v)
        return cls(
            var_names=names,
            gamma=float(d["gamma"]),
            V_N=Polynomial.from_json(n, d["V_N"]),
            m0=multipliers["m0"], m1=multipliers["m1"], p=multipliers["p"], m2=multipliers["m2"],
            R=R, pieces=pieces,
            s={k: Polynomial.from_json(n, v) for k, v in d.get("s", {}).items()},
            m3_chain=[ContainmentLink.from_json(n, x) for x in d.get("m3_chain", [])],
            eps_margin=float(d.get("eps_margin", 1e-6)),
            iteration=int(d.get("iteration", 0)),
            config=dict(d.get("config", {})),
            grams={k: [GramBlock.from_json(g) for g in v] for k, v in d.get("grams", {}).items()},
        )

    @classmethod
    def loads(cls, text: str) -> "EraCertificate":
        return cls.from_json(json.loads(text))


def save_certificate(cert: EraCertificate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cert.dumps())


def load_certificate(path) -> EraCertificate:
    with open(path, encoding="utf-8") as fh:
        return EraCertificate.loads(fh.read())
