"""Region-of-attraction estimation with positively invariant sets.

An estimate is a sublevel set E(R, gamma) = {x : R(x) <= gamma}. With the
vector field f fixed, the set is certified by three SOS conditions

    -<grad R, f> - p (gamma - R)        in SOS   (invariance: R decreases on the boundary)
    V_N - m0 (gamma - R)                in SOS   (V_N positive on the set)
    -<grad V_N, f> - m1 (gamma - R)     in SOS   (V_N decreases on the set)

with p free and m0, m1 SOS. Each condition also subtracts eps*|x|^2 so that
the inequalities hold strictly. The additional condition

    -<grad V_N, f> + V_N p - m2 (gamma - R)  in SOS

makes V = V_N/(gamma - R) a Lyapunov function on the interior of the set.

The outer loop alternates two convex steps. Step 1 bisects on gamma with R
fixed. Step 2 fixes the Step-1 multipliers and searches over R and V_N
while keeping the previous set inside the new one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .certificate import ContainmentLink, EraCertificate, GramBlock, PiecewiseMax
from .linalg import NotHurwitzError, linearize, solve_lyapunov
from .polycore import Polynomial, lie_derivative, sum_of_squares_norm
from .sdp import SdpStatus
from .sosprog import AffineExpr, SosProgram, SosSolution, monomial_basis
from .sysparse import PolySystem, RunConfig

log = logging.getLogger(__name__)

__all__ = [
    "InitializationError", "SolverFailure", "CompactnessSpec", "Step1Result", "Step2Result",
    "step1_conditions", "step1_feasible", "step1_maximize_gamma", "step2_update_R", "algorithm3",
    "recover_rational_lf", "piecewise_era", "containment_certificate", "quadratic_seed", "reseed_from",
    "EraCertificate", "PiecewiseMax", "NotHurwitzError",
]


class InitializationError(RuntimeError):
    """No feasible starting level could be certified."""


class SolverFailure(RuntimeError):
    """The SDP solver broke down where a feasible answer was expected."""


def _even_up(d: int) -> int:
    return max(0, d + (d % 2))


def _deg(poly) -> int:
    return max(poly.degree, 0)


@dataclass
class CompactnessSpec:
    """R - c - kappa*|x|^(2k) in SOS with c free of degree <= 2k-1."""

    kappa: float
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    @property
    def deg_c(self) -> int:
        return 2 * self.k - 1


# ---------------------------------------------------------------------------
# helpers


def _margin(sys: PolySystem, cfg: RunConfig) -> Polynomial:
    return sum_of_squares_norm(sys.nvars, 1) * cfg.eps_margin


def _field_degree(sys: PolySystem) -> int:
    return sys.degree


def _degrees(sys: PolySystem, deg_R: int, cfg: RunConfig) -> dict:
    """Multiplier degrees balanced against the polynomial they multiply."""
    df = _field_degree(sys)
    deg_VN = cfg.deg_VN
    return {
        "p": cfg.deg_p if cfg.deg_p is not None else _even_up(df - 1),
        "m0": cfg.deg_m0 if cfg.deg_m0 is not None else _even_up(deg_VN - deg_R),
        "m1": cfg.deg_m1 if cfg.deg_m1 is not None else _even_up(deg_VN + df - 1 - deg_R),
        "m2": cfg.deg_m2 if cfg.deg_m2 is not None else _even_up(max(deg_VN + df - 1, deg_VN + _even_up(df - 1)) - deg_R),
    }


def _sos_multiplier(prog: SosProgram, deg: int, label: str, zero_at_origin: bool = True):
    """SOS decision polynomial of degree ``deg``; zero polynomial when deg < 2."""
    lo = 1 if zero_at_origin else 0
    if deg // 2 < lo:
        return None
    return prog.new_sos(deg // 2, lo, label=label)


def _times(mult, poly_or_expr, nvars):
    if mult is None:
        return AffineExpr(nvars)
    return AffineExpr.lift(mult, nvars) * poly_or_expr


def _solve(prog: SosProgram, cfg: RunConfig) -> SosSolution:
    return prog.solve(tol_feas=cfg.tol_feas, tol_gap=cfg.tol_gap, max_iters=cfg.max_iters)


def _collect_grams(sol: SosSolution) -> dict[str, list[GramBlock]]:
    grams: dict[str, list[GramBlock]] = {}
    prog = sol.program
    for idx, g in enumerate(prog.grams):
        Q = sol.gram(idx)
        grams.setdefault(g.label, []).append(GramBlock(list(g.basis), 0.5 * (Q + Q.T)))
    return grams


def _value(sol: SosSolution, expr, nvars) -> Polynomial:
    if expr is None:
        return Polynomial.zero(nvars)
    return sol.value(expr)


def quadratic_seed(sys: PolySystem) -> Polynomial:
    """x'Px with A'P + PA = -I for the linearization A; raises NotHurwitzError."""
    P = solve_lyapunov(linearize(sys))
    xs = Polynomial.variables(sys.nvars)
    R = Polynomial.zero(sys.nvars)
    for i in range(sys.nvars):
        for j in range(sys.nvars):
            R = R + xs[i] * xs[j] * float(P[i, j])
    return R


def reseed_from(V_N: Polynomial, cfg: RunConfig) -> Polynomial:
    """Initial R built from a Lyapunov numerator scaled to unit max coefficient.

    A numerator only needs to be positive on the previous estimate, so its
    top-degree form can be indefinite and its sublevel sets unbounded. The
    smallest delta with top-form + (delta - 2*kappa)*|x|^d SOS is found and
    delta*|x|^d added, which leaves V_N untouched near the origin and keeps
    the compactness constraint of Step 2 satisfiable.
    """
    n = V_N.nvars
    d = _deg(V_N)
    if d < 2 or d % 2:
        raise ValueError("V_N must have even degree >= 2")
    V_N = V_N * (1.0 / V_N.max_abs_coeff())
    top = V_N.homogeneous_part(d)
    ball = sum_of_squares_norm(n, d // 2)
    prog = SosProgram(n)
    delta = prog.new_scalar()
    prog.add_sos(top + delta * ball - ball * (2 * cfg.kappa), name="coercive")
    prog.minimize(delta)
    sol = _solve(prog, cfg)
    if not sol.feasible:
        raise SolverFailure(f"coercivity search failed: {sol.status.value}")
    shift = max(sol.scalar(delta), 0.0)
    return V_N + ball * shift if shift > 0 else V_N


# ---------------------------------------------------------------------------
# Step 1


@dataclass
class Step1Result:
    gamma: float
    R: Polynomial
    V_N: Polynomial
    m0: Polynomial
    m1: Polynomial
    p: Polynomial
    grams: dict[str, list[GramBlock]]


def step1_conditions(sys: PolySystem, R: Polynomial, gamma: float, cfg: RunConfig,
                     level_set: bool = False) -> SosProgram:
    """SOS program certifying that E(R, gamma) is an estimate of the region of attraction.

    With ``level_set=True`` the classical configuration is used instead:
    V_N = R, m0 = 0 and p = m1 an SOS multiplier, so the estimate is a
    Lyapunov sublevel set.
    """
    n = sys.nvars
    f = sys.f
    deg_R = _deg(R)
    degs = _degrees(sys, deg_R, cfg)
    eps = _margin(sys, cfg)
    prog = SosProgram(n)
    slack = Polynomial.constant(n, gamma) - R
    dR = lie_derivative(R, f)
    if level_set:
        p = _sos_multiplier(prog, max(degs["p"], 2), "p")
        prog.add_sos(-dR - _times(p, slack, n) - eps, name="boundary")
        prog.add_sos(R - eps, name="positivity")
        prog.handles = {"V_N": R, "m0": None, "m1": p, "p": p}
        return prog
    p = prog.new_free_poly(degs["p"])
    VN = prog.new_free(monomial_basis(n, 2, cfg.deg_VN))
    m0 = _sos_multiplier(prog, degs["m0"], "m0")
    m1 = _sos_multiplier(prog, degs["m1"], "m1")
    prog.add_sos(-dR - p * slack - eps, name="boundary")
    prog.add_sos(VN - _times(m0, slack, n) - eps, name="positivity")
    prog.add_sos(-VN.lie_derivative(f) - _times(m1, slack, n) - eps, name="decrease")
    prog.handles = {"V_N": VN, "m0": m0, "m1": m1, "p": p}
    return prog


def step1_feasible(sys: PolySystem, R: Polynomial, gamma: float, cfg: RunConfig,
                   level_set: bool = False) -> Step1Result | None:
    """Solve Step 1 at a fixed gamma; ``None`` unless the solver proves feasibility."""
    prog = step1_conditions(sys, R, gamma, cfg, level_set=level_set)
    sol = _solve(prog, cfg)
    log.debug("step1 gamma=%.6g status=%s iters=%d", gamma, sol.status.value, sol.sdp.iterations)
    if sol.status in (SdpStatus.MAX_ITERATIONS, SdpStatus.NUMERICAL_FAILURE):
        log.info("step1 gamma=%.6g: solver returned %s, treated as not proven feasible", gamma, sol.status.value)
    if not sol.feasible:
        return None
    h = prog.handles
    n = sys.nvars
    return Step1Result(gamma, R, _value(sol, h["V_N"], n), _value(sol, h["m0"], n), _value(sol, h["m1"], n),
                       _value(sol, h["p"], n), _collect_grams(sol))


def _bisect(probe, lo: float, lo_result, hi: float, tol: float):
    """Largest probed feasible value in [lo, hi]; ``lo`` must be feasible."""
    res = probe(hi)
    if res is not None:
        return hi, res
    while (hi - lo) / hi > tol:
        mid = np.sqrt(lo * hi) if hi > 2 * lo else 0.5 * (lo + hi)
        res = probe(mid)
        if res is not None:
            lo, lo_result = mid, res
        else:
            hi = mid
    return lo, lo_result


def step1_maximize_gamma(sys: PolySystem, R: Polynomial, cfg: RunConfig, gamma_lo: float | None = None,
                         level_set: bool = False, max_halvings: int = 40) -> Step1Result:
    """Bisection on gamma with R fixed.

    The bracket starts at ``gamma_lo`` (default ``cfg.gamma_lo``), halved up
    to ``max_halvings`` times until Step 1 is feasible.
    """
    lo = cfg.gamma_lo if gamma_lo is None else gamma_lo
    lo_res = None
    for _ in range(max_halvings + 1):
        lo_res = step1_feasible(sys, R, lo, cfg, level_set=level_set)
        if lo_res is not None:
            break
        lo *= 0.5
    if lo_res is None:
        raise InitializationError("origin not certifiably stable: Step 1 infeasible at every probed level")
    probe = lambda g: step1_feasible(sys, R, g, cfg, level_set=level_set)  # noqa: E731
    hi = max(cfg.gamma_hi, lo)
    gamma, res = _bisect(probe, lo, lo_res, hi, cfg.bisect_tol)
    log.info("step1: gamma* = %.6g", gamma)
    return res


# ---------------------------------------------------------------------------
# Step 2


@dataclass
class Step2Result:
    gamma: float
    R: Polynomial
    V_N: Polynomial
    m3: Polynomial
    m0: Polynomial
    m1: Polynomial
    p: Polynomial
    grams: dict[str, list[GramBlock]]


def _step2_program(sys, R_hat, gamma, s1: Step1Result, cfg, compact: CompactnessSpec, anchors=()):
    n = sys.nvars
    f = sys.f
    deg_R = max(cfg.deg_R, 2)
    eps = _margin(sys, cfg)
    prog = SosProgram(n)
    R = prog.new_free(monomial_basis(n, 1, deg_R))
    VN = prog.new_free(monomial_basis(n, 2, cfg.deg_VN))
    deg_m3 = cfg.deg_m3 if cfg.deg_m3 is not None else _even_up(deg_R - _deg(R_hat))
    m3 = prog.new_sos(deg_m3 // 2, 0, label="m3")
    c = prog.new_free_poly(compact.deg_c)
    slack = Polynomial.constant(n, gamma) - R
    prog.add_sos(-R.lie_derivative(f) - s1.p * slack - eps, name="boundary")
    prog.add_sos(VN - s1.m0 * slack - eps, name="positivity")
    prog.add_sos(-VN.lie_derivative(f) - s1.m1 * slack - eps, name="decrease")
    prog.add_sos(slack - m3 * (Polynomial.constant(n, gamma) - R_hat), name="containment")
    prog.add_sos(R - c - sum_of_squares_norm(n, compact.k) * compact.kappa, name="compact")
    for j, (R_a, g_a) in enumerate(anchors):
        m = prog.new_sos(_even_up(deg_R - _deg(R_a)) // 2, 0, label=f"anchor_m[{j}]")
        prog.add_sos(slack - m * (Polynomial.constant(n, g_a) - R_a), name=f"anchor[{j}]")
    prog.handles = {"R": R, "V_N": VN, "m3": m3, "c": c}
    return prog


def step2_update_R(sys: PolySystem, R_hat: Polynomial, gamma_star: float, s1: Step1Result, cfg: RunConfig,
                   compactness: CompactnessSpec | None = None, anchors=()) -> Step2Result | None:
    """Update R with p, m0, m1 fixed; line search on gamma >= gamma_star.

    ``anchors`` is a sequence of ``(R_a, gamma_a)`` sets that the new estimate
    must also contain. Returns ``None`` when the program is not feasible at
    ``gamma_star`` (the current R is a fixed point of the iteration).
    """
    if compactness is None:
        k = cfg.k_compact if cfg.k_compact is not None else min(max(cfg.deg_R, 2), _deg(R_hat)) // 2
        compactness = CompactnessSpec(cfg.kappa, max(k, 1))
    n = sys.nvars

    def probe(g):
        prog = _step2_program(sys, R_hat, g, s1, cfg, compactness, anchors)
        sol = _solve(prog, cfg)
        log.debug("step2 gamma=%.6g status=%s", g, sol.status.value)
        if not sol.feasible:
            return None
        h = prog.handles
        grams = _collect_grams(sol)
        grams.update({k: s1.grams[k] for k in ("m0", "m1") if k in s1.grams})
        return Step2Result(g, sol.value(h["R"]), sol.value(h["V_N"]), sol.value(h["m3"]), s1.m0, s1.m1, s1.p,
                           grams)

    base = probe(gamma_star)
    if base is None:
        log.info("step2: infeasible at gamma* = %.6g (fixed point)", gamma_star)
        return None
    gamma, res = _bisect(probe, gamma_star, base, max(cfg.gamma_hi, gamma_star), cfg.bisect_tol)
    log.info("step2: gamma = %.6g", gamma)
    return res


# ---------------------------------------------------------------------------
# containment between two sets


def containment_certificate(R_outer: Polynomial, gamma_outer: float, R_inner: Polynomial, gamma_inner: float,
                            cfg: RunConfig, deg_m3: int | None = None) -> ContainmentLink | None:
    """Search for SOS m3 with (gamma_outer - R_outer) - m3*(gamma_inner - R_inner) SOS."""
    n = R_outer.nvars
    prog = SosProgram(n)
    d = deg_m3 if deg_m3 is not None else _even_up(_deg(R_outer) - _deg(R_inner))
    m3 = prog.new_sos(d // 2, 0, label="m3")
    prog.add_sos((Polynomial.constant(n, gamma_outer) - R_outer)
                 - m3 * (Polynomial.constant(n, gamma_inner) - R_inner), name="containment")
    sol = _solve(prog, cfg)
    if not sol.feasible:
        return None
    grams = _collect_grams(sol)
    return ContainmentLink(R_inner, gamma_inner, R_outer, gamma_outer, gamma_outer, sol.value(m3),
                           grams["containment"], grams["m3"], gamma_prev_cont=gamma_inner)


# ---------------------------------------------------------------------------
# alternating search


def _certificate(sys, res, cfg, iteration, chain) -> EraCertificate:
    return EraCertificate(
        var_names=list(sys.var_names), gamma=float(res.gamma), V_N=res.V_N, m0=res.m0, m1=res.m1, p=res.p,
        R=res.R, m3_chain=list(chain), eps_margin=cfg.eps_margin, iteration=iteration,
        config=cfg.as_dict(), grams=dict(res.grams))


def algorithm3(sys: PolySystem, cfg: RunConfig, R0: Polynomial | None = None,
               gamma_lo: float | None = None, anchors=()) -> list[EraCertificate]:
    """Alternate Step 1 and Step 2; returns one certificate per outer iteration.

    ``R0`` defaults to the quadratic Lyapunov function of the linearization.
    Iteration stops after ``cfg.max_outer_iters`` Step-1 solves, when the
    relative gamma gain stays below ``cfg.stop_tol`` twice in a row, or when
    Step 2 cannot move.

    ``anchors`` lists sets ``(R_a, gamma_a)`` the final estimate must contain,
    e.g. the result of an earlier run before re-seeding. Until that has been
    achieved, each Step 2 first tries to include them and falls back to the
    plain update; once included, nesting keeps them inside every later set.
    """
    if R0 is None:
        R0 = quadratic_seed(sys)
    s1 = step1_maximize_gamma(sys, R0, cfg, gamma_lo=gamma_lo)
    certs = [_certificate(sys, s1, cfg, 0, [])]
    log.info("iteration 0: gamma = %.6g", s1.gamma)
    chain: list[ContainmentLink] = []
    pending = list(anchors)
    slow = 0
    for k in range(1, cfg.max_outer_iters):
        s2 = None
        if pending:
            s2 = step2_update_R(sys, s1.R, s1.gamma, s1, cfg, anchors=pending)
            if s2 is not None:
                log.info("iteration %d: anchor sets now contained", k)
                pending = []
        if s2 is None:
            s2 = step2_update_R(sys, s1.R, s1.gamma, s1, cfg)
        if s2 is None:
            break
        nxt = _reprove(sys, s2, cfg)
        link = ContainmentLink(s1.R, s1.gamma, s2.R, nxt.gamma, s2.gamma, s2.m3, s2.grams["containment"],
                               s2.grams.get("m3", []))
        chain.append(link)
        gain = (nxt.gamma - s1.gamma) / nxt.gamma
        s1 = nxt
        certs.append(_certificate(sys, s1, cfg, k, chain))
        log.info("iteration %d: gamma = %.6g", k, s1.gamma)
        slow = slow + 1 if gain < cfg.stop_tol else 0
        if slow >= 2:
            break
    return certs


def _reprove(sys, s2: Step2Result, cfg) -> Step1Result:
    """Step 1 on the updated R, bracketed below by the Step-2 level."""
    try:
        res = step1_maximize_gamma(sys, s2.R, cfg, gamma_lo=s2.gamma, max_halvings=0)
        if res.gamma >= s2.gamma:
            return res
    except InitializationError:
        log.info("step1 could not re-prove gamma = %.6g; keeping the Step-2 certificate", s2.gamma)
    grams = {k: v for k, v in s2.grams.items() if k in ("boundary", "positivity", "decrease", "m0", "m1")}
    return Step1Result(s2.gamma, s2.R, s2.V_N, s2.m0, s2.m1, s2.p, grams)


# ---------------------------------------------------------------------------
# rational Lyapunov function


@dataclass
class RationalResult:
    V_N: Polynomial
    m0: Polynomial
    m1: Polynomial
    m2: Polynomial
    grams: dict[str, list[GramBlock]]


def recover_rational_lf(sys: PolySystem, R: Polynomial, gamma: float, p: Polynomial,
                        cfg: RunConfig) -> RationalResult | None:
    """Feasibility search for V_N, m0, m1, m2 with R, gamma, p fixed.

    ``None`` means no rational certificate was found; that is an expected
    outcome for some systems.
    """
    n = sys.nvars
    f = sys.f
    deg_R = _deg(R)
    degs = _degrees(sys, deg_R, cfg)
    degs["m2"] = cfg.deg_m2 if cfg.deg_m2 is not None else _even_up(
        max(cfg.deg_VN + sys.degree - 1, cfg.deg_VN + _deg(p)) - deg_R)
    eps = _margin(sys, cfg)
    slack = Polynomial.constant(n, gamma) - R
    # the boundary condition has no decision variables here; it gets its own
    # Gram search so that a nearly singular Gram there cannot stall the rest
    check = SosProgram(n)
    check.add_sos(-lie_derivative(R, f) - p * slack - eps, name="boundary")
    sol_a = _solve(check, cfg)
    if not sol_a.feasible:
        log.info("rational LF recovery: boundary condition %s", sol_a.status.value)
        return None
    prog = SosProgram(n)
    VN = prog.new_free(monomial_basis(n, 2, cfg.deg_VN))
    m0 = _sos_multiplier(prog, degs["m0"], "m0")
    m1 = _sos_multiplier(prog, degs["m1"], "m1")
    m2 = _sos_multiplier(prog, degs["m2"], "m2")
    prog.add_sos(VN - _times(m0, slack, n) - eps, name="positivity")
    prog.add_sos(-VN.lie_derivative(f) - _times(m1, slack, n) - eps, name="decrease")
    prog.add_sos(-VN.lie_derivative(f) + VN * p - _times(m2, slack, n) - eps, name="rational")
    sol = _solve(prog, cfg)
    log.info("rational LF recovery: %s", sol.status.value)
    if not sol.feasible:
        return None
    grams = _collect_grams(sol)
    grams.update(_collect_grams(sol_a))
    return RationalResult(sol.value(VN), _value(sol, m0, n), _value(sol, m1, n), _value(sol, m2, n), grams)


def attach_rational(sys: PolySystem, cert: EraCertificate, cfg: RunConfig) -> bool:
    """Try to upgrade ``cert`` in place with a rational Lyapunov function."""
    if cert.piecewise:
        raise ValueError("use piecewise_era for piecewise certificates")
    res = recover_rational_lf(sys, cert.R, cert.gamma, cert.p, cfg)
    if res is None:
        return False
    cert.V_N, cert.m0, cert.m1, cert.m2 = res.V_N, res.m0, res.m1, res.m2
    cert.grams = res.grams
    return True


# ---------------------------------------------------------------------------
# piecewise maximum


def _piecewise_program(sys, pieces, gamma, cfg, fixed_p=None, rational=False):
    n = sys.nvars
    f = sys.f
    d = len(pieces)
    eps = _margin(sys, cfg)
    prog = SosProgram(n)
    VN = prog.new_free(monomial_basis(n, 2, cfg.deg_VN))
    handles = {"V_N": VN, "p": [], "m0": [], "m1": [], "m2": [], "s": {}}
    dVN = VN.lie_derivative(f)
    g = Polynomial.constant(n, gamma)
    for i, Ri in enumerate(pieces):
        degs = _degrees(sys, _deg(Ri), cfg)
        slack = g - Ri
        if fixed_p is None:
            p = prog.new_free_poly(degs["p"])
        else:
            p = fixed_p[i]
        m0 = _sos_multiplier(prog, degs["m0"], f"m0[{i}]")
        m1 = _sos_multiplier(prog, degs["m1"], f"m1[{i}]")
        conds = {
            "boundary": -lie_derivative(Ri, f) - p * slack - eps,
            "positivity": VN - _times(m0, slack, n) - eps,
            "decrease": -dVN - _times(m1, slack, n) - eps,
        }
        m2 = None
        if rational:
            deg_m2 = cfg.deg_m2 if cfg.deg_m2 is not None else _even_up(
                max(cfg.deg_VN + sys.degree - 1, cfg.deg_VN + _deg(p)) - _deg(Ri))
            m2 = _sos_multiplier(prog, deg_m2, f"m2[{i}]")
            conds["rational"] = -dVN + VN * p - _times(m2, slack, n) - eps
        for name, expr in conds.items():
            target = expr.degree
            for j, Rj in enumerate(pieces):
                if j == i:
                    continue
                diff = Ri - Rj
                if diff.is_zero():
                    continue
                deg_s = cfg.deg_s if cfg.deg_s is not None else _even_up(target - _deg(diff))
                label = f"s_{name}[{i},{j}]"
                s = prog.new_sos(deg_s // 2, 0, label=label)
                handles["s"][label] = s
                expr = expr - s * diff
            prog.add_sos(expr, name=f"{name}[{i}]")
        handles["p"].append(p)
        handles["m0"].append(m0)
        handles["m1"].append(m1)
        handles["m2"].append(m2)
    prog.handles = handles
    return prog


def piecewise_era(sys: PolySystem, pieces, cfg: RunConfig, gamma_lo: float | None = None,
                  rational: bool = True, max_halvings: int = 40) -> EraCertificate:
    """Certify E(R_M, gamma) for R_M = max of fixed pieces; gamma by bisection.

    Each piece's conditions are localized to the region where that piece is
    the maximum by S-procedure terms s_ij*(R_i - R_j). When ``rational`` is
    set, a final pass at the certified gamma with the multipliers p_i fixed
    looks for a rational Lyapunov function.
    """
    if isinstance(pieces, PiecewiseMax):
        pieces = pieces.pieces
    pieces = list(pieces)
    n = sys.nvars

    def probe(g, fixed_p=None, rat=False):
        prog = _piecewise_program(sys, pieces, g, cfg, fixed_p=fixed_p, rational=rat)
        sol = _solve(prog, cfg)
        log.debug("piecewise gamma=%.6g status=%s", g, sol.status.value)
        if not sol.feasible:
            return None
        return prog, sol

    lo = cfg.gamma_lo if gamma_lo is None else gamma_lo
    lo_res = None
    for _ in range(max_halvings + 1):
        lo_res = probe(lo)
        if lo_res is not None:
            break
        lo *= 0.5
    if lo_res is None:
        raise InitializationError("piecewise conditions infeasible at every probed level")
    gamma, (prog, sol) = _bisect(probe, lo, lo_res, max(cfg.gamma_hi, lo), cfg.bisect_tol)
    log.info("piecewise: gamma* = %.6g", gamma)

    def extract(prog, sol):
        h = prog.handles
        vals = lambda key: [_value(sol, e, n) for e in h[key]]  # noqa: E731
        return sol.value(h["V_N"]), vals("p"), vals("m0"), vals("m1"), vals("m2"), \
            {k: sol.value(v) for k, v in h["s"].items()}

    VN, ps, m0s, m1s, m2s, s = extract(prog, sol)
    grams = _collect_grams(sol)
    m2_out = None
    if rational:
        res = probe(gamma, fixed_p=ps, rat=True)
        if res is not None:
            VN, _, m0s, m1s, m2s, s = extract(*res)
            grams = _collect_grams(res[1])
            m2_out = m2s
        else:
            log.info("piecewise: no rational Lyapunov function at gamma = %.6g", gamma)
    return EraCertificate(var_names=list(sys.var_names), gamma=float(gamma), V_N=VN, m0=m0s, m1=m1s, p=ps,
                          pieces=pieces, m2=m2_out, s=s, eps_margin=cfg.eps_margin, config=cfg.as_dict(),
                          grams=grams)
