"""Independent numerical checks of region-of-attraction certificates.

Nothing here calls the SDP solver. The checks rebuild every SOS identity from
the stored polynomials, re-test Gram matrices with the Jacobi eigensolver,
sample the boundary of the certified set, and simulate trajectories with a
fixed-step RK4 integrator.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import contourpy
import numpy as np

from .certificate import EraCertificate, GramBlock, PiecewiseMax
from .linalg import min_eigenvalue
from .polycore import FieldEvaluator, Polynomial, evaluate_field, lie_derivative, sum_of_squares_norm
from .sysparse import PolySystem

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Trajectory:
    t: np.ndarray  # (K,)
    x: np.ndarray  # (K, n) or (K, B, n)
    escaped: np.ndarray  # bool, () or (B,)

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]


def rk4(sys: PolySystem | Sequence[Polynomial], x0, dt: float, T: float, escape_radius: float = np.inf,
        stride: int = 1, monitor: Callable | None = None):
    """Classical fourth-order Runge-Kutta from ``x0`` (shape ``(n,)`` or ``(B, n)``).

    Trajectories with ``|x| > escape_radius`` are frozen and flagged as
    escaped. Every ``stride``-th state is stored. If ``monitor`` is given it
    is evaluated on the state after every step and its running maximum is
    returned as a second value.
    """
    if dt <= 0 or T < dt:
        raise ValueError("require dt > 0 and T >= dt")
    field_ = FieldEvaluator(sys.f if isinstance(sys, PolySystem) else list(sys))
    x = np.array(x0, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x.copy()
    steps = int(round(T / dt))
    escaped = np.zeros(X.shape[0], dtype=bool)

    def F(z):
        with np.errstate(over="ignore", invalid="ignore"):
            return field_(z)

    ts = [0.0]
    xs = [X.copy()]
    mon = None if monitor is None else np.asarray(monitor(X), dtype=float).copy()
    for k in range(1, steps + 1):
        act = ~escaped
        if not act.any():
            pass
        else:
            Z = X[act]
            k1 = F(Z)
            k2 = F(Z + 0.5 * dt * k1)
            k3 = F(Z + 0.5 * dt * k2)
            k4 = F(Z + dt * k3)
            Znew = Z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            bad = ~np.all(np.isfinite(Znew), axis=1) | (np.linalg.norm(np.nan_to_num(Znew, nan=np.inf), axis=1) > escape_radius)
            idx = np.flatnonzero(act)
            escaped[idx[bad]] = True
            X[idx[~bad]] = Znew[~bad]
            if mon is not None:
                mon = np.maximum(mon, monitor(X))
        if k % stride == 0 or k == steps:
            ts.append(k * dt)
            xs.append(X.copy())
    t = np.array(ts)
    xarr = np.stack(xs)
    traj = Trajectory(t, xarr[:, 0, :] if single else xarr, escaped[0] if single else escaped)
    if monitor is not None:
        return traj, (mon[0] if single else mon)
    return traj


# ---------------------------------------------------------------------------
# sampling


def _level(R):
    return R.evaluate


def _random_directions(rng, k, n):
    d = rng.standard_normal((k, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _first_crossing(R, gamma, dirs, rmax, scan=256, tol=1e-9):
    """Radius of the first crossing of R = gamma along each ray; nan if none within rmax."""
    radii = rmax * (np.arange(1, scan + 1) / scan) ** 2
    pts = dirs[:, None, :] * radii[None, :, None]
    vals = np.asarray(_level(R)(pts)) - gamma
    above = vals > 0
    has = above.any(axis=1)
    first = np.argmax(above, axis=1)
    lo = np.where(first > 0, radii[np.maximum(first - 1, 0)], 0.0)
    hi = radii[first]
    out = np.full(len(dirs), np.nan)
    for i in np.flatnonzero(has):
        a, b = lo[i], hi[i]
        d = dirs[i]
        z = d * b
        for _ in range(200):
            m = 0.5 * (a + b)
            z = d * m
            v = float(_level(R)(z)) - gamma
            if abs(v) <= tol:
                break
            if v > 0:
                b = m
            else:
                a = m
            if b - a <= 1e-16 * max(1.0, b):
                break
        out[i] = np.linalg.norm(z)
    return out


def sample_boundary(R, gamma: float, n: int, bbox, rng=None, tol: float = 1e-9):
    """Points on the boundary of E(R, gamma) found by bisection along random rays.

    ``bbox`` is ``(lower, upper)`` corner arrays. Rays that leave the box
    without crossing are resampled, up to ``50*n`` attempts in total.
    Returns ``(points, attempts)``; fewer than ``n`` points signals an
    unbounded or empty boundary inside the box.
    """
    rng = np.random.default_rng(rng)
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    nv = lo.size
    if float(_level(R)(np.zeros(nv))) >= gamma:
        return np.zeros((0, nv)), 0
    found = []
    attempts = 0
    while len(found) < n and attempts < 50 * n:
        k = min(50 * n - attempts, 2 * (n - len(found)))
        dirs = _random_directions(rng, k, nv)
        attempts += k
        with np.errstate(divide="ignore", invalid="ignore"):
            tmax_hi = np.where(dirs > 0, hi / dirs, np.inf)
            tmax_lo = np.where(dirs < 0, lo / dirs, np.inf)
        rmax = np.minimum(tmax_hi, tmax_lo).min(axis=1)
        for d, rm in zip(dirs, rmax):
            r = _first_crossing(R, gamma, d[None, :], rm, tol=tol)[0]
            if np.isfinite(r):
                z = d * r
                if abs(float(_level(R)(z)) - gamma) <= tol:
                    found.append(z)
                    if len(found) == n:
                        break
    return np.array(found).reshape(-1, nv), attempts


def estimate_bbox(R, gamma: float, nvars: int, rng=None, n_dirs: int = 2000, rmax: float = 1e4, pad: float = 1.05):
    """Axis-aligned box around the component of E(R, gamma) containing the origin.

    Returns ``None`` if some ray does not leave the set within ``rmax``.
    """
    rng = np.random.default_rng(rng)
    dirs = _random_directions(rng, n_dirs, nvars)
    dirs = np.vstack([dirs, np.eye(nvars), -np.eye(nvars)])
    radii = np.geomspace(1e-4, rmax, 400)
    pts = dirs[:, None, :] * radii[None, :, None]
    above = np.asarray(_level(R)(pts)) > gamma
    if not above.any(axis=1).all():
        return None
    first = np.argmax(above, axis=1)
    r = radii[first]
    ext = dirs * r[:, None]
    lo = ext.min(axis=0) * pad
    hi = ext.max(axis=0) * pad
    return lo, hi


def sample_interior(R, gamma: float, n: int, bbox, rng=None, max_batches: int = 1000):
    """Uniform samples of {R <= gamma} inside ``bbox`` by rejection."""
    rng = np.random.default_rng(rng)
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    out = []
    total = 0
    for _ in range(max_batches):
        z = rng.uniform(lo, hi, size=(max(4 * n, 256), lo.size))
        keep = z[np.asarray(_level(R)(z)) <= gamma]
        out.append(keep)
        total += len(keep)
        if total >= n:
            break
    pts = np.vstack(out) if out else np.zeros((0, lo.size))
    return pts[:n]


# ---------------------------------------------------------------------------
# certificate check


@dataclass
class VerifyConfig:
    n_boundary: int = 500
    n_interior: int = 200
    T: float | None = None  # default: certificate config 'verify_T', else 100
    dt: float = 0.01
    conv_tol: float = 1e-3
    n_lyapunov: int = 1000
    n_rational: int = 20
    n_containment: int = 500
    gram_tol: float = 1e-7
    identity_tol: float = 1e-6
    seed: int = 0
    simulate: bool = True


@dataclass
class VerificationReport:
    boundary_samples: int = 0
    boundary_worst: float = -np.inf
    boundary_margin_violations: int = 0
    interior_samples: int = 0
    interior_converged: int = 0
    interior_diverged: int = 0
    invariance_violations: int = 0
    lyapunov_worst: float = -np.inf
    lyapunov_violations: int = 0
    gram_min_eig: dict = field(default_factory=dict)
    identity_error: dict = field(default_factory=dict)
    containment_violations: int = 0
    origin_interior: bool = True
    rational_checked: bool = False
    rational_violations: int = 0
    failures: list = field(default_factory=list)
    bbox: tuple | None = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [
            f"boundary samples:      {self.boundary_samples}, worst <grad R, f> = {self.boundary_worst:.3e}",
            f"interior trajectories: {self.interior_converged}/{self.interior_samples} converged, "
            f"{self.interior_diverged} diverged, {self.invariance_violations} left the set",
            f"Lyapunov decrease:     worst <grad V_N, f> = {self.lyapunov_worst:.3e}",
        ]
        if self.gram_min_eig:
            worst = min(self.gram_min_eig.values())
            lines.append(f"Gram matrices:         {len(self.gram_min_eig)} checked, min eigenvalue {worst:.3e}")
        if self.identity_error:
            worst = max(self.identity_error.values())
            lines.append(f"SOS identities:        {len(self.identity_error)} checked, max coefficient error {worst:.3e}")
        lines.append(f"containment samples:   {self.containment_violations} violations")
        if self.rational_checked:
            lines.append(f"rational LF:           {self.rational_violations} violations")
        for msg in self.failures:
            lines.append(f"FAIL: {msg}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _gram_sum(blocks: Sequence[GramBlock], n: int) -> Polynomial:
    total = Polynomial.zero(n)
    for blk in blocks:
        total = total + blk.polynomial(n)
    return total


def condition_polynomials(sys: PolySystem, cert: EraCertificate) -> dict[str, Polynomial]:
    """Rebuild every SOS condition of a certificate from its stored polynomials."""
    n = cert.nvars
    f = sys.f
    eps = sum_of_squares_norm(n, 1) * cert.eps_margin
    g = Polynomial.constant(n, cert.gamma)
    dV = lie_derivative(cert.V_N, f)
    out = {}
    if not cert.piecewise:
        slack = g - cert.R
        out["boundary"] = -lie_derivative(cert.R, f) - cert.p * slack - eps
        out["positivity"] = cert.V_N - cert.m0 * slack - eps
        out["decrease"] = -dV - cert.m1 * slack - eps
        if cert.m2 is not None:
            out["rational"] = -dV + cert.V_N * cert.p - cert.m2 * slack - eps
        for key in ("m0", "m1", "m2"):
            v = getattr(cert, key)
            if v is not None:
                out[key] = v
        return out
    pieces = cert.pieces
    for i, Ri in enumerate(pieces):
        slack = g - Ri
        conds = {
            "boundary": -lie_derivative(Ri, f) - cert.p[i] * slack - eps,
            "positivity": cert.V_N - cert.m0[i] * slack - eps,
            "decrease": -dV - cert.m1[i] * slack - eps,
        }
        if cert.m2 is not None:
            conds["rational"] = -dV + cert.V_N * cert.p[i] - cert.m2[i] * slack - eps
        for name, expr in conds.items():
            for j, Rj in enumerate(pieces):
                label = f"s_{name}[{i},{j}]"
                if label in cert.s:
                    expr = expr - cert.s[label] * (Ri - Rj)
            out[f"{name}[{i}]"] = expr
        for key in ("m0", "m1", "m2"):
            v = getattr(cert, key)
            if v is not None:
                out[f"{key}[{i}]"] = v[i]
    out.update(cert.s)
    return out


def _check_gram_identity(name, target: Polynomial, blocks, n, report, vcfg):
    for k, blk in enumerate(blocks):
        report.gram_min_eig[f"{name}#{k}"] = min_eigenvalue(blk.Q)
    err = (target - _gram_sum(blocks, n)).max_abs_coeff()
    scale = max(1.0, target.max_abs_coeff())
    report.identity_error[name] = err / scale
    if err > vcfg.identity_tol * scale:
        report.failures.append(f"SOS identity '{name}' off by {err:.3e}")
    for k, blk in enumerate(blocks):
        if report.gram_min_eig[f"{name}#{k}"] < -vcfg.gram_tol:
            report.failures.append(f"Gram '{name}' block {k} not PSD (min eig {report.gram_min_eig[f'{name}#{k}']:.3e})")


def check_certificate(sys: PolySystem, cert: EraCertificate, vcfg: VerifyConfig | None = None) -> VerificationReport:
    """Run the boundary, simulation, Gram and identity checks on a certificate."""
    vcfg = vcfg or VerifyConfig()
    rng = np.random.default_rng(vcfg.seed)
    report = VerificationReport()
    n = cert.nvars
    if sys.nvars != n:
        report.failures.append(f"certificate has {n} variables, system has {sys.nvars}")
        return report
    R = cert.level_function
    gamma = cert.gamma
    f = sys.f

    # algebraic checks
    conds = condition_polynomials(sys, cert)
    required = [k for k in conds if not k.startswith("s_")]
    for name in sorted(conds):
        blocks = cert.grams.get(name)
        if blocks is None:
            if name in required and not conds[name].is_zero():
                report.failures.append(f"no Gram matrix stored for '{name}'")
            continue
        _check_gram_identity(name, conds[name], blocks, n, report, vcfg)
    for k, link in enumerate(cert.m3_chain):
        _check_gram_identity(f"containment#{k}", link.identity(), link.gram, n, report, vcfg)
        if link.m3_gram:
            _check_gram_identity(f"m3#{k}", link.m3, link.m3_gram, n, report, vcfg)
        if not link.levels_ordered:
            report.failures.append(f"containment link {k}: levels out of order")

    origin_val = float(R.evaluate(np.zeros(n)))
    if not origin_val < gamma - 1e-6 * gamma:
        report.origin_interior = False
        report.failures.append("origin is not in the interior of the set")
        return report

    bbox = estimate_bbox(R, gamma, n, rng)
    if bbox is None:
        report.failures.append("set is unbounded")
        return report
    report.bbox = bbox
    diag = float(np.linalg.norm(bbox[1] - bbox[0]))

    # boundary sign
    pts, _ = sample_boundary(R, gamma, vcfg.n_boundary, bbox, rng)
    report.boundary_samples = len(pts)
    if len(pts) < vcfg.n_boundary:
        report.failures.append(f"only {len(pts)} of {vcfg.n_boundary} boundary points found")
    if len(pts):
        fz = evaluate_field(f, pts)
        if cert.piecewise:
            vals = np.full(len(pts), -np.inf)
            pv = PiecewiseMax(cert.pieces).piece_values(pts)
            for i, Ri in enumerate(cert.pieces):
                grad = np.stack([np.asarray(g.evaluate(pts)) for g in Ri.gradient()], axis=-1)
                dot = np.sum(grad * fz, axis=1)
                active = pv[:, i] >= gamma - 1e-7 * max(1.0, gamma)
                vals = np.where(active, np.maximum(vals, dot), vals)
        else:
            grad = np.stack([np.asarray(g.evaluate(pts)) for g in R.gradient()], axis=-1)
            vals = np.sum(grad * fz, axis=1)
        report.boundary_worst = float(vals.max())
        bound = -0.5 * cert.eps_margin * np.sum(pts * pts, axis=1)
        report.boundary_margin_violations = int(np.sum(vals > bound))
        if report.boundary_margin_violations:
            report.failures.append(f"{report.boundary_margin_violations} boundary points with <grad R, f> "
                                   f"above -eps/2*|x|^2 (worst {report.boundary_worst:.3e})")

    # Lyapunov decrease at interior samples
    inner = sample_interior(R, gamma, vcfg.n_lyapunov, bbox, rng)
    inner = inner[np.linalg.norm(inner, axis=1) >= 1e-3]
    if len(inner):
        dV = lie_derivative(cert.V_N, f)
        vals = np.asarray(dV.evaluate(inner))
        report.lyapunov_worst = float(vals.max())
        report.lyapunov_violations = int(np.sum(vals >= 0))
        if report.lyapunov_violations:
            report.failures.append(f"{report.lyapunov_violations} interior points with <grad V_N, f> >= 0")

    # containment sampling for each link
    for k, link in enumerate(cert.m3_chain):
        zs = sample_interior(link.R_prev, link.gamma_prev, vcfg.n_containment, bbox, rng)
        bad = int(np.sum(np.asarray(link.R.evaluate(zs)) > link.gamma * (1 + 1e-9))) if len(zs) else 0
        report.containment_violations += bad
    if report.containment_violations:
        report.failures.append(f"{report.containment_violations} samples of an earlier set outside a later one")

    if not vcfg.simulate:
        return report

    # interior convergence
    T = vcfg.T if vcfg.T is not None else float(cert.config.get("verify_T", 100.0))
    x0 = sample_interior(R, 0.98 * gamma, vcfg.n_interior, bbox, rng)
    report.interior_samples = len(x0)
    if len(x0) < vcfg.n_interior:
        report.failures.append(f"only {len(x0)} interior samples found")
    if len(x0):
        traj, rmax = rk4(f, x0, vcfg.dt, T, escape_radius=10 * diag, stride=max(1, int(round(T / vcfg.dt))),
                         monitor=lambda X: np.asarray(R.evaluate(X)))
        norms = np.linalg.norm(traj.final, axis=1)
        conv = (~traj.escaped) & (norms < vcfg.conv_tol)
        report.interior_converged = int(conv.sum())
        report.interior_diverged = int(traj.escaped.sum())
        report.invariance_violations = int(np.sum(rmax > gamma * (1 + 1e-6)))
        if report.interior_converged < len(x0):
            report.failures.append(f"{len(x0) - report.interior_converged} interior trajectories did not converge")
        if report.invariance_violations:
            report.failures.append(f"{report.invariance_violations} trajectories left the certified set")

    if cert.rational:
        report.rational_checked = True
        report.rational_violations = _check_rational(sys, cert, bbox, vcfg, rng)
        if report.rational_violations:
            report.failures.append(f"{report.rational_violations} rational Lyapunov function violations")
    return report


def _check_rational(sys, cert, bbox, vcfg, rng) -> int:
    R = cert.level_function
    z = sample_interior(R, 0.98 * cert.gamma, vcfg.n_rational, bbox, rng)
    z = z[np.linalg.norm(z, axis=1) >= 1e-3]
    bad = int(np.sum(cert.rational_lf(z) <= 0))
    T = min(vcfg.T or float(cert.config.get("verify_T", 100.0)), 50.0)
    traj = rk4(sys, z, vcfg.dt, T)
    V = cert.rational_lf(traj.x)  # (K, B)
    V0 = V[0]
    for b in range(V.shape[1]):
        v = V[:, b]
        live = v[:-1] > 1e-8 * V0[b]
        dv = np.diff(v)[live]
        if np.any(~np.isfinite(v)) or np.any(dv >= 0):
            bad += 1
    return bad


def verification_config_from(cert: EraCertificate, **overrides) -> VerifyConfig:
    vcfg = VerifyConfig(seed=int(cert.config.get("seed", 0)))
    return dataclasses.replace(vcfg, **overrides)


# ---------------------------------------------------------------------------
# contours and file output


def _grid_values(func, bbox, resolution):
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1)
    if hasattr(func, "evaluate"):
        Z = np.asarray(func.evaluate(pts), dtype=float)
    else:
        Z = np.asarray(func(pts), dtype=float)
    return xs, ys, Z


def contour2d(R, gamma: float, bbox, resolution: int = 256) -> list[np.ndarray]:
    """Polylines of {R = gamma} by marching squares on a resolution x resolution grid.

    ``R`` may be a Polynomial, a PiecewiseMax or a callable on ``(..., 2)``
    arrays; non-finite grid values are masked.
    """
    nv = getattr(R, "nvars", 2)
    if nv != 2:
        raise ValueError(f"contour2d needs a 2-variable function, got {nv}")
    xs, ys, Z = _grid_values(R, bbox, resolution)
    mask = ~np.isfinite(Z)
    Zm = np.ma.array(np.where(mask, 0.0, Z), mask=mask) if mask.any() else Z
    gen = contourpy.contour_generator(xs, ys, Zm, line_type=contourpy.LineType.Separate)
    return [np.asarray(line) for line in gen.lines(gamma) if len(line) >= 2]


def write_contour_csv(polylines: Sequence[np.ndarray], path, var_names=("x1", "x2"), level_ids=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{var_names[0]},{var_names[1]},polyline_id\n")
        for k, line in enumerate(polylines):
            pid = k if level_ids is None else level_ids[k]
            for x, y in line:
                fh.write(f"{x!r},{y!r},{pid}\n")


def write_contour_svg(polylines: Sequence[np.ndarray], path, bbox, size: int = 512) -> None:
    lo, hi = (np.asarray(b, dtype=float) for b in bbox)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def tx(p):
        u = (p[:, 0] - lo[0]) / span[0] * size
        v = size - (p[:, 1] - lo[1]) / span[1] * size
        return u, v

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for line in polylines:
        u, v = tx(np.asarray(line))
        d = "M " + " L ".join(f"{a:.3f} {b:.3f}" for a, b in zip(u, v))
        parts.append(f'<path d="{d}" fill="none" stroke="black" stroke-width="1"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def write_trajectory_csv(traj: Trajectory, path, var_names: Sequence[str], status: Sequence[str]) -> None:
    """Rows ``t,x1,...,xn,status``; trajectories follow each other, t restarts at 0."""
    X = traj.x if traj.x.ndim == 3 else traj.x[:, None, :]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["t", *var_names, "status"]) + "\n")
        for b in range(X.shape[1]):
            for t, x in zip(traj.t, X[:, b, :]):
                fh.write(",".join([repr(float(t)), *(repr(float(v)) for v in x), status[b]]) + "\n")


def trajectory_status(traj: Trajectory, conv_tol: float = 1e-3) -> list[str]:
    final = traj.final if traj.x.ndim == 3 else traj.final[None, :]
    esc = np.atleast_1d(traj.escaped)
    norms = np.linalg.norm(final, axis=1)
    return ["diverging" if e else ("converging" if r < conv_tol else "undecided") for e, r in zip(esc, norms)]
