"""Command-line entry point: ``attrakt {era,check,simulate,contour}``.

Exit codes
    0  success (``check``: PASS)
    1  ``check`` reported FAIL
    2  initialization failure (origin not certifiably stable)
    3  solver failure
    4  parse error or missing file
    5  dimension error
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .certificate import EraCertificate, save_certificate
from .linalg import NotHurwitzError
from .roa import InitializationError, SolverFailure, algorithm3, attach_rational, piecewise_era, reseed_from
from .sysparse import ParseError, PolySystem, RunConfig, parse_config, parse_pieces, parse_system
from .verify import (VerifyConfig, check_certificate, contour2d, estimate_bbox, rk4, sample_interior,
                     trajectory_status, write_contour_csv, write_contour_svg, write_trajectory_csv)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INIT = 2
EXIT_SOLVER = 3
EXIT_PARSE = 4
EXIT_DIM = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror or exc}") from None


def _load_system(path) -> PolySystem:
    try:
        return parse_system(_read(path))
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None


def _load_cert(path, sys_: PolySystem) -> EraCertificate:
    try:
        cert = EraCertificate.loads(_read(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: malformed certificate ({exc})") from None
    if cert.nvars != sys_.nvars:
        raise CliError(EXIT_DIM, f"certificate has {cert.nvars} variables, system has {sys_.nvars}")
    return cert


def _config(args) -> RunConfig:
    if args.config:
        try:
            cfg = parse_config(_read(args.config))
        except ParseError as exc:
            raise CliError(EXIT_PARSE, f"{args.config}: {exc}") from None
    else:
        cfg = RunConfig()
    changes = {}
    if args.deg_vn is not None:
        changes["deg_VN"] = args.deg_vn
    if args.deg_r is not None:
        changes["deg_R"] = args.deg_r
    if args.gamma_hi is not None:
        changes["gamma_hi"] = args.gamma_hi
    if args.seed is not None:
        changes["seed"] = args.seed
    try:
        return cfg.replace(**changes)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"invalid configuration: {exc}") from None


def _print_table(certs) -> None:
    print(f"{'iter':>4}  {'gamma':>14}  {'gain':>10}")
    prev = None
    for c in certs:
        gain = "" if prev is None else f"{(c.gamma - prev) / c.gamma:10.3e}"
        print(f"{c.iteration:>4}  {c.gamma:14.8g}  {gain:>10}")
        prev = c.gamma


# ---------------------------------------------------------------------------
# subcommands


def cmd_era(args) -> int:
    sys_ = _load_system(args.system)
    cfg = _config(args)
    out = Path(args.out) if args.out else Path(Path(args.system).stem + ".cert.json")
    try:
        if args.pieces:
            try:
                pieces, gamma_lo = parse_pieces(_read(args.pieces), sys_.var_names)
            except ParseError as exc:
                raise CliError(EXIT_PARSE, f"{args.pieces}: {exc}") from None
            cert = piecewise_era(sys_, pieces, cfg, gamma_lo=gamma_lo, rational=not args.no_rational)
            cert.iteration = 0
            _print_table([cert])
        else:
            R0, anchors = None, ()
            if args.reseed:
                prev = _load_cert(args.reseed, sys_)
                if prev.piecewise:
                    raise CliError(EXIT_PARSE, f"{args.reseed}: cannot re-seed from a piecewise certificate")
                R0 = reseed_from(prev.V_N, cfg)
                anchors = [(prev.R, prev.gamma)]
            certs = algorithm3(sys_, cfg, R0=R0, anchors=anchors)
            _print_table(certs)
            cert = certs[-1]
            if not args.no_rational:
                attach_rational(sys_, cert, cfg)
    except (NotHurwitzError, InitializationError) as exc:
        msg = str(exc)
        if "origin not certifiably stable" not in msg:
            msg = f"origin not certifiably stable: {msg}"
        raise CliError(EXIT_INIT, msg) from None
    except SolverFailure as exc:
        raise CliError(EXIT_SOLVER, f"solver failure: {exc}") from None
    print(f"rational Lyapunov function: {'found' if cert.rational else 'not found'}")
    save_certificate(cert, out)
    print(f"certificate written to {out}")
    return EXIT_OK


def _verify_config(args, cert) -> VerifyConfig:
    seed = args.seed if args.seed is not None else int(cert.config.get("seed", 0))
    return VerifyConfig(seed=seed)


def cmd_check(args) -> int:
    sys_ = _load_system(args.system)
    cert = _load_cert(args.cert, sys_)
    report = check_certificate(sys_, cert, _verify_config(args, cert))
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def _plot_box(cert, rng, scale):
    lo, hi = estimate_bbox(cert.level_function, cert.gamma, cert.nvars, rng)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid - scale * half, mid + scale * half


def cmd_simulate(args) -> int:
    sys_ = _load_system(args.system)
    cert = _load_cert(args.cert, sys_)
    rng = np.random.default_rng(args.seed if args.seed is not None else int(cert.config.get("seed", 0)))
    lo, hi = _plot_box(cert, rng, args.scale)
    n = sys_.nvars
    if n == 2:
        g0 = np.linspace(lo[0], hi[0], args.grid)
        g1 = np.linspace(lo[1], hi[1], args.grid)
        X0 = np.stack(np.meshgrid(g0, g1), axis=-1).reshape(-1, 2)
    else:
        X0 = rng.uniform(lo, hi, size=(args.grid ** 2, n))
    T = args.T if args.T is not None else float(cert.config.get("verify_T", 100.0))
    stride = max(1, int(round(T / args.dt / args.samples)))
    traj = rk4(sys_, X0, args.dt, T, escape_radius=10 * float(np.linalg.norm(hi - lo)), stride=stride)
    status = trajectory_status(traj)
    out = Path(args.out) if args.out else Path(Path(args.system).stem + ".traj.csv")
    write_trajectory_csv(traj, out, sys_.var_names, status)
    counts = {s: status.count(s) for s in ("converging", "diverging", "undecided")}
    print(", ".join(f"{k}: {v}" for k, v in counts.items()))
    print(f"trajectories written to {out}")
    return EXIT_OK


def cmd_contour(args) -> int:
    sys_ = _load_system(args.system)
    cert = _load_cert(args.cert, sys_)
    if sys_.nvars != 2:
        raise CliError(EXIT_DIM, f"contour needs a 2-D system, got {sys_.nvars} variables")
    rng = np.random.default_rng(args.seed if args.seed is not None else int(cert.config.get("seed", 0)))
    bbox = _plot_box(cert, rng, 1.2)
    lines = contour2d(cert.level_function, cert.gamma, bbox, args.resolution)
    ids = [0] * len(lines)
    if args.levels > 0:
        # levels of V = V_N/(gamma - R) spread over its values inside the set
        z = sample_interior(cert.level_function, cert.gamma, 2000, bbox, rng)
        v = cert.rational_lf(z)
        v = v[np.isfinite(v) & (v > 0)]
        qs = np.linspace(0.0, 1.0, args.levels + 2)[1:-1]
        for k, c in enumerate(np.quantile(v, qs), start=1):
            ls = contour2d(cert.rational_lf, float(c), bbox, args.resolution)
            lines += ls
            ids += [k] * len(ls)
    out = Path(args.out) if args.out else Path(Path(args.system).stem + ".contour.csv")
    write_contour_csv(lines, out, sys_.var_names, level_ids=ids)
    print(f"{len(lines)} polylines written to {out}")
    if args.svg:
        write_contour_svg(lines, args.svg, bbox)
        print(f"svg written to {args.svg}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attrakt", description="Certified region-of-attraction estimates.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for all random sampling")
    common.add_argument("--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("era", parents=[common], help="compute and certify an estimate")
    p.add_argument("system")
    p.add_argument("-c", "--config")
    p.add_argument("-o", "--out")
    p.add_argument("--pieces", help="fixed pieces of a piecewise-maximum level function")
    p.add_argument("--reseed", metavar="CERT", help="start from the V_N of an earlier certificate")
    p.add_argument("--deg-vn", type=int)
    p.add_argument("--deg-r", type=int)
    p.add_argument("--gamma-hi", type=float)
    p.add_argument("--no-rational", action="store_true", help="skip rational Lyapunov function recovery")
    p.set_defaults(func=cmd_era)

    p = sub.add_parser("check", parents=[common], help="verify a certificate independently")
    p.add_argument("system")
    p.add_argument("cert")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", parents=[common], help="simulate a grid of initial states")
    p.add_argument("system")
    p.add_argument("cert")
    p.add_argument("-o", "--out")
    p.add_argument("--grid", type=int, default=20, help="points per axis (2-D) or sqrt of sample count")
    p.add_argument("--scale", type=float, default=1.5, help="grid box relative to the estimate's box")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=200, help="stored samples per trajectory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("contour", parents=[common], help="boundary and Lyapunov level curves (2-D)")
    p.add_argument("system")
    p.add_argument("cert")
    p.add_argument("-o", "--out")
    p.add_argument("--svg")
    p.add_argument("--levels", type=int, default=5, help="number of interior V levels")
    p.add_argument("--resolution", type=int, default=256)
    p.set_defaults(func=cmd_contour)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"attrakt {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
