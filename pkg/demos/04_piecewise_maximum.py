"""Estimate bounded by the maximum of two fixed polynomials.

For dx1/dt = -x1 (1 - x1 x2), dx2/dt = -x2 the region of attraction is
x1 x2 < 2. With R_M = max(R1, R2), R2 = 2 x1 x2, any certified level must
stay below 4. The demo certifies a level, then simulates a grid of initial
states and counts converging and diverging trajectories.

    python demos/04_piecewise_maximum.py [output-dir]
"""

import sys
from pathlib import Path

import numpy as np

from attrakt import data_path, load_example, parse_config
from attrakt.certificate import PiecewiseMax
from attrakt.roa import piecewise_era
from attrakt.sysparse import parse_pieces
from attrakt.verify import (VerifyConfig, check_certificate, contour2d, rk4, trajectory_status,
                            write_contour_svg, write_trajectory_csv)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

sys_ = load_example("ex3")
cfg = parse_config(data_path("ex3.cfg").read_text())
pieces, gamma_lo = parse_pieces(data_path("ex3.pieces").read_text(), sys_.var_names)
for i, p in enumerate(pieces, start=1):
    print(f"R{i} = {p.to_text(sys_.var_names)}")

cert = piecewise_era(sys_, pieces, cfg, gamma_lo=gamma_lo)
print(f"certified level gamma* = {cert.gamma:.5f} (must be < 4)")
print(f"rational Lyapunov function: {'found' if cert.rational else 'not found'}")
print(check_certificate(sys_, cert, VerifyConfig()).summary())

g = np.linspace(-6, 6, 25)
X0 = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
traj = rk4(sys_, X0, 0.01, 40.0, escape_radius=1e3, stride=20)
status = trajectory_status(traj)
inside = PiecewiseMax(pieces).evaluate(X0) <= cert.gamma
for s in ("converging", "diverging", "undecided"):
    print(f"{s:>10}: {status.count(s):4d} of {len(status)}")
print("all grid points inside the estimate converge:",
      all(st == "converging" for st, ins in zip(status, inside) if ins))

write_trajectory_csv(traj, out / "piecewise.traj.csv", sys_.var_names, status)
bbox = (np.array([-6.0, -6.0]), np.array([6.0, 6.0]))
write_contour_svg(contour2d(PiecewiseMax(pieces), cert.gamma, bbox), out / "piecewise.svg", bbox)
print(f"files written to {out}/")
