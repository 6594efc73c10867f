"""Lotka-Volterra style system: certificate, rational Lyapunov function, plots.

Runs the alternating search from the quadratic Lyapunov function of the
linearization, checks the final certificate independently and writes the
boundary plus a few level curves of V = V_N/(gamma - R) to CSV and SVG.

    python demos/02_lotka_volterra.py [output-dir]
"""

import sys
import time
from pathlib import Path

import numpy as np

from attrakt import data_path, load_example, parse_config
from attrakt.roa import algorithm3, attach_rational
from attrakt.verify import (VerifyConfig, check_certificate, contour2d, estimate_bbox, write_contour_csv,
                            write_contour_svg)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

sys_ = load_example("ex1")
cfg = parse_config(data_path("ex1.cfg").read_text())
print(sys_.to_text())

t0 = time.perf_counter()
certs = algorithm3(sys_, cfg)
for c in certs:
    print(f"iteration {c.iteration}: gamma = {c.gamma:.6g}")
cert = certs[-1]
print(f"R = {cert.R.to_text(sys_.var_names)}")
print(f"search took {time.perf_counter() - t0:.1f} s")

if attach_rational(sys_, cert, cfg):
    print("rational Lyapunov function found")
else:
    print("no rational Lyapunov function at this level")

report = check_certificate(sys_, cert, VerifyConfig())
print(report.summary())

# area of the estimate by Monte Carlo on its bounding box
rng = np.random.default_rng(0)
lo, hi = estimate_bbox(cert.R, cert.gamma, 2, rng)
z = rng.uniform(lo, hi, size=(200_000, 2))
area = np.prod(hi - lo) * np.mean(cert.R.evaluate(z) <= cert.gamma)
print(f"area of the estimate ~ {area:.3f}")

bbox = (1.2 * lo, 1.2 * hi)
lines = contour2d(cert.R, cert.gamma, bbox)
ids = [0] * len(lines)
if cert.rational:
    for k, level in enumerate((0.02, 0.1, 0.5, 2.0), start=1):
        ls = contour2d(cert.rational_lf, level, bbox)
        lines += ls
        ids += [k] * len(ls)
write_contour_csv(lines, out / "lotka_volterra.contour.csv", sys_.var_names, ids)
write_contour_svg(lines, out / "lotka_volterra.svg", bbox)
(out / "lotka_volterra.cert.json").write_text(cert.dumps())
print(f"files written to {out}/")
