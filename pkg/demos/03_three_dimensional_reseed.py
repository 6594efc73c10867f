"""Three-state system: degree-2 estimate, then a degree-4 one seeded from V_N.

The first run starts from the quadratic Lyapunov function of the
linearization. Its Lyapunov numerator V_N becomes the initial level
function of a second run with quartic R. The second run is asked to
contain the first estimate, and a separate SOS containment certificate
confirms it. A rational Lyapunov function is not expected here.
"""

import time

from attrakt import data_path, load_example, parse_config
from attrakt.roa import algorithm3, containment_certificate, recover_rational_lf, reseed_from
from attrakt.verify import VerifyConfig, check_certificate

sys_ = load_example("ex2")
print(sys_.to_text())

cfg1 = parse_config(data_path("ex2.cfg").read_text())
t0 = time.perf_counter()
first = algorithm3(sys_, cfg1)
print("degree-2 trace:", ", ".join(f"{c.gamma:.5g}" for c in first), f"({time.perf_counter() - t0:.0f} s)")
first = first[-1]
print(check_certificate(sys_, first, VerifyConfig()).summary())

cfg2 = parse_config(data_path("ex2_reseed.cfg").read_text())
R0 = reseed_from(first.V_N, cfg2)
print(f"re-seeded R0 = {R0.to_text(sys_.var_names)}")
t0 = time.perf_counter()
second = algorithm3(sys_, cfg2, R0=R0, anchors=[(first.R, first.gamma)])
print("degree-4 trace:", ", ".join(f"{c.gamma:.5g}" for c in second), f"({time.perf_counter() - t0:.0f} s)")
second = second[-1]
print(check_certificate(sys_, second, VerifyConfig()).summary())

link = containment_certificate(second.R, second.gamma, first.R, first.gamma, cfg2)
print("first estimate inside the second:", "certified" if link is not None else "not certified")

rat = recover_rational_lf(sys_, second.R, second.gamma, second.p, cfg2)
print("rational Lyapunov function:", "found" if rat is not None else "not found")
