import json
import time

import numpy as np

from vll.fields import PhysParams
from vll.grid import build_grid
from vll.solver import SimConfig
from vll.study import converge, linstab_study

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 32, 160, stretch=3.0)
base = SimConfig(dt=8e-4, T=0.1, params=PhysParams.headline(0.5, 1.0),
                 save_every=25)

rep = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair")
print(f"converge [{time.time()-T0:.1f}s]")
for c in sorted(rep.errors):
    print(f"  {c}: {['%.5e' % v for v in rep.errors[c]]}"
          f" slope {rep.slopes[c]['slope']:.4f}"
          f" resid {rep.slopes[c]['fit_residual']:.4f}")
print("  warnings:", rep.warnings)
print("  hash:", rep.config_hash[:16])

t0 = time.time()
rep2 = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair")
print(f"determinism: json {rep.to_json() == rep2.to_json()}"
      f" csv {rep.to_csv() == rep2.to_csv()} [{time.time()-t0:.1f}s]")

t0 = time.time()
repa = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair",
                against="assembled")
print(f"against=assembled [{time.time()-t0:.1f}s]")
for c in ("L2_u", "Linf_u", "L2_theta", "Linf_theta"):
    print(f"  {c}: slope {repa.slopes[c]['slope']:.4f} vs"
          f" {rep.slopes[c]['slope']:.4f}"
          f"  larger: {repa.slopes[c]['slope'] > rep.slopes[c]['slope']}")

t0 = time.time()
rl = linstab_study(base, (0.3, 0.2, 0.1), g, 2)
print(f"linstab [{time.time()-t0:.1f}s]")
for c in sorted(rl.errors):
    vals = rl.errors[c]
    s = rl.slopes.get(c)
    print(f"  {c}: {['%.5e' % v for v in vals]}"
          + (f" slope {s['slope']:.4f}" if s else " (no slope)"))
print("  trivial:", rl.trivial_pass, "warnings:", rl.warnings)

t0 = time.time()
rz = linstab_study(base, (0.3, 0.2, 0.1), g, 2, amplitude=0.0)
print(f"zero-amplitude trivial: {rz.trivial_pass} slopes {rz.slopes}"
      f" [{time.time()-t0:.1f}s]")

print(f"total {time.time()-T0:.1f}s")
