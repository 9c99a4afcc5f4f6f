import os
import time

import numpy as np

from vll.fields import PhysParams
from vll.grid import build_grid
from vll.solver import SimConfig
from vll.study import converge, linstab_study

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 16, 96, stretch=2.0)
base = SimConfig(dt=1.6e-3, T=0.08, params=PhysParams.headline(0.5, 1.0),
                 save_every=10)

rl = linstab_study(base, (0.4, 0.2, 0.1), g, 2, floor_check=True)
print(f"linstab floor [{time.time()-T0:.1f}s]:", rl.floor_check,
      "limited:", rl.floor_limited)
print("co_combo:", ["%.4e" % v for v in rl.errors["co_combo"]],
      "slope:", rl.slopes["co_combo"]["slope"])

t0 = time.time()
rep = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair")
paths = rep.write("/tmp/study_out", plot="svg")
print("artifacts:", [os.path.basename(p) for p in paths])
svg1 = open(paths[-1], "rb").read()
rep.write("/tmp/study_out2", plot="svg")
svg2 = open("/tmp/study_out2/rate_report.svg", "rb").read()
print(f"svg bytes {len(svg1)}, identical: {svg1 == svg2}"
      f" [{time.time()-t0:.1f}s]")

os.environ["VLL_THREADS"] = "2"
t0 = time.time()
rep_t = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair")
print(f"threads=2 identical: {rep_t.to_json() == rep.to_json()}"
      f" [{time.time()-t0:.1f}s]")

print(f"total {time.time()-T0:.1f}s")
