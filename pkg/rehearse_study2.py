import time

import numpy as np

from vll.fields import PhysParams
from vll.grid import build_grid
from vll.solver import SimConfig
from vll.study import converge, linstab_study

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 16, 96, stretch=2.0)
print("first y nodes:", np.array2string(g.y_nodes[:10], precision=4))
base = SimConfig(dt=1.6e-3, T=0.08, params=PhysParams.headline(0.5, 1.0),
                 save_every=10)

rep = converge(base, (0.4, 0.2, 0.1), g, "vortex_pair", floor_check=True)
print(f"converge floor [{time.time()-T0:.1f}s]:", rep.floor_check,
      "limited:", rep.floor_limited)

t0 = time.time()
deep = converge(base, (0.4, 0.2, 0.002), g, "vortex_pair")
print("deep sweep should have refused...")
