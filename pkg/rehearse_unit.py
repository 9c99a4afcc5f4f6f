import time

import numpy as np

from vll.blayer import build_approx, matching_defects
from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 32, 160, stretch=3.0)
print("wall h:", g.y_nodes[1] - g.y_nodes[0], "dx:", g.dx)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
cfg = SimConfig(dt=8e-4, T=0.1, params=PhysParams.inviscid(alpha=1.0),
                save_every=25)
outer = run(g, s0, cfg, "inviscid")
print(f"outer: {time.time()-T0:.1f}s, {len(outer.states)} states")

t0 = time.time()
a0 = build_approx(g, outer, 1e-8, 0, 1.0)
floor = max(np.abs(v).max() for k in range(len(a0.times))
            for v in a0._defect(k))
print(f"floor (K=0): {floor:.4e}  [{time.time()-t0:.1f}s]")

tm = 0.04
for K in (1, 2):
    ds = []
    for eps in (0.4, 0.2, 0.1):
        a = build_approx(g, outer, eps, K, 1.0)
        k = list(a.times).index(tm)
        d = max(np.abs(v).max() for v in a._defect(k))
        ds.append(d)
    r = [np.log(ds[i] / ds[i + 1]) / np.log(2) for i in range(2)]
    print(f"K={K}: defects {ds} slopes {r}")

a1 = build_approx(g, outer, 0.1, 1, 1.0)
a2 = build_approx(g, outer, 0.1, 2, 1.0)
md = matching_defects(a2, tm)
print("matching:", md)
print("theta_layer_max:", a2.theta_layer_max())

diffs = []
for eps in (0.4, 0.2, 0.1):
    b1 = build_approx(g, outer, eps, 1, 1.0)
    b2 = build_approx(g, outer, eps, 2, 1.0)
    s1, s2 = b1.state_at(tm), b2.state_at(tm)
    dd = max(np.abs(s1.u1.values - s2.u1.values).max(),
             np.abs(s1.u2.values - s2.u2.values).max(),
             np.abs(s1.theta.values - s2.theta.values).max())
    diffs.append(dd)
print("K1-K2 diffs:", diffs,
      "slopes:", [np.log(diffs[i] / diffs[i + 1]) / np.log(2) for i in range(2)])
print(f"total {time.time()-T0:.1f}s")
