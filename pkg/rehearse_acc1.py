import time

import numpy as np

from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 128, 256, stretch=3.0, eps_hint=0.025)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)

inv = run(g, s0, SimConfig(dt=5e-4, T=0.25,
                           params=PhysParams.inviscid(alpha=1.0),
                           save_every=10), "inviscid")
print(f"inviscid: {time.time()-T0:.0f}s")

rows = {}
for eps in (0.2, 0.1, 0.05, 0.025):
    t1 = time.time()
    vis = run(g, s0, SimConfig(dt=5e-4, T=0.25,
                               params=PhysParams.headline(eps, 1.0),
                               save_every=10), "viscous")
    l2u = linfu = l2t = linft = 0.0
    for sv, si in zip(vis.states, inv.states):
        d1 = sv.u1.values - si.u1.values
        d2 = sv.u2.values - si.u2.values
        dt_ = sv.theta.values - si.theta.values
        l2u = max(l2u, np.sqrt(g.integral(d1 * d1 + d2 * d2)))
        l2t = max(l2t, np.sqrt(g.integral(dt_ * dt_)))
        linfu = max(linfu, np.abs(d1).max(), np.abs(d2).max())
        linft = max(linft, np.abs(dt_).max())
    rows[eps] = (l2u, linfu, l2t, linft)
    print(f"eps={eps:6.3f} L2u={l2u:.5e} Linfu={linfu:.5e} "
          f"L2th={l2t:.5e} Linfth={linft:.5e}  [{time.time()-t1:.0f}s]")

eps = np.array(sorted(rows, reverse=True))
le = np.log(eps)
A = np.vstack([le, np.ones_like(le)]).T
for j, name in enumerate(("L2_u", "Linf_u", "L2_theta", "Linf_theta")):
    y = np.log([rows[e][j] for e in eps])
    sl, _ = np.linalg.lstsq(A, y, rcond=None)[0]
    print(f"{name}: slope {sl:.3f}")
print(f"total {time.time()-T0:.0f}s")
