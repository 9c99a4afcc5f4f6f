import time

import numpy as np

from vll.blayer import build_approx, residual, matching_defects
from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

t0 = time.time()
g = build_grid(2 * np.pi, 8.0, 48, 256, stretch=3.0)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
cfg = SimConfig(dt=5e-4, T=0.25, params=PhysParams.inviscid(alpha=1.0),
                save_every=5)
traj = run(g, s0, cfg, "inviscid")
print(f"outer run: {time.time()-t0:.1f}s, {len(traj.times)} snapshots")


def dnorm(a, t):
    k = int(np.argmin(np.abs(a.times - t)))
    d1, d2, dth = a._defect(k)
    return np.sqrt(g.integral(d1 * d1 + d2 * d2 + dth * dth))


# floor: K=0 with tiny eps -> discrete defect of the outer solve itself
t0 = time.time()
a0 = build_approx(g, traj, 1e-8, 0, 1.0)
print(f"floor build: {time.time()-t0:.1f}s")
for t in (0.125, 0.1875):
    print(f"  floor defect at t={t}: {dnorm(a0, t):.6e}")

for K in (1, 2):
    print(f"== K={K} ==")
    norms = []
    for eps in (0.2, 0.1, 0.05):
        t0 = time.time()
        a = build_approx(g, traj, eps, K, 1.0)
        n1 = dnorm(a, 0.125)
        n2 = dnorm(a, 0.1875)
        norms.append(n1)
        extra = ""
        if K == 1:
            extra = f" thmax={a.theta_layer_max():.4f}"
        print(f"eps={eps:5.2f} defect(0.125)={n1:.6e} defect(0.1875)={n2:.6e} "
              f"[{time.time()-t0:.1f}s]{extra}")
    n = np.array(norms)
    sl = np.diff(np.log(n)) / np.diff(np.log([0.2, 0.1, 0.05]))
    print(f"   slopes: {sl}")

a = build_approx(g, traj, 0.1, 2, 1.0)
md = matching_defects(a, 0.125)
print("matching:", md)
(r1, r2), rt = residual(a, g, 0.125, PhysParams.headline(0.1, 1.0))
print("residual maxes:", np.abs(r1.values).max(), np.abs(r2.values).max(),
      np.abs(rt.values).max())
