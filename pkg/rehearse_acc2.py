import time

import numpy as np

from vll.blayer import build_approx, matching_defects
from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

t0 = time.time()
g = build_grid(2 * np.pi, 8.0, 48, 384, stretch=3.0)
print("wall h:", g.y_nodes[1] - g.y_nodes[0], "max h:",
      np.diff(g.y_nodes).max())
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
cfg = SimConfig(dt=2.5e-4, T=0.25, params=PhysParams.inviscid(alpha=1.0),
                save_every=10)
traj = run(g, s0, cfg, "inviscid")
print(f"outer run: {time.time()-t0:.1f}s, {len(traj.times)} snapshots")


def dn(a, t, deriv=False):
    k = int(np.argmin(np.abs(a.times - t)))
    d1, d2, dth = a._defect(k)
    if deriv:
        d1, d2, dth = (g.ddy_arr(d1), g.ddy_arr(d2), g.ddy_arr(dth))
    return np.sqrt(g.integral(d1 * d1 + d2 * d2 + dth * dth))


a0 = build_approx(g, traj, 1e-8, 0, 1.0)
print(f"floor: {dn(a0, 0.125):.4e}")

eps_list = [0.2, 0.1, 0.05, 0.025]
norms, ratios, norms1 = [], [], []
for eps in eps_list:
    t1 = time.time()
    a = build_approx(g, traj, eps, 2, 1.0)
    n = dn(a, 0.125)
    nd = dn(a, 0.125, deriv=True)
    a1 = build_approx(g, traj, eps, 1, 1.0)
    n1 = dn(a1, 0.125)
    norms.append(n)
    norms1.append(n1)
    ratios.append(eps * nd / n)
    print(f"eps={eps:6.3f} defect={n:.5e} K1defect={n1:.5e} "
          f"eps*|dy d|/|d|={eps*nd/n:.3f}  [{time.time()-t1:.1f}s]")

le = np.log(eps_list)
ln = np.log(norms)
A = np.vstack([le, np.ones_like(le)]).T
sl = np.linalg.lstsq(A, ln, rcond=None)[0][0]
print("K=2 LS slope:", sl)
diff = np.array(norms1) - np.array(norms)
print("K1-K2 difference:", diff, "slopes:",
      np.diff(np.log(np.abs(diff))) / np.diff(le))

a = build_approx(g, traj, 0.1, 2, 1.0, nz=256)
b = build_approx(g, traj, 0.1, 2, 1.0, nz=512)
for t in (0.125,):
    ma = matching_defects(a, t)
    mb = matching_defects(b, t)
    print("slip nz256:", ma["slip"], " nz512:", mb["slip"])
