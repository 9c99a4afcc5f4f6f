import numpy as np

from vll.blayer import build_approx
from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

g = build_grid(2 * np.pi, 8.0, 32, 160, stretch=3.0)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
cfg = SimConfig(dt=8e-4, T=0.1, params=PhysParams.inviscid(alpha=1.0),
                save_every=25)
outer = run(g, s0, cfg, "inviscid")

a0 = build_approx(g, outer, 0.1, 0, 1.0)
for k, t in enumerate(outer.times):
    s = a0.state_at(float(t))
    ref = outer.states[k]
    print(k, "bitwise:",
          np.array_equal(s.u1.values, ref.u1.values),
          np.array_equal(s.u2.values, ref.u2.values),
          np.array_equal(s.theta.values, ref.theta.values),
          np.array_equal(s.p.values, ref.p.values))

tm = 0.04
for eps in (0.4, 0.2, 0.1):
    a2 = build_approx(g, outer, eps, 2, 1.0)
    s = a2.state_at(tm)
    div = g.ddx_arr(s.u1.values) + g.ddy_arr(s.u2.values)
    print(f"eps={eps}: assembled div {np.abs(div).max():.3e}")

for K in (1, 2):
    rats = []
    for eps in (0.4, 0.2, 0.1):
        a = build_approx(g, outer, eps, K, 1.0)
        k = list(a.times).index(tm)
        d = a._defect(k)
        dn = np.sqrt(sum(g.integral(v * v) for v in d))
        dyn = np.sqrt(sum(g.integral(g.ddy_arr(v) ** 2) for v in d))
        rats.append(eps * dyn / dn)
    print(f"K={K} eps*|dy d|/|d|:", [f"{r:.3f}" for r in rats])

ref0 = outer.states[0]
print("outer wall u2 row max:", np.abs(ref0.u2.values[0, :]).max())
