import time

import numpy as np

from vll.blayer import build_approx
from vll.fields import Field, PhysParams, State, make_initial_data
from vll.grid import build_grid
from vll.norms import _hco_vec, Em
from vll.solver import SimConfig, run

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 48, 384, stretch=3.0)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
outer = run(g, s0, SimConfig(dt=2.5e-4, T=0.25,
                             params=PhysParams.inviscid(alpha=1.0),
                             save_every=10), "inviscid")
print(f"outer: {time.time()-T0:.0f}s")

K = 2
sups, ems = [], []
for eps in (0.2, 0.1, 0.05, 0.025):
    t1 = time.time()
    a = build_approx(g, outer, eps, K, 1.0)
    sc = eps ** (K + 1)
    e0 = State(Field.on(g, sc * s0.u1.values), Field.on(g, sc * s0.u2.values),
               Field.on(g, sc * s0.theta.values), Field.zeros(g), 0.0)
    lin = run(g, e0, SimConfig(dt=2.5e-4, T=0.25,
                               params=PhysParams.headline(eps, 1.0),
                               save_every=25), "linearized", approx=a)
    sup = 0.0
    emsup = 0.0
    for s in lin.states:
        u = (s.u1.values, s.u2.values, s.theta.values)
        du = tuple(g.ddy_arr(v) for v in u)
        sup = max(sup, _hco_vec(g, u, 2) + _hco_vec(g, du, 1))
        emsup = max(emsup, np.sqrt(Em(g, s, 1.0, 2)))
    sups.append(sup)
    ems.append(emsup)
    print(f"eps={eps:6.3f} sup_combo={sup:.5e} Em_sup={emsup:.5e} "
          f"[{time.time()-t1:.0f}s]")
    del a, lin

le = np.log([0.2, 0.1, 0.05, 0.025])
A = np.vstack([le, np.ones_like(le)]).T
print("combo slope:", np.linalg.lstsq(A, np.log(sups), rcond=None)[0][0])
print("Em slope:", np.linalg.lstsq(A, np.log(ems), rcond=None)[0][0])
print(f"total {time.time()-T0:.0f}s")
