import time

import numpy as np

from vll.blayer import build_approx
from vll.fields import Field, PhysParams, State, make_initial_data
from vll.grid import build_grid
from vll.norms import _hco_vec
from vll.solver import SimConfig, run

T0 = time.time()
g = build_grid(2 * np.pi, 8.0, 48, 384, stretch=3.0)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)
outer = run(g, s0, SimConfig(dt=2.5e-4, T=0.25,
                             params=PhysParams.inviscid(alpha=1.0),
                             save_every=10), "inviscid")

for eps in (0.3,):
    a = build_approx(g, outer, eps, 2, 1.0)
    sc = eps ** 3
    e0 = State(Field.on(g, sc * s0.u1.values), Field.on(g, sc * s0.u2.values),
               Field.on(g, sc * s0.theta.values), Field.zeros(g), 0.0)
    lin = run(g, e0, SimConfig(dt=2.5e-4, T=0.25,
                               params=PhysParams.headline(eps, 1.0),
                               save_every=25), "linearized", approx=a)
    sup = 0.0
    for s in lin.states:
        u = (s.u1.values, s.u2.values, s.theta.values)
        du = tuple(g.ddy_arr(v) for v in u)
        sup = max(sup, _hco_vec(g, u, 2) + _hco_vec(g, du, 1))
    print(f"eps={eps}: sup_combo={sup:.5e}")

def ls(sups):
    le = np.log(list(sups))
    A = np.vstack([le, np.ones_like(le)]).T
    return np.linalg.lstsq(A, np.log(list(sups.values())), rcond=None)[0][0]

known = {0.4: 1.69172, 0.3: sup, 0.2: 5.33571e-01, 0.1: 1.57842e-01}
for pick in ({0.3, 0.2, 0.1}, {0.4, 0.3, 0.2, 0.1}, {0.4, 0.3, 0.2}):
    sel = {e: known[e] for e in sorted(pick, reverse=True)}
    print(sorted(pick, reverse=True), "LS slope:", ls(sel))
print(f"total {time.time()-T0:.0f}s")
