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
print(f"outer: {time.time()-T0:.0f}s")


def combo_parts(lin):
    p1 = p2 = 0.0
    for s in lin.states:
        u = (s.u1.values, s.u2.values, s.theta.values)
        du = tuple(g.ddy_arr(v) for v in u)
        p1 = max(p1, _hco_vec(g, u, 2))
        p2 = max(p2, _hco_vec(g, du, 1))
    return p1, p2


# floor-only response: K=0 approx carries the outer discrete defect
af = build_approx(g, outer, 1e-8, 0, 1.0)
e0 = State(Field.zeros(g), Field.zeros(g), Field.zeros(g), Field.zeros(g), 0.0)
linf_ = run(g, e0, SimConfig(dt=2.5e-4, T=0.25,
                             params=PhysParams.headline(0.025, 1.0),
                             save_every=25), "linearized", approx=af)
f1, f2 = combo_parts(linf_)
print(f"floor response: H2={f1:.4e} dyH1={f2:.4e} combo={f1+f2:.4e}")
del af, linf_

for eps in (0.1, 0.025):
    a = build_approx(g, outer, eps, 2, 1.0)
    sc = eps ** 3
    e0 = State(Field.on(g, sc * s0.u1.values), Field.on(g, sc * s0.u2.values),
               Field.on(g, sc * s0.theta.values), Field.zeros(g), 0.0)
    lin = run(g, e0, SimConfig(dt=2.5e-4, T=0.25,
                               params=PhysParams.headline(eps, 1.0),
                               save_every=25), "linearized", approx=a)
    p1, p2 = combo_parts(lin)
    print(f"eps={eps}: H2={p1:.4e} dyH1={p2:.4e}")
    del a, lin
print(f"total {time.time()-T0:.0f}s")
