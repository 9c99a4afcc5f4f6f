import numpy as np

from vll.blayer import build_approx
from vll.fields import PhysParams, make_initial_data
from vll.grid import build_grid
from vll.solver import SimConfig, run

g = build_grid(2 * np.pi, 8.0, 48, 256, stretch=3.0)
s0 = make_initial_data(g, "vortex_pair", 0.5, 1.0)


def floor_parts(save_every):
    cfg = SimConfig(dt=5e-4, T=0.25, params=PhysParams.inviscid(alpha=1.0),
                    save_every=save_every)
    traj = run(g, s0, cfg, "inviscid")
    a = build_approx(g, traj, 1e-8, 0, 1.0)
    k = int(np.argmin(np.abs(a.times - 0.125)))
    d1, d2, dth = a._defect(k)

    def n(f):
        return np.sqrt(g.integral(f * f))

    print(f"se={save_every}: |d1|={n(d1):.3e} |d2|={n(d2):.3e} "
          f"|dth|={n(dth):.3e}")
    return d1, d2, dth


d1a, d2a, _ = floor_parts(5)
d1b, d2b, _ = floor_parts(10)

# where does d1 live? wall zone vs interior
iy = np.searchsorted(g.y_nodes, 1.0)
print("d1 max total/interior:", np.abs(d1a).max(), np.abs(d1a[iy:]).max())
print("d2 max total/interior:", np.abs(d2a).max(), np.abs(d2a[iy:]).max())
print("row of |d1| max:", np.unravel_index(np.argmax(np.abs(d1a)), d1a.shape))
print("row of |d2| max:", np.unravel_index(np.argmax(np.abs(d2a)), d2a.shape))
