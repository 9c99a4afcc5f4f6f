import numpy as np
from scipy.special import erfc

from vll.blayer import (OuterTraces, build_zgrid, solve_profiles,
                        solve_first_order_profile, slaved_vertical,
                        layer_pressure, ZGrid)

Lx = 2 * np.pi


def const_traces(nt, T, nx, u0, dy0, th0=0.0):
    ts = np.linspace(0.0, T, nt)
    ones = np.ones((nt, nx))
    return OuterTraces(times=ts, u1=u0 * ones, dyu1=dy0 * ones,
                       theta=th0 * ones, Lx=Lx)


def similarity(q, t, z):
    if t == 0:
        return np.zeros_like(z)
    s = np.sqrt(4.0 * t / np.pi) * np.exp(-z * z / (4.0 * t))
    return -q * (s - z * erfc(z / (2.0 * np.sqrt(t))))


# --- constant-flux heat oracle: alpha=0, u1 trace 0, dyu1 = -q ---
q = 0.7
T = 0.4
print("== dt refinement at nz=1024 ==")
zg = build_zgrid(1024, 20.0)
for nt in (11, 21, 41, 81, 161):
    tr = const_traces(nt, T, 4, 0.0, -q)
    profs = solve_first_order_profile(tr, 0.0, zg)
    got = profs[-1].U1[:, 0]
    want = similarity(q, T, zg.z)
    err = np.abs(got - want).max()
    print(f"nt={nt:4d} dt={T/(nt-1):.4g}  err={err:.6e}")

print("== nz refinement at nt=801 ==")
for nz in (256, 512, 1024, 2048):
    zg = build_zgrid(nz, 20.0)
    tr = const_traces(801, T, 4, 0.0, -q)
    profs = solve_first_order_profile(tr, 0.0, zg)
    got = profs[-1].U1[:, 0]
    want = similarity(q, T, zg.z)
    err = np.abs(got - want).max()
    print(f"nz={nz:5d} h={zg.h:.4g}  err={err:.6e}")

# --- prepared traces: q = alpha*u1 - dyu1 = 0 -> all profiles zero ---
tr = const_traces(21, 0.2, 8, 1.3, 1.3 * 2.0)
out = solve_profiles(tr, 2.0, build_zgrid(256, 20.0), order_max=2)
m1 = max(np.abs(p.U1).max() for p in out[1])
m2 = max(np.abs(p.U1).max() for p in out[2])
mt = max(np.abs(p.Theta).max() for p in out[1])
print(f"prepared: |U1^1|={m1} |U1^2|={m2} |Th^1|={mt}")

# --- slaved identities on analytic fields ---
zg = build_zgrid(2048, 20.0)
nx = 32
x = np.arange(nx) * (Lx / nx)
k = 2.0
U1 = np.sin(k * x)[None, :] * np.exp(-zg.z)[:, None]
U2 = slaved_vertical(zg, U1, Lx)
want = k * np.cos(k * x)[None, :] * np.exp(-zg.z)[:, None]
print("slaved_vertical err:", np.abs(U2 - want).max())
TH = np.cos(k * x)[None, :] * np.exp(-zg.z)[:, None]
P = layer_pressure(zg, TH)
wantP = -np.cos(k * x)[None, :] * np.exp(-zg.z)[:, None]
print("layer_pressure err:", np.abs(P - wantP).max())
