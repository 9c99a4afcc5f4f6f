import numpy as np
from scipy.special import erfc

from vll.blayer import (OuterTraces, build_zgrid, layer_pressure,
                        slaved_vertical, solve_profiles)

ALPHA, USTAR, Q, T = 0.7, 0.3, 1.0, 0.25


def const_traces(nt, nx=4):
    times = np.linspace(0.0, T, nt)
    u1 = np.full((nt, nx), USTAR)
    dyu1 = np.full((nt, nx), ALPHA * USTAR - Q)
    th = np.zeros((nt, nx))
    return OuterTraces(times=times, u1=u1, dyu1=dyu1, theta=th, Lx=2 * np.pi)


def similarity(q, t, z):
    return -q * (np.sqrt(4.0 * t / np.pi) * np.exp(-z * z / (4.0 * t))
                 - z * erfc(z / (2.0 * np.sqrt(t))))


errs = []
for nz in (256, 512, 1024):
    zg = build_zgrid(nz=nz, zmax=20.0)
    prof = solve_profiles(const_traces(801), ALPHA, zg, order_max=1)[1]
    got = prof[-1].U1[:, 0]
    err = np.abs(got - similarity(Q, T, zg.z)).max()
    errs.append(err)
    print(f"nz={nz}: err={err:.4e}  TH zero: {not prof[-1].Theta.any()}")
print("ratios:", [errs[i] / errs[i + 1] for i in range(2)])

zg = build_zgrid(nz=512, zmax=20.0)
p41 = solve_profiles(const_traces(401), ALPHA, zg, order_max=1)[1]
p81 = solve_profiles(const_traces(801), ALPHA, zg, order_max=1)[1]
print("dt sensitivity at nz=512:",
      np.abs(p41[-1].U1 - p81[-1].U1).max())

x = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
for nz in (1024, 2048):
    zg = build_zgrid(nz=nz, zmax=20.0)
    U1 = np.exp(-zg.z)[:, None] * np.sin(x)[None, :]
    U2 = slaved_vertical(zg, U1, 2 * np.pi)
    exact = np.cos(x)[None, :] * (np.exp(-zg.z) - np.exp(-zg.zmax))[:, None]
    e1 = np.abs(U2 - exact).max()
    TH = np.exp(-zg.z)[:, None] * np.cos(x)[None, :]
    P = layer_pressure(zg, TH)
    pexact = -np.cos(x)[None, :] * (np.exp(-zg.z) - np.exp(-zg.zmax))[:, None]
    e2 = np.abs(P - pexact).max()
    print(f"nz={nz}: slaved err {e1:.4e}  pressure err {e2:.4e}")
