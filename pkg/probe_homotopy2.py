"""Scratch probe: homotopy from small seed, ms-depth combo, slow long run."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init
from texshape.warpfield import identity_coords, _up_axis, _up_axis_adjoint


def up2(x):
    return _up_axis(_up_axis(x, 0), 1)


def up2_adj(g):
    return _up_axis_adjoint(_up_axis_adjoint(g, 1), 0)


def synth(stack):
    acc = stack[-1].copy()
    for lvl in reversed(stack[:-1]):
        acc = up2(acc) + lvl
    return acc


def synth_adj(g, n):
    grads = []
    for _ in range(n - 1):
        grads.append(g)
        g = up2_adj(g)
    grads.append(g)
    return grads


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
hemi = spherical_init(mask)
tris = triangulate(mask)
ident = identity_coords(n, n)
delta = uv - ident


def homotopy_plain(init, lr, iters, ramp_frac, label):
    d = init.copy()
    adam = Adam([d], lr=lr)
    ramp = int(iters * ramp_frac)
    t0 = time.time()
    for it in range(iters):
        t = min((it + 1) / ramp, 1.0)
        res = lscm_energy(d, ident + t * delta, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + 0.01 * lap_g])
    print(f"{label}: energy={res.energy:.6f} mse={depth_mse(d, depth, mask):.8f} "
          f"({time.time()-t0:.0f}s)")


def homotopy_ms(init, n_levels, lr, iters, ramp_frac, label):
    stack = [np.zeros((n >> j, n >> j)) for j in range(n_levels)]
    stack[0] = init.copy()
    adam = Adam(stack, lr=lr)
    ramp = int(iters * ramp_frac)
    t0 = time.time()
    for it in range(iters):
        t = min((it + 1) / ramp, 1.0)
        d = synth(stack)
        res = lscm_energy(d, ident + t * delta, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step(stack, synth_adj(res.grad_depth + 0.01 * lap_g, n_levels))
    d = synth(stack)
    print(f"{label}: energy={res.energy:.6f} mse={depth_mse(d, depth, mask):.8f} "
          f"({time.time()-t0:.0f}s)")


homotopy_plain(0.1 * hemi, 3e-3, 20000, 0.75, "homotopy seed0.1 lr3e-3")
homotopy_ms(0.1 * hemi, 6, 3e-3, 20000, 0.75, "homotopy ms6 seed0.1 lr3e-3")
homotopy_ms(0.1 * hemi, 6, 1e-2, 30000, 0.6, "homotopy ms6 seed0.1 lr1e-2 30k")

d = hemi.copy()
adam = Adam([d], lr=3e-4)
t0 = time.time()
for it in range(150000):
    res = lscm_energy(d, uv, tris, need_depth_grad=True)
    lap_v, lap_g = laplacian_l1(d, mask)
    adam.step([d], [res.grad_depth + 0.01 * lap_g])
    if (it + 1) % 50000 == 0:
        print(f"slow lr3e-4 it={it+1}: energy={res.energy:.5f} "
              f"mse={depth_mse(d, depth, mask):.6f} ({time.time()-t0:.0f}s)")
