"""Scratch probe: stage2 with a multiscale (pyramid) depth parametrization."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init
from texshape.warpfield import _up_axis, _up_axis_adjoint


def up2(x):
    return _up_axis(_up_axis(x, 0), 1)


def up2_adj(g):
    return _up_axis_adjoint(_up_axis_adjoint(g, 1), 0)


def synth(stack):
    acc = stack[-1].copy()
    for lvl in reversed(stack[:-1]):
        acc = up2(acc) + lvl
    return acc


def synth_adj(g, n_levels):
    grads = []
    for _ in range(n_levels - 1):
        grads.append(g)
        g = up2_adj(g)
    grads.append(g)
    return grads


def run_ms(uv, mask, init, gt, n_levels, lr, iters, label):
    tris = triangulate(mask)
    h, w = mask.shape
    stack = [np.zeros((h >> j, w >> j)) for j in range(n_levels)]
    stack[0] = init.copy()  # coarser levels start at zero
    adam = Adam(stack, lr=lr)
    t0 = time.time()
    for it in range(iters):
        d = synth(stack)
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        g = res.grad_depth + 0.01 * lap_g
        adam.step(stack, synth_adj(g, n_levels))
    d = synth(stack)
    mse = depth_mse(d, gt, mask)
    print(f"{label}: energy={res.energy:.5f} mse={mse:.8f} ({time.time()-t0:.0f}s)")


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
hemi = spherical_init(mask)

run_ms(uv, mask, hemi, depth, 4, 1e-3, 20000, "wedge ms4 lr1e-3")
run_ms(uv, mask, hemi, depth, 4, 3e-3, 20000, "wedge ms4 lr3e-3")
run_ms(uv, mask, hemi, depth, 6, 3e-3, 20000, "wedge ms6 lr3e-3")

spec_s = PrimitiveSpec("sphere", "shaded", resolution=n)
_, depth_s, mask_s = gen_primitive(spec_s)
uv_s, _ = forward_lscm(depth_s, mask_s, cfg_f)
run_ms(uv_s, mask_s, spherical_init(mask_s), depth_s, 4, 1e-3, 20000, "sphere ms4 lr1e-3")
