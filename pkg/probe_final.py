"""Scratch probe: long-horizon multiscale stage2 with wide spherical caps."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, mean_abs_laplacian, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm
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


def synth_adj(g, n):
    out = []
    for _ in range(n - 1):
        out.append(g)
        g = up2_adj(g)
    out.append(g)
    return out


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

jj, ii = np.nonzero(fg)
ci, cj = (ii.min() + ii.max()) / 2.0, (jj.min() + jj.max()) / 2.0
r = min(ii.max() - ii.min(), jj.max() - jj.min()) / 2.0
ig, jg = np.meshgrid(np.arange(n), np.arange(n))
rho2 = (ig - ci) ** 2 + (jg - cj) ** 2


def cap(radius_scale):
    rr = radius_scale * r
    return np.sqrt(np.maximum(rr * rr - rho2, 0.0)) * fg


for rs, lr, iters in [(1.3, 3e-3, 40000), (1.5, 3e-3, 40000), (1.5, 3e-3, 150000)]:
    stack = [np.zeros((n >> j, n >> j)) for j in range(6)]
    stack[0] = cap(rs)
    adam = Adam(stack, lr=lr)
    t0 = time.time()
    for it in range(iters):
        d = synth(stack)
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step(stack, synth_adj(res.grad_depth + 0.01 * lap_g, 6))
        if (it + 1) % 25000 == 0:
            dd = synth(stack)
            print(f"  cap{rs} lr{lr} it={it+1}: energy={res.energy:.5f} "
                  f"mse={depth_mse(dd, depth, mask):.6f} ({time.time()-t0:.0f}s)")
    d = synth(stack)
    print(f"cap{rs} {iters}: energy={res.energy:.5f} "
          f"mse={depth_mse(d, depth, mask):.8f} smooth={mean_abs_laplacian(d, mask):.5f} "
          f"({time.time()-t0:.0f}s)")
