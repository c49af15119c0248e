"""Scratch probe: resolution cascade and long multiscale runs for stage2."""
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


def stage2_plain(uv, mask, init, lr, iters, lam3=0.01):
    tris = triangulate(mask)
    d = init.copy()
    adam = Adam([d], lr=lr)
    for it in range(iters):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + lam3 * lap_g])
    return d, res.energy


def run_ms(uv, mask, init, gt, n_levels, lr, iters, label):
    tris = triangulate(mask)
    h, w = mask.shape
    stack = [np.zeros((h >> j, w >> j)) for j in range(n_levels)]
    stack[0] = init.copy()
    adam = Adam(stack, lr=lr)
    t0 = time.time()
    for it in range(iters):
        d = synth(stack)
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step(stack, synth_adj(res.grad_depth + 0.01 * lap_g, n_levels))
    d = synth(stack)
    print(f"{label}: energy={res.energy:.5f} mse={depth_mse(d, gt, mask):.8f} "
          f"({time.time()-t0:.0f}s)")


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
hemi = spherical_init(mask)
fg = mask > 0.5

# resolution cascade: solve small, upsample depth x2 (slopes preserved)
t0 = time.time()
levels = [1, 2, 4]  # strides: 16x16, 32x32, 64x64
d_init = None
for stride in reversed(levels):
    m_c = mask[::stride, ::stride]
    uv_c = uv[::stride, ::stride] / stride
    if d_init is None:
        d_init = spherical_init(m_c)
    d_c, e_c = stage2_plain(uv_c, m_c, d_init, lr=1e-3, iters=8000)
    size = m_c.shape[0]
    print(f"cascade {size}x{size}: energy={e_c:.5f} ({time.time()-t0:.0f}s)")
    if stride > 1:
        nxt = mask[:: stride // 2, :: stride // 2].shape[0]
        d_init = 2.0 * up2(d_c)[:nxt, :nxt] / 1.96
# final refine result:
mse = depth_mse(d_c, depth, mask)
print(f"cascade final mse={mse:.8f} ({time.time()-t0:.0f}s)")

# long multiscale with corner-covering paraboloid
jj, ii = np.nonzero(fg)
ci, cj = (ii.min() + ii.max()) / 2.0, (jj.min() + jj.max()) / 2.0
r = min(ii.max() - ii.min(), jj.max() - jj.min()) / 2.0
ig, jg = np.meshgrid(np.arange(n), np.arange(n))
rho2 = (ig - ci) ** 2 + (jg - cj) ** 2
para = np.maximum(r * (1 - rho2 / (1.5 * r) ** 2), 0.0) * fg
run_ms(uv, mask, para, depth, 6, 3e-3, 40000, "wedge ms6 para1.5 40k")
