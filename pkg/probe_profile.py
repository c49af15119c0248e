"""Scratch probe: what surface does stage2 actually converge to?"""
import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init

np.set_printoptions(precision=2, suppress=True, linewidth=200)

spec = PrimitiveSpec("cube", "shaded", resolution=64)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

d = spherical_init(mask)
adam = Adam([d], lr=3e-3)
for it in range(20000):
    res = lscm_energy(d, uv, tris, need_depth_grad=True)
    lap_v, lap_g = laplacian_l1(d, mask)
    adam.step([d], [res.grad_depth + 0.01 * lap_g])

row = 32
aligned = d - d[fg].mean()
gt_aligned = depth - depth[fg].mean()
print("uv u-profile along center row (every 4th):")
print(uv[row, ::4, 0])
print("gt-aligned depth, center row (every 2nd):")
print(gt_aligned[row, ::2] * fg[row, ::2])
print("recovered depth, center row (every 2nd):")
print(aligned[row, ::2] * fg[row, ::2])
print("recovered depth, center col (every 2nd):")
print(aligned[::2, 32] * fg[::2, 32])
print("gt col:")
print(gt_aligned[::2, 32] * fg[::2, 32])
print("energy", res.energy, "mse", depth_mse(d, depth, mask))
