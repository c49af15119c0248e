"""Scratch probe: is the stall point a local min or an Adam artifact?"""
import numpy as np

from texshape.bench import PrimitiveSpec, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init

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
    g = res.grad_depth + 0.01 * lap_g
    adam.step([d], [g])
print("stall energy:", res.energy)
print("grad norm at stall:", np.linalg.norm(g), "max |g|:", np.abs(g).max())

gt = depth.copy()
gt[fg] += d[fg].mean() - gt[fg].mean()  # align translation gauge
print("segment stall -> GT:")
for t in [0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0]:
    x = (1 - t) * d + t * gt
    e = lscm_energy(x, uv, tris).energy + 0.01 * laplacian_l1(x, mask)[0]
    print(f"  t={t:4.2f}: {e:10.4f}")

# plain gradient descent with tiny fixed step from the stall point
x = d.copy()
for it in range(3000):
    res = lscm_energy(x, uv, tris, need_depth_grad=True)
    lap_v, lap_g = laplacian_l1(x, mask)
    g = res.grad_depth + 0.01 * lap_g
    x -= 2e-4 * g
print("after 3000 plain GD steps from stall:", lscm_energy(x, uv, tris).energy)
