"""Scratch probe: energy along the amplitude direction + descent from GT."""
import numpy as np

from texshape.bench import PrimitiveSpec, gen_primitive, depth_mse
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm

spec = PrimitiveSpec("cube", "shaded", resolution=64)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

print("energy along a*GT:")
for a in [0.0, 0.2, 0.39, 0.6, 0.8, 0.9, 1.0, 1.1, 1.3]:
    e = lscm_energy(a * depth, uv, tris).energy
    print(f"  a={a:4.2f}: {e:10.4f}")

d = depth.copy()
adam = Adam([d], lr=1e-3)
for it in range(5000):
    res = lscm_energy(d, uv, tris, need_depth_grad=True)
    lap_v, lap_g = laplacian_l1(d, mask)
    adam.step([d], [res.grad_depth + 0.01 * lap_g])
    if (it + 1) % 1000 == 0:
        print(f"from GT: it={it+1} energy={res.energy:.6f} mse={depth_mse(d, depth, mask):.8f}")
