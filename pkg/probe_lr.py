"""Scratch probe: lr sweep with long horizons for stage2."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init

spec = PrimitiveSpec("cube", "shaded", resolution=64)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

for lr, iters in [(1e-3, 60000), (3e-4, 60000)]:
    d = spherical_init(mask)
    adam = Adam([d], lr=lr)
    t0 = time.time()
    for it in range(iters):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + 0.01 * lap_g])
        if (it + 1) % 10000 == 0:
            mse = depth_mse(d, depth, mask)
            print(
                f"lr={lr} it={it+1} energy={res.energy:.5f} mse={mse:.6f} "
                f"({time.time()-t0:.0f}s)"
            )
