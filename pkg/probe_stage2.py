"""Scratch probe: stage2 convergence diagnostics on the cube round trip."""
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

for lr, iters in [(3e-3, 40000)]:
    d = spherical_init(mask)
    adam = Adam([d], lr=lr)
    t0 = time.time()
    for it in range(iters):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + 0.01 * lap_g])
        if (it + 1) % 5000 == 0:
            dd = d.copy()
            dd[fg] -= dd[fg].mean()
            dd[~fg] = 0.0
            try:
                mse = depth_mse(dd, depth, mask)
            except Exception as e:
                mse = float("nan")
            print(
                f"lr={lr} it={it+1} energy={res.energy:.5f} lap={lap_v:.5f} "
                f"mse={mse:.6f} ({time.time()-t0:.0f}s)"
            )
    err = np.abs(
        (d - d[fg].mean()) - (depth - depth[fg].mean())
    ) * fg
    print("abs err p50/p90/max:", np.percentile(err[fg], [50, 90, 100]))
    # where is the error concentrated?
    h, w = err.shape
    print("err center column:", err[:, w // 2].max(), "err ridge row:", err[h // 2, :].max())
    print("corner region err:", err[:8, :8].max(), "edge mid:", err[h//2-2:h//2+2, :8].max())
