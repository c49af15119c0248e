"""Scratch probe: stage2 from amplified/widened spherical inits."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm

spec = PrimitiveSpec("cube", "shaded", resolution=64)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

jj, ii = np.nonzero(fg)
ci = (ii.min() + ii.max()) / 2.0
cj = (jj.min() + jj.max()) / 2.0
r = min(ii.max() - ii.min(), jj.max() - jj.min()) / 2.0
ig, jg = np.meshgrid(np.arange(64), np.arange(64))
rho2 = (ig - ci) ** 2 + (jg - cj) ** 2

cases = {
    "hemi x1.2": 1.2 * np.sqrt(np.maximum(r * r - rho2, 0.0)),
    "hemi x1.5": 1.5 * np.sqrt(np.maximum(r * r - rho2, 0.0)),
    "hemi x2.0": 2.0 * np.sqrt(np.maximum(r * r - rho2, 0.0)),
    "wide r1.4": np.sqrt(np.maximum((1.4 * r) ** 2 - rho2, 0.0)),
}
for name, init in cases.items():
    d = init * fg
    adam = Adam([d], lr=3e-3)
    t0 = time.time()
    for it in range(20000):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + 0.01 * lap_g])
    mse = depth_mse(d, depth, mask)
    print(f"{name}: energy={res.energy:.5f} mse={mse:.6f} ({time.time()-t0:.0f}s)")
