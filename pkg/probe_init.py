"""Scratch probe: stage2 basin vs spherical-init amplitude."""
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


def cap(height):
    # ellipsoidal cap: rim slope stays finite for height < r
    d = height * np.sqrt(np.maximum(1.0 - rho2 / (1.3 * r) ** 2, 0.0))
    d[~fg] = 0.0
    return d


for name, init in [
    ("hemisphere", np.sqrt(np.maximum(r * r - rho2, 0.0)) * fg),
    ("cap_h=r/2", cap(r / 2)),
    ("cap_h=r/4", cap(r / 4)),
    ("cap_h=2", cap(2.0)),
]:
    d = init.copy()
    adam = Adam([d], lr=3e-3)
    t0 = time.time()
    for it in range(20000):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + 0.01 * lap_g])
    dd = d.copy()
    dd[fg] -= dd[fg].mean()
    dd[~fg] = 0.0
    mse = depth_mse(dd, depth, mask)
    print(f"{name}: energy={res.energy:.5f} mse={mse:.6f} ({time.time()-t0:.0f}s)")
