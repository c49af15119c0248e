"""Scratch probe: smoothed-gradient descent for stage2 on the wedge."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init


def smooth3(x, passes):
    for _ in range(passes):
        p = np.pad(x, 1, mode="edge")
        x = (
            p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] + 4 * p[1:-1, 1:-1]
        ) / 8.0
    return x


def run(uv, mask, init, gt, lr=1e-3, iters=20000, passes=0, label=""):
    tris = triangulate(mask)
    fg = mask > 0.5
    d = init.copy()
    adam = Adam([d], lr=lr)
    t0 = time.time()
    for it in range(iters):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        g = res.grad_depth + 0.01 * lap_g
        if passes:
            g = smooth3(g, passes)
            g[~fg] = 0.0
        adam.step([d], [g])
    mse = depth_mse(d, gt, mask)
    print(f"{label}: energy={res.energy:.5f} mse={mse:.6f} ({time.time()-t0:.0f}s)")
    return d


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)

hemi = spherical_init(mask)
for passes in [1, 2, 4]:
    run(uv, mask, hemi, depth, passes=passes, label=f"wedge hemi smooth{passes}")

# paraboloid init, no smoothing
fg = mask > 0.5
jj, ii = np.nonzero(fg)
ci, cj = (ii.min() + ii.max()) / 2.0, (jj.min() + jj.max()) / 2.0
r = min(ii.max() - ii.min(), jj.max() - jj.min()) / 2.0
ig, jg = np.meshgrid(np.arange(n), np.arange(n))
rho2 = (ig - ci) ** 2 + (jg - cj) ** 2
para = np.maximum(r * (1 - rho2 / (1.3 * r) ** 2), 0.0) * fg
run(uv, mask, para, depth, passes=0, label="wedge paraboloid")
run(uv, mask, para, depth, passes=2, label="wedge paraboloid smooth2")

# ensure the sphere case still works under smoothing
spec_s = PrimitiveSpec("sphere", "shaded", resolution=n)
_, depth_s, mask_s = gen_primitive(spec_s)
uv_s, _ = forward_lscm(depth_s, mask_s, cfg_f)
run(uv_s, mask_s, spherical_init(mask_s), depth_s, passes=2, label="sphere smooth2")
