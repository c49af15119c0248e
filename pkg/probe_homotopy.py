"""Scratch probe: deformation-amplitude homotopy for stage2."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init
from texshape.warpfield import identity_coords


def run_homotopy(uv, mask, init, gt, lr, iters, ramp_frac, label, lam3=0.01):
    tris = triangulate(mask)
    h, w = mask.shape
    ident = identity_coords(h, w)
    delta = uv - ident
    d = init.copy()
    adam = Adam([d], lr=lr)
    ramp = max(int(iters * ramp_frac), 1)
    t0 = time.time()
    for it in range(iters):
        t = min((it + 1) / ramp, 1.0)
        uv_t = ident + t * delta
        res = lscm_energy(d, uv_t, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + lam3 * lap_g])
    mse = depth_mse(d, gt, mask)
    print(f"{label}: energy={res.energy:.6f} mse={mse:.8f} ({time.time()-t0:.0f}s)")
    return d


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
hemi = spherical_init(mask)

run_homotopy(uv, mask, hemi, depth, 1e-3, 20000, 0.5, "wedge homotopy r0.5 lr1e-3")
run_homotopy(uv, mask, hemi, depth, 3e-3, 20000, 0.5, "wedge homotopy r0.5 lr3e-3")
run_homotopy(uv, mask, hemi, depth, 3e-3, 20000, 0.75, "wedge homotopy r0.75 lr3e-3")

spec_s = PrimitiveSpec("sphere", "shaded", resolution=n)
_, depth_s, mask_s = gen_primitive(spec_s)
uv_s, _ = forward_lscm(depth_s, mask_s, cfg_f)
run_homotopy(uv_s, mask_s, spherical_init(mask_s), depth_s, 1e-3, 20000, 0.5,
             "sphere homotopy r0.5 lr1e-3")
