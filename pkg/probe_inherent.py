"""Scratch probe: are stage2 traps inherent to steep surfaces?

Uses an exact analytic conformal (unfold) uv for the wedge: u stretches by
sqrt(2) about the ridge, v identity. Also probes a shallow wedge and the
sphere with fitted uv.
"""
import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.conformal import laplacian_l1, lscm_energy, triangulate
from texshape.optimize import Adam, StageConfig, forward_lscm, spherical_init
from texshape.warpfield import identity_coords


def run_stage2(uv, mask, init, gt, lr=1e-3, iters=20000, lam3=0.01):
    tris = triangulate(mask)
    d = init.copy()
    adam = Adam([d], lr=lr)
    for it in range(iters):
        res = lscm_energy(d, uv, tris, need_depth_grad=True)
        lap_v, lap_g = laplacian_l1(d, mask)
        adam.step([d], [res.grad_depth + lam3 * lap_g])
    return res.energy, depth_mse(d, gt, mask)


n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
c = (n - 1) / 2.0
ii, jj = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float))

# analytic unfold of the slope-1 wedge: arc-length along x about the ridge
uv_unfold = identity_coords(n, n)
uv_unfold[:, :, 0] = c + np.sqrt(2.0) * (ii - c)
e_gt = lscm_energy(depth, uv_unfold, triangulate(mask)).energy
print("analytic unfold: energy(GT) =", e_gt)
e, mse = run_stage2(uv_unfold, mask, spherical_init(mask), depth)
print(f"wedge + analytic uv, hemisphere init: energy={e:.5f} mse={mse:.6f}")

# shallow wedge (slope 0.2): same uv construction with its own stretch
shallow = 0.2 * depth
uv_sh = identity_coords(n, n)
uv_sh[:, :, 0] = c + np.sqrt(1.0 + 0.04) * (ii - c)
print("shallow energy(GT):", lscm_energy(shallow, uv_sh, triangulate(mask)).energy)
e, mse = run_stage2(uv_sh, mask, 0.2 * spherical_init(mask), shallow)
print(f"shallow wedge + analytic uv: energy={e:.5f} mse={mse:.6f}")

# sphere with fitted uv
spec_s = PrimitiveSpec("sphere", "shaded", resolution=n)
_, depth_s, mask_s = gen_primitive(spec_s)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv_s, _ = forward_lscm(depth_s, mask_s, cfg_f)
print("sphere energy(GT):", lscm_energy(depth_s, uv_s, triangulate(mask_s)).energy)
e, mse = run_stage2(uv_s, mask_s, spherical_init(mask_s), depth_s)
print(f"sphere + fitted uv, hemisphere init: energy={e:.5f} mse={mse:.6f}")
