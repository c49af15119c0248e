"""Scratch probe: round-trip feasibility and stage1 fixed-point drift."""
import time

import numpy as np

from texshape.bench import PrimitiveSpec, depth_mse, gen_primitive
from texshape.optimize import StageConfig, forward_lscm, spherical_init, stage2
from texshape.conformal import lscm_energy, triangulate
from texshape.warpfield import identity_coords

t0 = time.time()
spec = PrimitiveSpec("cube", "shaded", resolution=64)
image, depth, mask = gen_primitive(spec)
print("cube depth range", depth.min(), depth.max(), "fg", int(mask.sum()))

cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, losses_f = forward_lscm(depth, mask, cfg_f)
print(f"forward: {time.time()-t0:.1f}s loss {losses_f[0]:.4f} -> {losses_f[-1]:.6f}")
print("uv deviation from identity: max", np.abs(uv - identity_coords(64, 64)).max())

t1 = time.time()
init = spherical_init(mask)
print("spherical init range", init.min(), init.max())
cfg_2 = StageConfig(iterations=20000, lr=1e-3)
rec, losses_2 = stage2(uv, mask, init, cfg_2)
print(f"stage2: {time.time()-t1:.1f}s loss {losses_2[0]:.4f} -> {losses_2[-1]:.6f}")
mse = depth_mse(rec, depth, mask)
print("roundtrip depth MSE:", mse)

# how good is the GT depth itself under this uv (sanity on forward quality)?
tris = triangulate(mask)
print("energy(GT depth, uv):", lscm_energy(depth, uv, tris).energy)
print("energy(rec depth, uv):", lscm_energy(rec, uv, tris).energy)
print("total", time.time() - t0)
