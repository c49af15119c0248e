"""Scratch probe: uv stretch anisotropy and the true amplitude optimum."""
import numpy as np

from texshape.bench import PrimitiveSpec, gen_primitive, depth_mse
from texshape.conformal import lscm_energy, triangulate
from texshape.optimize import StageConfig, forward_lscm

n = 64
spec = PrimitiveSpec("cube", "shaded", resolution=n)
image, depth, mask = gen_primitive(spec)
cfg_f = StageConfig(iterations=4000, snapshot_interval=4000, lr=1e-2, mu=1e-3)
uv, _ = forward_lscm(depth, mask, cfg_f)
tris = triangulate(mask)
fg = mask > 0.5

du = np.diff(uv[:, :, 0], axis=1)  # u-spacing along i
dv = np.diff(uv[:, :, 1], axis=0)  # v-spacing along j
inner = fg[:, :-1] & fg[:, 1:]
innerv = fg[:-1, :] & fg[1:, :]
print("u-stretch over foreground: mean", du[inner].mean(), "p10/p90",
      np.percentile(du[inner], [10, 90]))
print("v-stretch over foreground: mean", dv[innerv].mean(), "p10/p90",
      np.percentile(dv[innerv], [10, 90]))
ratio = du[inner].mean() / dv[innerv].mean()
print("mean anisotropy ratio:", ratio, "-> implied |slope|:",
      np.sqrt(max(ratio**2 - 1, 0.0)))

print("\nenergy along a*GT (fine):")
best = None
for a in np.arange(0.30, 1.10, 0.05):
    e = lscm_energy(a * depth, uv, tris).energy
    tag = ""
    if best is None or e < best[1]:
        best = (a, e)
        tag = " <--"
    print(f"  a={a:4.2f}: {e:10.4f}{tag}")
print("best amplitude:", best)
print("normalized MSE of best-amplitude wedge vs GT:",
      depth_mse(best[0] * depth, depth, mask))
