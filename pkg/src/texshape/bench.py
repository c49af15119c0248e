"""Analytic benchmark shapes and the depth/normal evaluation metrics.

Replaces rendered benchmark assets with closed-form primitives (sphere,
cube wedge, pyramid, cylinder) under four cue variants: silhouette only,
Lambertian shading, shading with a regular concentric-ring texture, and
shading with a procedural wood texture. Generation is deterministic: the
texture noise is keyed by a hash of the generating parameters.

The cube is modeled as a two-face wedge meeting at a central vertical
edge: a front-facing cube face is depth-constant and therefore degenerate
for shape recovery, so absolute benchmark numbers here are reference
points rather than reproduction targets.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .grids import ensure_mask, ensure_scalar_field, masked_stats
from .render import normals_from_depth

__all__ = [
    "KINDS",
    "VARIANTS",
    "PrimitiveSpec",
    "DegenerateDepthError",
    "gen_primitive",
    "depth_mse",
    "normal_mse",
    "normal_difference",
]

KINDS = ("sphere", "cube", "pyramid", "cylinder")
VARIANTS = ("silhouette", "shaded", "regular", "natural")

DEFAULT_LIGHT = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
ALBEDO = 0.8


class DegenerateDepthError(ValueError):
    """A depth field is constant over the foreground (zero variance)."""


@dataclass
class PrimitiveSpec:
    kind: str
    variant: str
    resolution: int = 64
    radius: float | None = None  # radius / half-extent in pixels
    light_dir: np.ndarray = field(default_factory=lambda: DEFAULT_LIGHT.copy())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.resolution < 8:
            raise ValueError("resolution too small")
        if self.radius is None:
            self.radius = self.resolution / 2.0 - 4.0
        if self.radius < 2.0 or self.radius > self.resolution / 2.0 - 2.0:
            raise ValueError(
                f"radius {self.radius} leaves less than a 2-pixel margin"
            )
        light = np.asarray(self.light_dir, dtype=np.float64)
        self.light_dir = light / np.linalg.norm(light)


def _noise_seed(spec: PrimitiveSpec) -> int:
    tag = f"{spec.kind}|{spec.variant}|{spec.resolution}|{spec.radius:.6f}"
    return zlib.crc32(tag.encode("ascii"))


def gen_primitive(spec: PrimitiveSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Image (H, W, 3), depth (H, W), and mask for the given spec.

    The mask equals the support of the generated depth exactly.
    """
    n = spec.resolution
    r = spec.radius
    c = (n - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(n, dtype=np.float64), np.arange(n, dtype=np.float64))
    dx = ii - c
    dy = jj - c

    if spec.kind == "sphere":
        rho2 = dx * dx + dy * dy
        inside = rho2 < r * r
        depth = np.sqrt(np.maximum(r * r - rho2, 0.0)) * inside
    elif spec.kind == "cylinder":
        inside = (np.abs(dx) < r) & (np.abs(dy) < r)
        depth = np.sqrt(np.maximum(r * r - dx * dx, 0.0)) * inside
    elif spec.kind == "cube":
        inside = (np.abs(dx) < r) & (np.abs(dy) < r)
        depth = (r - np.abs(dx)) * inside
    elif spec.kind == "pyramid":
        cheb = np.maximum(np.abs(dx), np.abs(dy))
        inside = cheb < r
        depth = (r - cheb) * inside
    else:  # pragma: no cover - guarded by PrimitiveSpec
        raise ValueError(spec.kind)

    mask = inside.astype(np.float64)

    if spec.variant == "silhouette":
        gray = np.full((n, n), ALBEDO)
    else:
        normals = normals_from_depth(depth)
        lambert = np.maximum(normals @ spec.light_dir, 0.0)
        albedo = np.full((n, n), ALBEDO)
        if spec.variant == "regular":
            rho = np.sqrt(dx * dx + dy * dy)
            rings = (np.floor(rho / max(r / 4.0, 1.0)) % 2 == 0)
            albedo = np.where(rings, 0.8, 0.4)
        elif spec.variant == "natural":
            rng = np.random.Generator(np.random.Philox(key=_noise_seed(spec)))
            grain = rng.uniform(-1.0, 1.0, size=(n, n))
            stripes = np.sin(
                2.0 * np.pi * (dx / 6.0 + 0.8 * np.sin(2.0 * np.pi * dy / (3.0 * r)))
            )
            albedo = np.clip(0.55 + 0.2 * stripes + 0.08 * grain, 0.0, 1.0)
        gray = albedo * lambert

    tint = (1.0, 1.0, 1.0)
    if spec.variant == "natural":
        tint = (1.0, 0.8, 0.6)  # warm wood tone
    image = np.stack([np.clip(gray * t, 0.0, 1.0) * mask for t in tint], axis=2)
    return image, depth, mask


def _rescale_to_gt(pred, gt, mask) -> np.ndarray:
    """Normalize pred to zero mean / unit variance, rescale to gt stats."""
    mp, sp = masked_stats(pred, mask)
    mg, sg = masked_stats(gt, mask)
    if sg == 0.0:
        raise DegenerateDepthError("ground-truth depth is constant over the mask")
    if sp == 0.0:
        raise DegenerateDepthError("predicted depth is constant over the mask")
    return (pred - mp) / sp * sg + mg


def depth_mse(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """Foreground MSE after matching pred's mean/variance to the gt's.

    Invariant to positive affine transforms of the prediction; a sign flip
    changes the value. Constant predictions are degenerate and rejected.
    """
    p = ensure_scalar_field(pred, "pred")
    g = ensure_scalar_field(gt, "gt")
    m = ensure_mask(mask)
    rescaled = _rescale_to_gt(p, g, m)
    fg = m > 0.5
    return float(np.mean((rescaled[fg] - g[fg]) ** 2))


def normal_difference(depth_a: np.ndarray, depth_b: np.ndarray, mask: np.ndarray) -> float:
    """Per-component mean squared normal difference over the mask interior.

    No rescaling is applied; callers wanting scale alignment should use
    `normal_mse`. The interior keeps pixels whose 4-neighborhood lies in
    the foreground, where both normal estimates are supported.
    """
    na = normals_from_depth(ensure_scalar_field(depth_a))
    nb = normals_from_depth(ensure_scalar_field(depth_b))
    fg = ensure_mask(mask) > 0.5
    interior = np.zeros_like(fg)
    interior[1:-1, 1:-1] = (
        fg[1:-1, 1:-1]
        & fg[:-2, 1:-1]
        & fg[2:, 1:-1]
        & fg[1:-1, :-2]
        & fg[1:-1, 2:]
    )
    if not interior.any():
        raise ValueError("mask has no interior pixels")
    diff = na[interior] - nb[interior]
    return float(np.mean(np.sum(diff * diff, axis=1) / 3.0))


def normal_mse(pred_depth: np.ndarray, gt_depth: np.ndarray, mask: np.ndarray) -> float:
    """Normal MSE between the affine-rescaled prediction and ground truth."""
    p = ensure_scalar_field(pred_depth, "pred")
    g = ensure_scalar_field(gt_depth, "gt")
    m = ensure_mask(mask)
    rescaled = _rescale_to_gt(p, g, m)
    return normal_difference(rescaled, g, m)
