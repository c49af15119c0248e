"""Virtual-texture rendering and resampling.

Covers the image-space half of the pipeline: the regular checkerboard
texture, differentiable bilinear warping by texture coordinates, alpha
blending with the input image, surface normals from depth, texture-space
resampling via inverted coordinates, and a small orthographic z-buffer
rasterizer for novel views.

Sampling uses clamp-to-edge borders so gradients stay defined everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import triangulate
from .grids import ensure_image_field, ensure_mask, ensure_scalar_field

__all__ = [
    "Camera",
    "checkerboard",
    "sample_bilinear",
    "sample_bilinear_vjp",
    "blend",
    "normals_from_depth",
    "resample_inverse",
    "rasterize_ortho",
]

MAX_VIEW_ANGLE = 45.0


@dataclass(frozen=True)
class Camera:
    """Orthographic novel-view camera, limited to small rotations."""

    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        if abs(self.azimuth) > MAX_VIEW_ANGLE or abs(self.elevation) > MAX_VIEW_ANGLE:
            raise ValueError(
                f"camera angles limited to +-{MAX_VIEW_ANGLE} degrees, got "
                f"azimuth={self.azimuth}, elevation={self.elevation}"
            )


def checkerboard(h: int, w: int, cell: int, channels: int = 1) -> np.ndarray:
    """Checkerboard texture: 1 where floor(i/cell) + floor(j/cell) is even."""
    if cell < 1:
        raise ValueError("cell must be >= 1")
    ii = np.arange(w) // cell
    jj = np.arange(h) // cell
    board = ((ii[None, :] + jj[:, None]) % 2 == 0).astype(np.float64)
    return np.repeat(board[:, :, None], channels, axis=2)


def _bilinear_taps(uv: np.ndarray, h: int, w: int):
    """Clamped tap indices and fractional weights for bilinear sampling."""
    x = np.clip(uv[:, :, 0], 0.0, w - 1.0)
    y = np.clip(uv[:, :, 1], 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(y).astype(np.int64), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    inside_x = (uv[:, :, 0] >= 0.0) & (uv[:, :, 0] <= w - 1.0)
    inside_y = (uv[:, :, 1] >= 0.0) & (uv[:, :, 1] <= h - 1.0)
    return x0, x1, y0, y1, fx, fy, inside_x, inside_y


def sample_bilinear(texture: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Sample `texture` at per-pixel coordinates `uv` (texture pixels).

    Coordinates outside the texture are clamped to the border.
    """
    tex = ensure_image_field(texture, "texture")
    h, w = tex.shape[0], tex.shape[1]
    x0, x1, y0, y1, fx, fy, _, _ = _bilinear_taps(uv, h, w)
    fx = fx[:, :, None]
    fy = fy[:, :, None]
    t00 = tex[y0, x0]
    t01 = tex[y0, x1]
    t10 = tex[y1, x0]
    t11 = tex[y1, x1]
    return (
        (1 - fy) * ((1 - fx) * t00 + fx * t01)
        + fy * ((1 - fx) * t10 + fx * t11)
    )


def sample_bilinear_vjp(texture: np.ndarray, uv: np.ndarray):
    """Forward sample plus VJPs with respect to uv and the texture.

    The uv derivative is the analytic bilinear one, piecewise constant
    within each texel cell and zero where the coordinate is clamped.
    """
    tex = ensure_image_field(texture, "texture")
    h, w = tex.shape[0], tex.shape[1]
    x0, x1, y0, y1, fx, fy, inside_x, inside_y = _bilinear_taps(uv, h, w)
    fxc = fx[:, :, None]
    fyc = fy[:, :, None]
    t00 = tex[y0, x0]
    t01 = tex[y0, x1]
    t10 = tex[y1, x0]
    t11 = tex[y1, x1]
    out = (
        (1 - fyc) * ((1 - fxc) * t00 + fxc * t01)
        + fyc * ((1 - fxc) * t10 + fxc * t11)
    )

    def vjp_uv(g: np.ndarray) -> np.ndarray:
        ddx = (1 - fyc) * (t01 - t00) + fyc * (t11 - t10)
        ddy = (1 - fxc) * (t10 - t00) + fxc * (t11 - t01)
        g_uv = np.zeros(uv.shape)
        g_uv[:, :, 0] = np.sum(g * ddx, axis=2) * inside_x
        g_uv[:, :, 1] = np.sum(g * ddy, axis=2) * inside_y
        return g_uv

    def vjp_texture(g: np.ndarray) -> np.ndarray:
        g_tex = np.zeros_like(tex)
        w00 = (1 - fyc) * (1 - fxc) * g
        w01 = (1 - fyc) * fxc * g
        w10 = fyc * (1 - fxc) * g
        w11 = fyc * fxc * g
        np.add.at(g_tex, (y0, x0), w00)
        np.add.at(g_tex, (y0, x1), w01)
        np.add.at(g_tex, (y1, x0), w10)
        np.add.at(g_tex, (y1, x1), w11)
        return g_tex

    return out, vjp_uv, vjp_texture


def blend(
    image: np.ndarray,
    warped: np.ndarray,
    mask: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """mask * (alpha * image + (1 - alpha) * warped); background exactly 0.

    Affine in `warped`: the backward pass is the constant field
    (1 - alpha) * mask.
    """
    img = ensure_image_field(image, "image")
    wrp = ensure_image_field(warped, "warped")
    m = ensure_mask(mask)
    if img.shape != wrp.shape or img.shape[:2] != m.shape:
        raise ValueError("blend input dimensions differ")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return m[:, :, None] * (alpha * img + (1.0 - alpha) * wrp)


def blend_backward(mask: np.ndarray, alpha: float, g: np.ndarray) -> np.ndarray:
    return (1.0 - alpha) * mask[:, :, None] * g


def normals_from_depth(depth: np.ndarray) -> np.ndarray:
    """Unit surface normals from the depth gradients, z toward the viewer.

    Central differences in the interior, one-sided at borders; the normal
    is the normalized cross product (1,0,dD/di) x (0,1,dD/dj), i.e.
    (-dD/di, -dD/dj, 1) before normalization.
    """
    d = ensure_scalar_field(depth, "depth")
    if d.shape[0] < 2 or d.shape[1] < 2:
        raise ValueError("normals need at least a 2x2 depth map")
    ddj, ddi = np.gradient(d)
    n = np.stack([-ddi, -ddj, np.ones_like(d)], axis=2)
    return n / np.linalg.norm(n, axis=2, keepdims=True)


def _monotone_inverse(xp: np.ndarray, targets: np.ndarray):
    """Invert a non-decreasing sample sequence at the target values.

    Returns fractional source positions and a validity mask (targets inside
    the sampled range). Flat runs resolve deterministically via interp.
    """
    xp = np.maximum.accumulate(xp)
    pos = np.interp(targets, xp, np.arange(xp.size, dtype=np.float64))
    valid = (targets >= xp[0]) & (targets <= xp[-1])
    return pos, valid


def _interp_1d(values: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Linearly interpolate a 1D sequence at fractional index positions."""
    return np.interp(pos, np.arange(values.size, dtype=np.float64), values)


def resample_inverse(image: np.ndarray, uv: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Resample the input image into texture space by inverting the warp.

    Per-axis piecewise-linear inversion, applied separably: the u map is
    inverted along each row, then the v map (carried through the first
    pass) along each column. Texture pixels outside the image of the map
    are 0. Output dimensions equal the input dimensions.
    """
    img = ensure_image_field(image, "image")
    m = ensure_mask(mask)
    h, w = img.shape[0], img.shape[1]
    du = np.diff(uv[:, :, 0], axis=1)
    dv = np.diff(uv[:, :, 1], axis=0)
    if (du.size and du.min() < -1e-9) or (dv.size and dv.min() < -1e-9):
        raise ValueError("texture coordinates are not monotone (foldover)")

    src = img * m[:, :, None]
    targets_u = np.arange(w, dtype=np.float64)
    targets_v = np.arange(h, dtype=np.float64)

    # pass 1: undo the u warp row by row, carrying W_v and validity along
    mid = np.zeros_like(src)
    mid_v = np.zeros((h, w))
    mid_ok = np.zeros((h, w))
    for j in range(h):
        pos, ok = _monotone_inverse(uv[j, :, 0], targets_u)
        for c in range(src.shape[2]):
            mid[j, :, c] = _interp_1d(src[j, :, c], pos)
        mid_v[j] = _interp_1d(uv[j, :, 1], pos)
        mid_ok[j] = ok.astype(np.float64)

    # pass 2: undo the v warp column by column
    out = np.zeros_like(src)
    for t in range(w):
        pos, ok = _monotone_inverse(mid_v[:, t], targets_v)
        keep = ok & (_interp_1d(mid_ok[:, t], pos) > 0.5)
        for c in range(src.shape[2]):
            out[:, t, c] = _interp_1d(mid[:, t, c], pos) * keep
    return out


def rasterize_ortho(
    depth: np.ndarray,
    colors: np.ndarray,
    mask: np.ndarray,
    cam: Camera,
) -> np.ndarray:
    """Render the depth mesh orthographically from a rotated viewpoint.

    Grid vertices (i - cx, j - cy, D - mean) rotate by the camera azimuth
    (about the vertical axis) and elevation (about the horizontal axis),
    project orthographically, and rasterize with a z-buffer where greater
    z (toward the viewer) wins. Vertex colors interpolate barycentrically;
    uncovered pixels stay 0.
    """
    d = ensure_scalar_field(depth, "depth")
    col = ensure_image_field(colors, "colors")
    m = ensure_mask(mask)
    h, w = d.shape
    tris = triangulate(m)

    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(w), np.arange(h))
    z0 = d - d[m > 0.5].mean()
    px = ii - cx
    py = jj - cy

    az = np.deg2rad(cam.azimuth)
    el = np.deg2rad(cam.elevation)
    # azimuth about the vertical (j) axis, then elevation about i
    x1 = px * np.cos(az) + z0 * np.sin(az)
    zz = -px * np.sin(az) + z0 * np.cos(az)
    y1 = py * np.cos(el) - zz * np.sin(el)
    z1 = py * np.sin(el) + zz * np.cos(el)

    vx = (x1 + cx).ravel()
    vy = (y1 + cy).ravel()
    vz = z1.ravel()
    vcol = col.reshape(-1, col.shape[2])
    flat = tris.vj * w + tris.vi

    out = np.zeros_like(col)
    zbuf = np.full((h, w), -np.inf)
    for t in range(len(tris)):
        k = flat[t]
        tx, ty, tz = vx[k], vy[k], vz[k]
        xmin = max(int(np.ceil(tx.min())), 0)
        xmax = min(int(np.floor(tx.max())), w - 1)
        ymin = max(int(np.ceil(ty.min())), 0)
        ymax = min(int(np.floor(ty.max())), h - 1)
        if xmin > xmax or ymin > ymax:
            continue
        det = (ty[1] - ty[2]) * (tx[0] - tx[2]) + (tx[2] - tx[1]) * (ty[0] - ty[2])
        if abs(det) < 1e-12:
            continue
        gx, gy = np.meshgrid(
            np.arange(xmin, xmax + 1), np.arange(ymin, ymax + 1)
        )
        b0 = ((ty[1] - ty[2]) * (gx - tx[2]) + (tx[2] - tx[1]) * (gy - ty[2])) / det
        b1 = ((ty[2] - ty[0]) * (gx - tx[2]) + (tx[0] - tx[2]) * (gy - ty[2])) / det
        b2 = 1.0 - b0 - b1
        inside = (b0 >= 0) & (b1 >= 0) & (b2 >= 0)
        if not inside.any():
            continue
        z = b0 * tz[0] + b1 * tz[1] + b2 * tz[2]
        win = inside & (z > zbuf[ymin : ymax + 1, xmin : xmax + 1])
        zclip = zbuf[ymin : ymax + 1, xmin : xmax + 1]
        zclip[win] = z[win]
        c = (
            b0[:, :, None] * vcol[k[0]]
            + b1[:, :, None] * vcol[k[1]]
            + b2[:, :, None] * vcol[k[2]]
        )
        region = out[ymin : ymax + 1, xmin : xmax + 1]
        region[win] = c[win]
    return out
