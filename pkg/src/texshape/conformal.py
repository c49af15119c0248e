"""Conformal (LSCM) energy over the depth-grid triangle mesh.

The depth map is viewed as a regular grid mesh: every quad of four
foreground pixels contributes two triangles with vertices (i, j, D(i, j)).
The energy sums, per triangle, ((u_x + v_y)^2 + (u_y - v_x)^2) * A, where
the texture-map Jacobian (u_x, u_y; v_x, v_y) comes from the classic
half-over-area matrix formula evaluated in a local triangle frame whose
z axis is the triangle normal.

Frame handedness is e2 = e1 x n and the Jacobian denominator uses the
signed area. This is the unique convention (up to a global flip) for which
the identity texture map on a flat depth grid has exactly zero energy
under the sign pattern above.

The energy is differentiable both in the texture coordinates (linear
dependence) and in depth. For depth, each triangle's energy depends only
on the two edge depth differences, so the exact gradient is obtained from
two forward-mode directional derivatives per triangle, vectorized over the
whole mesh with first-order jets (value plus two partials).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import ensure_mask, ensure_scalar_field

__all__ = [
    "EPS_AREA",
    "TriangleSet",
    "triangulate",
    "local_frame",
    "LscmResult",
    "lscm_energy",
    "laplacian_l1",
    "mean_abs_laplacian",
]

EPS_AREA = 1e-12


@dataclass
class TriangleSet:
    """Vertex indices (columns vi, rows vj) of grid triangles, fixed winding.

    Grid-plane edge deltas are constant per triangle and cached at build
    time; local frames and areas depend on depth and are recomputed per
    energy evaluation.
    """

    vi: np.ndarray  # (T, 3) int
    vj: np.ndarray  # (T, 3) int
    dx1: np.ndarray = field(init=False)
    dy1: np.ndarray = field(init=False)
    dx2: np.ndarray = field(init=False)
    dy2: np.ndarray = field(init=False)

    def __post_init__(self):
        vi = self.vi.astype(np.float64)
        vj = self.vj.astype(np.float64)
        self.dx1 = vi[:, 1] - vi[:, 0]
        self.dy1 = vj[:, 1] - vj[:, 0]
        self.dx2 = vi[:, 2] - vi[:, 0]
        self.dy2 = vj[:, 2] - vj[:, 0]

    def __len__(self) -> int:
        return self.vi.shape[0]

    def subset(self, keep: np.ndarray) -> "TriangleSet":
        return TriangleSet(self.vi[keep], self.vj[keep])


def triangulate(mask: np.ndarray) -> TriangleSet:
    """Two triangles per fully-foreground quad, in row-major quad order.

    Quad (i, j) contributes ((i,j), (i+1,j), (i,j+1)) and
    ((i+1,j), (i+1,j+1), (i,j+1)); a triangle is kept iff its own three
    vertices are foreground, so a quad with one background corner can still
    contribute the opposite triangle.
    """
    m = ensure_mask(mask) > 0.5
    h, w = m.shape
    if h < 2 or w < 2:
        raise ValueError("mask too small to triangulate")
    jg, ig = np.meshgrid(np.arange(h - 1), np.arange(w - 1), indexing="ij")
    jg = jg.ravel()
    ig = ig.ravel()
    q = jg.size
    vi = np.empty((2 * q, 3), dtype=np.int64)
    vj = np.empty((2 * q, 3), dtype=np.int64)
    vi[0::2] = np.stack([ig, ig + 1, ig], axis=1)
    vj[0::2] = np.stack([jg, jg, jg + 1], axis=1)
    vi[1::2] = np.stack([ig + 1, ig + 1, ig], axis=1)
    vj[1::2] = np.stack([jg, jg + 1, jg + 1], axis=1)
    keep = m[vj[:, 0], vi[:, 0]] & m[vj[:, 1], vi[:, 1]] & m[vj[:, 2], vi[:, 2]]
    if not np.any(keep):
        raise ValueError("mask produces no triangles")
    return TriangleSet(vi[keep], vj[keep])


def local_frame(p1, p2, p3) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Local 2D coordinates and signed/absolute area of one 3D triangle.

    e1 = normalize(P2 - P1), n = normalize((P2 - P1) x (P3 - P1)),
    e2 = e1 x n; returns (x, y, A_s, A) with x[0] = y[0] = y[1] = 0.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    d1 = np.asarray(p2, dtype=np.float64) - p1
    d2 = np.asarray(p3, dtype=np.float64) - p1
    c = np.cross(d1, d2)
    norm_c = np.linalg.norm(c)
    if norm_c <= EPS_AREA:
        raise ValueError("degenerate triangle")
    e1 = d1 / np.linalg.norm(d1)
    n = c / norm_c
    e2 = np.cross(e1, n)
    x = np.array([0.0, d1 @ e1, d2 @ e1])
    y = np.array([0.0, 0.0, d2 @ e2])
    a_signed = ((x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0])) / 2.0
    return x, y, a_signed, abs(a_signed)


# --- first-order jets: (value, d/dw1, d/dw2), vectorized over triangles ---


def _jconst(v):
    return (v, 0.0, 0.0)


def _jadd(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _jsub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _jscale(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


def _jmul(a, b):
    return (
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[0] * b[2] + a[2] * b[0],
    )


def _jdiv(a, b):
    q = a[0] / b[0]
    return (q, (a[1] - q * b[1]) / b[0], (a[2] - q * b[2]) / b[0])


def _jsqrt(a):
    r = np.sqrt(a[0])
    return (r, a[1] / (2.0 * r), a[2] / (2.0 * r))


def _jabs(a):
    s = np.sign(a[0])
    return (np.abs(a[0]), s * a[1], s * a[2])


@dataclass
class LscmResult:
    energy: float
    per_triangle: np.ndarray
    grad_uv: np.ndarray | None
    grad_depth: np.ndarray | None
    skipped: int


def lscm_energy(
    depth: np.ndarray,
    uv: np.ndarray,
    tris: TriangleSet,
    need_uv_grad: bool = False,
    need_depth_grad: bool = False,
) -> LscmResult:
    """Conformal energy with optional exact gradients.

    Triangles whose absolute area falls below EPS_AREA are dropped from
    this evaluation (counted in `skipped`). Evaluating over an empty
    triangle set is an error.
    """
    depth = ensure_scalar_field(depth, "depth")
    if len(tris) == 0:
        raise ValueError("energy over zero triangles")
    i1, i2, i3 = tris.vi[:, 0], tris.vi[:, 1], tris.vi[:, 2]
    j1, j2, j3 = tris.vj[:, 0], tris.vj[:, 1], tris.vj[:, 2]
    z1 = depth[j1, i1]
    w1 = (depth[j2, i2] - z1, np.ones_like(z1), np.zeros_like(z1))
    w2 = (depth[j3, i3] - z1, np.zeros_like(z1), np.ones_like(z1))
    dx1, dy1, dx2, dy2 = tris.dx1, tris.dy1, tris.dx2, tris.dy2

    cx = _jsub(_jscale(w2, dy1), _jscale(w1, dy2))
    cy = _jsub(_jscale(w1, dx2), _jscale(w2, dx1))
    cz = _jconst(dx1 * dy2 - dy1 * dx2)

    len1 = _jsqrt(_jadd(_jconst(dx1 * dx1 + dy1 * dy1), _jmul(w1, w1)))
    e1x = _jdiv(_jconst(dx1), len1)
    e1y = _jdiv(_jconst(dy1), len1)
    e1z = _jdiv(w1, len1)

    lenc = _jsqrt(
        _jadd(_jadd(_jmul(cx, cx), _jmul(cy, cy)), _jmul(cz, cz))
    )
    nx = _jdiv(cx, lenc)
    ny = _jdiv(cy, lenc)
    nz = _jdiv(cz, lenc)

    e2x = _jsub(_jmul(e1y, nz), _jmul(e1z, ny))
    e2y = _jsub(_jmul(e1z, nx), _jmul(e1x, nz))
    e2z = _jsub(_jmul(e1x, ny), _jmul(e1y, nx))

    # x1 = y1 = 0 and y2 = 0 hold exactly in this frame.
    x2 = len1
    x3 = _jadd(_jadd(_jscale(e1x, dx2), _jscale(e1y, dy2)), _jmul(w2, e1z))
    y3 = _jadd(_jadd(_jscale(e2x, dx2), _jscale(e2y, dy2)), _jmul(w2, e2z))

    a_signed = _jscale(_jmul(x2, y3), 0.5)
    valid = np.abs(a_signed[0]) > EPS_AREA
    safe = (np.where(valid, a_signed[0], 1.0), a_signed[1], a_signed[2])
    inv = _jdiv(_jconst(np.full(len(tris), 0.5)), safe)

    m00 = _jscale(y3, -1.0)  # y2 - y3
    m01 = y3                 # y3 - y1
    m10 = _jsub(x3, x2)      # x3 - x2
    m11 = _jscale(x3, -1.0)  # x1 - x3
    m12 = x2                 # x2 - x1

    u1, u2, u3 = (uv[j1, i1, 0], uv[j2, i2, 0], uv[j3, i3, 0])
    v1, v2, v3 = (uv[j1, i1, 1], uv[j2, i2, 1], uv[j3, i3, 1])

    def _row0(f1, f2):
        # coefficient of f3 (y1 - y2) is exactly zero
        return _jadd(_jscale(m00, f1), _jscale(m01, f2))

    def _row1(f1, f2, f3):
        return _jadd(_jadd(_jscale(m10, f1), _jscale(m11, f2)), _jscale(m12, f3))

    u_x = _jmul(inv, _row0(u1, u2))
    u_y = _jmul(inv, _row1(u1, u2, u3))
    v_x = _jmul(inv, _row0(v1, v2))
    v_y = _jmul(inv, _row1(v1, v2, v3))

    a = _jadd(u_x, v_y)
    b = _jsub(u_y, v_x)
    area = _jabs(safe)
    e_tri = _jmul(_jadd(_jmul(a, a), _jmul(b, b)), area)

    per_tri = np.where(valid, e_tri[0], 0.0)
    energy = float(per_tri.sum())
    skipped = int(len(tris) - valid.sum())

    grad_depth = None
    if need_depth_grad:
        d1 = np.where(valid, e_tri[1], 0.0)
        d2 = np.where(valid, e_tri[2], 0.0)
        grad_depth = np.zeros_like(depth)
        np.add.at(grad_depth, (j1, i1), -d1 - d2)
        np.add.at(grad_depth, (j2, i2), d1)
        np.add.at(grad_depth, (j3, i3), d2)

    grad_uv = None
    if need_uv_grad:
        invv = inv[0]
        g0 = (invv * m00[0], invv * m01[0], np.zeros_like(invv))
        g1 = (invv * m10[0], invv * m11[0], invv * m12[0])
        scale = np.where(valid, 2.0 * area[0], 0.0)
        grad_uv = np.zeros_like(uv)
        for k in range(3):
            gu = scale * (a[0] * g0[k] + b[0] * g1[k])
            gv = scale * (a[0] * g1[k] - b[0] * g0[k])
            np.add.at(grad_uv[:, :, 0], (tris.vj[:, k], tris.vi[:, k]), gu)
            np.add.at(grad_uv[:, :, 1], (tris.vj[:, k], tris.vi[:, k]), gv)

    return LscmResult(energy, per_tri, grad_uv, grad_depth, skipped)


def laplacian_l1(depth: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean absolute discrete Laplacian, normalized by the full pixel count.

    Delta D(i,j) = D(i+1,j) + D(i-1,j) + D(i,j+1) + D(i,j-1) - 4 D(i,j),
    evaluated only where the whole 5-point stencil lies in the foreground.
    The subgradient of |.| at 0 is taken as 0.
    """
    d = ensure_scalar_field(depth, "depth")
    fg = ensure_mask(mask) > 0.5
    h, w = d.shape
    lap, valid = _laplacian(d, fg)
    value = float(np.abs(lap[valid]).sum() / (h * w))
    s = np.where(valid, np.sign(lap), 0.0) / (h * w)
    g = np.zeros_like(d)
    g[1:-1, 1:-1] -= 4.0 * s
    g[:-2, 1:-1] += s
    g[2:, 1:-1] += s
    g[1:-1, :-2] += s
    g[1:-1, 2:] += s
    return value, g


def mean_abs_laplacian(depth: np.ndarray, mask: np.ndarray) -> float:
    """Mean |Delta D| over foreground-interior pixels (snapshot smoothness)."""
    d = ensure_scalar_field(depth, "depth")
    fg = ensure_mask(mask) > 0.5
    lap, valid = _laplacian(d, fg)
    count = int(valid.sum())
    if count == 0:
        return 0.0
    return float(np.abs(lap[valid]).sum() / count)


def _laplacian(d: np.ndarray, fg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lap = (
        d[:-2, 1:-1]
        + d[2:, 1:-1]
        + d[1:-1, :-2]
        + d[1:-1, 2:]
        - 4.0 * d[1:-1, 1:-1]
    )
    valid = (
        fg[1:-1, 1:-1]
        & fg[:-2, 1:-1]
        & fg[2:, 1:-1]
        & fg[1:-1, :-2]
        & fg[1:-1, 2:]
    )
    return lap, valid
