"""Foldover-free texture-coordinate parametrization.

Texture coordinates are represented through their non-negative spatial
gradients: a multiscale stack of gradient fields is synthesized to full
resolution, clamped by a ReLU, and integrated (cumulative sums) into
absolute coordinates. Monotonicity of the coordinates along each axis is
then automatic, which is what prevents texture foldover.

A stack is a list of (h, w, 2) float64 arrays; level 0 is full resolution
and each deeper level halves both dimensions. Channel 0 is the u gradient
(along columns i), channel 1 the v gradient (along rows j).

Every operation here has a hand-written backward pass that is exact up to
floating point; the test suite checks them against central differences.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grids import read_pfm, write_pfm

__all__ = [
    "pyramid_kernel",
    "upsample2",
    "upsample2_adjoint",
    "synthesize",
    "synthesize_pre_relu",
    "synthesize_vjp",
    "integrate",
    "integrate_backward",
    "l1_reg",
    "integrability_loss",
    "init_identity",
    "identity_coords",
    "save_stack",
    "load_stack",
]

_PAD = 2  # half-width of the 5-tap kernel, in coarse samples


def pyramid_kernel() -> np.ndarray:
    """The 5-tap pyramid kernel m/16 * [1, 4, 6, 4, 1] with m = 1.4."""
    return 1.4 / 16.0 * np.array([1.0, 4.0, 6.0, 4.0, 1.0])


def _up_axis(x: np.ndarray, axis: int) -> np.ndarray:
    """Upsample one axis by 2: symmetric pad, zero insertion, 5-tap filter.

    Padding happens on the coarse grid before zero insertion, so a constant
    field maps to a constant field (scaled by the kernel sum 1.4) all the
    way to the borders.
    """
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    idx = np.pad(np.arange(n), _PAD, mode="symmetric")
    xp = x[..., idx]
    y = np.zeros(x.shape[:-1] + (2 * (n + 2 * _PAD),))
    y[..., ::2] = xp
    k2 = 2.0 * pyramid_kernel()
    out = np.zeros(x.shape[:-1] + (2 * n,))
    for m in range(5):
        out += k2[m] * y[..., 2 + m : 2 + m + 2 * n]
    return np.moveaxis(out, -1, axis)


def _up_axis_adjoint(g: np.ndarray, axis: int) -> np.ndarray:
    """Exact adjoint of `_up_axis` (verified by dot-product tests)."""
    g = np.moveaxis(g, axis, -1)
    n2 = g.shape[-1]
    if n2 % 2:
        raise ValueError("adjoint input length must be even")
    n = n2 // 2
    k2 = 2.0 * pyramid_kernel()
    gy = np.zeros(g.shape[:-1] + (2 * (n + 2 * _PAD),))
    for m in range(5):
        gy[..., 2 + m : 2 + m + n2] += k2[m] * g
    gxp = gy[..., ::2]
    idx = np.pad(np.arange(n), _PAD, mode="symmetric")
    gx = gxp[..., _PAD : _PAD + n].copy()
    for ell in range(_PAD):
        gx[..., idx[ell]] += gxp[..., ell]
        gx[..., idx[_PAD + n + ell]] += gxp[..., _PAD + n + ell]
    return np.moveaxis(gx, -1, axis)


def upsample2(level: np.ndarray) -> np.ndarray:
    """Upsample a (h, w, ...) level by 2 along both spatial axes."""
    return _up_axis(_up_axis(level, 0), 1)


def upsample2_adjoint(g: np.ndarray) -> np.ndarray:
    return _up_axis_adjoint(_up_axis_adjoint(g, 1), 0)


def _check_stack(stack: list[np.ndarray]) -> tuple[int, int]:
    if not stack:
        raise ValueError("empty stack")
    h, w = stack[0].shape[0], stack[0].shape[1]
    for j, level in enumerate(stack):
        if level.ndim != 3 or level.shape[2] != 2:
            raise ValueError(f"level {j} must be (h, w, 2), got {level.shape}")
        if level.shape[0] * 2**j != h or level.shape[1] * 2**j != w:
            raise ValueError(
                f"level {j} has shape {level.shape[:2]}, expected "
                f"({h // 2**j}, {w // 2**j})"
            )
        if not np.all(np.isfinite(level)):
            raise ValueError(f"level {j} contains non-finite values")
    return h, w


def synthesize_pre_relu(stack: list[np.ndarray]) -> np.ndarray:
    """Coarse-to-fine upsample-and-add synthesis, before the ReLU clamp."""
    _check_stack(stack)
    acc = stack[-1].copy()
    for level in reversed(stack[:-1]):
        acc = upsample2(acc) + level
    return acc


def synthesize(stack: list[np.ndarray]) -> np.ndarray:
    """Full-resolution non-negative gradient field max(synthesis, 0)."""
    return np.maximum(synthesize_pre_relu(stack), 0.0)


def synthesize_vjp(stack: list[np.ndarray]):
    """Forward synthesis plus a VJP closure returning per-level gradients.

    The ReLU subgradient at exactly zero is taken as zero.
    """
    pre = synthesize_pre_relu(stack)
    active = pre > 0.0
    n_levels = len(stack)

    def vjp(g_out: np.ndarray) -> list[np.ndarray]:
        g = np.where(active, g_out, 0.0)
        grads = []
        for _ in range(n_levels - 1):
            grads.append(g)
            g = upsample2_adjoint(g)
        grads.append(g)
        return grads

    return np.where(active, pre, 0.0), vjp


def integrate(grad: np.ndarray) -> np.ndarray:
    """Cumulative-sum reconstruction of absolute texture coordinates.

    W_u(i, j) sums grad_u over columns 1..i with W_u(0, j) = 0, and
    symmetrically for W_v along rows; the first row/column of each gradient
    channel is therefore unused. Units are texture pixels, origin anchored
    at the top-left pixel.
    """
    if np.any(grad < 0.0):
        raise ValueError("integrate requires a non-negative gradient field")
    h, w = grad.shape[0], grad.shape[1]
    uv = np.zeros((h, w, 2))
    uv[:, 1:, 0] = np.cumsum(grad[:, 1:, 0], axis=1)
    uv[1:, :, 1] = np.cumsum(grad[1:, :, 1], axis=0)
    return uv


def integrate_backward(g_uv: np.ndarray) -> np.ndarray:
    """Reverse cumulative sums: the exact adjoint of `integrate`."""
    g = np.zeros_like(g_uv)
    g[:, 1:, 0] = np.cumsum(g_uv[:, :0:-1, 0], axis=1)[:, ::-1]
    g[1:, :, 1] = np.cumsum(g_uv[:0:-1, :, 1], axis=0)[::-1, :]
    return g


def l1_reg(grad: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean absolute gradient over all pixels, with its subgradient.

    The mean (rather than the raw sum) keeps the regularization weight
    resolution-independent. sign(0) is taken as 0.
    """
    count = grad.shape[0] * grad.shape[1]
    value = float(np.abs(grad).sum() / count)
    return value, np.sign(grad) / count


def integrability_loss(grad: np.ndarray) -> tuple[float, np.ndarray]:
    """Squared 8-term integrability stencil, summed and divided by H*W.

    Only stencils whose four taps all exist contribute; the divisor stays
    the full pixel count. Zero for any field constant along the stencil
    directions.
    """
    h, w = grad.shape[0], grad.shape[1]
    if h < 2 or w < 2:
        raise ValueError("integrability needs at least a 2x2 field")
    vu = grad[:, :, 0]
    vv = grad[:, :, 1]
    b = (
        vu[1:, :-1]
        - vu[1:, 1:]
        + vu[:-1, :-1]
        - vu[:-1, 1:]
        + vv[1:, :-1]
        + vv[1:, 1:]
        - vv[:-1, :-1]
        - vv[:-1, 1:]
    )
    count = h * w
    value = float(np.sum(b * b) / count)
    c = 2.0 * b / count
    g = np.zeros_like(grad)
    gu = g[:, :, 0]
    gv = g[:, :, 1]
    gu[1:, :-1] += c
    gu[1:, 1:] -= c
    gu[:-1, :-1] += c
    gu[:-1, 1:] -= c
    gv[1:, :-1] += c
    gv[1:, 1:] += c
    gv[:-1, :-1] -= c
    gv[:-1, 1:] -= c
    return value, g


def init_identity(h: int, w: int, n_scales: int) -> list[np.ndarray]:
    """Stack whose synthesized gradient field is 1 everywhere.

    The coarsest level is a constant obtained by probing the synthesis
    operator with a unit coarsest level; finer levels are zero. Integrating
    the synthesized field yields exactly the identity coordinate grid.
    """
    if n_scales < 1:
        raise ValueError("need at least one scale")
    div = 2 ** (n_scales - 1)
    if h % div or w % div:
        raise ValueError(f"dims ({h}, {w}) not divisible by 2**{n_scales - 1}")
    stack = [np.zeros((h // 2**j, w // 2**j, 2)) for j in range(n_scales)]
    stack[-1][:] = 1.0
    probe = synthesize_pre_relu(stack)
    gain = float(probe.mean())
    if abs(float(probe.max()) - gain) > 1e-9 * gain or abs(float(probe.min()) - gain) > 1e-9 * gain:
        raise AssertionError("synthesis operator is not constant-preserving")
    stack[-1][:] = 1.0 / gain
    out = synthesize(stack)
    if np.max(np.abs(out - 1.0)) > 1e-9:
        raise AssertionError("identity initialization probe failed")
    return stack


def identity_coords(h: int, w: int) -> np.ndarray:
    """The identity texture-coordinate grid, in texture pixels."""
    uv = np.zeros((h, w, 2))
    uv[:, :, 0] = np.arange(w)[None, :]
    uv[:, :, 1] = np.arange(h)[:, None]
    return uv


def save_stack(stack: list[np.ndarray], directory) -> None:
    """Persist a stack as one 3-channel PFM per level plus a manifest."""
    _check_stack(stack)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"levels {len(stack)}"]
    for j, level in enumerate(stack):
        h, w = level.shape[0], level.shape[1]
        lines.append(f"level {j} {h} {w}")
        padded = np.concatenate([level, np.zeros((h, w, 1))], axis=2)
        write_pfm(padded, directory / f"level_{j}.pfm")
    (directory / "stack.txt").write_text("\n".join(lines) + "\n")


def load_stack(directory) -> list[np.ndarray]:
    directory = Path(directory)
    lines = (directory / "stack.txt").read_text().splitlines()
    n = int(lines[0].split()[1])
    stack = []
    for j in range(n):
        _, idx, h, w = lines[1 + j].split()
        level = read_pfm(directory / f"level_{int(idx)}.pfm")
        if level.shape[:2] != (int(h), int(w)):
            raise ValueError(f"level {j} dims mismatch manifest")
        stack.append(level[:, :, :2].astype(np.float64))
    _check_stack(stack)
    return stack
