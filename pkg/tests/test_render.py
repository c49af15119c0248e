import numpy as np
import pytest

from texshape.optimize import grad_check
from texshape.render import (
    Camera,
    blend,
    blend_backward,
    checkerboard,
    normals_from_depth,
    rasterize_ortho,
    resample_inverse,
    sample_bilinear,
    sample_bilinear_vjp,
)
from texshape.warpfield import identity_coords


def test_checkerboard_minimal():
    board = checkerboard(2, 2, 1)
    assert board[:, :, 0].tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_checkerboard_blocks():
    board = checkerboard(4, 4, 2)[:, :, 0]
    assert board.tolist() == [
        [1, 1, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
    ]


def test_checkerboard_periodicity():
    board = checkerboard(12, 12, 3)[:, :, 0]
    assert np.array_equal(board[:6, :6], board[6:, 6:])
    assert np.array_equal(board[:, :6], board[:, 6:])


def test_sample_identity():
    rng = np.random.default_rng(0)
    tex = rng.uniform(size=(5, 7, 3))
    out = sample_bilinear(tex, identity_coords(5, 7))
    assert np.allclose(out, tex, atol=1e-12)


def test_sample_half_shift_hand_value():
    tex = np.array([[[0.0], [1.0]]])  # 1x2 row, values 0 and 1
    uv = np.zeros((1, 1, 2))
    uv[0, 0, 0] = 0.5
    assert sample_bilinear(tex, uv)[0, 0, 0] == pytest.approx(0.5, abs=1e-15)


def test_sample_clamps_to_border():
    rng = np.random.default_rng(1)
    tex = rng.uniform(size=(4, 4, 1))
    uv = np.full((3, 3, 2), -5.0)
    out = sample_bilinear(tex, uv)
    assert np.allclose(out, tex[0, 0, 0], atol=1e-15)


def test_sample_uv_gradient_matches_fd():
    rng = np.random.default_rng(2)
    tex = rng.uniform(size=(8, 8, 3))
    uv = identity_coords(8, 8) * 0.8 + rng.uniform(0.25, 0.75, size=(8, 8, 2))
    w = rng.standard_normal((8, 8, 3))
    err = grad_check(
        lambda x: float(np.sum(w * sample_bilinear_vjp(tex, x)[0])),
        lambda x: sample_bilinear_vjp(tex, x)[1](w),
        uv,
    )
    assert err <= 1e-6


def test_sample_texture_gradient_matches_fd():
    rng = np.random.default_rng(3)
    tex = rng.uniform(size=(6, 6, 1))
    uv = identity_coords(6, 6) * 0.7 + 0.4
    w = rng.standard_normal((6, 6, 1))
    err = grad_check(
        lambda t: float(np.sum(w * sample_bilinear_vjp(t, uv)[0])),
        lambda t: sample_bilinear_vjp(t, uv)[2](w),
        tex,
    )
    assert err <= 1e-6


def test_blend_half():
    h = w = 4
    out = blend(np.ones((h, w, 1)), np.zeros((h, w, 1)), np.ones((h, w)), 0.5)
    assert np.allclose(out, 0.5, atol=1e-15)


def test_blend_masks_background_to_zero():
    rng = np.random.default_rng(4)
    mask = np.zeros((4, 4))
    mask[1, 1] = 1.0
    out = blend(rng.uniform(size=(4, 4, 3)), rng.uniform(size=(4, 4, 3)), mask, 0.3)
    assert np.all(out[mask < 0.5] == 0.0)


def test_blend_alpha_one_endpoint():
    rng = np.random.default_rng(5)
    img = rng.uniform(size=(4, 4, 3))
    mask = np.ones((4, 4))
    mask[0, 0] = 0.0
    out = blend(img, rng.uniform(size=(4, 4, 3)), mask, 1.0)
    assert np.allclose(out, img * mask[:, :, None], atol=1e-15)


def test_blend_backward_is_constant_field():
    mask = np.ones((3, 3))
    mask[2, 2] = 0.0
    g = np.ones((3, 3, 1))
    back = blend_backward(mask, 0.25, g)
    assert np.allclose(back, 0.75 * mask[:, :, None], atol=1e-15)


def test_normals_flat():
    n = normals_from_depth(np.full((4, 4), 2.0))
    assert np.allclose(n, [0.0, 0.0, 1.0], atol=1e-15)


def test_normals_plane_hand_value():
    depth = np.arange(6, dtype=float)[None, :].repeat(6, axis=0)
    n = normals_from_depth(depth)
    expected = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0)
    assert np.allclose(n[2:4, 2:4], expected, atol=1e-12)


def test_normals_translation_invariance_and_unit():
    rng = np.random.default_rng(6)
    depth = rng.standard_normal((8, 8))
    n0 = normals_from_depth(depth)
    n1 = normals_from_depth(depth + 4.2)
    assert np.allclose(n0, n1, atol=1e-12)
    norms = np.linalg.norm(n0, axis=2)
    assert np.max(np.abs(norms - 1.0)) <= 1e-12
    assert np.all(n0[:, :, 2] > 0.0)


def test_resample_inverse_identity():
    rng = np.random.default_rng(7)
    img = rng.uniform(size=(6, 6, 3))
    mask = np.ones((6, 6))
    mask[0, 0] = 0.0
    out = resample_inverse(img, identity_coords(6, 6), mask)
    assert np.allclose(out, img * mask[:, :, None], atol=1e-12)


def test_resample_inverse_stretch_closed_form():
    # texture stretched 2x on the object: W_u = i/2, so texture pixel t
    # originates from image column 2t; pixels beyond the map image are 0
    w = 8
    rng = np.random.default_rng(8)
    img = rng.uniform(size=(4, w, 1))
    uv = identity_coords(4, w)
    uv[:, :, 0] *= 0.5
    out = resample_inverse(img, uv, np.ones((4, w)))
    for t in range(w):
        if t <= (w - 1) // 2:
            assert np.allclose(out[:, t, 0], img[:, 2 * t, 0], atol=1e-12)
        else:
            assert np.all(out[:, t, 0] == 0.0)


def test_resample_inverse_round_trip_bound():
    # monotone warp spanning exactly [0, W-1] per row: the map's image
    # covers the whole texture, so no zeroed outside-coverage texels
    # bleed into the border samples
    h = w = 32
    ii, jj = np.meshgrid(np.arange(w), np.arange(h))
    img = (0.6 * ii / (w - 1) + 0.4 * jj / (h - 1))[:, :, None]
    s = ii / (w - 1)
    t = jj / (h - 1)
    wobble = 0.5 + 0.5 * np.sin(np.pi * jj / h)
    uv = np.zeros((h, w, 2))
    uv[:, :, 0] = (w - 1) * (s + 0.1 * np.sin(np.pi * s) * wobble)
    uv[:, :, 1] = (h - 1) * (t + 0.08 * np.sin(np.pi * t))
    mask = np.ones((h, w))
    tex = resample_inverse(img, uv, mask)
    back = sample_bilinear(tex, uv)
    assert np.max(np.abs(back - img)) <= 0.05


def test_resample_inverse_rejects_foldover():
    uv = identity_coords(4, 4)
    uv[1, 2, 0] = 0.0  # non-monotone in u
    with pytest.raises(ValueError):
        resample_inverse(np.ones((4, 4, 1)), uv, np.ones((4, 4)))


def test_camera_limits():
    with pytest.raises(ValueError):
        Camera(azimuth=180.0)
    Camera(azimuth=10.0, elevation=-10.0)


def test_rasterize_identity_view():
    rng = np.random.default_rng(9)
    h = w = 10
    colors = rng.uniform(size=(h, w, 3))
    depth = rng.uniform(size=(h, w))
    mask = np.ones((h, w))
    out = rasterize_ortho(depth, colors, mask, Camera())
    assert np.max(np.abs(out - colors)) <= 1e-6


def _sphere(h, w, r):
    ci, cj = (w - 1) / 2.0, (h - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(w), np.arange(h))
    rho2 = (ii - ci) ** 2 + (jj - cj) ** 2
    depth = np.sqrt(np.maximum(r * r - rho2, 0.0))
    return depth, (depth > 0).astype(float)


def test_rasterize_sphere_azimuth_shrinks_silhouette():
    depth, mask = _sphere(56, 56, 24.0)
    colors = np.ones((56, 56, 3)) * mask[:, :, None]
    base = rasterize_ortho(depth, colors, mask, Camera())
    rotated = rasterize_ortho(depth, colors, mask, Camera(azimuth=10.0))
    cols0 = np.nonzero(base.sum(axis=(0, 2)) > 0)[0]
    cols1 = np.nonzero(rotated.sum(axis=(0, 2)) > 0)[0]
    extent0 = cols0[-1] - cols0[0] + 1
    extent1 = cols1[-1] - cols1[0] + 1
    ratio = extent1 / extent0
    assert np.cos(np.deg2rad(10.0)) - 0.02 <= ratio <= 1.0
