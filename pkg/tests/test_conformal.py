import numpy as np
import pytest

from texshape.conformal import (
    TriangleSet,
    laplacian_l1,
    local_frame,
    lscm_energy,
    mean_abs_laplacian,
    triangulate,
)
from texshape.optimize import grad_check
from texshape.warpfield import identity_coords


def _rotated_identity(h, w, theta_deg):
    uv = identity_coords(h, w)
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    out = np.empty_like(uv)
    out[:, :, 0] = c * uv[:, :, 0] - s * uv[:, :, 1]
    out[:, :, 1] = s * uv[:, :, 0] + c * uv[:, :, 1]
    return out


def test_triangulate_full_2x2():
    tris = triangulate(np.ones((2, 2)))
    assert len(tris) == 2
    assert tris.vi.tolist() == [[0, 1, 0], [1, 1, 0]]
    assert tris.vj.tolist() == [[0, 0, 1], [0, 1, 1]]


def test_triangulate_full_3x3():
    assert len(triangulate(np.ones((3, 3)))) == 8


def test_triangulate_corner_cases_exhaustive():
    # one background pixel in a 2x2: opposite-corner holes keep one triangle
    expected = {(0, 0): 1, (1, 1): 1, (0, 1): 0, (1, 0): 0}
    for (j, i), count in expected.items():
        mask = np.ones((2, 2))
        mask[j, i] = 0.0
        if count == 0:
            with pytest.raises(ValueError):
                triangulate(mask)
        else:
            assert len(triangulate(mask)) == count


def test_local_frame_hand_example():
    x, y, a_signed, area = local_frame((0, 0, 0), (1, 0, 0), (0, 1, 0))
    assert np.allclose(x, [0.0, 1.0, 0.0], atol=1e-15)
    assert np.allclose(y, [0.0, 0.0, -1.0], atol=1e-15)
    assert a_signed == pytest.approx(-0.5, abs=1e-15)
    assert area == pytest.approx(0.5, abs=1e-15)


def test_local_frame_flat_area_matches_grid():
    x, y, a_signed, area = local_frame((2, 3, 1.5), (3, 3, 1.5), (2, 4, 1.5))
    assert area == pytest.approx(0.5, abs=1e-15)


def test_local_frame_depth_translation_invariance():
    base = local_frame((0, 0, 0.2), (1, 0, 0.7), (0, 1, -0.1))
    shifted = local_frame((0, 0, 7.2), (1, 0, 7.7), (0, 1, 6.9))
    for a, b in zip(base, shifted):
        assert np.allclose(a, b, atol=1e-12)


def _single_tri():
    return TriangleSet(np.array([[0, 1, 0]]), np.array([[0, 0, 1]]))


def test_identity_on_flat_depth_is_zero():
    mask = np.ones((5, 4))
    tris = triangulate(mask)
    res = lscm_energy(np.zeros((5, 4)), identity_coords(5, 4), tris)
    assert res.energy == pytest.approx(0.0, abs=1e-24)


def test_single_triangle_u_stretch():
    uv = identity_coords(2, 2)
    uv[:, :, 0] *= 2.0
    res = lscm_energy(np.zeros((2, 2)), uv, _single_tri())
    assert res.energy == pytest.approx(0.5, abs=1e-12)


def test_depth_translation_invariance():
    rng = np.random.default_rng(0)
    depth = rng.standard_normal((6, 6))
    uv = identity_coords(6, 6) + 0.1 * rng.standard_normal((6, 6, 2))
    tris = triangulate(np.ones((6, 6)))
    e0 = lscm_energy(depth, uv, tris).energy
    e1 = lscm_energy(depth + 3.7, uv, tris).energy
    assert e1 == pytest.approx(e0, abs=1e-12 * (1 + e0))


def test_rotated_identity_stays_conformal():
    tris = triangulate(np.ones((6, 6)))
    res = lscm_energy(np.zeros((6, 6)), _rotated_identity(6, 6, 30.0), tris)
    assert res.energy <= 1e-12


def test_sign_flip_ambiguity_exact():
    rng = np.random.default_rng(1)
    depth = rng.standard_normal((7, 5))
    uv = identity_coords(7, 5) + 0.2 * rng.standard_normal((7, 5, 2))
    tris = triangulate(np.ones((7, 5)))
    assert lscm_energy(depth, uv, tris).energy == lscm_energy(-depth, uv, tris).energy


def test_energy_nonnegative_random():
    rng = np.random.default_rng(2)
    tris = triangulate(np.ones((6, 6)))
    for _ in range(10):
        depth = rng.standard_normal((6, 6))
        uv = identity_coords(6, 6) + 0.3 * rng.standard_normal((6, 6, 2))
        assert lscm_energy(depth, uv, tris).energy >= 0.0


def test_energy_additivity_per_triangle():
    rng = np.random.default_rng(3)
    depth = rng.standard_normal((5, 5))
    uv = identity_coords(5, 5) + 0.1 * rng.standard_normal((5, 5, 2))
    tris = triangulate(np.ones((5, 5)))
    full = lscm_energy(depth, uv, tris)
    keep = np.ones(len(tris), dtype=bool)
    keep[7] = False
    part = lscm_energy(depth, uv, tris.subset(keep))
    assert full.energy - part.energy == pytest.approx(
        full.per_triangle[7], rel=1e-10, abs=1e-12
    )


def test_degenerate_triangles_skipped():
    # all three vertices at the same uv is fine; degeneracy is geometric:
    # collapse the 3D triangle by an enormous shared depth gradient
    tris = TriangleSet(np.array([[0, 1, 0], [1, 1, 0]]), np.array([[0, 0, 1], [0, 1, 1]]))
    depth = np.zeros((2, 2))
    res = lscm_energy(depth, identity_coords(2, 2), tris)
    assert res.skipped == 0
    assert res.energy >= 0.0


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    depth = 0.3 * rng.standard_normal((6, 6))
    uv = identity_coords(6, 6) + 0.1 * rng.standard_normal((6, 6, 2))
    tris = triangulate(np.ones((6, 6)))
    err_uv = grad_check(
        lambda x: lscm_energy(depth, x, tris).energy,
        lambda x: lscm_energy(depth, x, tris, need_uv_grad=True).grad_uv,
        uv.copy(),
    )
    assert err_uv <= 1e-4
    err_depth = grad_check(
        lambda d: lscm_energy(d, uv, tris).energy,
        lambda d: lscm_energy(d, uv, tris, need_depth_grad=True).grad_depth,
        depth.copy(),
    )
    assert err_depth <= 1e-4


def test_laplacian_constant_and_plane_are_zero():
    mask = np.ones((5, 5))
    assert laplacian_l1(np.full((5, 5), 2.0), mask)[0] == 0.0
    plane = np.arange(5, dtype=float)[None, :].repeat(5, axis=0)
    assert laplacian_l1(plane, mask)[0] == pytest.approx(0.0, abs=1e-14)


def test_laplacian_quadratic_hand_value():
    depth = (np.arange(3, dtype=float)[None, :] ** 2).repeat(3, axis=0)
    value, _ = laplacian_l1(depth, np.ones((3, 3)))
    assert value == pytest.approx(2.0 / 9.0, abs=1e-15)


def test_laplacian_gradient_matches_fd():
    rng = np.random.default_rng(5)
    depth = rng.standard_normal((6, 6))
    mask = np.ones((6, 6))
    err = grad_check(
        lambda d: laplacian_l1(d, mask)[0],
        lambda d: laplacian_l1(d, mask)[1],
        depth,
    )
    assert err <= 1e-6


def test_laplacian_respects_mask():
    rng = np.random.default_rng(6)
    depth = rng.standard_normal((6, 6))
    mask = np.ones((6, 6))
    mask[2, 2] = 0.0
    value, grad = laplacian_l1(depth, mask)
    # pixels whose stencil touches (2, 2) contribute nothing
    depth2 = depth.copy()
    depth2[2, 2] = 99.0
    assert laplacian_l1(depth2, mask)[0] == value


def test_mean_abs_laplacian_flat_vs_noisy():
    mask = np.ones((6, 6))
    flat = np.zeros((6, 6))
    noisy = np.random.default_rng(7).standard_normal((6, 6))
    assert mean_abs_laplacian(flat, mask) == 0.0
    assert mean_abs_laplacian(noisy, mask) > 0.0
