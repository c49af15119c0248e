import sys

import numpy as np
import pytest

from texshape.grids import write_pfm
from texshape.guidance import (
    GuidanceChildExited,
    GuidanceError,
    GuidanceNaNError,
    GuidanceProtocolError,
    GuidanceRequest,
    GuidanceTimeout,
    NoisyOracleGuidance,
    OracleGuidance,
    RemoteGuidance,
)

STUB = [sys.executable, "-m", "texshape.stub"]


def _req(image, step=0, seed=0):
    return GuidanceRequest(image, step, seed)


def test_oracle_fixed_point():
    target = np.random.default_rng(0).uniform(size=(4, 4, 1))
    resp = OracleGuidance(target).gradient(_req(target.copy()))
    assert np.all(resp.cotangent == 0.0)
    assert resp.diagnostic_loss == 0.0


def test_oracle_linearity():
    target = np.random.default_rng(1).uniform(size=(4, 4, 3))
    resp = OracleGuidance(target).gradient(_req(target + 0.1))
    assert np.allclose(resp.cotangent, 0.1, atol=1e-12)


def test_oracle_exhaustive_difference():
    rng = np.random.default_rng(2)
    target = rng.uniform(size=(5, 6, 3))
    image = rng.uniform(size=(5, 6, 3))
    resp = OracleGuidance(target).gradient(_req(image))
    for j in range(5):
        for i in range(6):
            for c in range(3):
                assert resp.cotangent[j, i, c] == image[j, i, c] - target[j, i, c]


def test_oracle_dim_mismatch():
    with pytest.raises(ValueError):
        OracleGuidance(np.zeros((4, 4, 1))).gradient(_req(np.zeros((4, 5, 1))))


def test_oracle_cotangent_is_gradient_of_half_sum_square():
    # finite differences of the half-sum-of-squares pull; the reported
    # diagnostic is the mean-normalized variant of the same quantity
    rng = np.random.default_rng(3)
    target = rng.uniform(size=(4, 4, 1))
    image = rng.uniform(size=(4, 4, 1))
    oracle = OracleGuidance(target)
    cot = oracle.gradient(_req(image)).cotangent
    step = 1e-6
    for idx in [(0, 0, 0), (1, 2, 0), (3, 3, 0)]:
        plus = image.copy()
        plus[idx] += step
        minus = image.copy()
        minus[idx] -= step
        f_plus = 0.5 * np.sum((plus - target) ** 2)
        f_minus = 0.5 * np.sum((minus - target) ** 2)
        numeric = (f_plus - f_minus) / (2 * step)
        assert abs(numeric - cot[idx]) / max(abs(numeric), 1e-8) <= 1e-6


def test_noisy_sigma_zero_equals_oracle():
    rng = np.random.default_rng(4)
    target = rng.uniform(size=(4, 4, 1))
    image = rng.uniform(size=(4, 4, 1))
    a = OracleGuidance(target).gradient(_req(image))
    b = NoisyOracleGuidance(target, 0.0).gradient(_req(image))
    assert np.array_equal(a.cotangent, b.cotangent)


def test_noisy_deterministic_per_seed_step():
    rng = np.random.default_rng(5)
    target = rng.uniform(size=(4, 4, 1))
    image = rng.uniform(size=(4, 4, 1))
    g = NoisyOracleGuidance(target, 1.0)
    a = g.gradient(_req(image, step=7, seed=42)).cotangent
    b = g.gradient(_req(image, step=7, seed=42)).cotangent
    c = g.gradient(_req(image, step=8, seed=42)).cotangent
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noisy_clt_mean_bound():
    rng = np.random.default_rng(6)
    target = rng.uniform(size=(64, 64, 1))
    image = rng.uniform(size=(64, 64, 1))
    sigma = 1.0
    g = NoisyOracleGuidance(target, sigma)
    n = 10_000
    acc = np.zeros_like(image)
    for step in range(n):
        acc += g.gradient(_req(image, step=step, seed=0)).cotangent
    deviation = np.abs(acc / n - (image - target))
    assert deviation.mean() <= 3e-2 * sigma


def test_remote_zero_stub_round_trip():
    rng = np.random.default_rng(7)
    image = rng.uniform(size=(6, 5, 3))
    with RemoteGuidance(STUB + ["--mode", "zero"]) as remote:
        resp = remote.gradient(_req(image))
    assert np.all(resp.cotangent == 0.0)


def test_remote_half_stub_matches_local_f32():
    rng = np.random.default_rng(8)
    image = rng.uniform(size=(4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "half"]) as remote:
        resp = remote.gradient(_req(image))
    expected = (
        (image.astype(np.float32).astype(np.float64) - 0.5)
        .astype(np.float32)
        .astype(np.float64)
    )
    assert np.array_equal(resp.cotangent, expected)


def test_remote_oracle_stub_matches_local(tmp_path):
    rng = np.random.default_rng(9)
    target = rng.uniform(size=(4, 4, 3))
    image = rng.uniform(size=(4, 4, 3))
    write_pfm(target, tmp_path / "target.pfm")
    with RemoteGuidance(
        STUB + ["--mode", "oracle", "--target", str(tmp_path / "target.pfm")]
    ) as remote:
        resp = remote.gradient(_req(image))
    t32 = target.astype(np.float32).astype(np.float64)
    i32 = image.astype(np.float32).astype(np.float64)
    expected = (i32 - t32).astype(np.float32).astype(np.float64)
    assert np.array_equal(resp.cotangent, expected)


def test_remote_child_death_mid_response():
    image = np.zeros((4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "die"]) as remote:
        with pytest.raises(GuidanceChildExited):
            remote.gradient(_req(image))


def test_remote_bad_magic():
    image = np.zeros((4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "badmagic"]) as remote:
        with pytest.raises(GuidanceProtocolError):
            remote.gradient(_req(image))


def test_remote_nan_payload():
    image = np.zeros((4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "nan"]) as remote:
        with pytest.raises(GuidanceNaNError):
            remote.gradient(_req(image))


def test_remote_error_frame():
    image = np.zeros((4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "error"]) as remote:
        with pytest.raises(GuidanceError, match="simulated"):
            remote.gradient(_req(image))


def test_remote_timeout():
    image = np.zeros((4, 4, 1))
    with RemoteGuidance(STUB + ["--mode", "zero", "--delay", "3"], timeout=0.4) as remote:
        with pytest.raises(GuidanceTimeout):
            remote.gradient(_req(image))


def test_remote_shutdown_clean_exit():
    remote = RemoteGuidance(STUB + ["--mode", "zero"])
    remote.gradient(_req(np.zeros((2, 2, 1))))
    remote.shutdown()
    assert remote.proc.returncode == 0
