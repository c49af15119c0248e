import numpy as np
import pytest

from texshape.grids import (
    masked_stats,
    read_pfm,
    read_pnm,
    write_pfm,
    write_pnm,
)


def test_pfm_round_trip_identity(tmp_path):
    field = np.array([[0.0, 1.0], [2.0, 3.0]])
    path = tmp_path / "f.pfm"
    write_pfm(field, path)
    assert np.array_equal(read_pfm(path), field)


def test_pfm_color_round_trip(tmp_path):
    img = np.full((1, 1, 3), 0.5)
    path = tmp_path / "c.pfm"
    write_pfm(img, path)
    back = read_pfm(path)
    assert back.shape == (1, 1, 3)
    assert np.array_equal(back, img)


def test_pfm_round_trip_bitwise_after_f32(tmp_path):
    rng = np.random.default_rng(3)
    field = rng.standard_normal((7, 5))
    path = tmp_path / "r.pfm"
    write_pfm(field, path)
    assert np.array_equal(read_pfm(path), field.astype(np.float32).astype(np.float64))


def test_pfm_zero_scale_rejected(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"Pf\n1 1\n0.0\n" + np.zeros(1, dtype="<f4").tobytes())
    with pytest.raises(ValueError, match="scale"):
        read_pfm(path)


def test_pfm_truncated_rejected(tmp_path):
    path = tmp_path / "t.pfm"
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + np.zeros(2, dtype="<f4").tobytes())
    with pytest.raises(ValueError, match="truncated"):
        read_pfm(path)


def test_pfm_nan_rejected_both_ways(tmp_path):
    path = tmp_path / "n.pfm"
    with pytest.raises(ValueError):
        write_pfm(np.array([[np.nan]]), path)
    path.write_bytes(b"Pf\n1 1\n-1.0\n" + np.array([np.nan], dtype="<f4").tobytes())
    with pytest.raises(ValueError, match="NaN"):
        read_pfm(path)


def test_pfm_big_endian_source(tmp_path):
    field = np.array([[1.5, -2.0], [0.25, 8.0]])
    path = tmp_path / "be.pfm"
    path.write_bytes(b"Pf\n2 2\n1.0\n" + field[::-1].astype(">f4").tobytes())
    assert np.array_equal(read_pfm(path), field)


def test_pfm_external_layout(tmp_path):
    # independent byte-level check of the emitted layout: header plus
    # bottom-to-top little-endian f32 rows
    field = np.array([[1.0, 2.0], [3.0, 4.0]])
    path = tmp_path / "x.pfm"
    write_pfm(field, path)
    raw = path.read_bytes()
    assert raw.startswith(b"Pf\n2 2\n-1.0\n")
    payload = np.frombuffer(raw[len(b"Pf\n2 2\n-1.0\n"):], dtype="<f4")
    assert payload.tolist() == [3.0, 4.0, 1.0, 2.0]


def test_pnm_scale_endpoints(tmp_path):
    path = tmp_path / "g.pgm"
    path.write_bytes(b"P5\n2 1\n255\n" + bytes([255, 0]))
    img = read_pnm(path)
    assert img.shape == (1, 2, 1)
    assert img[0, 0, 0] == 1.0 and img[0, 1, 0] == 0.0


def test_pnm_rgb_linear_scale(tmp_path):
    path = tmp_path / "c.ppm"
    path.write_bytes(b"P6\n1 1\n255\n" + bytes([0, 128, 255]))
    img = read_pnm(path)
    assert np.allclose(img[0, 0], [0.0, 128 / 255, 1.0])


def test_pnm_checkerboard_quantization_bound(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, size=(6, 4, 3))
    path = tmp_path / "q.ppm"
    write_pnm(img, path)
    back = read_pnm(path)
    assert np.max(np.abs(back - img)) <= 1.0 / (2 * 255)


def test_pnm_16bit_round_trip(tmp_path):
    img = np.array([[[0.25], [1.0]]])
    path = tmp_path / "w.pgm"
    write_pnm(img, path, maxval=65535)
    back = read_pnm(path)
    assert np.max(np.abs(back - img)) <= 1.0 / (2 * 65535)


def test_pnm_comment_and_whitespace_header(tmp_path):
    path = tmp_path / "h.pgm"
    path.write_bytes(b"P5\n# comment\n 2 1 \n255\n" + bytes([7, 9]))
    img = read_pnm(path)
    assert img.shape == (1, 2, 1)


def test_masked_stats_constant():
    field = np.full((3, 3), 5.0)
    mask = np.zeros((3, 3))
    mask[1, 1] = mask[0, 2] = 1.0
    assert masked_stats(field, mask) == (5.0, 0.0)


def test_masked_stats_two_point():
    field = np.array([[1.0, 3.0]])
    mask = np.ones((1, 2))
    mean, std = masked_stats(field, mask)
    assert mean == 2.0 and std == 1.0


def test_masked_stats_ignores_background():
    rng = np.random.default_rng(1)
    field = rng.standard_normal((8, 8))
    mask = (rng.uniform(size=(8, 8)) < 0.5).astype(float)
    mask[0, 0] = 1.0
    base = masked_stats(field, mask)
    noised = field.copy()
    noised[mask < 0.5] = 1e6
    assert masked_stats(noised, mask) == base


def test_masked_stats_matches_two_pass_oracle():
    # brute-force two-pass mean/std over foreground pixels only
    rng = np.random.default_rng(2)
    field = rng.standard_normal((16, 16))
    mask = (rng.uniform(size=(16, 16)) < 0.4).astype(float)
    mask[3, 3] = 1.0
    values = [field[j, i] for j in range(16) for i in range(16) if mask[j, i] > 0]
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    got = masked_stats(field, mask)
    assert got[0] == pytest.approx(mean, abs=1e-12)
    assert got[1] == pytest.approx(var**0.5, abs=1e-12)


def test_masked_stats_all_background_errors():
    with pytest.raises(ValueError):
        masked_stats(np.ones((2, 2)), np.zeros((2, 2)))
