"""Dense grid types, masked statistics, and PFM/PNM file IO.

Conventions used across the whole package:

- ScalarField: float64 ndarray of shape (H, W). Depth maps, masks,
  gradient fields, per-pixel losses.
- ImageField: float64 ndarray of shape (H, W, C), C in {1, 3}. Values are
  clamped to [0, 1] at the file boundary; in memory they are unconstrained
  (guidance cotangents reuse the same layout).
- Mask: ScalarField with values in {0, 1} and at least one foreground pixel.
- Indexing is row-major with the origin at the top-left pixel. i is the
  column (u/x direction) and j is the row (v/y direction), so a field is
  addressed as field[j, i].

PFM persists float32 little-endian (scale line "-1.0") with rows stored
bottom-to-top, per the Portable Float Map convention. PNM covers binary
P5/P6 with maxval 255 or 65535. These are the only persistence formats.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ensure_scalar_field",
    "ensure_image_field",
    "ensure_mask",
    "to_image",
    "masked_stats",
    "read_pfm",
    "write_pfm",
    "read_pnm",
    "write_pnm",
]


def ensure_scalar_field(field: np.ndarray, name: str = "field") -> np.ndarray:
    """Validate and return a (H, W) float64 field."""
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D (H, W), got shape {arr.shape}")
    return arr


def ensure_image_field(image: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate and return a (H, W, C) float64 image, C in {1, 3}."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"{name} must be (H, W, 1|3), got shape {arr.shape}")
    return arr


def ensure_mask(mask: np.ndarray) -> np.ndarray:
    """Validate a strictly binary mask with at least one foreground pixel."""
    arr = ensure_scalar_field(mask, "mask")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValueError("mask must be strictly binary {0, 1}")
    if not np.any(arr == 1.0):
        raise ValueError("mask has no foreground pixels")
    return arr


def to_image(field: np.ndarray, channels: int = 1) -> np.ndarray:
    """Lift a scalar field to an image by channel replication."""
    arr = ensure_scalar_field(field)
    return np.repeat(arr[:, :, None], channels, axis=2)


def masked_stats(field: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    """Mean and population standard deviation over foreground pixels.

    std divides by the foreground count N (population form), matching the
    normalize-and-rescale use in the depth metrics.
    """
    arr = ensure_scalar_field(field)
    m = ensure_mask(mask)
    if arr.shape != m.shape:
        raise ValueError("field and mask shapes differ")
    values = arr[m > 0.5]
    if values.size == 0:
        raise ValueError("mask selects no pixels")
    mean = float(values.mean())
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    return mean, std


# ---------------------------------------------------------------------------
# PFM


def write_pfm(field: np.ndarray, path) -> None:
    """Write a (H, W) or (H, W, 3) field as little-endian PFM.

    Values are narrowed to float32. Rows are flipped to the bottom-to-top
    order the format requires. NaN or infinite values are rejected.
    """
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        header = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError(f"PFM supports 1 or 3 channels, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("PFM payload must be finite")
    h, w = arr.shape[0], arr.shape[1]
    payload = arr[::-1].astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(payload)


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a (H, W) field or (H, W, 3) image.

    The sign of the scale line selects endianness (negative = little).
    Rows are returned top-to-bottom. Rejects zero scale, truncated
    payloads, and NaN values.
    """
    with open(path, "rb") as f:
        header = _read_pfm_line(f)
        if header == "Pf":
            channels = 1
        elif header == "PF":
            channels = 3
        else:
            raise ValueError(f"not a PFM file (header {header!r})")
        dims = _read_pfm_line(f).split()
        if len(dims) != 2:
            raise ValueError("malformed PFM dimensions line")
        w, h = int(dims[0]), int(dims[1])
        if w <= 0 or h <= 0:
            raise ValueError("non-positive PFM dimensions")
        scale = float(_read_pfm_line(f))
        if scale == 0.0:
            raise ValueError("PFM scale must be nonzero")
        dtype = "<f4" if scale < 0 else ">f4"
        raw = f.read(4 * w * h * channels)
    if len(raw) != 4 * w * h * channels:
        raise ValueError("truncated PFM payload")
    data = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if np.any(np.isnan(data)):
        raise ValueError("NaN in PFM payload")
    if channels == 1:
        return data.reshape(h, w)[::-1].copy()
    return data.reshape(h, w, 3)[::-1].copy()


def _read_pfm_line(f) -> str:
    chars = bytearray()
    while True:
        c = f.read(1)
        if not c:
            raise ValueError("unexpected end of PFM header")
        if c == b"\n":
            break
        chars += c
    return chars.decode("ascii").strip()


# ---------------------------------------------------------------------------
# PNM (binary P5 gray / P6 RGB)


def write_pnm(image: np.ndarray, path, maxval: int = 255) -> None:
    """Write an image as binary PGM (1 channel) or PPM (3 channels).

    In-memory values are clamped to [0, 1] and quantized to integer levels
    with round-half-to-even. maxval 65535 stores big-endian 16-bit samples.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    arr = ensure_image_field(arr)
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    magic = b"P5" if arr.shape[2] == 1 else b"P6"
    levels = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    samples = levels.astype(">u2" if maxval > 255 else "u1")
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii"))
        f.write(samples.tobytes())


def read_pnm(path) -> np.ndarray:
    """Read a binary P5/P6 file into a (H, W, 1|3) image scaled to [0, 1]."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic == b"P5":
            channels = 1
        elif magic == b"P6":
            channels = 3
        else:
            raise ValueError(f"not a binary PNM file (magic {magic!r})")
        w = _read_pnm_token(f)
        h = _read_pnm_token(f)
        maxval = _read_pnm_token(f)
        if maxval not in (255, 65535):
            raise ValueError(f"unsupported PNM maxval {maxval}")
        itemsize = 2 if maxval > 255 else 1
        raw = f.read(w * h * channels * itemsize)
    if len(raw) != w * h * channels * itemsize:
        raise ValueError("truncated PNM payload")
    dtype = ">u2" if maxval > 255 else "u1"
    data = np.frombuffer(raw, dtype=dtype).astype(np.float64) / maxval
    return data.reshape(h, w, channels)


def _read_pnm_token(f) -> int:
    """Read the next whitespace-delimited integer, skipping '#' comments."""
    token = bytearray()
    while True:
        c = f.read(1)
        if not c:
            raise ValueError("unexpected end of PNM header")
        if c == b"#":
            while c and c != b"\n":
                c = f.read(1)
            continue
        if c.isspace():
            if token:
                break
            continue
        token += c
    return int(token.decode("ascii"))
