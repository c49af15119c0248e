"""Image-prior guidance: the gradient source that drives Stage I.

A guidance implementation receives the blended image and returns the
gradient of a plausibility loss with respect to that image (the image-space
cotangent); the caller backpropagates it through warping and blending. Three
implementations are provided:

- OracleGuidance: deterministic pull toward a precomputed target image,
  cotangent = image - target. Makes the whole pipeline verifiable without
  any learned prior.
- NoisyOracleGuidance: the oracle plus seeded counter-based Gaussian noise,
  mimicking stochastic score-based gradients; bitwise reproducible for
  equal (seed, step).
- RemoteGuidance: a child process speaking the binary stdio protocol below,
  one synchronous request in flight at a time.

Wire protocol (little-endian): frame = magic "SVTG" | msg_type u8
(1=grad_request, 2=grad_response, 3=shutdown, 4=error) | width u32 |
height u32 | channels u32 | step u64 | seed u64 | payload. grad frames
carry f32[w*h*c] row-major channel-interleaved; a grad_response appends a
f32 diagnostic loss. Error frames carry u32 byte length + UTF-8 message.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import struct
import time
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAGIC",
    "MSG_GRAD_REQUEST",
    "MSG_GRAD_RESPONSE",
    "MSG_SHUTDOWN",
    "MSG_ERROR",
    "GuidanceRequest",
    "GuidanceResponse",
    "GuidanceError",
    "GuidanceProtocolError",
    "GuidanceChildExited",
    "GuidanceTimeout",
    "GuidanceNaNError",
    "OracleGuidance",
    "NoisyOracleGuidance",
    "RemoteGuidance",
    "pack_frame",
    "read_frame",
]

MAGIC = b"SVTG"
MSG_GRAD_REQUEST = 1
MSG_GRAD_RESPONSE = 2
MSG_SHUTDOWN = 3
MSG_ERROR = 4

_HEADER = struct.Struct("<4sBIIIQQ")


@dataclass
class GuidanceRequest:
    image: np.ndarray  # (H, W, C) float64, finite
    step: int
    seed: int


@dataclass
class GuidanceResponse:
    cotangent: np.ndarray  # (H, W, C) float64, same dims as the request
    diagnostic_loss: float  # -1.0 when the backend reports none


class GuidanceError(Exception):
    """Base class for guidance transport failures."""


class GuidanceProtocolError(GuidanceError):
    """Malformed frame: bad magic, bad lengths, or unexpected type."""


class GuidanceChildExited(GuidanceError):
    """The guidance child process died before completing a response."""


class GuidanceTimeout(GuidanceError):
    """No complete response within the configured timeout."""


class GuidanceNaNError(GuidanceError):
    """The response payload contained NaN values."""


class OracleGuidance:
    """Pull toward a fixed target: cotangent = image - target, w(t) = 1.

    The diagnostic loss is half the mean squared difference; the cotangent
    is the exact gradient of the unnormalized half-sum-of-squares pull.
    """

    def __init__(self, target: np.ndarray):
        self.target = np.asarray(target, dtype=np.float64)

    def gradient(self, req: GuidanceRequest) -> GuidanceResponse:
        if req.image.shape != self.target.shape:
            raise ValueError(
                f"request dims {req.image.shape} != target dims {self.target.shape}"
            )
        diff = req.image - self.target
        return GuidanceResponse(diff, float(0.5 * np.mean(diff * diff)))


class NoisyOracleGuidance:
    """Oracle plus sigma * eta, eta ~ N(0, I) from a counter-based stream.

    The Philox generator keyed by the request seed with the step as counter
    makes every (seed, step) pair bitwise reproducible, independent of call
    order.
    """

    def __init__(self, target: np.ndarray, sigma: float):
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self.oracle = OracleGuidance(target)
        self.sigma = float(sigma)

    def gradient(self, req: GuidanceRequest) -> GuidanceResponse:
        resp = self.oracle.gradient(req)
        if self.sigma > 0.0:
            rng = np.random.Generator(
                np.random.Philox(key=req.seed, counter=req.step)
            )
            resp.cotangent = resp.cotangent + self.sigma * rng.standard_normal(
                req.image.shape
            )
        return resp


def pack_frame(
    msg_type: int,
    width: int = 0,
    height: int = 0,
    channels: int = 0,
    step: int = 0,
    seed: int = 0,
    payload: bytes = b"",
) -> bytes:
    return _HEADER.pack(MAGIC, msg_type, width, height, channels, step, seed) + payload


def read_frame(read_exact) -> tuple[int, int, int, int, int, int, bytes]:
    """Read one frame via a `read_exact(n) -> bytes` callable.

    Returns (msg_type, width, height, channels, step, seed, payload).
    """
    header = read_exact(_HEADER.size)
    magic, msg_type, width, height, channels, step, seed = _HEADER.unpack(header)
    if magic != MAGIC:
        raise GuidanceProtocolError(f"bad magic {magic!r}")
    if msg_type in (MSG_GRAD_REQUEST, MSG_GRAD_RESPONSE):
        n = 4 * width * height * channels
        if msg_type == MSG_GRAD_RESPONSE:
            n += 4  # trailing diagnostic loss
        payload = read_exact(n)
    elif msg_type == MSG_SHUTDOWN:
        payload = b""
    elif msg_type == MSG_ERROR:
        (n,) = struct.unpack("<I", read_exact(4))
        payload = read_exact(n)
    else:
        raise GuidanceProtocolError(f"unknown message type {msg_type}")
    return msg_type, width, height, channels, step, seed, payload


class RemoteGuidance:
    """Synchronous client to a guidance child process over stdio.

    Exactly one request is in flight at a time; the instance is not
    shareable across threads. Child death, protocol violations, timeouts,
    and NaN payloads each raise their own error kind.
    """

    def __init__(self, command: str | list[str], timeout: float = 120.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )

    def gradient(self, req: GuidanceRequest) -> GuidanceResponse:
        img = np.asarray(req.image, dtype=np.float64)
        if img.ndim != 3:
            raise ValueError("request image must be (H, W, C)")
        h, w, c = img.shape
        frame = pack_frame(
            MSG_GRAD_REQUEST, w, h, c, req.step, req.seed, img.astype("<f4").tobytes()
        )
        self._write(frame)
        deadline = time.monotonic() + self.timeout
        msg_type, rw, rh, rc, _, _, payload = read_frame(
            lambda n: self._read_exact(n, deadline)
        )
        if msg_type == MSG_ERROR:
            raise GuidanceError(payload.decode("utf-8", errors="replace"))
        if msg_type != MSG_GRAD_RESPONSE:
            raise GuidanceProtocolError(f"expected grad_response, got type {msg_type}")
        if (rw, rh, rc) != (w, h, c):
            raise GuidanceProtocolError(
                f"response dims {(rw, rh, rc)} != request dims {(w, h, c)}"
            )
        cot = np.frombuffer(payload[:-4], dtype="<f4").astype(np.float64)
        (diag,) = struct.unpack("<f", payload[-4:])
        if np.any(np.isnan(cot)) or np.isnan(diag):
            raise GuidanceNaNError("NaN in guidance response")
        return GuidanceResponse(cot.reshape(h, w, c), float(diag))

    def shutdown(self, grace: float = 5.0) -> None:
        if self.proc.poll() is None:
            try:
                self._write(pack_frame(MSG_SHUTDOWN))
                self.proc.stdin.close()
            except (OSError, GuidanceChildExited):
                pass
            try:
                self.proc.wait(timeout=grace)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        if self.proc.stdout is not None:
            self.proc.stdout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
        return False

    def _write(self, data: bytes) -> None:
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise GuidanceChildExited(f"guidance child closed stdin: {e}") from e

    def _read_exact(self, n: int, deadline: float) -> bytes:
        buf = bytearray()
        fd = self.proc.stdout.fileno()
        while len(buf) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise GuidanceTimeout(f"no response within {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if not ready:
                continue
            chunk = os.read(fd, n - len(buf))
            if not chunk:
                code = self.proc.poll()
                raise GuidanceChildExited(
                    f"guidance child exited (returncode {code}) mid-response"
                )
            buf += chunk
        return bytes(buf)
