"""Stub guidance server speaking the stdio wire protocol.

Runs as `python -m texshape.stub`. The default mode answers every gradient
request with a zero cotangent; `--mode oracle --target t.pfm` reproduces
the in-process oracle (cotangent = image - target) over the wire, which
makes remote and local guidance interchangeable in tests. The fault modes
exercise the client's failure paths.
"""

from __future__ import annotations

import argparse
import struct
import sys
import time

import numpy as np

from .grids import read_pfm
from .guidance import (
    MAGIC,
    MSG_ERROR,
    MSG_GRAD_REQUEST,
    MSG_GRAD_RESPONSE,
    MSG_SHUTDOWN,
    pack_frame,
    read_frame,
)


def _respond(out, width, height, channels, step, seed, cot32, diag):
    payload = cot32.astype("<f4").tobytes() + struct.pack("<f", diag)
    out.write(pack_frame(MSG_GRAD_RESPONSE, width, height, channels, step, seed, payload))
    out.flush()


def serve(mode: str, target: np.ndarray | None, delay: float = 0.0) -> int:
    stdin = sys.stdin.buffer
    out = sys.stdout.buffer

    def read_exact(n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = stdin.read(n - len(buf))
            if not chunk:
                raise EOFError("client closed the pipe")
            buf += chunk
        return bytes(buf)

    while True:
        try:
            msg_type, w, h, c, step, seed, payload = read_frame(read_exact)
        except EOFError:
            return 0
        if msg_type == MSG_SHUTDOWN:
            return 0
        if msg_type != MSG_GRAD_REQUEST:
            sys.stderr.write(f"stub: unexpected message type {msg_type}\n")
            return 1
        if delay:
            time.sleep(delay)
        image = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(h, w, c)

        if mode == "zero":
            _respond(out, w, h, c, step, seed, np.zeros((h, w, c)), 0.0)
        elif mode == "half":
            _respond(out, w, h, c, step, seed, image - 0.5, -1.0)
        elif mode == "oracle":
            if target is None or target.shape != image.shape:
                msg = "stub: target missing or dims mismatch".encode()
                out.write(
                    pack_frame(MSG_ERROR, payload=struct.pack("<I", len(msg)) + msg)
                )
                out.flush()
                continue
            diff = image - target
            _respond(out, w, h, c, step, seed, diff, float(0.5 * np.mean(diff * diff)))
        elif mode == "error":
            msg = b"stub: simulated backend failure"
            out.write(pack_frame(MSG_ERROR, payload=struct.pack("<I", len(msg)) + msg))
            out.flush()
        elif mode == "badmagic":
            out.write(b"XXXX" + pack_frame(MSG_GRAD_RESPONSE, w, h, c)[4:])
            out.flush()
            return 1
        elif mode == "nan":
            cot = np.full((h, w, c), np.nan)
            _respond(out, w, h, c, step, seed, cot, -1.0)
        elif mode == "die":
            # half a header, then exit: the client must see a child death
            out.write(MAGIC + bytes([MSG_GRAD_RESPONSE]))
            out.flush()
            return 1
        else:
            raise ValueError(f"unknown stub mode {mode}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="stub guidance server")
    parser.add_argument(
        "--mode",
        default="zero",
        choices=["zero", "half", "oracle", "error", "badmagic", "nan", "die"],
    )
    parser.add_argument("--target", help="PFM image for oracle mode")
    parser.add_argument("--delay", type=float, default=0.0, help="seconds per request")
    args = parser.parse_args(argv)
    target = None
    if args.target:
        target = read_pfm(args.target)
        if target.ndim == 2:
            target = target[:, :, None]
    return serve(args.mode, target, args.delay)


if __name__ == "__main__":
    sys.exit(main())
