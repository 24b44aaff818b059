"""Matrix CSV and PGM image I/O."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Malformed input file."""


def read_matrix_csv(path) -> np.ndarray:
    text = Path(path).read_text()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(f) for f in line.split(",")])
        except ValueError as exc:
            raise InputError(f"{path}: line {lineno}: non-numeric field ({exc})") from None
        if len(rows[-1]) != len(rows[0]):
            raise InputError(
                f"{path}: line {lineno}: expected {len(rows[0])} fields, got {len(rows[-1])}")
    if not rows:
        raise InputError(f"{path}: empty file")
    M = np.array(rows, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: NaN or Inf entries")
    return M


def write_matrix_csv(M, path) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    # repr() of a float is the shortest string that round-trips exactly
    lines = (",".join(repr(float(v)) for v in row) for row in M)
    Path(path).write_text("\n".join(lines) + "\n")


_TOKEN = re.compile(rb"#[^\n]*\n?|\s+")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        m = _TOKEN.match(data, pos)
        if m:
            pos = m.end()
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
            end += 1
        if end == pos:
            raise InputError("malformed PGM header")
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM; returns intensities scaled to [0, 1]."""
    data = Path(path).read_bytes()
    try:
        (magic, w, h, maxval), pos = _header_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except (ValueError, IndexError):
        raise InputError(f"{path}: malformed PGM header") from None
    if magic not in (b"P2", b"P5"):
        raise InputError(f"{path}: unsupported magic {magic!r}")
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise InputError(f"{path}: bad dimensions or maxval")
    count = width * height
    if magic == b"P5":
        pos += 1  # exactly one whitespace byte before the raster
        dtype = ">u2" if maxval > 255 else "u1"
        need = count * np.dtype(dtype).itemsize
        raster = data[pos:pos + need]
        if len(raster) < need:
            raise InputError(f"{path}: truncated payload ({len(raster)} of {need} bytes)")
        values = np.frombuffer(raster, dtype=dtype).astype(float)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < count:
            raise InputError(f"{path}: truncated payload ({len(body)} of {count} samples)")
        try:
            values = np.array([int(t) for t in body[:count]], dtype=float)
        except ValueError:
            raise InputError(f"{path}: non-integer sample") from None
    if values.max(initial=0) > maxval:
        raise InputError(f"{path}: sample exceeds maxval {maxval}")
    return values.reshape(height, width) / maxval


def write_pgm(M, path, binary: bool = True) -> None:
    """Write a [0, 1] matrix as an 8-bit PGM, clamping out-of-range values."""
    M = np.clip(np.asarray(M, dtype=float), 0.0, 1.0)
    pixels = np.rint(M * 255).astype(np.uint8)
    h, w = pixels.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes())
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in pixels)
        Path(path).write_text(f"P2\n{w} {h}\n255\n{rows}\n")
