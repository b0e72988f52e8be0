"""FMTS: a little-endian binary container for dense frame-token streams.

Layout (26-byte header, then frames):

    bytes 0-3   magic "FMTS"
    byte  4     version (1)
    bytes 5-8   H (u32)
    bytes 9-12  W (u32)
    bytes 13-16 D (u32)
    byte  17    dtype code (1 = float32 little-endian)
    bytes 18-25 num_frames (u64)
    payload     num_frames * H*W*D float32 values, frames sequential,
                row-major, innermost D

This container is an artifact of this project (there is no standard
serialization for token grids); an empty stream stores H = W = D = 0.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Iterable, Iterator, Sequence

import numpy as np

from .model import TokenGrid

MAGIC = b"FMTS"
VERSION = 1
DTYPE_F32_LE = 1

_HEADER = struct.Struct("<4sBIIIBQ")
HEADER_SIZE = _HEADER.size  # 26


class FmtsError(ValueError):
    """Malformed or inconsistent FMTS data."""


def write_stream(grids: Sequence[TokenGrid], sink: BinaryIO) -> int:
    """Serialize grids to sink; returns total bytes written.

    All grids must share (H, W, D) and have frame_index consecutive from 0.
    """
    grids = list(grids)
    if grids:
        h, w, d = grids[0].shape
    else:
        h = w = d = 0
    for i, g in enumerate(grids):
        if g.shape != (h, w, d):
            raise FmtsError(
                f"frame {g.frame_index}: shape {g.shape} differs from first frame {(h, w, d)}"
            )
        if g.frame_index != i:
            raise FmtsError(f"frame_index {g.frame_index} at position {i}: must be consecutive from 0")

    sink.write(_HEADER.pack(MAGIC, VERSION, h, w, d, DTYPE_F32_LE, len(grids)))
    written = HEADER_SIZE
    for g in grids:
        payload = np.ascontiguousarray(g.data, dtype="<f4").tobytes()
        sink.write(payload)
        written += len(payload)
    return written


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    buf = source.read(n)
    if len(buf) != n:
        raise FmtsError(f"truncated {what}: expected {n} bytes, got {len(buf)}")
    return buf


def read_stream(source: BinaryIO) -> Iterator[TokenGrid]:
    """Yield frames one at a time; never buffers more than one frame."""
    header = _read_exact(source, HEADER_SIZE, "header")
    magic, version, h, w, d, dtype, num_frames = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FmtsError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FmtsError(f"unsupported version {version}, expected {VERSION}")
    if dtype != DTYPE_F32_LE:
        raise FmtsError(f"unsupported dtype code {dtype}, expected {DTYPE_F32_LE}")
    if num_frames > 0 and min(h, w, d) < 1:
        raise FmtsError(f"non-positive dimensions (H={h}, W={w}, D={d}) with {num_frames} frames")

    frame_bytes = h * w * d * 4
    for t in range(num_frames):
        buf = source.read(frame_bytes)
        if len(buf) != frame_bytes:
            raise FmtsError(
                f"truncated payload at frame {t}: expected {frame_bytes} bytes, got {len(buf)}"
            )
        data = np.frombuffer(buf, dtype="<f4").reshape(h, w, d)
        yield TokenGrid(frame_index=t, data=data)


def read_all(source: BinaryIO) -> list[TokenGrid]:
    return list(read_stream(source))


def stream_bytes(grids: Iterable[TokenGrid]) -> bytes:
    import io

    buf = io.BytesIO()
    write_stream(list(grids), buf)
    return buf.getvalue()
