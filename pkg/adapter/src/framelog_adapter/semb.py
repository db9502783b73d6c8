"""Writer for the engine's .semb wire format.

Layout (all little-endian): magic "SEMB" | version u32 = 1 | kind u8
(0 frame sequence, 1 clip set) | T u64 | d u64 | fps numerator u32 |
fps denominator u32 | base_time f64 | id length u16 | id UTF-8 |
payload T*d float32 row-major. Clip sets carry their source segment in
the id as "video_id#start-end".

Implemented here independently of the engine package on purpose: the byte
format is the only contract between the two sides.
"""

from __future__ import annotations

import struct
from fractions import Fraction

import numpy as np

MAGIC = b"SEMB"
FORMAT_VERSION = 1
KIND_FRAME_SEQUENCE = 0
KIND_CLIP_SET = 1

_HEADER = struct.Struct("<4sIBQQIIdH")


def _pack(identifier: str, kind: int, fps: Fraction, base_time: float, data: np.ndarray) -> bytes:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"payload must be (T>=1, d>=1), got {data.shape}")
    if not np.isfinite(data).all():
        raise ValueError("payload must be finite")
    fps = Fraction(fps)
    if fps <= 0:
        raise ValueError("fps must be positive")
    ident = identifier.encode("utf-8")
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        kind,
        data.shape[0],
        data.shape[1],
        fps.numerator,
        fps.denominator,
        float(base_time),
        len(ident),
    )
    return header + ident + np.ascontiguousarray(data, dtype="<f4").tobytes()


def frame_sequence_bytes(video_id: str, fps, base_time: float, data: np.ndarray) -> bytes:
    return _pack(video_id, KIND_FRAME_SEQUENCE, fps, base_time, data)


def clip_set_bytes(video_id: str, start: int, end: int, fps, base_time: float, data: np.ndarray) -> bytes:
    return _pack(f"{video_id}#{start}-{end}", KIND_CLIP_SET, fps, base_time, data)
