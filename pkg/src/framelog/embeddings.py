"""Binary embedding file format (.semb) and the in-memory sequence types.

The file layout is fixed so that any encoder frontend can produce input for
the engine without sharing code:

    magic "SEMB" | version u32 LE = 1 | kind u8 (0 frames, 1 clips)
    | T u64 LE | d u64 LE | fps numerator u32 LE | fps denominator u32 LE
    | base_time f64 LE | id length u16 LE | id UTF-8 bytes
    | payload: T*d float32 LE, row-major

Payload values are single precision; all engine arithmetic upcasts to
double. Writing is byte-deterministic and read(write(x)) is an exact
round trip.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import FormatError, NonFiniteValue, TruncatedPayload

MAGIC = b"SEMB"
FORMAT_VERSION = 1
KIND_FRAME_SEQUENCE = 0
KIND_CLIP_SET = 1

_HEADER = struct.Struct("<4sIBQQIIdH")

# Clip sets reuse the id field to carry their source segment reference.
_SEGMENT_REF_RE = re.compile(r"^(?P<vid>.*)#(?P<start>\d+)-(?P<end>\d+)$")


def as_fps(value) -> Fraction:
    """Coerce ints, floats, strings like "30000/1001", or Fractions to a
    positive rational frame rate."""
    fps = Fraction(value)
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {value!r}")
    return fps


@dataclass(eq=False)
class FrameEmbeddingSequence:
    """Per-frame feature vectors of one video plus timing metadata.

    ``data`` is a (T, d) float32 matrix, one row per frame. ``fps`` is the
    frame rate of the rows (after any resampling done by the encoder) and
    ``base_time`` the UTC epoch seconds of frame 0.
    """

    video_id: str
    fps: Fraction
    base_time: float
    data: np.ndarray

    def __post_init__(self):
        self.fps = as_fps(self.fps)
        self.base_time = float(self.base_time)
        if not math.isfinite(self.base_time):
            raise NonFiniteValue("base_time must be finite")
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"data must be a (T>=1, d>=1) matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValue("embedding data contains non-finite entries")
        self.data = arr

    @property
    def frame_count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def frame_time(self, frame: int) -> float:
        """Wall-clock timestamp of one frame (epoch seconds)."""
        return self.base_time + float(Fraction(frame) / self.fps)

    def __eq__(self, other):
        if not isinstance(other, FrameEmbeddingSequence):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.fps == other.fps
            and self.base_time == other.base_time
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )


@dataclass(eq=False)
class ClipEmbeddingSet:
    """Pooled clip vectors sampled from one video segment.

    ``label`` only matters for training data and is carried by the labels
    sidecar, never by the .semb file itself.
    """

    segment_ref: tuple[str, int, int]  # (video_id, start_frame, end_frame)
    clips: np.ndarray  # (n, d) float32
    label: str | None = None
    fps: Fraction = Fraction(1)
    base_time: float = 0.0

    def __post_init__(self):
        self.fps = as_fps(self.fps)
        self.base_time = float(self.base_time)
        arr = np.asarray(self.clips, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"clips must be a (n>=1, d>=1) matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValue("clip embeddings contain non-finite entries")
        self.clips = arr

    def __eq__(self, other):
        if not isinstance(other, ClipEmbeddingSet):
            return NotImplemented
        return (
            self.segment_ref == other.segment_ref
            and self.fps == other.fps
            and self.base_time == other.base_time
            and np.array_equal(self.clips, other.clips)
        )


def _pack(identifier: str, kind: int, fps: Fraction, base_time: float, data: np.ndarray) -> bytes:
    ident = identifier.encode("utf-8")
    if len(ident) > 0xFFFF:
        raise ValueError("identifier longer than 65535 UTF-8 bytes")
    num, den = fps.numerator, fps.denominator
    if not (1 <= num <= 0xFFFFFFFF and 1 <= den <= 0xFFFFFFFF):
        raise ValueError(f"fps {fps} does not fit u32/u32")
    t, d = data.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, kind, t, d, num, den, base_time, len(ident))
    payload = np.ascontiguousarray(data, dtype="<f4").tobytes()
    return header + ident + payload


def write_embeddings(seq: FrameEmbeddingSequence) -> bytes:
    """Serialize a frame sequence; byte-deterministic for equal inputs."""
    return _pack(seq.video_id, KIND_FRAME_SEQUENCE, seq.fps, seq.base_time, seq.data)


def write_clip_embeddings(clip_set: ClipEmbeddingSet) -> bytes:
    vid, start, end = clip_set.segment_ref
    return _pack(f"{vid}#{start}-{end}", KIND_CLIP_SET, clip_set.fps, clip_set.base_time, clip_set.clips)


def _unpack(stream: bytes):
    if len(stream) >= 4 and stream[:4] != MAGIC:
        raise FormatError(f"bad magic {stream[:4]!r}")
    if len(stream) < _HEADER.size:
        raise TruncatedPayload(f"stream of {len(stream)} bytes is shorter than the header")
    magic, version, kind, t, d, num, den, base_time, ident_len = _HEADER.unpack_from(stream, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if kind not in (KIND_FRAME_SEQUENCE, KIND_CLIP_SET):
        raise FormatError(f"unknown kind byte {kind}")
    if t < 1 or d < 1:
        raise FormatError(f"invalid shape T={t}, d={d}")
    if num < 1 or den < 1:
        raise FormatError(f"invalid fps {num}/{den}")
    if not math.isfinite(base_time):
        raise FormatError("base_time is not finite")
    offset = _HEADER.size
    if len(stream) < offset + ident_len:
        raise TruncatedPayload("stream ends inside the identifier")
    try:
        identifier = stream[offset : offset + ident_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("identifier is not valid UTF-8") from exc
    offset += ident_len
    expected = t * d * 4
    actual = len(stream) - offset
    if actual != expected:
        raise TruncatedPayload(f"payload is {actual} bytes, header promises {expected}")
    data = np.frombuffer(stream, dtype="<f4", count=t * d, offset=offset).reshape(t, d)
    if not np.isfinite(data).all():
        raise NonFiniteValue("payload contains non-finite entries")
    return kind, identifier, Fraction(num, den), base_time, data.copy()


def read_embeddings(stream: bytes) -> FrameEmbeddingSequence:
    """Parse a kind-0 .semb stream.

    Raises FormatError on a bad header, TruncatedPayload when the byte
    count disagrees with the header, NonFiniteValue on NaN/inf payload.
    """
    kind, identifier, fps, base_time, data = _unpack(stream)
    if kind != KIND_FRAME_SEQUENCE:
        raise FormatError("stream holds a clip set; use read_clip_embeddings")
    return FrameEmbeddingSequence(video_id=identifier, fps=fps, base_time=base_time, data=data)


def read_clip_embeddings(stream: bytes) -> ClipEmbeddingSet:
    kind, identifier, fps, base_time, data = _unpack(stream)
    if kind != KIND_CLIP_SET:
        raise FormatError("stream holds a frame sequence; use read_embeddings")
    match = _SEGMENT_REF_RE.match(identifier)
    if match:
        ref = (match.group("vid"), int(match.group("start")), int(match.group("end")))
    else:
        # Foreign producers may not encode a segment reference.
        ref = (identifier, 0, data.shape[0])
    return ClipEmbeddingSet(segment_ref=ref, clips=data, fps=fps, base_time=base_time)


def load_embeddings(path) -> FrameEmbeddingSequence:
    with open(path, "rb") as fh:
        return read_embeddings(fh.read())


def save_embeddings(seq: FrameEmbeddingSequence, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_embeddings(seq))
