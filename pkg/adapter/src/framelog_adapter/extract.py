"""Embedding extraction: raw video in, .semb bytes out."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np

from .encoders import CLIP_FRAMES, load_clip_encoder, load_frame_encoder
from .errors import IndexOutOfRange
from .semb import clip_set_bytes, frame_sequence_bytes
from .video import RawVideo, resample_indices


def extract_frame_embeddings(
    video: RawVideo,
    sample_fps,
    encoder: str = "vit-b-16",
    checkpoint=None,
    base_time: float = 0.0,
    video_id: str | None = None,
) -> bytes:
    """Resample to sample_fps by nearest-frame selection, encode each kept
    frame independently, and emit a kind-0 .semb stream."""
    sample_fps = Fraction(sample_fps)
    encode = load_frame_encoder(encoder, checkpoint)
    indices = resample_indices(video.frame_count, video.fps, sample_fps)
    data = encode(video.frames[indices])
    if video_id is None:
        video_id = Path(video.source).stem
    return frame_sequence_bytes(video_id, sample_fps, base_time, data)


def extract_clip_embeddings(
    video: RawVideo,
    windows,
    encoder: str = "r2plus1d-18",
    checkpoint=None,
    base_time: float = 0.0,
    video_id: str | None = None,
) -> bytes:
    """Encode each 16-frame window to one vector and emit a kind-1 .semb
    stream whose segment reference spans all windows."""
    windows = [list(int(i) for i in w) for w in windows]
    if not windows:
        raise ValueError("no clip windows given")
    for window in windows:
        if len(window) != CLIP_FRAMES:
            raise ValueError(f"clip windows must have {CLIP_FRAMES} indices, got {len(window)}")
        bad = [i for i in window if i < 0 or i >= video.frame_count]
        if bad:
            raise IndexOutOfRange(f"frame {bad[0]} outside 0..{video.frame_count - 1}")
    encode = load_clip_encoder(encoder, checkpoint)
    data = np.stack([encode(video.frames[w]) for w in windows])
    if video_id is None:
        video_id = Path(video.source).stem
    start = min(min(w) for w in windows)
    end = max(max(w) for w in windows) + 1
    return clip_set_bytes(video_id, start, end, video.fps, base_time, data)
