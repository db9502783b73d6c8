"""Raw video loading and frame-rate resampling.

Accepted containers: .npy (a (T, H, W, 3) array), .npz (key "frames" plus
optional "fps_num"/"fps_den"), and anything OpenCV can decode. Frames are
normalized to uint8 RGB.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DecodeError

DEFAULT_NATIVE_FPS = Fraction(30)


@dataclass
class RawVideo:
    frames: np.ndarray  # (T, H, W, 3) uint8
    fps: Fraction
    source: str

    def __post_init__(self):
        self.fps = Fraction(self.fps)
        if self.fps <= 0:
            raise DecodeError(f"{self.source}: fps must be positive")
        self.frames = _as_uint8_frames(self.frames, self.source)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]


def _as_uint8_frames(frames, source) -> np.ndarray:
    arr = np.asarray(frames)
    if arr.ndim != 4 or arr.shape[3] != 3 or arr.shape[0] < 1:
        raise DecodeError(f"{source}: expected (T, H, W, 3) frames, got shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.floating):
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    else:
        arr = np.clip(arr, 0, 255).astype(np.uint8)
    return arr


def load_raw_video(path, native_fps: Fraction | None = None) -> RawVideo:
    path = Path(path)
    if not path.is_file():
        raise DecodeError(f"video file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".npy":
        try:
            frames = np.load(path)
        except ValueError as exc:
            raise DecodeError(f"{path}: {exc}") from exc
        return RawVideo(frames, native_fps or DEFAULT_NATIVE_FPS, str(path))
    if suffix == ".npz":
        try:
            bundle = np.load(path)
            frames = bundle["frames"]
        except (ValueError, KeyError) as exc:
            raise DecodeError(f"{path}: {exc}") from exc
        fps = native_fps
        if fps is None and "fps_num" in bundle and "fps_den" in bundle:
            fps = Fraction(int(bundle["fps_num"]), int(bundle["fps_den"]))
        return RawVideo(frames, fps or DEFAULT_NATIVE_FPS, str(path))
    return _load_with_opencv(path, native_fps)


def _load_with_opencv(path, native_fps) -> RawVideo:
    import cv2

    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"OpenCV cannot open {path}")
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    meta_fps = capture.get(cv2.CAP_PROP_FPS)
    capture.release()
    if not frames:
        raise DecodeError(f"{path}: no decodable frames")
    fps = native_fps
    if fps is None and meta_fps and meta_fps > 0:
        fps = Fraction(meta_fps).limit_denominator(1001)
    return RawVideo(np.stack(frames), fps or DEFAULT_NATIVE_FPS, str(path))


def resample_indices(frame_count: int, native_fps: Fraction, sample_fps: Fraction) -> list[int]:
    """Nearest-frame indices when resampling to sample_fps; no interpolation."""
    if sample_fps <= 0:
        raise ValueError("sample_fps must be positive")
    step = Fraction(native_fps) / Fraction(sample_fps)
    indices = []
    j = 0
    while True:
        idx = int(j * step + Fraction(1, 2))  # round half up, exact rational
        if idx >= frame_count:
            break
        indices.append(idx)
        j += 1
    return indices
