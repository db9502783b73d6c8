"""Consistent stochastic clip augmentation.

One parameter set (and one sampled noise field) is applied identically to
every frame of a clip, so temporal structure survives augmentation. Order:
rotation, brightness, additive Gaussian noise, grayscale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROTATIONS = (0, 90, 180, 270)
BRIGHTNESS_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class AugmentationParams:
    rotation: int = 0
    brightness: float = 1.0
    noise_sigma: float = 0.0  # in 8-bit pixel units
    grayscale: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.rotation not in ROTATIONS:
            raise ValueError(f"rotation must be one of {ROTATIONS}")
        if not BRIGHTNESS_RANGE[0] <= self.brightness <= BRIGHTNESS_RANGE[1]:
            raise ValueError(f"brightness must lie in {BRIGHTNESS_RANGE}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def rotate_clip(clip: np.ndarray, degrees: int) -> np.ndarray:
    if degrees == 0:
        return clip.copy()
    return np.ascontiguousarray(np.rot90(clip, k=degrees // 90, axes=(1, 2)))


def scale_brightness(clip: np.ndarray, factor: float) -> np.ndarray:
    if factor == 1.0:
        return clip.copy()
    return np.clip(np.rint(clip.astype(np.float64) * factor), 0, 255).astype(np.uint8)


def add_noise(clip: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0.0:
        return clip.copy()
    # one field for the whole clip: every frame receives the same noise
    field = rng.normal(0.0, sigma, size=clip.shape[1:])
    noisy = clip.astype(np.float64) + field[None, :, :, :]
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def to_grayscale(clip: np.ndarray) -> np.ndarray:
    """Integer BT.601 luma replicated across the channels; exact fixpoint
    on already-gray clips."""
    c = clip.astype(np.int64)
    luma = (299 * c[..., 0] + 587 * c[..., 1] + 114 * c[..., 2] + 500) // 1000
    return np.repeat(luma[..., None], 3, axis=-1).astype(np.uint8)


def augment_clip(clip: np.ndarray, params: AugmentationParams) -> np.ndarray:
    """Apply the same transform to every frame; deterministic per seed."""
    clip = np.asarray(clip)
    if clip.ndim != 4 or clip.shape[3] != 3:
        raise ValueError(f"clip must be (T, H, W, 3), got {clip.shape}")
    if clip.dtype != np.uint8:
        raise ValueError("clip must be uint8")
    rng = np.random.default_rng(params.seed)
    out = rotate_clip(clip, params.rotation)
    out = scale_brightness(out, params.brightness)
    out = add_noise(out, params.noise_sigma, rng)
    if params.grayscale:
        out = to_grayscale(out)
    return out
