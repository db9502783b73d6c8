"""Backbone registry: frame encoders (per-image) and clip encoders
(spatiotemporal).

Checkpoints are configured by path and never bundled. Without one, torch
backbones are instantiated with seeded random weights so shapes and
determinism stay testable offline; real deployments must point
--checkpoint at fine-tuned weights.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ModelLoadError

FRAME_ENCODERS = ("pixel-stats", "vit-b-16")
CLIP_ENCODERS = ("clip-stats", "r2plus1d-18")

CLIP_FRAMES = 16
CLIP_SIDE = 112  # input resolution of the spatiotemporal backbone
VIT_SIDE = 224

_IMAGE_MEAN = (0.485, 0.456, 0.406)
_IMAGE_STD = (0.229, 0.224, 0.225)
_VIDEO_MEAN = (0.43216, 0.394666, 0.37645)
_VIDEO_STD = (0.22803, 0.22145, 0.216989)


# --- lightweight numpy encoder (no torch) -----------------------------------

def _pixel_stats_single(frame: np.ndarray) -> np.ndarray:
    """32-dim embedding: mean and std of luma over a 4x4 grid."""
    import cv2

    luma = (299 * frame[..., 0].astype(np.int64)
            + 587 * frame[..., 1].astype(np.int64)
            + 114 * frame[..., 2].astype(np.int64) + 500) // 1000
    resized = cv2.resize(luma.astype(np.float32), (64, 64), interpolation=cv2.INTER_AREA)
    blocks = resized.reshape(4, 16, 4, 16).transpose(0, 2, 1, 3).reshape(16, 256) / 255.0
    return np.concatenate([blocks.mean(axis=1), blocks.std(axis=1)]).astype(np.float32)


def _pixel_stats_frames(frames: np.ndarray) -> np.ndarray:
    return np.stack([_pixel_stats_single(f) for f in frames])


def _clip_stats(clip: np.ndarray) -> np.ndarray:
    return _pixel_stats_frames(clip).mean(axis=0).astype(np.float32)


# --- torch backbones ---------------------------------------------------------

def _load_checkpoint(model, checkpoint):
    import torch

    if checkpoint is None:
        return
    path = Path(checkpoint)
    if not path.is_file():
        raise ModelLoadError(f"checkpoint not found: {path}")
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
        if isinstance(state, dict) and "state_dict" in state:
            state = state["state_dict"]
        model.load_state_dict(state)
    except (RuntimeError, KeyError, ValueError, TypeError) as exc:
        raise ModelLoadError(f"cannot load checkpoint {path}: {exc}") from exc


def _build_vit(checkpoint):
    try:
        import torch
        import torchvision
    except ImportError as exc:  # pragma: no cover
        raise ModelLoadError(f"torch/torchvision unavailable: {exc}") from exc
    torch.manual_seed(0)
    model = torchvision.models.vit_b_16(weights=None)
    _load_checkpoint(model, checkpoint)
    model.heads = torch.nn.Identity()  # expose the final [CLS] state
    model.eval()
    return model


def _build_r2plus1d(checkpoint):
    try:
        import torch
        import torchvision
    except ImportError as exc:  # pragma: no cover
        raise ModelLoadError(f"torch/torchvision unavailable: {exc}") from exc
    torch.manual_seed(0)
    model = torchvision.models.video.r2plus1d_18(weights=None)
    _load_checkpoint(model, checkpoint)
    model.fc = torch.nn.Identity()  # globally pooled 512-d representation
    model.eval()
    return model


def _normalize(tensor, mean, std):
    import torch

    mean = torch.tensor(mean).view(1, 3, 1, 1)
    std = torch.tensor(std).view(1, 3, 1, 1)
    return (tensor - mean) / std


def _vit_encode(model, frames: np.ndarray) -> np.ndarray:
    import torch

    out = []
    with torch.no_grad():
        for start in range(0, len(frames), 8):
            chunk = frames[start : start + 8].astype(np.float32) / 255.0
            t = torch.from_numpy(chunk).permute(0, 3, 1, 2)
            t = torch.nn.functional.interpolate(
                t, size=(VIT_SIDE, VIT_SIDE), mode="bilinear", align_corners=False
            )
            out.append(model(_normalize(t, _IMAGE_MEAN, _IMAGE_STD)).numpy())
    return np.concatenate(out).astype(np.float32)


def _r2plus1d_encode(model, clip: np.ndarray) -> np.ndarray:
    import torch

    t = torch.from_numpy(clip.astype(np.float32) / 255.0).permute(0, 3, 1, 2)
    t = torch.nn.functional.interpolate(
        t, size=(CLIP_SIDE, CLIP_SIDE), mode="bilinear", align_corners=False
    )
    t = _normalize(t, _VIDEO_MEAN, _VIDEO_STD)
    t = t.permute(1, 0, 2, 3).unsqueeze(0)  # (1, C, T, H, W)
    with torch.no_grad():
        return model(t).numpy()[0].astype(np.float32)


# --- registry ----------------------------------------------------------------

def load_frame_encoder(name: str, checkpoint=None):
    """Returns encode(frames: (T, H, W, 3) uint8) -> (T, d) float32."""
    if name == "pixel-stats":
        if checkpoint is not None:
            raise ModelLoadError("pixel-stats takes no checkpoint")
        return _pixel_stats_frames
    if name == "vit-b-16":
        model = _build_vit(checkpoint)
        return lambda frames: _vit_encode(model, frames)
    raise ModelLoadError(f"unknown frame encoder {name!r}; choose from {FRAME_ENCODERS}")


def load_clip_encoder(name: str, checkpoint=None):
    """Returns encode(clip: (16, H, W, 3) uint8) -> (d,) float32."""
    if name == "clip-stats":
        if checkpoint is not None:
            raise ModelLoadError("clip-stats takes no checkpoint")
        return _clip_stats
    if name == "r2plus1d-18":
        model = _build_r2plus1d(checkpoint)
        return lambda clip: _r2plus1d_encode(model, clip)
    raise ModelLoadError(f"unknown clip encoder {name!r}; choose from {CLIP_ENCODERS}")
