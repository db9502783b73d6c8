"""Ground-truthed synthetic embedding streams for tests and experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .embeddings import FrameEmbeddingSequence, as_fps
from .errors import CenterSeparationFailure

MIN_CENTER_COSINE_DISTANCE = 0.5
MAX_REJECTION_ATTEMPTS = 1000


@dataclass
class SegmentScript:
    """Recipe for one synthetic video: an ordered list of
    (cluster_id, length) sections plus noise and seeding."""

    sections: tuple[tuple[int, int], ...]
    dim: int
    noise: float = 0.0
    seed: int = 0
    video_id: str = "synthetic"
    fps: Fraction | int = 10
    base_time: float = 0.0
    centers: np.ndarray | None = None  # optional shared centers, unit rows

    def __post_init__(self):
        self.sections = tuple((int(c), int(l)) for c, l in self.sections)
        if not self.sections:
            raise ValueError("script needs at least one section")
        if any(l < 1 for _, l in self.sections):
            raise ValueError("section lengths must be >= 1")
        ids = {c for c, _ in self.sections}
        if ids != set(range(1, max(ids) + 1)):
            raise ValueError("cluster ids must be contiguous from 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        self.fps = as_fps(self.fps)

    @property
    def n_clusters(self) -> int:
        return max(c for c, _ in self.sections)

    @property
    def total_frames(self) -> int:
        return sum(l for _, l in self.sections)


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame labels aligned with the generated sequence."""

    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return len(self.labels)


def sample_separated_centers(
    n: int,
    dim: int,
    rng: np.random.Generator,
    min_cosine_distance: float = MIN_CENTER_COSINE_DISTANCE,
) -> np.ndarray:
    """Unit-norm centers with pairwise cosine distance >= the bound,
    sampled by rejection."""
    centers = np.empty((n, dim))
    for i in range(n):
        for attempt in range(MAX_REJECTION_ATTEMPTS + 1):
            if attempt == MAX_REJECTION_ATTEMPTS:
                raise CenterSeparationFailure(
                    f"no center with pairwise cosine distance >= {min_cosine_distance} "
                    f"after {MAX_REJECTION_ATTEMPTS} attempts; raise d or lower the cluster count"
                )
            v = rng.standard_normal(dim)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v /= norm
            if i == 0 or (1.0 - centers[:i] @ v).min() >= min_cosine_distance:
                centers[i] = v
                break
    return centers


def synth_sequence(script: SegmentScript) -> tuple[FrameEmbeddingSequence, GroundTruth]:
    """Generate (sequence, ground truth) for a script, deterministically in
    its seed. Frames are their section's center plus isotropic Gaussian
    noise, renormalized to unit length."""
    rng = np.random.default_rng(script.seed)
    if script.centers is not None:
        centers = np.asarray(script.centers, dtype=np.float64)
        if centers.shape != (script.n_clusters, script.dim):
            raise ValueError(f"centers must have shape ({script.n_clusters}, {script.dim})")
    else:
        centers = sample_separated_centers(script.n_clusters, script.dim, rng)

    frames = np.empty((script.total_frames, script.dim))
    labels = []
    row = 0
    for cluster_id, length in script.sections:
        block = centers[cluster_id - 1] + rng.normal(0.0, script.noise, size=(length, script.dim))
        norms = np.linalg.norm(block, axis=1)
        norms[norms == 0.0] = 1.0
        frames[row : row + length] = block / norms[:, None]
        labels.extend([cluster_id] * length)
        row += length

    seq = FrameEmbeddingSequence(
        video_id=script.video_id,
        fps=script.fps,
        base_time=script.base_time,
        data=frames.astype(np.float32),
    )
    return seq, GroundTruth(labels=tuple(labels))
