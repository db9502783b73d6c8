"""Contextualized frame-wise similarity representation.

Pipeline: pairwise cosine distances -> append the frame-index row ->
per-row rescale -> per-row softmax. Columns of the result are the
contextualized frame vectors the segmenter clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import FrameEmbeddingSequence
from .errors import ZeroNormFrame

SYMMETRY_TOL = 1e-9
DIAGONAL_TOL = 1e-7
RANGE_TOL = 1e-9
ROW_SUM_TOL = 1e-9


@dataclass(eq=False)
class DistanceMatrix:
    """Symmetric T x T matrix of pairwise cosine distances in [0, 2]."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"distance matrix must be square and nonempty, got {m.shape}")
        if np.abs(m - m.T).max() > SYMMETRY_TOL:
            raise ValueError("distance matrix is not symmetric")
        if np.abs(np.diagonal(m)).max() > DIAGONAL_TOL:
            raise ValueError("distance matrix diagonal is not zero")
        if m.min() < -RANGE_TOL or m.max() > 2.0 + RANGE_TOL:
            raise ValueError("distances outside [0, 2]")
        self.entries = m

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(eq=False)
class ContextualizedFrameMatrix:
    """(T+1) x T row-stochastic matrix; column j is the contextualized
    representation of frame j."""

    rows: np.ndarray
    source_frames: int

    def __post_init__(self):
        m = np.asarray(self.rows, dtype=np.float64)
        t = self.source_frames
        if m.shape != (t + 1, t):
            raise ValueError(f"expected shape ({t + 1}, {t}), got {m.shape}")
        if np.abs(m.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            raise ValueError("rows must sum to 1")
        # Entries are strictly positive; the upper bound is reached only in
        # the degenerate T=1 case where softmax of a singleton row is 1.
        if m.min() <= 0.0 or m.max() > 1.0:
            raise ValueError("entries must lie in (0, 1]")
        self.rows = m

    def frame_vectors(self) -> np.ndarray:
        """(T, T+1) array: row i is the vector to cluster for frame i."""
        return self.rows.T.copy()


def cosine_distance_matrix(seq: FrameEmbeddingSequence) -> DistanceMatrix:
    """Pairwise cosine distances 1 - cos(z_i, z_j) between frame vectors.

    Raises ZeroNormFrame if any frame embedding has zero norm (degenerate
    encoder output).
    """
    z = seq.data.astype(np.float64)
    norms = np.linalg.norm(z, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormFrame(int(zero[0]))
    unit = z / norms[:, None]
    d = 1.0 - unit @ unit.T
    # Kill float asymmetry and clamp rounding spill outside [0, 2].
    d = (d + d.T) / 2.0
    np.clip(d, 0.0, 2.0, out=d)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def contextualize(dist: DistanceMatrix, norm: str = "max") -> ContextualizedFrameMatrix:
    """Append the frame-index row, rescale each row, softmax each row.

    ``norm`` selects the per-row denominator: "max" (default) divides by
    the row's maximum absolute entry so the index row 1..T lands in (0, 1],
    commensurate with cosine distances; "sum" divides by the row sum.
    All-zero rows stay zero (0/0 := 0) and softmax to uniform.
    """
    t = dist.size
    index_row = np.arange(1, t + 1, dtype=np.float64)
    rows = np.vstack([dist.entries, index_row[None, :]])

    if norm == "max":
        denom = np.abs(rows).max(axis=1)
    elif norm == "sum":
        denom = rows.sum(axis=1)
    else:
        raise ValueError(f"unknown normalization {norm!r}")
    safe = np.where(denom == 0.0, 1.0, denom)
    rows = rows / safe[:, None]

    rows -= rows.max(axis=1, keepdims=True)
    np.exp(rows, out=rows)
    rows /= rows.sum(axis=1, keepdims=True)
    return ContextualizedFrameMatrix(rows=rows, source_frames=t)
