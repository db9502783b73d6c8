"""Evaluation metrics: frame-wise accuracy under optimal cluster-to-label
assignment, and silhouette scores for cluster-count selection."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import LengthMismatch, SingleCluster
from .segmentation import ClusterAssignment, EventSegment
from .synthetic import GroundTruth


def _frames_from_segments(segments) -> list:
    segs = sorted(segments, key=lambda s: s.start_frame)
    if not segs or segs[0].start_frame != 0:
        raise ValueError("segments must start at frame 0")
    frames = []
    for prev, cur in zip(segs, segs[1:]):
        if prev.end_frame != cur.start_frame:
            raise ValueError("segments must partition the frame range")
    for seg in segs:
        frames.extend([seg.cluster_id] * seg.length)
    return frames


def frame_accuracy(predicted, truth: GroundTruth, mapping: str = "one_to_one") -> float:
    """Fraction of frames explained by the best mapping from predicted
    cluster ids to ground-truth labels.

    "one_to_one" (default) solves the optimal assignment on the overlap
    matrix (zero-padded square); "majority" lets several predicted
    clusters map onto one label.
    """
    pred = _frames_from_segments(predicted)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predicted frames vs {len(truth)} truth frames")
    pred_ids = sorted(set(pred))
    true_ids = sorted(set(truth.labels), key=str)
    overlap = np.zeros((len(pred_ids), len(true_ids)))
    p_index = {c: i for i, c in enumerate(pred_ids)}
    t_index = {c: i for i, c in enumerate(true_ids)}
    for p, t in zip(pred, truth.labels):
        overlap[p_index[p], t_index[t]] += 1

    if mapping == "majority":
        matched = overlap.max(axis=1).sum()
    elif mapping == "one_to_one":
        side = max(overlap.shape)
        padded = np.zeros((side, side))
        padded[: overlap.shape[0], : overlap.shape[1]] = overlap
        rows, cols = linear_sum_assignment(padded, maximize=True)
        matched = padded[rows, cols].sum()
    else:
        raise ValueError(f"unknown mapping {mapping!r}")
    return float(matched) / len(pred)


def silhouette_score(points, assignment: ClusterAssignment) -> float:
    """Mean silhouette s(i) = (b - a) / max(a, b) with Euclidean distances;
    singleton clusters contribute 0."""
    points = np.asarray(points, dtype=np.float64)
    labels = assignment.labels
    k = assignment.k
    if k < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    counts = np.bincount(labels, minlength=k + 1)[1:]
    if (counts == 0).any():
        raise ValueError("every cluster must be nonempty")

    sq = (points * points).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    dists = np.sqrt(d2)
    np.fill_diagonal(dists, 0.0)
    n = len(labels)
    scores = np.zeros(n)
    masks = {c: labels == c for c in range(1, k + 1)}
    for i in range(n):
        own = labels[i]
        if counts[own - 1] == 1:
            scores[i] = 0.0
            continue
        a = dists[i][masks[own]].sum() / (counts[own - 1] - 1)
        b = min(dists[i][masks[c]].mean() for c in range(1, k + 1) if c != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())
