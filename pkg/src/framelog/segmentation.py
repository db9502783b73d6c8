"""Temporal segmentation: K-Means over contextualized frames, atomic event
extraction, and greedy merging of sub-threshold events."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .embeddings import FrameEmbeddingSequence
from .errors import InvalidK
from .similarity import contextualize, cosine_distance_matrix

MAX_LLOYD_ITERATIONS = 300
DEFAULT_RESTARTS = 10
DEFAULT_K = 7  # balanced cluster count for kitchen-scale footage
WCSS_REL_TOL = 1e-6


@dataclass(eq=False)
class ClusterAssignment:
    """Result of one K-Means clustering: 1-based labels per point, cluster
    centroids, and the within-cluster sum of squares they achieve."""

    k: int
    labels: np.ndarray  # (n,) ints in 1..k
    centroids: np.ndarray  # (k, dim)
    wcss: float
    points: np.ndarray  # (n, dim) the clustered vectors
    wcss_history: tuple[float, ...] = field(default=())

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.points = np.asarray(self.points, dtype=np.float64)
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.labels.min() < 1 or self.labels.max() > self.k:
            raise ValueError("cluster ids must lie in 1..k")
        recomputed = wcss_value(self.points, self.labels - 1, self.centroids)
        if not math.isclose(recomputed, self.wcss, rel_tol=WCSS_REL_TOL, abs_tol=1e-12):
            raise ValueError(f"stored wcss {self.wcss} != recomputed {recomputed}")

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]


@dataclass(eq=False)
class EventSegment:
    """Contiguous frame interval [start_frame, end_frame) with a cluster id,
    an optional centroid (needed only while merging), and an optional label
    distribution attached by classification."""

    start_frame: int
    end_frame: int
    cluster_id: int
    centroid: np.ndarray | None = None
    label_distribution: "LabelDistribution | None" = None

    def __post_init__(self):
        if self.start_frame < 0 or self.start_frame >= self.end_frame:
            raise ValueError(f"bad interval [{self.start_frame}, {self.end_frame})")
        if self.centroid is not None:
            self.centroid = np.asarray(self.centroid, dtype=np.float64)

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (
        (points * points).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    np.maximum(d, 0.0, out=d)
    return d


def wcss_value(points: np.ndarray, labels0: np.ndarray, centers: np.ndarray) -> float:
    diff = points - centers[labels0]
    return float((diff * diff).sum())


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all remaining points coincide with chosen centers
            idx = rng.integers(n)
        centers[j] = points[idx]
        np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1), out=d2)
    return centers


def _means_with_repair(points, labels0, k):
    """Cluster means; empty clusters steal the point farthest from its
    current centroid, which can only lower the objective."""
    n, dim = points.shape
    for _ in range(k):
        counts = np.bincount(labels0, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            break
        sums = np.zeros((k, dim))
        np.add.at(sums, labels0, points)
        centers = sums / np.maximum(counts, 1)[:, None]
        dist_own = ((points - centers[labels0]) ** 2).sum(axis=1)
        # never steal from a singleton cluster
        dist_own[counts[labels0] <= 1] = -np.inf
        labels0 = labels0.copy()
        labels0[int(np.argmax(dist_own))] = empties[0]
    counts = np.bincount(labels0, minlength=k)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels0, points)
    centers = sums / np.maximum(counts, 1)[:, None]
    return centers, labels0


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int):
    centers = _kmeans_pp_init(points, k, rng)
    labels0 = _sq_dists(points, centers).argmin(axis=1)
    history = []
    for _ in range(max_iter):
        centers, labels0 = _means_with_repair(points, labels0, k)
        value = wcss_value(points, labels0, centers)
        if history and value > history[-1] + 1e-9 * max(1.0, history[-1]):
            raise AssertionError("WCSS increased across a Lloyd iteration")
        history.append(value)
        new_labels = _sq_dists(points, centers).argmin(axis=1)
        if np.array_equal(new_labels, labels0):
            break
        labels0 = new_labels
    return labels0, centers, history[-1], tuple(history)


def kmeans_runs(
    points,
    k: int,
    seed: int,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = MAX_LLOYD_ITERATIONS,
) -> list[ClusterAssignment]:
    """All `restarts` independently seeded Lloyd runs, in restart order."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("points must be a nonempty (n, dim) matrix")
    if not np.isfinite(points).all():
        raise ValueError("points must be finite")
    n = points.shape[0]
    if k < 1 or k > n:
        raise InvalidK(f"k={k} outside 1..{n}")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    runs = []
    for child in np.random.SeedSequence(seed).spawn(restarts):
        labels0, centers, wcss, history = _lloyd(points, k, np.random.default_rng(child), max_iter)
        runs.append(
            ClusterAssignment(
                k=k,
                labels=labels0 + 1,
                centroids=centers,
                wcss=wcss,
                points=points,
                wcss_history=history,
            )
        )
    return runs


def kmeans_cluster(
    points,
    k: int,
    seed: int,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = MAX_LLOYD_ITERATIONS,
) -> ClusterAssignment:
    """Best-of-`restarts` K-Means; ties in WCSS go to the lowest restart
    index, so the outcome is independent of any execution schedule."""
    best = None
    for run in kmeans_runs(points, k, seed, restarts, max_iter):
        if best is None or run.wcss < best.wcss:
            best = run
    return best


def atomic_events(assignment: ClusterAssignment) -> list[EventSegment]:
    """Maximal runs of consecutive frames sharing a cluster id. Each
    event's centroid is the mean of its own frames' vectors."""
    labels = assignment.labels
    points = assignment.points
    events = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            events.append(
                EventSegment(
                    start_frame=start,
                    end_frame=i,
                    cluster_id=int(labels[start]),
                    centroid=points[start:i].mean(axis=0),
                )
            )
            start = i
    return events


def min_event_length(total_frames: int, lengths) -> Fraction:
    """Enforced minimum event length: total / floor(total / mean(lengths)),
    kept exact as a rational."""
    lengths = list(lengths)
    if not lengths or any(l < 1 for l in lengths):
        raise ValueError("lengths must be a nonempty list of positive integers")
    if sum(lengths) != total_frames:
        raise ValueError("lengths must sum to total_frames")
    l_avg = Fraction(sum(lengths), len(lengths))
    return Fraction(total_frames, math.floor(Fraction(total_frames) / l_avg))


def _absorb(short: EventSegment, absorber: EventSegment) -> EventSegment:
    total = short.length + absorber.length
    centroid = (short.centroid * short.length + absorber.centroid * absorber.length) / total
    return EventSegment(
        start_frame=min(short.start_frame, absorber.start_frame),
        end_frame=max(short.end_frame, absorber.end_frame),
        cluster_id=absorber.cluster_id,
        centroid=centroid,
    )


def _merge_three(prev: EventSegment, mid: EventSegment, nxt: EventSegment) -> EventSegment:
    total = prev.length + mid.length + nxt.length
    centroid = (
        prev.centroid * prev.length + mid.centroid * mid.length + nxt.centroid * nxt.length
    ) / total
    return EventSegment(
        start_frame=prev.start_frame,
        end_frame=nxt.end_frame,
        cluster_id=prev.cluster_id,
        centroid=centroid,
    )


def merge_events(events: list[EventSegment], l_min) -> list[EventSegment]:
    """Greedy merging of sub-threshold events, repeated in chronological
    passes until every event is at least l_min frames or one event remains.

    A boundary event merges into its sole neighbor. A flanked event whose
    neighbors share a cluster id triggers a three-way merge inheriting that
    id; otherwise it merges into the neighbor with the closer centroid,
    ties to the preceding one. Merged centroids are frame-count-weighted
    means and the absorbing neighbor's cluster id wins.
    """
    events = list(events)
    if not events:
        return events
    if any(e.centroid is None for e in events):
        raise ValueError("merge_events needs per-event centroids")
    for prev, cur in zip(events, events[1:]):
        if prev.end_frame != cur.start_frame:
            raise ValueError("events must be chronological and gap-free")
    l_min = Fraction(l_min)
    if l_min <= 0:
        raise ValueError("l_min must be positive")

    while len(events) > 1 and any(e.length < l_min for e in events):
        i = 0
        while i < len(events) and len(events) > 1:
            if events[i].length >= l_min:
                i += 1
                continue
            if i == 0:
                events[0:2] = [_absorb(events[0], events[1])]
                i = 1
            elif i == len(events) - 1:
                events[i - 1 : i + 1] = [_absorb(events[i], events[i - 1])]
                i += 1
            else:
                prev, cur, nxt = events[i - 1], events[i], events[i + 1]
                if prev.cluster_id == nxt.cluster_id:
                    # merged slot lands at i-1; resume at the element after it
                    events[i - 1 : i + 2] = [_merge_three(prev, cur, nxt)]
                else:
                    d_prev = float(np.linalg.norm(cur.centroid - prev.centroid))
                    d_next = float(np.linalg.norm(cur.centroid - nxt.centroid))
                    if d_prev <= d_next:
                        events[i - 1 : i + 1] = [_absorb(cur, prev)]
                    else:
                        events[i : i + 2] = [_absorb(cur, nxt)]
                        i += 1
    return events


def segment_video(
    seq: FrameEmbeddingSequence,
    k: int = DEFAULT_K,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    norm: str = "max",
    centroid_source: str = "event_mean",
) -> list[EventSegment]:
    """End-to-end temporal segmentation of one embedding sequence.

    ``centroid_source`` picks the per-event centroid used by the merge
    step: the event's own frame mean (default) or the K-Means centroid of
    its assigned cluster.
    """
    ctx = contextualize(cosine_distance_matrix(seq), norm=norm)
    assignment = kmeans_cluster(ctx.frame_vectors(), k, seed, restarts)
    events = atomic_events(assignment)
    if centroid_source == "cluster":
        for e in events:
            e.centroid = assignment.centroids[e.cluster_id - 1]
    elif centroid_source != "event_mean":
        raise ValueError(f"unknown centroid_source {centroid_source!r}")
    l_min = min_event_length(seq.frame_count, [e.length for e in events])
    return merge_events(events, l_min)


def segments_to_json(segments_by_video: dict[str, list[EventSegment]]) -> str:
    """Shared .segments.json wire format, sorted by video id then time."""
    rows = []
    for video_id in sorted(segments_by_video):
        for seg in segments_by_video[video_id]:
            row = {
                "video_id": video_id,
                "start_frame": seg.start_frame,
                "end_frame": seg.end_frame,
                "cluster_id": seg.cluster_id,
            }
            if seg.label_distribution is not None:
                dist = seg.label_distribution
                row["label"] = dist.argmax_label()
                row["distribution"] = {l: float(p) for l, p in zip(dist.labels, dist.probabilities)}
            rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def segments_from_json(text: str) -> dict[str, list[EventSegment]]:
    from .fewshot import LabelDistribution  # deferred: avoid import cycle

    out: dict[str, list[EventSegment]] = {}
    for row in json.loads(text):
        dist = None
        if "distribution" in row:
            labels = tuple(row["distribution"].keys())
            probs = np.array([row["distribution"][l] for l in labels], dtype=np.float64)
            dist = LabelDistribution(labels=labels, probabilities=probs)
        seg = EventSegment(
            start_frame=int(row["start_frame"]),
            end_frame=int(row["end_frame"]),
            cluster_id=int(row["cluster_id"]),
            label_distribution=dist,
        )
        out.setdefault(row["video_id"], []).append(seg)
    for segs in out.values():
        segs.sort(key=lambda s: s.start_frame)
    return out
