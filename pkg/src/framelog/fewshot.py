"""Few-shot linear classification over frozen clip embeddings.

The head is a d x m weight matrix trained from zero by full-batch gradient
descent on mean cross-entropy; prediction is softmax(W^T z). Clip sampling
and per-segment aggregation live here too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, LengthMismatch, UnknownLabel
from .segmentation import EventSegment

CLIP_LENGTH = 16
DEFAULT_LEARNING_RATE = 0.01
DEFAULT_EPOCHS = 10
DIST_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LabelDistribution:
    """Discrete probability distribution over activity labels."""

    labels: tuple[str, ...]
    probabilities: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, LabelDistribution):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.probabilities, other.probabilities)

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "labels", tuple(self.labels))
        if probs.ndim != 1 or probs.shape[0] != len(self.labels):
            raise ValueError("one probability per label required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in distribution")
        if probs.min() < 0.0:
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > DIST_SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")

    def ranked_labels(self) -> list[str]:
        """Labels from most to least probable; ties broken by ascending
        label order so results are deterministic."""
        order = sorted(range(len(self.labels)), key=lambda i: (-self.probabilities[i], self.labels[i]))
        return [self.labels[i] for i in order]

    def argmax_label(self) -> str:
        return self.ranked_labels()[0]

    def probability_of(self, label: str) -> float:
        return float(self.probabilities[self.labels.index(label)])


@dataclass(frozen=True)
class ClipWindow:
    """Sixteen frame offsets into a segment; shorter segments loop."""

    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(self.indices) != CLIP_LENGTH:
            raise ValueError(f"a clip window has exactly {CLIP_LENGTH} indices")
        if any(i < 0 for i in self.indices):
            raise ValueError("negative frame offset")


@dataclass(eq=False)
class LinearHead:
    """Weights of the few-shot classifier; column order matches labels."""

    weights: np.ndarray  # (d, m)
    labels: tuple[str, ...]

    def __post_init__(self):
        self.labels = tuple(self.labels)
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("weights must be a (d, m) matrix")
        if len(self.labels) != w.shape[1]:
            raise DimensionMismatch("label count must match weight columns")
        if len(self.labels) < 2:
            raise ValueError("a head needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        self.weights = w

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def m(self) -> int:
        return self.weights.shape[1]


def sample_clips(segment: EventSegment, mode: str, count: int, seed: int = 0) -> list[ClipWindow]:
    """Clip windows for one segment, as frame offsets within the segment.

    non_overlapping: up to `count` disjoint windows; contiguous from the
    left, spread evenly once the segment is longer than count*16 frames.
    overlapping: `count` windows drawn uniformly with replacement from all
    length-16 windows. Segments shorter than 16 frames loop cyclically to
    fill a single window.
    """
    if count < 1:
        raise ValueError("count must be positive")
    n = segment.length
    if n < CLIP_LENGTH:
        looped = ClipWindow(tuple(i % n for i in range(CLIP_LENGTH)))
        return [looped] * count if mode == "overlapping" else [looped]
    if mode == "non_overlapping":
        windows = min(count, n // CLIP_LENGTH)
        if windows == 1:
            starts = [0]
        else:
            span = n - CLIP_LENGTH
            starts = [(i * span) // (windows - 1) for i in range(windows)]
        return [ClipWindow(tuple(range(s, s + CLIP_LENGTH))) for s in starts]
    if mode == "overlapping":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        starts = rng.integers(0, n - CLIP_LENGTH + 1, size=count)
        return [ClipWindow(tuple(range(int(s), int(s) + CLIP_LENGTH))) for s in starts]
    raise ValueError(f"unknown sampling mode {mode!r}")


def pool_clip_embedding(frame_data: np.ndarray, segment: EventSegment, window: ClipWindow) -> np.ndarray:
    """Clip embedding derived from frame embeddings: the mean of the
    window's frame vectors. Substitutes for a spatiotemporal encoder when
    only frame features are available."""
    rows = [segment.start_frame + i for i in window.indices]
    return frame_data[rows].astype(np.float64).mean(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(weights: np.ndarray, z: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy of softmax(z @ weights) against integer targets."""
    logits = z @ weights
    logits = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    picked = logits[np.arange(len(targets)), targets]
    return float((log_norm - picked).mean())


def cross_entropy_gradient(weights: np.ndarray, z: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Analytic gradient of cross_entropy_loss w.r.t. the weights."""
    n, m = z.shape[0], weights.shape[1]
    probs = softmax(z @ weights)
    probs[np.arange(n), targets] -= 1.0
    return z.T @ probs / n


def train_head(
    clips,
    labels,
    lr: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> tuple[LinearHead, list[float]]:
    """Full-batch gradient descent from zero weights on (embedding, label)
    pairs. Returns the trained head and the loss trace, where entry 0 is
    the loss of the untouched zero head and entry e the loss after epoch e.

    The seed is accepted for interface stability; full-batch descent is
    deterministic and does not consume it.
    """
    labels = tuple(labels)
    if len(labels) < 2:
        raise ValueError("need at least two labels")
    clips = list(clips)
    if not clips:
        raise EmptyInput("no training clips")
    index = {label: i for i, label in enumerate(labels)}
    vectors = []
    targets = []
    for z, label in clips:
        if label not in index:
            raise UnknownLabel(f"label {label!r} not in the label list")
        vectors.append(np.asarray(z, dtype=np.float64))
        targets.append(index[label])
    dims = {v.shape for v in vectors}
    if len(dims) != 1 or vectors[0].ndim != 1:
        raise DimensionMismatch(f"inconsistent clip embedding shapes: {dims}")
    z = np.stack(vectors)
    y = np.array(targets)
    if lr <= 0 or epochs < 0:
        raise ValueError("lr must be positive and epochs nonnegative")

    weights = np.zeros((z.shape[1], len(labels)))
    losses = [cross_entropy_loss(weights, z, y)]
    for _ in range(epochs):
        weights = weights - lr * cross_entropy_gradient(weights, z, y)
        losses.append(cross_entropy_loss(weights, z, y))
    return LinearHead(weights=weights, labels=labels), losses


def predict_clip(head: LinearHead, z) -> LabelDistribution:
    """softmax(W^T z) with max-logit subtraction for stability."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (head.d,):
        raise DimensionMismatch(f"embedding shape {z.shape} != ({head.d},)")
    return LabelDistribution(labels=head.labels, probabilities=softmax(z @ head.weights))


def aggregate_segment(clip_distributions, method: str = "mean") -> LabelDistribution:
    """Combine per-clip distributions into one per-segment distribution.

    "mean" (default) averages the probability vectors, "vote" normalizes
    argmax counts, "max" takes the entrywise maximum; all renormalize to
    kill rounding drift.
    """
    dists = list(clip_distributions)
    if not dists:
        raise EmptyInput("no clip distributions to aggregate")
    labels = dists[0].labels
    if any(d.labels != labels for d in dists):
        raise DimensionMismatch("distributions disagree on their label list")
    stacked = np.stack([d.probabilities for d in dists])
    if method == "mean":
        combined = stacked.mean(axis=0)
    elif method == "vote":
        counts = np.zeros(len(labels))
        for d in dists:
            counts[labels.index(d.argmax_label())] += 1.0
        combined = counts
    elif method == "max":
        combined = stacked.max(axis=0)
    else:
        raise ValueError(f"unknown aggregation method {method!r}")
    return LabelDistribution(labels=labels, probabilities=combined / combined.sum())


def top_k_accuracy(predictions, truths, k: int) -> float:
    """Fraction of items whose true label ranks among the k most probable."""
    predictions = list(predictions)
    truths = list(truths)
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if not predictions:
        raise EmptyInput("nothing to score")
    if k < 1:
        raise ValueError("k must be positive")
    hits = sum(1 for dist, truth in zip(predictions, truths) if truth in dist.ranked_labels()[:k])
    return hits / len(predictions)


def head_to_json_bytes(head: LinearHead) -> bytes:
    doc = {
        "d": head.d,
        "labels": list(head.labels),
        "weights": [float(w) for w in head.weights.reshape(-1)],
        "label_order_note": "weights are row-major (d rows, m columns); column j scores labels[j]",
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def save_head(head: LinearHead, path) -> None:
    with open(path, "wb") as fh:
        fh.write(head_to_json_bytes(head))


def load_head(path) -> LinearHead:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    labels = tuple(doc["labels"])
    weights = np.array(doc["weights"], dtype=np.float64).reshape(doc["d"], len(labels))
    return LinearHead(weights=weights, labels=labels)


def save_labels_file(labels: dict[tuple[str, int, int], str], path) -> None:
    """Labels sidecar: {"video_id:start:end": label} with segment keys."""
    doc = {f"{vid}:{start}:{end}": label for (vid, start, end), label in sorted(labels.items())}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_labels_file(path) -> dict[tuple[str, int, int], str]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    out = {}
    for key, label in doc.items():
        vid, start, end = key.rsplit(":", 2)
        out[(vid, int(start), int(end))] = str(label)
    return out
