"""Composable pipeline stages behind the CLI.

Each stage computes everything first and only then writes, via
temp-and-rename, so a failing invocation leaves no partial artifacts.
Results are deterministic in (config, seed): videos are processed in
sorted-id order with per-video derived seeds, so --jobs never changes
any output byte.
"""

from __future__ import annotations

import json
import os
import tempfile
import zlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .embeddings import FrameEmbeddingSequence, as_fps, load_embeddings, write_embeddings
from .errors import FramelogError, InvalidK
from .eventlog import (
    EventLog,
    UncertainEventLog,
    dfg_to_dot,
    parse_iso,
    serialize_log,
    to_certain_trace,
    to_uncertain_trace,
    truncate_log_topk,
)
from .eventlog import DirectlyFollowsGraph, END_NODE, START_NODE
from .fewshot import (
    aggregate_segment,
    head_to_json_bytes,
    load_head,
    load_labels_file,
    pool_clip_embedding,
    predict_clip,
    sample_clips,
    train_head,
)
from .metrics import frame_accuracy, silhouette_score
from .segmentation import EventSegment, kmeans_cluster, segment_video, segments_from_json, segments_to_json
from .similarity import contextualize, cosine_distance_matrix
from .synthetic import GroundTruth, SegmentScript, sample_separated_centers, synth_sequence

SILHOUETTE_KS = (3, 5, 7)


class InputError(FramelogError):
    """Missing or unparseable input; maps to exit status 2."""


class ConfigError(FramelogError):
    """Contradictory configuration (e.g. k > T); maps to exit status 3."""


def derive_seed(*parts) -> int:
    """Stable sub-seed from mixed int/str parts."""
    ints = [zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1)[0])


def activity_name(cluster_id: int) -> str:
    return f"act{cluster_id:02d}"


# --- loading ----------------------------------------------------------------

def load_sequences(paths) -> dict[str, FrameEmbeddingSequence]:
    if not paths:
        raise InputError("no embedding files given")
    sequences: dict[str, FrameEmbeddingSequence] = {}
    for path in paths:
        if not Path(path).is_file():
            raise InputError(f"embeddings file not found: {path}")
        try:
            seq = load_embeddings(path)
        except FramelogError as exc:
            raise InputError(f"cannot parse {path}: {exc}") from exc
        if seq.video_id in sequences:
            raise InputError(f"duplicate video id {seq.video_id!r}")
        sequences[seq.video_id] = seq
    return sequences


def split_train_videos(cfg: PipelineConfig, sequences):
    """Videos named by the labels sidecar are training-only; the rest are
    process videos to segment, classify, and log."""
    if not cfg.labels:
        return dict(sequences), {}
    labels = read_labels(cfg)
    train_ids = {vid for vid, _, _ in labels}
    process = {v: s for v, s in sequences.items() if v not in train_ids}
    train = {v: s for v, s in sequences.items() if v in train_ids}
    return process, train


def read_labels(cfg: PipelineConfig) -> dict[tuple[str, int, int], str]:
    if not Path(cfg.labels).is_file():
        raise InputError(f"labels file not found: {cfg.labels}")
    try:
        return load_labels_file(cfg.labels)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse labels file: {exc}") from exc


def read_truth(cfg: PipelineConfig) -> dict[str, GroundTruth]:
    if not Path(cfg.truth).is_file():
        raise InputError(f"ground truth file not found: {cfg.truth}")
    try:
        with open(cfg.truth, encoding="utf-8") as fh:
            doc = json.load(fh)
        return {vid: GroundTruth(labels=tuple(labels)) for vid, labels in doc.items()}
    except (ValueError, AttributeError) as exc:
        raise InputError(f"cannot parse ground truth file: {exc}") from exc


def video_timing(cfg: PipelineConfig, seq: FrameEmbeddingSequence):
    fps = as_fps(cfg.fps) if cfg.fps else seq.fps
    base = parse_iso(cfg.base_time) if cfg.base_time else seq.base_time
    return fps, base


# --- stages -----------------------------------------------------------------

def stage_segment(cfg: PipelineConfig, sequences) -> dict[str, list[EventSegment]]:
    order = sorted(sequences)

    def one(idx_vid):
        idx, vid = idx_vid
        seq = sequences[vid]
        try:
            return vid, segment_video(
                seq, k=cfg.k, seed=derive_seed(cfg.seed, "segment", idx), restarts=cfg.restarts
            )
        except InvalidK as exc:
            raise ConfigError(f"video {vid!r}: {exc}") from exc

    items = list(enumerate(order))
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = dict(pool.map(one, items))
    else:
        results = dict(map(one, items))
    return {vid: results[vid] for vid in order}


def stage_train(cfg: PipelineConfig, sequences):
    """Train the linear head on labeled segments of the training videos.
    Clip embeddings are mean-pooled frame vectors, the engine's stand-in
    for a dedicated clip encoder."""
    labels_map = read_labels(cfg)
    label_set = tuple(sorted(set(labels_map.values())))
    if len(label_set) < 2:
        raise ConfigError("need at least two distinct activity labels to train")
    clips = []
    for (vid, start, end), label in sorted(labels_map.items()):
        if vid not in sequences:
            raise InputError(f"labels reference video {vid!r} but no embeddings were given")
        seq = sequences[vid]
        if end > seq.frame_count:
            raise InputError(f"label segment [{start}, {end}) exceeds {vid!r} ({seq.frame_count} frames)")
        segment = EventSegment(start, end, 1)
        windows = sample_clips(
            segment,
            cfg.clip_mode.replace("-", "_"),
            cfg.clips_per_segment,
            seed=derive_seed(cfg.seed, "train", vid, start, end),
        )
        for window in windows:
            clips.append((pool_clip_embedding(seq.data, segment, window), label))
    head, losses = train_head(clips, label_set, lr=cfg.lr, epochs=cfg.epochs, seed=cfg.seed)
    return head, losses


def stage_classify(cfg: PipelineConfig, sequences, segments_by_video, head):
    order = sorted(segments_by_video)

    def one(idx_vid):
        idx, vid = idx_vid
        if vid not in sequences:
            raise InputError(f"segments reference video {vid!r} but no embeddings were given")
        seq = sequences[vid]
        labeled = []
        for seg_idx, seg in enumerate(segments_by_video[vid]):
            windows = sample_clips(
                seg,
                cfg.clip_mode.replace("-", "_"),
                cfg.clips_per_segment,
                seed=derive_seed(cfg.seed, "classify", idx, seg_idx),
            )
            dists = [
                predict_clip(head, pool_clip_embedding(seq.data, seg, window)) for window in windows
            ]
            labeled.append(
                EventSegment(
                    seg.start_frame,
                    seg.end_frame,
                    seg.cluster_id,
                    centroid=seg.centroid,
                    label_distribution=aggregate_segment(dists),
                )
            )
        return vid, labeled

    items = list(enumerate(order))
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = dict(pool.map(one, items))
    else:
        results = dict(map(one, items))
    return {vid: results[vid] for vid in order}


def stage_logs(cfg: PipelineConfig, sequences, labeled_by_video):
    certain_traces = []
    uncertain_traces = []
    for vid in sorted(labeled_by_video):
        fps, base = video_timing(cfg, sequences[vid])
        segs = labeled_by_video[vid]
        certain_traces.append(to_certain_trace(segs, fps, base, case_id=vid))
        uncertain_traces.append(to_uncertain_trace(segs, fps, base, case_id=vid))
    certain = EventLog(tuple(certain_traces))
    uncertain = truncate_log_topk(UncertainEventLog(tuple(uncertain_traces)), cfg.top_k)
    return certain, uncertain


def dfg_from_labeled(labeled_by_video) -> DirectlyFollowsGraph:
    """DFG straight from labeled segments; needs order, not timestamps."""
    edges: dict[tuple[str, str], int] = {}
    activities = set()
    for vid in sorted(labeled_by_video):
        acts = []
        for seg in sorted(labeled_by_video[vid], key=lambda s: s.start_frame):
            if seg.label_distribution is None:
                raise InputError(f"segment in {vid!r} has no label distribution; run classify first")
            acts.append(seg.label_distribution.argmax_label())
        activities.update(acts)
        path = [START_NODE] + acts + [END_NODE]
        for a, b in zip(path, path[1:]):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    return DirectlyFollowsGraph(nodes=tuple(sorted(activities)) + (START_NODE, END_NODE), edges=edges)


def stage_eval(cfg: PipelineConfig, sequences, labeled_by_video, truth_by_video):
    accuracies = []
    top1_preds, top1_truths = [], []
    for vid in sorted(labeled_by_video):
        if vid not in truth_by_video:
            raise InputError(f"no ground truth for video {vid!r}")
        truth = truth_by_video[vid]
        segs = labeled_by_video[vid]
        accuracies.append(frame_accuracy(segs, truth))
        for seg in segs:
            window = truth.labels[seg.start_frame : seg.end_frame]
            majority = sorted(Counter(window).items(), key=lambda kv: (-kv[1], str(kv[0])))[0][0]
            if seg.label_distribution is not None:
                top1_preds.append(seg.label_distribution)
                top1_truths.append(majority)

    points_by_video = {
        vid: contextualize(cosine_distance_matrix(sequences[vid])).frame_vectors()
        for vid in sorted(labeled_by_video)
    }
    silhouette_by_k: dict[str, float] = {}
    for k in sorted(set(SILHOUETTE_KS) | {cfg.k}):
        scores = []
        for idx, vid in enumerate(sorted(labeled_by_video)):
            points = points_by_video[vid]
            if not (2 <= k <= points.shape[0]):
                continue
            assignment = kmeans_cluster(
                points, k, seed=derive_seed(cfg.seed, "silhouette", idx, k), restarts=cfg.restarts
            )
            scores.append(silhouette_score(points, assignment))
        if scores:
            silhouette_by_k[str(k)] = float(np.mean(scores))

    report = {
        "frame_accuracy": float(np.mean(accuracies)) if accuracies else None,
        "silhouette_by_k": silhouette_by_k,
        "top1": None,
        "top3": None,
        "seeds": {"seed": cfg.seed},
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
    }
    if top1_preds:
        from .fewshot import top_k_accuracy

        report["top1"] = top_k_accuracy(top1_preds, top1_truths, 1)
        report["top3"] = top_k_accuracy(top1_preds, top1_truths, 3)
    return report


def stage_synth(cfg: PipelineConfig):
    """Deterministic synthetic fixture: `videos` process videos plus one
    labeled training video, all sharing activity centers."""
    rng = np.random.default_rng(derive_seed(cfg.seed, "centers"))
    centers = sample_separated_centers(cfg.activities, cfg.dim, rng)
    fps = as_fps(cfg.fps) if cfg.fps else Fraction(10)
    base = parse_iso(cfg.base_time) if cfg.base_time else 0.0

    artifacts: dict[str, bytes] = {}
    truth_doc: dict[str, list[str]] = {}

    def build(video_id, order, seed):
        sections = tuple((int(c), cfg.frames_per_segment) for c in order)
        script = SegmentScript(
            sections=sections, dim=cfg.dim, noise=cfg.noise, seed=seed,
            video_id=video_id, fps=fps, base_time=base, centers=centers,
        )
        seq, truth = synth_sequence(script)
        artifacts[f"{video_id}.semb"] = write_embeddings(seq)
        truth_doc[video_id] = [activity_name(c) for c in truth.labels]
        return sections

    for i in range(cfg.videos):
        vid = f"video_{i:02d}"
        order = np.random.default_rng(derive_seed(cfg.seed, "order", i)).permutation(
            np.arange(1, cfg.activities + 1)
        )
        build(vid, order, derive_seed(cfg.seed, "noise", i))

    train_id = "train_00"
    sections = build(train_id, range(1, cfg.activities + 1), derive_seed(cfg.seed, "noise", "train"))
    labels = {}
    start = 0
    for cluster_id, length in sections:
        labels[(train_id, start, start + length)] = activity_name(cluster_id)
        start += length

    artifacts["ground_truth.json"] = (
        json.dumps(truth_doc, indent=2, sort_keys=True) + "\n"
    ).encode("utf-8")
    labels_doc = {f"{vid}:{s}:{e}": label for (vid, s, e), label in sorted(labels.items())}
    artifacts["labels.json"] = (json.dumps(labels_doc, indent=2) + "\n").encode("utf-8")
    return artifacts


# --- artifact IO ------------------------------------------------------------

def write_artifacts(out_dir, artifacts: dict[str, bytes]) -> None:
    """Write every artifact via temp-and-rename after all computation."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in sorted(artifacts.items()):
        fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, out / name)
        except BaseException:
            os.unlink(tmp)
            raise


def read_artifact(out_dir, name: str) -> bytes:
    path = Path(out_dir) / name
    if not path.is_file():
        raise InputError(f"expected artifact {path}; run the earlier stage first")
    return path.read_bytes()


def certain_log_name(cfg: PipelineConfig) -> str:
    return f"log_certain.{cfg.format}"


def head_output_path(cfg: PipelineConfig) -> Path:
    return Path(cfg.head) if cfg.head else Path(cfg.out) / "head.json"


def resolve_head(cfg: PipelineConfig, sequences):
    """Train when a labels sidecar is given, else load an existing head."""
    if cfg.labels:
        head, _ = stage_train(cfg, sequences)
        return head, True
    path = cfg.head or Path(cfg.out) / "head.json"
    if not Path(path).is_file():
        raise ConfigError("classification needs --labels (to train) or --head (to load)")
    return load_head(path), False


def run_all(cfg: PipelineConfig) -> dict[str, bytes]:
    """The monolithic `run`: segment -> classify -> log (+ dfg, metrics)."""
    sequences = load_sequences(cfg.embeddings)
    process, train = split_train_videos(cfg, sequences)
    if not process:
        raise ConfigError("all given videos are training videos; nothing to process")

    head, trained = resolve_head(cfg, train if train else sequences)
    segments = stage_segment(cfg, process)
    labeled = stage_classify(cfg, process, segments, head)
    certain, uncertain = stage_logs(cfg, process, labeled)

    artifacts: dict[str, bytes] = {}
    artifacts["segments.json"] = segments_to_json(segments).encode("utf-8")
    artifacts["labeled_segments.json"] = segments_to_json(labeled).encode("utf-8")
    artifacts[certain_log_name(cfg)] = serialize_log(certain, cfg.format)
    artifacts["log_uncertain.ujson"] = serialize_log(uncertain, "ujson")
    artifacts["dfg.dot"] = dfg_to_dot(dfg_from_labeled(labeled)).encode("utf-8")
    if trained:
        artifacts["head.json"] = head_to_json_bytes(head)
    if cfg.truth:
        truth = read_truth(cfg)
        report = stage_eval(cfg, process, labeled, truth)
        artifacts["metrics.json"] = (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")
    return artifacts
