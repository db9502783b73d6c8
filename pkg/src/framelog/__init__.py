"""framelog: timestamped event logs from per-frame video embedding streams.

The engine consumes .semb embedding files, segments each video by K-Means
over a contextualized frame-similarity matrix, labels segments with a
few-shot linear head, and abstracts the result into certain and uncertain
event logs ready for process mining.
"""

from .embeddings import (
    ClipEmbeddingSet,
    FrameEmbeddingSequence,
    load_embeddings,
    read_clip_embeddings,
    read_embeddings,
    save_embeddings,
    write_clip_embeddings,
    write_embeddings,
)
from .eventlog import (
    DirectlyFollowsGraph,
    Event,
    EventLog,
    Trace,
    UncertainEvent,
    UncertainEventLog,
    UncertainTrace,
    dfg_to_dot,
    discover_dfg,
    parse_log,
    project_certain,
    serialize_log,
    to_certain_trace,
    to_uncertain_trace,
    truncate_topk,
)
from .fewshot import (
    ClipWindow,
    LabelDistribution,
    LinearHead,
    aggregate_segment,
    predict_clip,
    sample_clips,
    top_k_accuracy,
    train_head,
)
from .metrics import frame_accuracy, silhouette_score
from .segmentation import (
    ClusterAssignment,
    EventSegment,
    atomic_events,
    kmeans_cluster,
    merge_events,
    min_event_length,
    segment_video,
)
from .similarity import ContextualizedFrameMatrix, DistanceMatrix, contextualize, cosine_distance_matrix
from .synthetic import GroundTruth, SegmentScript, synth_sequence

__version__ = "0.1.0"
