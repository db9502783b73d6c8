"""Pipeline configuration: one dataclass of knobs plus config-file support.

Precedence is command-line flag > config file > dataclass default. The
config file is a flat key=value mirror of the flags ('#' starts a comment;
keys may use '-' or '_').
"""

from __future__ import annotations

from dataclasses import dataclass, fields

CLIP_MODES = ("non-overlapping", "overlapping")
LOG_FORMATS = ("csv", "xes", "ujson")


@dataclass
class PipelineConfig:
    embeddings: tuple[str, ...] = ()
    k: int = 7                      # cluster count; 7 balances kitchen-scale footage
    seed: int = 0
    restarts: int = 10
    clip_mode: str = "non-overlapping"
    clips_per_segment: int = 10
    lr: float = 0.01                # linear-head step size
    epochs: int = 10
    labels: str | None = None       # labels sidecar; triggers head training
    head: str | None = None         # pre-trained head (used when no labels)
    top_k: int = 3                  # labels kept per event in the uncertain log
    fps: str | None = None          # rational override, e.g. "30000/1001"
    base_time: str | None = None    # ISO-8601 override for frame 0
    format: str = "csv"
    out: str = "out"
    jobs: int = 1
    truth: str | None = None        # ground-truth json enabling metrics
    # synth-only knobs
    videos: int = 3
    activities: int = 6
    frames_per_segment: int = 100
    dim: int = 32
    noise: float = 0.05

    def __post_init__(self):
        if self.clip_mode not in CLIP_MODES:
            raise ValueError(f"clip_mode must be one of {CLIP_MODES}")
        if self.format not in LOG_FORMATS:
            raise ValueError(f"format must be one of {LOG_FORMATS}")
        if self.k < 1 or self.restarts < 1 or self.jobs < 1:
            raise ValueError("k, restarts, and jobs must be positive")
        if self.top_k < 1 or self.clips_per_segment < 1:
            raise ValueError("top_k and clips_per_segment must be positive")
        if self.lr <= 0 or self.epochs < 0:
            raise ValueError("lr must be positive and epochs nonnegative")


def parse_config_file(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line without '=': {raw!r}")
        entries[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return entries


def _coerce(name: str, kind, raw: str):
    if kind == "tuple[str, ...]":
        return tuple(p for p in raw.replace(",", " ").split() if p)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw  # str and optional str fields


def build_config(cli_values: dict, file_entries: dict[str, str] | None = None) -> PipelineConfig:
    """Merge CLI values (None means 'not given') over config-file entries
    over defaults."""
    kinds = {f.name: f.type for f in fields(PipelineConfig)}
    merged: dict = {}
    for key, raw in (file_entries or {}).items():
        if key not in kinds:
            raise ValueError(f"unknown config key {key!r}")
        merged[key] = _coerce(key, kinds[key], raw)
    for key, value in cli_values.items():
        if value is not None and key in kinds:
            merged[key] = value
    return PipelineConfig(**merged)
