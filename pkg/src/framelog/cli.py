"""Command-line interface: every pipeline stage as a subcommand plus the
monolithic `run`. Exit status: 0 success, 2 missing/invalid input,
3 contradictory configuration."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import CLIP_MODES, LOG_FORMATS, PipelineConfig, build_config, parse_config_file
from .errors import FramelogError, InvalidK
from .eventlog import dfg_to_dot, serialize_log
from .fewshot import head_to_json_bytes, load_head
from .pipeline import (
    ConfigError,
    InputError,
    certain_log_name,
    dfg_from_labeled,
    head_output_path,
    load_sequences,
    read_artifact,
    read_truth,
    run_all,
    stage_classify,
    stage_eval,
    stage_logs,
    stage_segment,
    stage_synth,
    stage_train,
    write_artifacts,
)
from .segmentation import segments_from_json, segments_to_json

import json


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file mirroring these flags")
    parser.add_argument("--embeddings", nargs="+", metavar="PATH", help=".semb input files")
    parser.add_argument("--k", type=int, help="cluster count (default 7)")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--restarts", type=int, help="K-Means restarts (default 10)")
    parser.add_argument("--clip-mode", choices=CLIP_MODES, help="clip sampling regime")
    parser.add_argument("--clips-per-segment", type=int, help="clips sampled per segment")
    parser.add_argument("--lr", type=float, help="head learning rate (default 0.01)")
    parser.add_argument("--epochs", type=int, help="head training epochs (default 10)")
    parser.add_argument("--labels", metavar="PATH", help="labels sidecar (.labels.json)")
    parser.add_argument("--head", metavar="PATH", help="head file (.head.json)")
    parser.add_argument("--top-k", type=int, help="labels kept per uncertain event (default 3)")
    parser.add_argument("--fps", help="frame rate override, rational like 30000/1001")
    parser.add_argument("--base-time", help="ISO-8601 override for the time of frame 0")
    parser.add_argument("--format", choices=LOG_FORMATS, help="certain-log output format")
    parser.add_argument("--out", metavar="DIR", help="artifact directory (default ./out)")
    parser.add_argument("--jobs", type=int, help="parallel videos (default 1)")
    parser.add_argument("--truth", metavar="PATH", help="ground-truth json for metrics")
    # synthetic fixture knobs
    parser.add_argument("--videos", type=int, help="synth: process videos to generate")
    parser.add_argument("--activities", type=int, help="synth: distinct activities")
    parser.add_argument("--frames-per-segment", type=int, help="synth: frames per segment")
    parser.add_argument("--dim", type=int, help="synth: embedding dimension")
    parser.add_argument("--noise", type=float, help="synth: embedding noise sigma")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framelog", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("segment", "cluster embedding streams into event segments"),
        ("train-head", "train the few-shot head from a labels sidecar"),
        ("classify", "attach label distributions to segments"),
        ("log", "abstract labeled segments into certain/uncertain logs"),
        ("dfg", "discover the directly-follows graph as DOT"),
        ("eval", "compute metrics against ground truth"),
        ("synth", "generate a ground-truthed synthetic fixture"),
        ("run", "segment + classify + log (+ dfg/metrics) in one go"),
    ]:
        _add_common_flags(sub.add_parser(name, help=help_text))
    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if values.get("embeddings") is not None:
        values["embeddings"] = tuple(values["embeddings"])
    file_entries = None
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        file_entries = parse_config_file(path.read_text(encoding="utf-8"))
    try:
        return build_config(values, file_entries)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _load_labeled(cfg: PipelineConfig):
    return segments_from_json(read_artifact(cfg.out, "labeled_segments.json").decode("utf-8"))


def _resolve_existing_head(cfg: PipelineConfig):
    path = Path(cfg.head) if cfg.head else Path(cfg.out) / "head.json"
    if not path.is_file():
        raise InputError(f"head file not found: {path}")
    return load_head(path)


def cmd_segment(cfg: PipelineConfig) -> None:
    segments = stage_segment(cfg, load_sequences(cfg.embeddings))
    write_artifacts(cfg.out, {"segments.json": segments_to_json(segments).encode("utf-8")})


def cmd_train_head(cfg: PipelineConfig) -> None:
    if not cfg.labels:
        raise ConfigError("train-head requires --labels")
    head, _losses = stage_train(cfg, load_sequences(cfg.embeddings))
    path = head_output_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_artifacts(path.parent, {path.name: head_to_json_bytes(head)})


def cmd_classify(cfg: PipelineConfig) -> None:
    sequences = load_sequences(cfg.embeddings)
    segments = segments_from_json(read_artifact(cfg.out, "segments.json").decode("utf-8"))
    labeled = stage_classify(cfg, sequences, segments, _resolve_existing_head(cfg))
    write_artifacts(cfg.out, {"labeled_segments.json": segments_to_json(labeled).encode("utf-8")})


def cmd_log(cfg: PipelineConfig) -> None:
    sequences = load_sequences(cfg.embeddings)
    certain, uncertain = stage_logs(cfg, sequences, _load_labeled(cfg))
    write_artifacts(
        cfg.out,
        {
            certain_log_name(cfg): serialize_log(certain, cfg.format),
            "log_uncertain.ujson": serialize_log(uncertain, "ujson"),
        },
    )


def cmd_dfg(cfg: PipelineConfig) -> None:
    dot = dfg_to_dot(dfg_from_labeled(_load_labeled(cfg)))
    write_artifacts(cfg.out, {"dfg.dot": dot.encode("utf-8")})


def cmd_eval(cfg: PipelineConfig) -> None:
    if not cfg.truth:
        raise ConfigError("eval requires --truth")
    sequences = load_sequences(cfg.embeddings)
    report = stage_eval(cfg, sequences, _load_labeled(cfg), read_truth(cfg))
    blob = (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")
    write_artifacts(cfg.out, {"metrics.json": blob})


def cmd_synth(cfg: PipelineConfig) -> None:
    write_artifacts(cfg.out, stage_synth(cfg))


def cmd_run(cfg: PipelineConfig) -> None:
    write_artifacts(cfg.out, run_all(cfg))


HANDLERS = {
    "segment": cmd_segment,
    "train-head": cmd_train_head,
    "classify": cmd_classify,
    "log": cmd_log,
    "dfg": cmd_dfg,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "run": cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"framelog: configuration error: {exc}", file=sys.stderr)
        return 3
    except InvalidK as exc:
        print(f"framelog: configuration error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"framelog: input error: {exc}", file=sys.stderr)
        return 2
    except FramelogError as exc:
        print(f"framelog: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"framelog: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
