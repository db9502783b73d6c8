"""adapter CLI: extract-frames, extract-clips, augment.

Exit status: 0 success, 2 undecodable/missing input or bad windows,
3 backbone or parameter problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime
from fractions import Fraction
from pathlib import Path

import numpy as np

from .augment import ROTATIONS, AugmentationParams, augment_clip
from .encoders import CLIP_ENCODERS, FRAME_ENCODERS
from .errors import DecodeError, IndexOutOfRange, ModelLoadError
from .extract import extract_clip_embeddings, extract_frame_embeddings
from .video import load_raw_video


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def _base_time(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp()


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    frames = sub.add_parser("extract-frames", help="per-frame embeddings to a kind-0 .semb")
    frames.add_argument("--video", required=True)
    frames.add_argument("--sample-fps", type=_fraction, required=True, metavar="RAT")
    frames.add_argument("--out", required=True)
    frames.add_argument("--encoder", default="vit-b-16", choices=FRAME_ENCODERS)
    frames.add_argument("--checkpoint", help="backbone weights path (never bundled)")
    frames.add_argument("--native-fps", type=_fraction, help="override container frame rate")
    frames.add_argument("--base-time", type=_base_time, default=0.0, help="epoch seconds or ISO-8601")
    frames.add_argument("--video-id", help="identifier stored in the file (default: file stem)")

    clips = sub.add_parser("extract-clips", help="per-clip embeddings to a kind-1 .semb")
    clips.add_argument("--video", required=True)
    clips.add_argument("--windows", required=True, help="json list of 16-index windows")
    clips.add_argument("--out", required=True)
    clips.add_argument("--encoder", default="r2plus1d-18", choices=CLIP_ENCODERS)
    clips.add_argument("--checkpoint")
    clips.add_argument("--native-fps", type=_fraction)
    clips.add_argument("--base-time", type=_base_time, default=0.0)
    clips.add_argument("--video-id")

    aug = sub.add_parser("augment", help="apply one consistent augmentation to a clip")
    aug.add_argument("--video", required=True)
    aug.add_argument("--out", required=True, help=".npy output of augmented frames")
    aug.add_argument("--seed", type=int, default=0)
    aug.add_argument("--rotation", type=int, default=0, choices=ROTATIONS)
    aug.add_argument("--brightness", type=float, default=1.0)
    aug.add_argument("--noise", type=float, default=0.0)
    aug.add_argument("--grayscale", type=_bool, default=False, metavar="BOOL")
    return parser


def cmd_extract_frames(args) -> None:
    video = load_raw_video(args.video, native_fps=args.native_fps)
    blob = extract_frame_embeddings(
        video, args.sample_fps, encoder=args.encoder, checkpoint=args.checkpoint,
        base_time=args.base_time, video_id=args.video_id,
    )
    Path(args.out).write_bytes(blob)


def cmd_extract_clips(args) -> None:
    video = load_raw_video(args.video, native_fps=args.native_fps)
    windows_path = Path(args.windows)
    if not windows_path.is_file():
        raise DecodeError(f"windows file not found: {windows_path}")
    windows = json.loads(windows_path.read_text(encoding="utf-8"))
    blob = extract_clip_embeddings(
        video, windows, encoder=args.encoder, checkpoint=args.checkpoint,
        base_time=args.base_time, video_id=args.video_id,
    )
    Path(args.out).write_bytes(blob)


def cmd_augment(args) -> None:
    video = load_raw_video(args.video)
    params = AugmentationParams(
        rotation=args.rotation, brightness=args.brightness,
        noise_sigma=args.noise, grayscale=args.grayscale, seed=args.seed,
    )
    np.save(args.out, augment_clip(video.frames, params))


COMMANDS = {
    "extract-frames": cmd_extract_frames,
    "extract-clips": cmd_extract_clips,
    "augment": cmd_augment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (DecodeError, IndexOutOfRange) as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 2
    except (ModelLoadError, ValueError) as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
