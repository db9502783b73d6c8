#!/usr/bin/env python3
"""Generate a synthetic fixture, run the full pipeline on it, and print the
resulting metrics. Everything lands in --workdir."""

import argparse
import json
import sys
from pathlib import Path

from framelog.cli import main as framelog_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="experiment_out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--videos", type=int, default=3)
    parser.add_argument("--activities", type=int, default=6)
    parser.add_argument("--noise", type=float, default=0.05)
    args = parser.parse_args()

    work = Path(args.workdir)
    fixture = work / "fixture"
    out = work / "out"

    rc = framelog_main(
        ["synth", "--out", str(fixture), "--seed", str(args.seed),
         "--videos", str(args.videos), "--activities", str(args.activities),
         "--noise", str(args.noise)]
    )
    if rc != 0:
        return rc

    embeddings = sorted(str(p) for p in fixture.glob("*.semb"))
    rc = framelog_main(
        ["run", "--embeddings", *embeddings,
         "--labels", str(fixture / "labels.json"),
         "--truth", str(fixture / "ground_truth.json"),
         "--k", str(args.activities), "--seed", str(args.seed), "--out", str(out)]
    )
    if rc != 0:
        return rc

    metrics = json.loads((out / "metrics.json").read_text())
    print(f"frame accuracy : {metrics['frame_accuracy']:.3f}")
    print(f"top-1 / top-3  : {metrics['top1']:.3f} / {metrics['top3']:.3f}")
    for k, score in sorted(metrics["silhouette_by_k"].items(), key=lambda kv: int(kv[0])):
        print(f"silhouette k={k}: {score:.3f}")
    print(f"artifacts in   : {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
