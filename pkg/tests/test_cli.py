import json
import os
from pathlib import Path

import pytest

from framelog.cli import main
from framelog.eventlog import parse_log


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fixture")
    rc = main(
        ["synth", "--out", str(d), "--seed", "7", "--videos", "2", "--activities", "3",
         "--frames-per-segment", "30", "--dim", "16"]
    )
    assert rc == 0
    return d


def embeddings_of(d):
    return sorted(str(p) for p in Path(d).glob("*.semb"))


def process_embeddings_of(d):
    return [p for p in embeddings_of(d) if "train" not in p]


def test_synth_writes_fixture(fixture_dir):
    names = sorted(os.listdir(fixture_dir))
    assert "labels.json" in names and "ground_truth.json" in names
    assert sum(n.endswith(".semb") for n in names) == 3  # 2 process + 1 train


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["synth", "--out", str(out), "--seed", "3", "--videos", "1",
                     "--activities", "2", "--frames-per-segment", "20", "--dim", "8"]) == 0
    for name in os.listdir(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def run_args(fixture_dir, out, extra=()):
    return [
        "--embeddings", *embeddings_of(fixture_dir),
        "--labels", str(fixture_dir / "labels.json"),
        "--truth", str(fixture_dir / "ground_truth.json"),
        "--k", "3", "--seed", "1", "--out", str(out), *extra,
    ]


def test_run_produces_all_artifacts(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["run", *run_args(fixture_dir, out)]) == 0
    for name in ["segments.json", "labeled_segments.json", "head.json",
                 "log_certain.csv", "log_uncertain.ujson", "dfg.dot", "metrics.json"]:
        assert (out / name).is_file(), name
    log = parse_log((out / "log_certain.csv").read_bytes(), "csv")
    assert sorted(t.case_id for t in log.traces) == ["video_00", "video_01"]
    truth = json.loads((fixture_dir / "ground_truth.json").read_text())
    for trace in log.traces:
        scripted = [truth[trace.case_id][0]]
        for label in truth[trace.case_id]:
            if label != scripted[-1]:
                scripted.append(label)
        assert [e.activity for e in trace.events] == scripted


def test_run_twice_byte_identical(fixture_dir, tmp_path):
    out = tmp_path / "out"
    args = ["run", *run_args(fixture_dir, out)]
    assert main(args) == 0
    snapshot = {n: (out / n).read_bytes() for n in os.listdir(out)}
    assert main(args) == 0
    for name, blob in snapshot.items():
        assert (out / name).read_bytes() == blob, name


def test_jobs_do_not_change_bytes(fixture_dir, tmp_path):
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["run", *run_args(fixture_dir, serial)]) == 0
    assert main(["run", *run_args(fixture_dir, parallel, extra=("--jobs", "4"))]) == 0
    for name in os.listdir(serial):
        if name == "metrics.json":
            continue  # config echo records the differing --out/--jobs flags
        assert (serial / name).read_bytes() == (parallel / name).read_bytes(), name


def test_stage_composition_equals_run(fixture_dir, tmp_path):
    run_out, stage_out = tmp_path / "run", tmp_path / "stages"
    assert main(["run", *run_args(fixture_dir, run_out)]) == 0

    base = ["--k", "3", "--seed", "1", "--out", str(stage_out)]
    proc = process_embeddings_of(fixture_dir)
    train = [p for p in embeddings_of(fixture_dir) if "train" in p]
    assert main(["segment", "--embeddings", *proc, *base]) == 0
    assert main(["train-head", "--embeddings", *train,
                 "--labels", str(fixture_dir / "labels.json"), *base]) == 0
    assert main(["classify", "--embeddings", *proc, *base]) == 0
    assert main(["log", "--embeddings", *proc, *base]) == 0
    assert main(["dfg", *base]) == 0
    for name in ["segments.json", "head.json", "labeled_segments.json",
                 "log_certain.csv", "log_uncertain.ujson", "dfg.dot"]:
        assert (stage_out / name).read_bytes() == (run_out / name).read_bytes(), name


def test_missing_embeddings_exit_2_no_artifacts(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "--embeddings", str(tmp_path / "missing.semb"), "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_k_exceeding_frames_exit_3_no_artifacts(fixture_dir, tmp_path):
    out = tmp_path / "out"
    rc = main(["segment", "--embeddings", process_embeddings_of(fixture_dir)[0],
               "--k", "100000", "--out", str(out)])
    assert rc == 3
    assert not out.exists()


def test_classify_without_head_exit_2(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["segment", "--embeddings", *process_embeddings_of(fixture_dir),
                 "--k", "3", "--seed", "1", "--out", str(out)]) == 0
    rc = main(["classify", "--embeddings", *process_embeddings_of(fixture_dir),
               "--k", "3", "--seed", "1", "--out", str(out)])
    assert rc == 2


def test_run_without_head_or_labels_exit_3(fixture_dir, tmp_path):
    rc = main(["run", "--embeddings", *process_embeddings_of(fixture_dir),
               "--out", str(tmp_path / "out")])
    assert rc == 3


def test_config_file_and_flag_precedence(fixture_dir, tmp_path):
    out_cfg, out_flag = tmp_path / "cfg", tmp_path / "flag"
    cfg = tmp_path / "pipeline.cfg"
    cfg.write_text(
        "\n".join([
            "# fixture settings",
            f"embeddings = {' '.join(embeddings_of(fixture_dir))}",
            f"labels = {fixture_dir / 'labels.json'}",
            "k = 3",
            "seed = 1",
            f"out = {out_cfg}",
        ])
    )
    assert main(["run", "--config", str(cfg)]) == 0
    assert (out_cfg / "log_certain.csv").is_file()
    # flag overrides the config file's out directory
    assert main(["run", "--config", str(cfg), "--out", str(out_flag)]) == 0
    assert (out_flag / "log_certain.csv").is_file()
    assert (out_flag / "log_certain.csv").read_bytes() == (out_cfg / "log_certain.csv").read_bytes()


def test_unknown_config_key_exit_3(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate = 7\n")
    assert main(["run", "--config", str(cfg)]) == 3


def test_fps_and_base_time_overrides(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["run", *run_args(fixture_dir, out),
                 "--fps", "30", "--base-time", "2021-06-01T12:00:00Z", "--format", "csv"]) == 0
    first_row = (out / "log_certain.csv").read_text().splitlines()[1]
    assert "2021-06-01T12:00:00.000Z" in first_row


def test_xes_format_run(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["run", *run_args(fixture_dir, out, extra=("--format", "xes"))]) == 0
    log = parse_log((out / "log_certain.xes").read_bytes(), "xes")
    assert len(log.traces) == 2
