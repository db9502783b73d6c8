import json

import numpy as np
import pytest

from framelog import read_clip_embeddings, read_embeddings
from framelog_adapter.cli import main


@pytest.fixture
def video_npz(tmp_path):
    rng = np.random.default_rng(4)
    frames = rng.integers(0, 256, size=(18, 20, 16, 3), dtype=np.uint8)
    path = tmp_path / "clip.npz"
    np.savez(path, frames=frames, fps_num=30, fps_den=1)
    return path, frames


def test_extract_frames_cli(video_npz, tmp_path):
    path, _ = video_npz
    out = tmp_path / "clip.semb"
    rc = main(["extract-frames", "--video", str(path), "--sample-fps", "10",
               "--out", str(out), "--encoder", "pixel-stats",
               "--base-time", "2021-01-02T03:04:05Z"])
    assert rc == 0
    seq = read_embeddings(out.read_bytes())
    assert seq.frame_count == 6  # ceil(18/3)
    assert seq.video_id == "clip"
    assert seq.base_time == 1609556645.0


def test_extract_clips_cli(video_npz, tmp_path):
    path, _ = video_npz
    windows = tmp_path / "windows.json"
    windows.write_text(json.dumps([list(range(16)), list(range(2, 18))]))
    out = tmp_path / "clips.semb"
    rc = main(["extract-clips", "--video", str(path), "--windows", str(windows),
               "--out", str(out), "--encoder", "clip-stats"])
    assert rc == 0
    cs = read_clip_embeddings(out.read_bytes())
    assert cs.clips.shape == (2, 32)


def test_augment_cli_round_trip(video_npz, tmp_path):
    path, frames = video_npz
    out = tmp_path / "aug.npy"
    rc = main(["augment", "--video", str(path), "--out", str(out),
               "--seed", "3", "--rotation", "90", "--brightness", "1.1",
               "--noise", "4.0", "--grayscale", "true"])
    assert rc == 0
    augmented = np.load(out)
    assert augmented.shape == (18, 16, 20, 3)  # rotated
    assert augmented.dtype == np.uint8
    # neutral parameters reproduce the input exactly
    neutral = tmp_path / "same.npy"
    assert main(["augment", "--video", str(path), "--out", str(neutral)]) == 0
    assert np.array_equal(np.load(neutral), frames)


def test_missing_video_exit_2(tmp_path):
    rc = main(["extract-frames", "--video", str(tmp_path / "nope.npy"),
               "--sample-fps", "10", "--out", str(tmp_path / "x.semb")])
    assert rc == 2


def test_undecodable_video_exit_2(tmp_path):
    bad = tmp_path / "garbage.mp4"
    bad.write_bytes(b"not a video")
    rc = main(["extract-frames", "--video", str(bad), "--sample-fps", "10",
               "--out", str(tmp_path / "x.semb"), "--encoder", "pixel-stats"])
    assert rc == 2


def test_bad_window_exit_2(video_npz, tmp_path):
    path, _ = video_npz
    windows = tmp_path / "windows.json"
    windows.write_text(json.dumps([list(range(10, 26))]))  # frame 18.. out of range
    rc = main(["extract-clips", "--video", str(path), "--windows", str(windows),
               "--out", str(tmp_path / "x.semb"), "--encoder", "clip-stats"])
    assert rc == 2


def test_missing_checkpoint_exit_3(video_npz, tmp_path):
    path, _ = video_npz
    rc = main(["extract-frames", "--video", str(path), "--sample-fps", "10",
               "--out", str(tmp_path / "x.semb"), "--encoder", "vit-b-16",
               "--checkpoint", str(tmp_path / "none.pt")])
    assert rc == 3
