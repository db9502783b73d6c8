import numpy as np
import pytest

from framelog import read_clip_embeddings, read_embeddings  # primary = format oracle
from framelog_adapter.errors import IndexOutOfRange, ModelLoadError
from framelog_adapter.extract import extract_clip_embeddings, extract_frame_embeddings
from framelog_adapter.video import RawVideo, resample_indices


def make_video(t=9, h=24, w=20, fps=30, seed=0):
    rng = np.random.default_rng(seed)
    frames = rng.integers(0, 256, size=(t, h, w, 3), dtype=np.uint8)
    return RawVideo(frames=frames, fps=fps, source=f"mem_{seed}.npy")


def test_resample_nearest_frame_counts():
    assert resample_indices(10, 30, 10) == [0, 3, 6, 9]  # ceil(10/3) frames
    assert resample_indices(9, 30, 10) == [0, 3, 6]
    assert resample_indices(5, 30, 30) == [0, 1, 2, 3, 4]
    assert resample_indices(3, 10, 20) == [0, 1, 1, 2, 2]  # nearest, duplicated


def test_frame_extraction_passes_engine_validation():
    video = make_video(t=9, fps=30)
    blob = extract_frame_embeddings(video, sample_fps=10, encoder="pixel-stats")
    seq = read_embeddings(blob)
    assert seq.frame_count == 3  # ceil(9/3) after resampling
    assert seq.dim == 32
    assert str(seq.fps) == "10"
    assert np.isfinite(seq.data).all()


def test_frame_extraction_deterministic():
    video = make_video()
    a = extract_frame_embeddings(video, 10, encoder="pixel-stats")
    b = extract_frame_embeddings(video, 10, encoder="pixel-stats")
    assert a == b


def test_duplicated_frames_give_identical_rows():
    frame = make_video(t=1).frames[0]
    video = RawVideo(frames=np.stack([frame] * 4), fps=10, source="dup.npy")
    seq = read_embeddings(extract_frame_embeddings(video, 10, encoder="pixel-stats"))
    for row in seq.data[1:]:
        assert np.array_equal(row, seq.data[0])


def test_clip_extraction_shapes_and_ref():
    video = make_video(t=40)
    windows = [list(range(0, 16)), list(range(10, 26)), list(range(24, 40))]
    blob = extract_clip_embeddings(video, windows, encoder="clip-stats")
    cs = read_clip_embeddings(blob)
    assert cs.clips.shape == (3, 32)
    assert cs.segment_ref == ("mem_0", 0, 40)


def test_clip_window_touching_last_frame_ok():
    video = make_video(t=16)
    blob = extract_clip_embeddings(video, [list(range(16))], encoder="clip-stats")
    assert read_clip_embeddings(blob).clips.shape == (1, 32)


def test_clip_same_window_twice_identical_rows():
    video = make_video(t=20)
    w = list(range(2, 18))
    cs = read_clip_embeddings(extract_clip_embeddings(video, [w, w], encoder="clip-stats"))
    assert np.array_equal(cs.clips[0], cs.clips[1])


def test_clip_index_out_of_range():
    video = make_video(t=16)
    with pytest.raises(IndexOutOfRange):
        extract_clip_embeddings(video, [list(range(1, 17))], encoder="clip-stats")
    with pytest.raises(IndexOutOfRange):
        extract_clip_embeddings(video, [[-1] + list(range(15))], encoder="clip-stats")


def test_window_length_validated():
    video = make_video(t=20)
    with pytest.raises(ValueError):
        extract_clip_embeddings(video, [list(range(8))], encoder="clip-stats")


def test_unknown_encoder_rejected():
    video = make_video(t=16)
    with pytest.raises(ModelLoadError):
        extract_frame_embeddings(video, 10, encoder="resnet-9000")
    with pytest.raises(ModelLoadError):
        extract_clip_embeddings(video, [list(range(16))], encoder="resnet-9000")


def test_missing_checkpoint_rejected(tmp_path):
    video = make_video(t=2)
    with pytest.raises(ModelLoadError):
        extract_frame_embeddings(video, 10, encoder="vit-b-16", checkpoint=tmp_path / "nope.pt")


@pytest.mark.slow
def test_vit_backbone_shape_and_determinism():
    video = make_video(t=2, h=40, w=40)
    a = read_embeddings(extract_frame_embeddings(video, 30, encoder="vit-b-16"))
    b = read_embeddings(extract_frame_embeddings(video, 30, encoder="vit-b-16"))
    assert a.data.shape == (2, 768)  # transformer classification-token width
    assert np.array_equal(a.data, b.data)


@pytest.mark.slow
def test_r2plus1d_backbone_shape():
    video = make_video(t=16, h=40, w=40)
    cs = read_clip_embeddings(
        extract_clip_embeddings(video, [list(range(16))], encoder="r2plus1d-18")
    )
    assert cs.clips.shape == (1, 512)
    assert np.isfinite(cs.clips).all()
