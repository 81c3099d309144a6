import numpy as np
import pytest

from scvad.feature_io import (
    FeatureStream,
    FrameFeature,
    StreamFormatError,
    StreamValidationError,
    SynthConfig,
    concat_features,
    generate_synthetic,
    read_stream,
    write_stream,
)


def test_concat_spatial_prefix():
    out = concat_features([1, 2], [3, 4, 5])
    assert out.tolist() == [1, 2, 3, 4, 5]
    assert len(out) == 5


def test_concat_zero_vectors_dimension_rule():
    k = 64
    out = concat_features(np.zeros(512), np.zeros(k))
    assert out.shape == (512 + k,)
    assert not out.any()


def test_concat_rejects_nan_with_position():
    spatial = np.array([0.0, np.nan, 1.0])
    with pytest.raises(StreamValidationError, match="position 1"):
        concat_features(spatial, [1.0])
    with pytest.raises(StreamValidationError, match="position 4"):
        concat_features([0.0, 1.0, 2.0], [0.0, np.inf])


def test_frame_feature_invariants():
    with pytest.raises(StreamValidationError):
        FrameFeature(0, np.zeros(3))
    with pytest.raises(StreamValidationError):
        FrameFeature(1, np.array([1.0, np.nan]))


def test_stream_rejects_inconsistent_frames():
    frames = [FrameFeature(1, np.zeros(4)), FrameFeature(3, np.zeros(4))]
    with pytest.raises(StreamValidationError, match="consecutive"):
        FeatureStream(4, 2, frames)
    with pytest.raises(StreamValidationError, match="labels"):
        FeatureStream.from_matrix(np.zeros((3, 4)), 2, labels=[0, 1])


def test_round_trip_identity(tmp_path):
    values = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
    stream = FeatureStream.from_matrix(values, 2, labels=[0, 1, 0])
    path = tmp_path / "s.scvf"
    nbytes = write_stream(stream, path)
    assert nbytes == path.stat().st_size
    back = read_stream(path)
    assert back.dim == 4 and back.spatial_dim == 2
    assert np.array_equal(back.matrix(np.float32), values)
    assert back.labels == (0, 1, 0)


def test_wrong_magic(tmp_path):
    path = tmp_path / "bad.scvf"
    path.write_bytes(b"NOPE" + bytes(100))
    with pytest.raises(StreamFormatError, match="magic"):
        read_stream(path)


def test_truncated_payload(tmp_path):
    stream = FeatureStream.from_matrix(np.zeros((2, 8), dtype=np.float32), 4)
    path = tmp_path / "s.scvf"
    write_stream(stream, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])  # drop one float: rows of 7 floats vs header dim 8
    with pytest.raises(StreamFormatError, match="payload"):
        read_stream(path)


def test_synth_deterministic():
    cfg = SynthConfig(dim=8, length=64, anomaly_spans=[(10, 14)], anomaly_magnitude=2.0, seed=42)
    a = generate_synthetic(cfg)
    b = generate_synthetic(cfg)
    assert np.array_equal(a.matrix(), b.matrix())
    assert a.labels == b.labels


def test_synth_no_spans_all_zero_labels():
    stream = generate_synthetic(SynthConfig(dim=4, length=30, seed=1))
    assert sum(stream.labels) == 0


def test_synth_span_label_arithmetic():
    cfg = SynthConfig(dim=16, length=200, anomaly_spans=[(150, 160)], anomaly_magnitude=1.0, seed=3)
    stream = generate_synthetic(cfg)
    assert sum(stream.labels) == 11
    assert all(stream.labels[i] == 1 for i in range(149, 160))


def test_synth_invariants_survive_round_trip(tmp_path):
    cfg = SynthConfig(dim=6, length=40, anomaly_spans=[(5, 8), (20, 20)], seed=9)
    stream = generate_synthetic(cfg)
    path = tmp_path / "synth.scvf"
    write_stream(stream, path)
    back = read_stream(path)  # constructor revalidates all invariants
    assert len(back) == 40
    assert np.isfinite(back.matrix()).all()


def test_synth_config_validation():
    with pytest.raises(StreamValidationError, match="outside"):
        SynthConfig(dim=4, length=10, anomaly_spans=[(5, 12)])
    with pytest.raises(StreamValidationError, match="overlap"):
        SynthConfig(dim=4, length=20, anomaly_spans=[(3, 8), (8, 10)])
