import numpy as np
import pytest

from scvad.detector import (
    ConsistencyConfig,
    Verdict,
    detect,
    read_verdicts_csv,
    score_stream,
    temporal_consistency,
    write_verdicts_csv,
)
from scvad.feature_io import SynthConfig, generate_synthetic
from scvad.trainer import TrainConfig, train_few_shot
from scvad.transformer import ModelConfig


@pytest.fixture(scope="module")
def trained():
    stream = generate_synthetic(SynthConfig(dim=8, length=80, seed=5))
    mcfg = ModelConfig(feature_dim=8, model_dim=8, heads=2, layers=1, window=4, seed=5)
    tcfg = TrainConfig(n_shots=20, window=4, epochs=30, lr=0.001, seed=5)
    return train_few_shot(stream, mcfg, tcfg), stream


def test_verdict_bookkeeping(trained):
    artifact, stream = trained
    verdicts = score_stream(artifact, stream, start_index=21)
    assert len(verdicts) == len(stream) - 21 + 1
    assert [v.frame_index for v in verdicts] == list(range(21, len(stream) + 1))


def test_empty_evaluation_region(trained):
    artifact, stream = trained
    assert score_stream(artifact, stream, start_index=len(stream) + 1) == []


def test_start_index_validation(trained):
    artifact, stream = trained
    with pytest.raises(ValueError, match="exceed window"):
        score_stream(artifact, stream, start_index=3)
    with pytest.raises(ValueError, match="beyond"):
        score_stream(artifact, stream, start_index=len(stream) + 2)


def test_dim_mismatch(trained):
    artifact, _ = trained
    other = generate_synthetic(SynthConfig(dim=6, length=40, seed=1))
    with pytest.raises(ValueError, match="dim"):
        score_stream(artifact, other, start_index=21)


def test_zero_threshold_flags_everything(trained):
    artifact, stream = trained
    artifact_zero = type(artifact)(
        params=artifact.params,
        threshold=0.0,
        train_config=artifact.train_config,
    )
    verdicts = score_stream(artifact_zero, stream, start_index=21)
    assert all(v.raw_flag for v in verdicts)
    assert all(v.used_substitute for v in verdicts)


def test_substitution_enters_later_windows(trained):
    artifact, stream = trained
    # force every frame to be flagged, then the buffer used at frame t+1
    # must contain the prediction for frame t, not its actual feature
    forced = type(artifact)(params=artifact.params, threshold=0.0,
                            train_config=artifact.train_config)
    buffers = {}
    preds = {}

    def probe(frame, buf):
        buffers[frame] = buf.copy()

    verdicts = score_stream(forced, stream, start_index=21, buffer_probe=probe)
    values = stream.matrix()
    for v in verdicts[:-1]:
        nxt = buffers[v.frame_index + 1]
        actual = values[v.frame_index - 1]
        assert not np.allclose(nxt[-1], actual)  # actual was replaced
    # unforced run with no raw flags keeps actuals in the buffer
    relaxed = type(artifact)(params=artifact.params, threshold=np.inf,
                             train_config=artifact.train_config)
    buffers.clear()
    verdicts = score_stream(relaxed, stream, start_index=21, buffer_probe=probe)
    for v in verdicts[:-1]:
        np.testing.assert_array_equal(buffers[v.frame_index + 1][-1], values[v.frame_index - 1])


def test_consistency_all_true():
    flags = [True] * 10
    assert temporal_consistency(flags, ConsistencyConfig(2, 2)) == flags


def test_consistency_isolated_spike_suppressed():
    flags = [False] * 5 + [True] + [False] * 5
    final = temporal_consistency(flags, ConsistencyConfig(2, 2))
    assert not any(final)


def test_consistency_five_frame_patterns():
    pattern = [False, True, True, True, False]
    assert temporal_consistency(pattern, ConsistencyConfig(1, 1)) == pattern
    assert temporal_consistency(pattern, ConsistencyConfig(1, 2)) == [
        False, False, True, False, False,
    ]


def test_consistency_boundary_caps_requirement():
    # first frame has a single neighbor; q is capped to that size
    flags = [True, True, False, False]
    final = temporal_consistency(flags, ConsistencyConfig(1, 2))
    assert final[0] is True


def test_consistency_only_suppresses():
    rng = np.random.default_rng(0)
    for _ in range(20):
        flags = list(rng.random(30) < 0.4)
        final = temporal_consistency(flags, ConsistencyConfig(2, 2))
        assert all(not f or r for f, r in zip(final, flags))


def test_consistency_config_validation():
    with pytest.raises(ValueError):
        ConsistencyConfig(2, 5)
    with pytest.raises(ValueError):
        ConsistencyConfig(-1, 1)
    with pytest.raises(ValueError):
        temporal_consistency([], ConsistencyConfig(2, 2))


def test_per_frame_threshold_monotonicity(trained):
    # with identical buffers (no substitution trigger differences forced by
    # using the same scores), raising Th can only clear raw flags
    artifact, stream = trained
    verdicts = score_stream(artifact, stream, start_index=21)
    scores = [v.score for v in verdicts]
    for th1, th2 in [(0.0, 0.1), (0.05, 0.5)]:
        raw1 = [s >= th1 for s in scores]
        raw2 = [s >= th2 for s in scores]
        assert all(r2 <= r1 for r1, r2 in zip(raw1, raw2))


def test_detect_determinism(trained):
    artifact, stream = trained
    a = detect(artifact, stream, ConsistencyConfig(2, 2), start_index=21)
    b = detect(artifact, stream, ConsistencyConfig(2, 2), start_index=21)
    assert a == b


def test_detect_final_subset_of_raw(trained):
    artifact, stream = trained
    verdicts = detect(artifact, stream, ConsistencyConfig(2, 2), start_index=21)
    assert all(not v.final_flag or v.raw_flag for v in verdicts)


def test_raw_scores_causal_under_truncation(trained):
    # scores and raw flags at frame t never depend on frames after t
    artifact, stream = trained
    full = score_stream(artifact, stream, start_index=21)
    for cut in (30, 45, 60):
        prefix = type(stream).from_matrix(stream.matrix(np.float32)[:cut], stream.spatial_dim)
        part = score_stream(artifact, prefix, start_index=21)
        for a, b in zip(part, full[: len(part)]):
            assert a == b


def test_verdict_csv_round_trip(tmp_path, trained):
    artifact, stream = trained
    verdicts = detect(artifact, stream, ConsistencyConfig(2, 2), start_index=21)
    path = tmp_path / "verdicts.csv"
    write_verdicts_csv(verdicts, artifact.threshold, path)
    back, threshold = read_verdicts_csv(path)
    assert threshold == artifact.threshold
    assert back == verdicts
