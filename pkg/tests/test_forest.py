import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heartsound.errors import FormatError, SingleClass, TooFewFrames, UnsortedPeaks
from heartsound.forest import (
    LEAF, MAX_DEPTH, N_TREES, ForestModel, Tree, derive_frame_labels, deserialize_forest,
    predict_emissions, serialize_forest, train_forest,
)
from heartsound.hsmm import DurationModel


def _separable(n=200):
    X = np.vstack([np.full((n // 2, 9), -20.0), np.zeros((n // 2, 9))])
    y = np.concatenate([np.zeros(n // 2), np.ones(n // 2)])
    return X, y


def _stump(value_left, value_right, threshold=0.0):
    return Tree(
        np.array([0, LEAF, LEAF], dtype=np.int32), np.array([threshold, 0.0, 0.0]),
        np.array([1, -1, -1], dtype=np.int32), np.array([2, -1, -1], dtype=np.int32),
        np.array([0.5, value_left, value_right]),
    )


def _constant_forest(values):
    return ForestModel(tuple(_stump(v, v) for v in values))


def test_separable_data_fits_perfectly():
    X, y = _separable()
    model = train_forest(X, y, rng_seed=42)
    assert len(model.trees) == N_TREES
    pred = predict_emissions(model, X) > 0.5
    assert np.mean(pred == y) == 1.0


def test_errors():
    X, y = _separable()
    with pytest.raises(SingleClass):
        train_forest(X, np.zeros_like(y))
    with pytest.raises(TooFewFrames):
        train_forest(X[:50], y[:50])


def test_invariants_on_noisy_data(rng):
    X = rng.normal(size=(600, 9))
    y = (X[:, 0] + 0.5 * rng.normal(size=600) > 0).astype(float)
    model = train_forest(X, y, rng_seed=3).validate()
    for t in model.trees:
        assert t.depth() <= MAX_DEPTH
        internal = t.feature != LEAF
        assert np.all((t.feature[internal] >= 0) & (t.feature[internal] < 9))
        assert np.all((t.value >= 0) & (t.value <= 1))


def test_deterministic_given_seed(rng):
    X = rng.normal(size=(300, 9))
    y = (X[:, 1] > 0.2).astype(float)
    a = serialize_forest(train_forest(X, y, rng_seed=7))
    b = serialize_forest(train_forest(X, y, rng_seed=7))
    c = serialize_forest(train_forest(X, y, rng_seed=8))
    assert a == b and a != c


def test_prediction_clamps_and_averages():
    X = np.zeros((5, 9))
    assert np.all(predict_emissions(_constant_forest([1.0] * 10), X) == 0.999)
    assert np.all(predict_emissions(_constant_forest([0.0] * 10), X) == 0.001)
    np.testing.assert_allclose(predict_emissions(_constant_forest([1.0] * 3 + [0.0] * 7), X), 0.3)


def test_monotone_vote():
    base = [0.2, 0.4, 0.6, 0.1, 0.9, 0.3, 0.5, 0.5, 0.7, 0.0]
    X = np.zeros((1, 9))
    p0 = predict_emissions(_constant_forest(base), X)[0]
    for i in range(10):
        bumped = list(base)
        bumped[i] = min(1.0, bumped[i] + 0.25)
        assert predict_emissions(_constant_forest(bumped), X)[0] >= p0


def test_round_trip(rng):
    X = rng.normal(size=(400, 9))
    y = (X[:, 2] - X[:, 5] > 0).astype(float)
    model = train_forest(X, y, rng_seed=1)
    back = deserialize_forest(serialize_forest(model))
    for a, b in zip(model.trees, back.trees):
        for name in ("feature", "threshold", "left", "right", "value"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    Z = rng.normal(size=(100, 9))
    np.testing.assert_array_equal(predict_emissions(model, Z), predict_emissions(back, Z))


def test_corrupt_inputs_rejected(rng):
    X, y = _separable()
    blob = serialize_forest(train_forest(X, y, rng_seed=0))
    with pytest.raises(FormatError):
        deserialize_forest(b"")
    with pytest.raises(FormatError):
        deserialize_forest(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        deserialize_forest(b"XXXX" + blob[4:])
    flipped = bytearray(blob)
    flipped[40] ^= 0xFF
    with pytest.raises(FormatError):
        deserialize_forest(bytes(flipped))


def test_labels_no_peaks():
    assert not derive_frame_labels([], 300).any()


def test_labels_single_peak():
    # S1 [1.0, 1.122) and S2 [1.25, 1.342) at 100 frames/s
    labels = derive_frame_labels([1.0], 200)
    expected = set(range(100, 113)) | set(range(125, 135))
    assert set(np.flatnonzero(labels)) == expected


def test_labels_sound_fraction():
    period = 60 / 70
    peaks = np.arange(0, 10, period)
    labels = derive_frame_labels(peaks, 1000)
    assert labels.mean() == pytest.approx((0.122 + 0.092) / period, abs=0.015)


def test_labels_unsorted():
    with pytest.raises(UnsortedPeaks):
        derive_frame_labels([2.0, 1.0], 300)


def test_labels_follow_duration_model():
    d = DurationModel(means_s=(0.05, 0.1, 0.05, 0.3))
    labels = derive_frame_labels([0.0], 100, durations=d)
    assert set(np.flatnonzero(labels)) == set(range(0, 5)) | set(range(15, 20))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000))
def test_probability_bounds(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(150, 9))
    y = (r.random(150) > 0.5).astype(float)
    y[:2] = [0, 1]
    p = predict_emissions(train_forest(X, y, rng_seed=seed), r.normal(size=(50, 9)) * 5)
    assert np.all((p >= 1e-3) & (p <= 1 - 1e-3))


def test_heldout_accuracy_on_synthetic_pcg():
    from heartsound.pipeline import training_frames
    from heartsound.synth import SynthConfig, generate

    rec = generate(SynthConfig(duration_s=60, mean_bpm=70, bpm_jitter_std_ms=20, snr_db=20,
                               rng_seed=11))
    X, y = training_frames(rec.audio, rec.rpeak_times_s)
    folds = np.array_split(np.arange(len(y)), 5)
    accs = []
    for k, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != k])
        model = train_forest(X[train], y[train], rng_seed=k)
        accs.append(np.mean((predict_emissions(model, X[test]) > 0.5) == y[test]))
    assert min(accs) >= 0.9, accs
