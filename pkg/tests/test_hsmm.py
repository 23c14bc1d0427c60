import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heartsound.errors import EmptyInput, OutOfRange
from heartsound.hsmm import (
    DIASTOLE, S1, S2, SYSTOLE, DurationModel, duration_logmass, hsmm_decode, path_score,
    run_lengths, validate_state_sequence,
)
from oracles import brute_force_decode, random_instance


def test_default_durations():
    d = DurationModel()
    assert d.means_s[SYSTOLE] == 0.128 and d.stds_s[SYSTOLE] == 0.062
    assert d.means_s[DIASTOLE] == 0.356 and d.stds_s[DIASTOLE] == 0.121
    # mean +/- 3 std in frames, floored at 1
    assert d.min_frames == (6, 1, 3, 1)
    assert d.max_frames == (18, 31, 15, 71)


def test_systole_mode_is_13_frames():
    d = DurationModel()
    masses = [duration_logmass(d, SYSTOLE, n) for n in range(1, d.max_frames[SYSTOLE] + 1)]
    assert int(np.argmax(masses)) + 1 == 13


@pytest.mark.parametrize("state", range(4))
def test_logmass_normalised(state):
    d = DurationModel()
    total = sum(math.exp(duration_logmass(d, state, n))
                for n in range(d.min_frames[state], d.max_frames[state] + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_diastole_vs_systole_at_13():
    d = DurationModel()
    # independent evaluation of both truncated Gaussians
    def logmass(mu, sd, lo, hi, n):
        z = sum(math.exp(-0.5 * ((k - mu) / sd) ** 2) for k in range(lo, hi + 1))
        return -0.5 * ((n - mu) / sd) ** 2 - math.log(z)
    dia = logmass(35.6, 12.1, 1, 71, 13)
    sys_ = logmass(12.8, 6.2, 1, 31, 13)
    assert duration_logmass(d, DIASTOLE, 13) == pytest.approx(dia, abs=1e-12)
    assert duration_logmass(d, SYSTOLE, 13) == pytest.approx(sys_, abs=1e-12)
    assert dia < sys_


def test_logmass_out_of_range():
    d = DurationModel()
    with pytest.raises(OutOfRange):
        duration_logmass(d, S1, 0)
    with pytest.raises(OutOfRange):
        duration_logmass(d, S1, d.max_frames[S1] + 1)
    assert duration_logmass(d, S1, 1) == -math.inf


def test_clean_cycle():
    p = np.full(200, 0.001)
    p[10:22] = 0.999
    p[35:44] = 0.999
    runs = hsmm_decode(p).runs()
    assert (S1, 10, 12) in runs
    assert (SYSTOLE, 22, 13) in runs
    assert (S2, 35, 9) in runs
    assert runs[runs.index((S2, 35, 9)) + 1][0] == DIASTOLE


def test_clean_cycle_matches_brute_force_window():
    # same shape, shrunk to an enumerable size
    p = np.full(50, 0.001)
    p[5:12] = 0.999
    p[20:26] = 0.999
    mu, sd = [7, 8, 6, 12], [1.0, 1.0, 1.0, 1.2]
    lo = [max(1, math.ceil(m - 3 * s)) for m, s in zip(mu, sd)]
    hi = [math.floor(m + 3 * s) for m, s in zip(mu, sd)]
    d = DurationModel(tuple(np.array(mu) / 100), tuple(np.array(sd) / 100), tuple(lo), tuple(hi))
    labels, score, _ = brute_force_decode(list(p), mu, sd, lo, hi)
    got = hsmm_decode(p, d)
    np.testing.assert_array_equal(got.labels, labels)
    assert got.score == pytest.approx(score, abs=1e-9)
    assert (S1, 5, 7) in got.runs() and (S2, 20, 6) in got.runs()


def test_single_frame():
    seq = hsmm_decode(np.array([0.7]))
    assert len(seq) == 1
    validate_state_sequence(seq.labels, DurationModel())


def test_empty_input():
    with pytest.raises(EmptyInput):
        hsmm_decode(np.array([]))


def test_uninformative_emissions_tie_break_matches_brute_force():
    mu, sd = [9, 12, 8, 14], [0.8, 1.0, 0.7, 1.1]
    lo = [max(1, math.ceil(m - 3 * s)) for m, s in zip(mu, sd)]
    hi = [math.floor(m + 3 * s) for m, s in zip(mu, sd)]
    d = DurationModel(tuple(np.array(mu) / 100), tuple(np.array(sd) / 100), tuple(lo), tuple(hi))
    p = np.full(60, 0.5)
    labels, score, _ = brute_force_decode(list(p), mu, sd, lo, hi)
    got = hsmm_decode(p, d)
    np.testing.assert_array_equal(got.labels, labels)
    assert got.score == pytest.approx(score, abs=1e-9)
    validate_state_sequence(got.labels, d)


def test_uninformative_emissions_default_model():
    # duration prior alone: valid sequence and every run within bounds
    d = DurationModel(max_frames=(18, 31, 15, 40))
    seq = hsmm_decode(np.full(60, 0.5), d)
    validate_state_sequence(seq.labels, d)
    assert seq.score == pytest.approx(path_score(np.full(60, 0.5), seq.labels, d), abs=1e-9)


def test_matches_brute_force_sample():
    r = np.random.default_rng(99)
    for _ in range(40):
        T, mu, sd, lo, hi, d = random_instance(r, max_T=45)
        p = r.uniform(0.001, 0.999, T)
        labels, score, _ = brute_force_decode(list(p), mu, sd, lo, hi)
        got = hsmm_decode(p, d)
        np.testing.assert_array_equal(got.labels, labels)
        assert got.score == pytest.approx(score, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(1, 400))
def test_output_valid_and_score_is_sum_of_parts(seed, T):
    r = np.random.default_rng(seed)
    p = np.clip(r.beta(0.5, 0.5, T), 1e-3, 1 - 1e-3)
    d = DurationModel()
    seq = hsmm_decode(p, d)
    validate_state_sequence(seq.labels, d)
    assert seq.score == pytest.approx(path_score(p, seq.labels, d), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), T=st.integers(5, 300), amount=st.floats(0.0, 0.5))
def test_monotone_emission_response(seed, T, amount):
    r = np.random.default_rng(seed)
    p = r.uniform(0.01, 0.99, T)
    seq = hsmm_decode(p)
    sound = np.isin(seq.labels, (S1, S2))
    q = p.copy()
    q[sound] = np.minimum(0.999, q[sound] + amount * (1 - q[sound]))
    q[~sound] = np.maximum(0.001, q[~sound] * (1 - amount))
    assert hsmm_decode(q).score >= seq.score - 1e-9


def test_runtime_is_linear_in_length():
    import time
    p = np.random.default_rng(0).uniform(0.01, 0.99, 2000)
    t0 = time.perf_counter()
    hsmm_decode(p[:500])
    t1 = time.perf_counter()
    hsmm_decode(p)
    t2 = time.perf_counter()
    assert (t2 - t1) < 10 * (t1 - t0) + 0.05


def test_run_lengths_and_validation():
    labels = np.array([3, 3, 0, 0, 0, 1, 1, 2, 3])
    assert run_lengths(labels) == [(3, 0, 2), (0, 2, 3), (1, 5, 2), (2, 7, 1), (3, 8, 1)]
    validate_state_sequence(labels)
    with pytest.raises(ValueError):
        validate_state_sequence(np.array([0, 0, 2, 2]))
    with pytest.raises(ValueError):
        # interior S1 run of 3 frames is below the 6-frame minimum
        validate_state_sequence(np.array([3, 0, 0, 0, 1, 1]), DurationModel())
