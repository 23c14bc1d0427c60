"""Error metrics for heart rate, S1 localisation and HRV."""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import NoOverlap, ZeroTruth
from .heartrate import find_beats

GRID_STEP_S = 2.0
MATCH_TOLERANCE_S = 0.1


@dataclass(frozen=True)
class HrErrorReport:
    median_abs_bpm: float
    mean_abs_bpm: float
    median_pct: float
    mean_pct: float
    n_samples: int

    def rows(self, prefix="hr_"):
        return [(prefix + k, v) for k, v in asdict(self).items()]


@dataclass(frozen=True)
class SegmentationReport:
    precision: float
    recall: float
    f1: float
    matches: int
    n_onsets: int
    n_peaks: int

    def rows(self, prefix="s1_"):
        return [(prefix + k, v) for k, v in asdict(self).items()]


@dataclass(frozen=True)
class HrvErrorReport:
    abs_ms: float
    pct: float

    def rows(self, prefix="hrv_error_"):
        return [(prefix + k, v) for k, v in asdict(self).items()]


def zero_order_hold(times, values, query):
    """Most recent value at or before each query time (series must start by query[0])."""
    idx = np.searchsorted(times, query, side="right") - 1
    return np.asarray(values)[idx]


def hr_errors(est_times, est_bpm, truth_times, truth_bpm, step_s=GRID_STEP_S):
    """Absolute (BPM) and relative (%) errors at each point of the 2 s comparison grid."""
    est_times = np.asarray(est_times, dtype=np.float64)
    truth_times = np.asarray(truth_times, dtype=np.float64)
    if est_times.size == 0 or truth_times.size == 0:
        raise NoOverlap("empty heart-rate series")
    start = max(est_times[0], truth_times[0])
    stop = min(est_times[-1], truth_times[-1])
    if stop - start < step_s:
        raise NoOverlap(f"series overlap for {max(stop - start, 0):.3f} s, need {step_s} s")
    offsets = np.arange(0.0, stop - start + 1e-9, step_s)
    # hold lookup in overlap-relative time keeps results invariant to shifting both series
    e = zero_order_hold(est_times - start, est_bpm, offsets)
    g = zero_order_hold(truth_times - start, truth_bpm, offsets)
    abs_err = np.abs(e - g)
    return abs_err, 100.0 * abs_err / g


def compare_hr(est_times, est_bpm, truth_times, truth_bpm, step_s=GRID_STEP_S):
    """HR errors on a 2 s grid anchored at the start of the overlap."""
    abs_err, pct = hr_errors(est_times, est_bpm, truth_times, truth_bpm, step_s)
    return HrErrorReport(
        float(np.median(abs_err)), float(np.mean(abs_err)),
        float(np.median(pct)), float(np.mean(pct)), int(abs_err.size),
    )


def match_events(predicted_s, reference_s, tolerance_s=MATCH_TOLERANCE_S):
    """Greedy one-to-one matching by smallest |dt|; returns [(pred_idx, ref_idx), ...]."""
    pred = np.asarray(predicted_s, dtype=np.float64)
    ref = np.asarray(reference_s, dtype=np.float64)
    if pred.size == 0 or ref.size == 0:
        return []
    diff = np.abs(pred[:, None] - ref[None, :])
    cand = np.argwhere(diff <= tolerance_s + 1e-12)
    order = np.lexsort((cand[:, 1], cand[:, 0], diff[cand[:, 0], cand[:, 1]]))
    used_p, used_r, pairs = set(), set(), []
    for i, j in cand[order]:
        if i not in used_p and j not in used_r:
            used_p.add(i)
            used_r.add(j)
            pairs.append((int(i), int(j)))
    return pairs


def score_onsets(onset_times_s, rpeak_times_s, tolerance_s=MATCH_TOLERANCE_S):
    n_on, n_pk = len(onset_times_s), len(rpeak_times_s)
    matches = len(match_events(onset_times_s, rpeak_times_s, tolerance_s))
    # empty sets score 1.0 rather than NaN
    precision = matches / n_on if n_on else 1.0
    recall = matches / n_pk if n_pk else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return SegmentationReport(precision, recall, f1, matches, n_on, n_pk)


def score_s1_localisation(predicted, rpeak_times_s, tolerance_s=MATCH_TOLERANCE_S):
    """Precision/recall/F1 of S1 onsets against R-peaks within 100 ms."""
    beats = find_beats(predicted)
    return score_onsets(beats.onset_times_s, rpeak_times_s, tolerance_s)


def compare_hrv(estimated, truth):
    est = getattr(estimated, "value_ms", estimated)
    ref = getattr(truth, "value_ms", truth)
    if ref == 0:
        raise ZeroTruth("reference HRV is zero; percentage error undefined")
    err = abs(est - ref)
    return HrvErrorReport(float(err), float(100.0 * err / ref))
