"""Heart rate and HRV from a decoded state labelling."""

from dataclasses import dataclass

import numpy as np

from .errors import AllRejected, BadAlpha, EmptyInput, NoBeats
from .features import FRAME_RATE_HZ
from .hsmm import S1

HRV_WINDOW = 4
HRV_TOLERANCE = 0.3
GROUND_TRUTH_ALPHA = 0.075


@dataclass(frozen=True)
class BeatSeries:
    s1_onsets: np.ndarray  # frame indices
    frame_rate_hz: int = FRAME_RATE_HZ

    def __post_init__(self):
        onsets = np.asarray(self.s1_onsets, dtype=np.int64)
        if np.any(np.diff(onsets) <= 0):
            raise ValueError("S1 onsets must be strictly increasing")
        object.__setattr__(self, "s1_onsets", onsets)

    @property
    def deltas(self):
        return np.diff(self.s1_onsets)

    @property
    def onset_times_s(self):
        return self.s1_onsets / self.frame_rate_hz


@dataclass(frozen=True)
class KalmanConfig:
    process_variance: float = 0.1    # BPM^2 per beat, random walk
    measurement_variance: float = 4.0
    initial_variance: float = 100.0

    def __post_init__(self):
        if min(self.process_variance, self.measurement_variance, self.initial_variance) <= 0:
            raise ValueError("Kalman variances must be positive")


@dataclass(frozen=True)
class HrEstimate:
    times_s: np.ndarray  # time each interval completes (second onset)
    bpm_raw: np.ndarray
    bpm_filtered: np.ndarray


@dataclass(frozen=True)
class HrvEstimate:
    value_ms: float
    retained_count: int
    rejected_count: int


def find_beats(labels, frame_rate_hz=FRAME_RATE_HZ):
    """Frames where an S1 run starts; a run already open at frame 0 counts."""
    frame_rate_hz = getattr(labels, "frame_rate_hz", frame_rate_hz)
    is_s1 = np.asarray(getattr(labels, "labels", labels)) == S1
    onsets = np.flatnonzero(is_s1 & ~np.concatenate([[False], is_s1[:-1]]))
    return BeatSeries(onsets, frame_rate_hz)


def kalman_filter(measurements, cfg=None):
    """Scalar random-walk Kalman filter; the first measurement initialises the state."""
    cfg = cfg or KalmanConfig()
    z = np.asarray(measurements, dtype=np.float64)
    out = np.empty_like(z)
    if z.size == 0:
        return out
    x, p = z[0], cfg.initial_variance
    out[0] = x
    for i in range(1, z.size):
        p += cfg.process_variance
        gain = p / (p + cfg.measurement_variance)
        x += gain * (z[i] - x)
        p *= 1.0 - gain
        out[i] = x
    return out


def estimate_heart_rate(beats, cfg=None):
    deltas = beats.deltas
    if deltas.size == 0:
        raise NoBeats("need at least two S1 onsets to measure a heart rate")
    raw = 60.0 / (deltas / beats.frame_rate_hz)
    return HrEstimate(beats.s1_onsets[1:] / beats.frame_rate_hz, raw, kalman_filter(raw, cfg))


def estimate_hrv(beats, frame_rate_hz=FRAME_RATE_HZ):
    """Std (population) of inter-beat intervals in ms after local-mean outlier rejection.

    ``deltas[i]`` for ``i >= 1`` is kept when it lies within 30% of the mean of
    up to four preceding intervals; ``deltas[0]`` only seeds the window.
    """
    deltas = np.asarray(getattr(beats, "deltas", beats), dtype=np.float64)
    rate = getattr(beats, "frame_rate_hz", frame_rate_hz)
    if deltas.size < 2:
        raise NoBeats("need at least two inter-beat intervals")
    retained = []
    for i in range(1, deltas.size):
        m = deltas[max(i - HRV_WINDOW, 0):i].mean()
        if m * (1 - HRV_TOLERANCE) <= deltas[i] <= m * (1 + HRV_TOLERANCE):
            retained.append(deltas[i])
    if not retained:
        raise AllRejected("every interval was rejected as an outlier")
    retained_ms = np.asarray(retained) / rate * 1000.0
    return HrvEstimate(float(np.std(retained_ms)), len(retained), deltas.size - 1 - len(retained))


def smooth_ground_truth(raw_hr, alpha=GROUND_TRUTH_ALPHA):
    """Exponential smoothing s(t) = a x(t) + (1 - a) s(t - 1), with s(0) = x(0)."""
    x = np.asarray(raw_hr, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("no heart-rate samples to smooth")
    if not 0 < alpha <= 1:
        raise BadAlpha(f"alpha must be in (0, 1], got {alpha}")
    s = np.empty_like(x)
    s[0] = x[0]
    for t in range(1, x.size):
        s[t] = alpha * x[t] + (1 - alpha) * s[t - 1]
    return s


def ground_truth_hr(rpeak_times_s, alpha=GROUND_TRUTH_ALPHA):
    """(times, smoothed BPM) from reference R-peaks, stamped at the later peak."""
    peaks = np.asarray(rpeak_times_s, dtype=np.float64)
    if peaks.size < 2:
        raise NoBeats("need at least two R-peaks")
    raw = 60.0 / np.diff(peaks)
    return peaks[1:], smooth_ground_truth(raw, alpha)


def ground_truth_hrv(rpeak_times_s):
    """Reference HRV via the same rejection rule, applied to R-R intervals."""
    deltas_ms = np.diff(np.asarray(rpeak_times_s, dtype=np.float64)) * 1000.0
    return estimate_hrv(deltas_ms, frame_rate_hz=1000)
