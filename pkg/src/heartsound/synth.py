"""Synthetic phonocardiograms with exact ground truth.

Each beat places a Gaussian-envelope S1 burst at its R-peak and a quieter S2
burst after the systole, using the default duration-model means. SNR is an
active-level ratio: signal power is measured only over the S1/S2 spans, and
the noise is scaled so the realised ratio equals the request exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BadConfig
from .features import FRAME_RATE_HZ, SAMPLE_RATE_HZ, AudioSegment, frame_count
from .hsmm import DIASTOLE, S1, S2, SYSTOLE, DurationModel, StateSequence

NOISE_KINDS = ("white", "music", "speech", "footsteps")
PEAK_LEVEL = 0.9


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = 60.0
    mean_bpm: float = 70.0
    bpm_jitter_std_ms: float = 0.0
    snr_db: float = 20.0
    s1_carrier_hz: float = 50.0
    s2_carrier_hz: float = 70.0
    s2_amplitude_ratio: float = 0.5
    rng_seed: int = 0
    noise: str = "white"

    def validate(self):
        if not self.duration_s > 0:
            raise BadConfig("duration_s must be positive")
        if not 30 <= self.mean_bpm <= 220:
            raise BadConfig("mean_bpm must lie in [30, 220]")
        if not np.isfinite(self.snr_db):
            raise BadConfig("snr_db must be finite")
        if not 0 < self.s2_amplitude_ratio <= 1:
            raise BadConfig("s2_amplitude_ratio must lie in (0, 1]")
        if self.bpm_jitter_std_ms < 0:
            raise BadConfig("bpm_jitter_std_ms must be non-negative")
        if self.noise not in NOISE_KINDS:
            raise BadConfig(f"noise must be one of {NOISE_KINDS}")
        nyquist = SAMPLE_RATE_HZ / 2
        if not (0 < self.s1_carrier_hz < nyquist and 0 < self.s2_carrier_hz < nyquist):
            raise BadConfig("carriers must lie below the Nyquist frequency")
        return self


@dataclass(frozen=True)
class SynthRecord:
    audio: AudioSegment
    rpeak_times_s: np.ndarray
    true_states: StateSequence
    true_deltas_ms: np.ndarray
    signal: np.ndarray = field(repr=False)      # noiseless component, same scale as audio
    burst_mask: np.ndarray = field(repr=False)  # samples inside S1/S2 spans

    def measured_snr_db(self):
        noise = self.audio.samples - self.signal
        return 10 * np.log10(np.mean(self.signal[self.burst_mask] ** 2) / np.mean(noise ** 2))


def _burst(t, start, length, carrier_hz):
    centre = start + length / 2
    width = length / 4
    env = np.exp(-0.5 * ((t - centre) / width) ** 2)
    return env * np.sin(2 * np.pi * carrier_hz * (t - start))


def _noise(kind, n, rng):
    t = np.arange(n) / SAMPLE_RATE_HZ
    white = rng.standard_normal(n)
    if kind == "white":
        return white
    if kind == "music":
        # a few sustained tones that change every half second plus a little hiss
        out = 0.1 * white
        for start in np.arange(0, t[-1] + 0.5, 0.5):
            seg = (t >= start) & (t < start + 0.5)
            for f in rng.uniform(30, 240, size=3):
                out[seg] += np.sin(2 * np.pi * f * t[seg] + rng.uniform(0, 2 * np.pi))
        return out
    if kind == "speech":
        # 80-200 Hz band noise, amplitude-modulated at a syllable rate
        spec = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(n, 1 / SAMPLE_RATE_HZ)
        spec[(freqs < 80) | (freqs > 200)] = 0
        band = np.fft.irfft(spec, n)
        return band * (1 + np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi)))
    # footsteps: low-frequency thumps at about two steps per second
    out = 0.05 * white
    step = 0.5
    for onset in np.arange(rng.uniform(0, step), t[-1], step):
        out += 3 * _burst(t, onset + rng.normal(0, 0.02), 0.08, 25.0)
    return out


def _beat_times(cfg, rng, min_interval_s):
    mean_s = 60.0 / cfg.mean_bpm
    jitter_s = cfg.bpm_jitter_std_ms / 1000.0

    def interval():
        return max(rng.normal(mean_s, jitter_s) if jitter_s > 0 else mean_s, min_interval_s)

    # one virtual beat before t = 0 so the recording opens mid-cycle
    t = -rng.uniform(0, interval())
    peaks = []
    while t < cfg.duration_s:
        peaks.append(t)
        t += interval()
    return np.asarray(peaks)


def state_labels(peaks_s, num_frames, durations, frame_rate_hz=FRAME_RATE_HZ):
    """Per-frame states implied by R-peaks and the mean sound/systole durations."""
    m = durations.means_s
    edges = np.cumsum([m[S1], m[SYSTOLE], m[S2]])
    times = np.arange(num_frames) / frame_rate_hz
    idx = np.searchsorted(peaks_s, times, side="right") - 1
    elapsed = times - peaks_s[idx]
    states = np.full(num_frames, DIASTOLE, dtype=np.int8)
    states[elapsed < edges[2]] = S2
    states[elapsed < edges[1]] = SYSTOLE
    states[elapsed < edges[0]] = S1
    return states


def generate(cfg, durations=None):
    """Deterministic synthetic recording for ``cfg``."""
    cfg.validate()
    durations = durations or DurationModel()
    rng = np.random.default_rng(cfg.rng_seed)
    m = durations.means_s
    sounds_s = m[S1] + m[SYSTOLE] + m[S2]
    # leave at least one frame of diastole so the cycle order is preserved
    peaks = _beat_times(cfg, rng, sounds_s + 1.0 / FRAME_RATE_HZ)

    n = int(round(cfg.duration_s * SAMPLE_RATE_HZ))
    t = np.arange(n) / SAMPLE_RATE_HZ
    clean = np.zeros(n)
    active = np.zeros(n, dtype=bool)
    s2_offset = m[S1] + m[SYSTOLE]
    for r in peaks:
        clean += _burst(t, r, m[S1], cfg.s1_carrier_hz)
        clean += cfg.s2_amplitude_ratio * _burst(t, r + s2_offset, m[S2], cfg.s2_carrier_hz)
        active |= (t >= r) & (t < r + m[S1])
        active |= (t >= r + s2_offset) & (t < r + s2_offset + m[S2])
    if not active.any():
        raise BadConfig("recording too short to contain a heart sound")

    noise = _noise(cfg.noise, n, rng)
    target = np.mean(clean[active] ** 2) / 10 ** (cfg.snr_db / 10)
    noise *= np.sqrt(target / np.mean(noise ** 2))
    mix = clean + noise
    scale = PEAK_LEVEL / np.max(np.abs(mix))

    states = state_labels(peaks, frame_count(n), durations)
    reported = peaks[peaks >= 0]
    return SynthRecord(
        audio=AudioSegment(mix * scale),
        rpeak_times_s=reported,
        true_states=StateSequence(states),
        true_deltas_ms=np.diff(reported) * 1000.0,
        signal=clean * scale,
        burst_mask=active,
    )
