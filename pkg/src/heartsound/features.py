"""Log-magnitude STFT features at 100 frames per second."""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput, TooShort, UnsupportedRate

SAMPLE_RATE_HZ = 500
WINDOW = 16
HOP = 5
N_BINS = WINDOW // 2 + 1
FRAME_RATE_HZ = SAMPLE_RATE_HZ // HOP
LOG_FLOOR = 1e-10
PCM_SCALE = 32768.0


@dataclass(frozen=True)
class AudioSegment:
    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("audio must be mono (1-D)")
        if self.sample_rate_hz <= 0:
            raise UnsupportedRate(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteInput("audio contains NaN or infinite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    @classmethod
    def from_pcm16(cls, pcm, sample_rate_hz=SAMPLE_RATE_HZ):
        return cls(np.asarray(pcm, dtype=np.int16) / PCM_SCALE, sample_rate_hz)


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray  # (n_frames, 9)
    frame_rate_hz: int = FRAME_RATE_HZ

    def __len__(self):
        return self.frames.shape[0]


def hann(length=WINDOW):
    """Symmetric Hann window, 0.5 * (1 - cos(2 pi n / (L - 1)))."""
    n = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (length - 1)))


def frame_count(num_samples):
    if num_samples < WINDOW:
        return 0
    return (num_samples - WINDOW) // HOP + 1


def stft_magnitudes(samples):
    """|X_b| for every complete frame; unnormalised forward transform."""
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    n = frame_count(samples.size)
    frames = np.lib.stride_tricks.sliding_window_view(samples, WINDOW)[::HOP][:n]
    return np.abs(np.fft.rfft(frames * hann(), axis=1))


def extract_features(audio):
    """Frame ``k`` uses samples ``[5k, 5k + 16)``; a trailing partial frame is dropped."""
    if audio.sample_rate_hz != SAMPLE_RATE_HZ:
        raise UnsupportedRate(
            f"features are defined at {SAMPLE_RATE_HZ} Hz, got {audio.sample_rate_hz} Hz"
        )
    samples = np.asarray(audio.samples, dtype=np.float64)
    if samples.size < WINDOW:
        raise TooShort(f"need at least {WINDOW} samples, got {samples.size}")
    if not np.all(np.isfinite(samples)):
        raise NonFiniteInput("audio contains NaN or infinite samples")
    mags = stft_magnitudes(samples)
    return FeatureMatrix(np.log(np.maximum(mags, LOG_FLOOR)))
