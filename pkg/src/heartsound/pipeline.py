"""Whole-recording and chunked (streaming) execution of the analysis chain."""

from dataclasses import dataclass, field

import numpy as np

from .errors import HeartSoundError
from .features import FRAME_RATE_HZ, HOP, SAMPLE_RATE_HZ, AudioSegment, extract_features
from .forest import derive_frame_labels, predict_emissions, train_forest
from .heartrate import KalmanConfig, estimate_heart_rate, estimate_hrv, find_beats
from .hsmm import DurationModel, StateSequence, hsmm_decode
from .synth import SynthConfig, generate

CHUNK_OVERLAP_S = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    model_path: str = None
    durations: DurationModel = field(default_factory=DurationModel)
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    chunk_length_s: float = 10.0

    def __post_init__(self):
        if self.chunk_length_s < 1:
            raise ValueError("chunk_length_s must be at least 1 s")


@dataclass(frozen=True)
class PipelineResult:
    states: StateSequence
    emissions: np.ndarray
    beats: object
    hr: object = None
    hrv: object = None


def segment_audio(audio, model, durations=None):
    """Features, emissions and decoded states for one contiguous recording."""
    feats = extract_features(audio)
    probs = predict_emissions(model, feats)
    return hsmm_decode(probs, durations or DurationModel()), probs


def _estimates(states, kalman):
    beats = find_beats(states)
    hr = estimate_heart_rate(beats, kalman) if beats.deltas.size >= 1 else None
    try:
        hrv = estimate_hrv(beats)
    except HeartSoundError:
        hrv = None
    return beats, hr, hrv


def run_pipeline(audio, model, cfg=None):
    cfg = cfg or PipelineConfig()
    states, probs = segment_audio(audio, model, cfg.durations)
    beats, hr, hrv = _estimates(states, cfg.kalman)
    return PipelineResult(states, probs, beats, hr, hrv)


def _chunk_step(chunk_length_s, overlap_s):
    length = int(round(chunk_length_s * SAMPLE_RATE_HZ))
    step = length - int(round(overlap_s * SAMPLE_RATE_HZ))
    step -= step % HOP
    if step <= 0:
        raise ValueError("chunk must be longer than the overlap")
    return length, step


def chunk_bounds(num_samples, chunk_length_s, overlap_s=CHUNK_OVERLAP_S):
    """Sample ranges [start, stop) of the overlapping chunks; starts sit on the hop grid."""
    length, step = _chunk_step(chunk_length_s, overlap_s)
    bounds = []
    start = 0
    while True:
        stop = min(start + length, num_samples)
        bounds.append((start, stop))
        if stop >= num_samples:
            return bounds
        start += step


def stream_states(blocks, model, durations=None, chunk_length_s=10.0, overlap_s=CHUNK_OVERLAP_S):
    """Decode audio arriving as sample blocks; yield ``(first_frame, labels, probs)``.

    Each yielded slice is final and slices are contiguous. Only the current
    chunk is buffered. Frames inside an overlap come from the later chunk.
    """
    durations = durations or DurationModel()
    length, step = _chunk_step(chunk_length_s, overlap_s)
    it = iter(blocks)
    buf = np.zeros(0)
    exhausted = False
    chunk_start = 0  # absolute sample index of buf[0]
    emitted = 0      # absolute frame index of the next frame to yield
    index = 0
    while True:
        # one sample past the chunk tells us whether this chunk is the last
        while buf.size <= length and not exhausted:
            block = next(it, None)
            if block is None:
                exhausted = True
            else:
                buf = np.concatenate([buf, np.asarray(block, dtype=np.float64).ravel()])
        final = exhausted and buf.size <= length
        try:
            states, probs = segment_audio(AudioSegment(buf[:length]), model, durations)
        except HeartSoundError as exc:
            exc.chunk_index = index
            exc.args = (f"chunk {index}: {exc}",)
            raise
        first = chunk_start // HOP
        stop = len(states) if final else step // HOP
        yield emitted, states.labels[emitted - first:stop], probs[emitted - first:stop]
        emitted = first + stop
        if final:
            return
        buf = buf[step:]
        chunk_start += step
        index += 1


def run_pipeline_streaming(blocks, model, cfg=None):
    """Chunked counterpart of :func:`run_pipeline`; identical output format."""
    cfg = cfg or PipelineConfig()
    labels, probs = [], []
    for _, lab, p in stream_states(blocks, model, cfg.durations, cfg.chunk_length_s):
        labels.append(lab)
        probs.append(p)
    states = StateSequence(np.concatenate(labels) if labels else np.zeros(0, dtype=np.int8))
    beats, hr, hrv = _estimates(states, cfg.kalman)
    return PipelineResult(states, np.concatenate(probs) if probs else np.zeros(0), beats, hr, hrv)


def training_frames(audio, rpeak_times_s, durations=None):
    feats = extract_features(audio)
    labels = derive_frame_labels(rpeak_times_s, len(feats), FRAME_RATE_HZ, durations)
    return feats.frames, labels


def train_from_recordings(pairs, rng_seed=0, durations=None):
    """Fit the forest on ``[(audio, rpeak_times_s), ...]`` pooled together."""
    X, y = [], []
    for audio, peaks in pairs:
        f, l = training_frames(audio, peaks, durations)
        X.append(f)
        y.append(l)
    return train_forest(np.concatenate(X), np.concatenate(y), rng_seed)


def synthetic_training_set(n_recordings=4, seed=0, duration_s=60.0, snr_db=20.0,
                           bpm_range=(60.0, 100.0), jitter_ms=20.0):
    """Recordings with BPM spread evenly over ``bpm_range``; seeds ``seed, seed+1, ...``."""
    bpms = np.linspace(bpm_range[0], bpm_range[1], n_recordings)
    return [
        generate(SynthConfig(duration_s=duration_s, mean_bpm=float(b), bpm_jitter_std_ms=jitter_ms,
                             snr_db=snr_db, rng_seed=seed + i))
        for i, b in enumerate(bpms)
    ]
