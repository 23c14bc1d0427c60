"""WAV and CSV file formats.

All CSVs are comma-separated with a fixed header row. Floats are written with
``repr`` so a write/read round trip is exact.

=========  =======================================
file       header
=========  =======================================
labels     frame,state          (state is S1/Systole/S2/Diastole)
beats      onset_frame,delta_frames   (delta empty on the first row)
hr         time_s,bpm_raw,bpm_filtered
hrv        hrv_ms,retained_count,rejected_count  (single row)
peaks      rpeak_time_s
report     metric,value
=========  =======================================
"""

import csv
import os
import wave

import numpy as np

from .errors import BadFormat, FormatError, NotFound
from .features import PCM_SCALE, SAMPLE_RATE_HZ, AudioSegment
from .heartrate import BeatSeries, HrEstimate, HrvEstimate
from .hsmm import STATE_NAMES, StateSequence

LABELS_HEADER = ("frame", "state")
BEATS_HEADER = ("onset_frame", "delta_frames")
HR_HEADER = ("time_s", "bpm_raw", "bpm_filtered")
HRV_HEADER = ("hrv_ms", "retained_count", "rejected_count")
PEAKS_HEADER = ("rpeak_time_s",)
REPORT_HEADER = ("metric", "value")


def _open_wav(path):
    if not os.path.exists(path):
        raise NotFound(f"no such file: {path}")
    try:
        return wave.open(str(path), "rb")
    except (wave.Error, EOFError) as exc:
        raise BadFormat("container", str(exc)) from None


def read_wav(path):
    """PCM16 mono 500 Hz WAV to an AudioSegment scaled by 1/32768."""
    with _open_wav(path) as wf:
        _check_wav(wf)
        pcm = np.frombuffer(wf.readframes(wf.getnframes()), dtype="<i2")
    return AudioSegment(pcm / PCM_SCALE, SAMPLE_RATE_HZ)


def iter_wav_blocks(path, block_samples=5000):
    """Yield float sample blocks without loading the whole file."""
    with _open_wav(path) as wf:
        _check_wav(wf)
        while True:
            raw = wf.readframes(block_samples)
            if not raw:
                return
            yield np.frombuffer(raw, dtype="<i2") / PCM_SCALE


def _check_wav(wf):
    if wf.getcomptype() != "NONE":
        raise BadFormat("compression", f"expected uncompressed PCM, got {wf.getcomptype()}")
    if wf.getnchannels() != 1:
        raise BadFormat("channels", f"expected 1, got {wf.getnchannels()}")
    if wf.getsampwidth() != 2:
        raise BadFormat("sample_width", f"expected 16-bit, got {8 * wf.getsampwidth()}-bit")
    if wf.getframerate() != SAMPLE_RATE_HZ:
        raise BadFormat("sample_rate", f"expected {SAMPLE_RATE_HZ} Hz, got {wf.getframerate()} Hz")


def write_wav(path, audio):
    samples = np.asarray(getattr(audio, "samples", audio), dtype=np.float64)
    pcm = np.clip(np.round(samples * PCM_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE_HZ)
        wf.writeframes(pcm.tobytes())


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path, header):
    if not os.path.exists(path):
        raise NotFound(f"no such file: {path}")
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        got = tuple(next(r, ()))
        if got != tuple(header):
            raise FormatError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        return [row for row in r if row]


def _parse(path, row, kinds):
    if len(row) != len(kinds):
        raise FormatError(f"{path}: expected {len(kinds)} columns, got {len(row)}")
    try:
        return [k(v) for k, v in zip(kinds, row)]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_labels(path, states, first_frame=0):
    labels = getattr(states, "labels", states)
    write_csv(path, LABELS_HEADER,
              ((first_frame + i, STATE_NAMES[s]) for i, s in enumerate(labels)))


def read_labels(path):
    rows = read_csv(path, LABELS_HEADER)
    index = {name: i for i, name in enumerate(STATE_NAMES)}
    labels = np.empty(len(rows), dtype=np.int8)
    for k, row in enumerate(rows):
        frame, name = _parse(path, row, (int, str))
        if frame != k:
            raise FormatError(f"{path}: frames must be consecutive from 0 (row {k} has {frame})")
        if name not in index:
            raise FormatError(f"{path}: unknown state {name!r}")
        labels[k] = index[name]
    return StateSequence(labels)


def write_beats(path, beats):
    onsets = beats.s1_onsets
    rows = [(int(o), "" if i == 0 else int(o - onsets[i - 1])) for i, o in enumerate(onsets)]
    write_csv(path, BEATS_HEADER, rows)


def read_beats(path):
    rows = read_csv(path, BEATS_HEADER)
    onsets = [_parse(path, row[:1], (int,))[0] for row in rows]
    return BeatSeries(np.asarray(onsets, dtype=np.int64))


def write_hr(path, hr):
    write_csv(path, HR_HEADER, zip(hr.times_s.tolist(), hr.bpm_raw.tolist(), hr.bpm_filtered.tolist()))


def read_hr(path):
    rows = [_parse(path, row, (float, float, float)) for row in read_csv(path, HR_HEADER)]
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    return HrEstimate(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())


def write_hrv(path, hrv):
    write_csv(path, HRV_HEADER, [(float(hrv.value_ms), hrv.retained_count, hrv.rejected_count)])


def read_hrv(path):
    rows = read_csv(path, HRV_HEADER)
    if len(rows) != 1:
        raise FormatError(f"{path}: expected exactly one HRV row")
    value, kept, dropped = _parse(path, rows[0], (float, int, int))
    return HrvEstimate(value, kept, dropped)


def write_peaks(path, peaks_s):
    write_csv(path, PEAKS_HEADER, ([float(p)] for p in peaks_s))


def read_peaks(path):
    return np.asarray([_parse(path, row, (float,))[0] for row in read_csv(path, PEAKS_HEADER)],
                      dtype=np.float64)


def write_report(path, rows):
    write_csv(path, REPORT_HEADER, rows)


def read_report(path):
    out = {}
    for row in read_csv(path, REPORT_HEADER):
        name, value = _parse(path, row, (str, str))
        try:
            num = float(value)
            out[name] = int(num) if value.lstrip("-").isdigit() else num
        except ValueError:
            out[name] = value
    return out

