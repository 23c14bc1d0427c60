import wave

import numpy as np
import pytest

from heartsound import io
from heartsound.errors import BadFormat, FormatError, NotFound
from heartsound.features import AudioSegment
from heartsound.heartrate import BeatSeries, HrEstimate, HrvEstimate
from heartsound.hsmm import StateSequence


def _raw_wav(path, data, channels=1, width=2, rate=500):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(data)


def test_wav_round_trip(tmp_path, rng):
    pcm = rng.integers(-32768, 32768, 1234).astype("<i2")
    audio = AudioSegment(pcm / 32768.0)
    io.write_wav(tmp_path / "a.wav", audio)
    back = io.read_wav(tmp_path / "a.wav")
    np.testing.assert_array_equal(back.samples, audio.samples)
    blocks = list(io.iter_wav_blocks(tmp_path / "a.wav", block_samples=100))
    assert len(blocks) == 13
    np.testing.assert_array_equal(np.concatenate(blocks), audio.samples)


def test_pcm_scaling(tmp_path):
    _raw_wav(tmp_path / "h.wav", np.array([16384, -32768], dtype="<i2").tobytes())
    assert io.read_wav(tmp_path / "h.wav").samples.tolist() == [0.5, -1.0]


@pytest.mark.parametrize("kwargs,field", [
    (dict(channels=2), "channels"),
    (dict(width=1), "sample_width"),
    (dict(rate=1000), "sample_rate"),
])
def test_bad_wav(tmp_path, kwargs, field):
    _raw_wav(tmp_path / "b.wav", b"\x00" * 400, **kwargs)
    with pytest.raises(BadFormat) as err:
        io.read_wav(tmp_path / "b.wav")
    assert err.value.field == field


def test_not_a_wav(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"definitely not RIFF")
    with pytest.raises(BadFormat):
        io.read_wav(tmp_path / "x.wav")


def test_missing(tmp_path):
    with pytest.raises(NotFound):
        io.read_wav(tmp_path / "nope.wav")
    with pytest.raises(FileNotFoundError):
        io.read_peaks(tmp_path / "nope.csv")


def test_labels_round_trip(tmp_path):
    labels = np.array([3, 3, 0, 0, 1, 2, 3, 0], dtype=np.int8)
    io.write_labels(tmp_path / "l.csv", StateSequence(labels))
    text = (tmp_path / "l.csv").read_text().splitlines()
    assert text[0] == "frame,state" and text[1] == "0,Diastole" and text[3] == "2,S1"
    np.testing.assert_array_equal(io.read_labels(tmp_path / "l.csv").labels, labels)


def test_labels_bad_content(tmp_path):
    (tmp_path / "l.csv").write_text("frame,state\n0,S1\n2,S1\n")
    with pytest.raises(FormatError):
        io.read_labels(tmp_path / "l.csv")
    (tmp_path / "l.csv").write_text("frame,state\n0,Murmur\n")
    with pytest.raises(FormatError):
        io.read_labels(tmp_path / "l.csv")


def test_beats_round_trip(tmp_path):
    io.write_beats(tmp_path / "b.csv", BeatSeries(np.array([3, 90, 180])))
    assert (tmp_path / "b.csv").read_text() == "onset_frame,delta_frames\n3,\n90,87\n180,90\n"
    assert io.read_beats(tmp_path / "b.csv").s1_onsets.tolist() == [3, 90, 180]


def test_hr_round_trip(tmp_path, rng):
    hr = HrEstimate(np.array([0.86, 1.7]), rng.uniform(50, 90, 2), rng.uniform(50, 90, 2))
    io.write_hr(tmp_path / "h.csv", hr)
    back = io.read_hr(tmp_path / "h.csv")
    for a, b in ((hr.times_s, back.times_s), (hr.bpm_raw, back.bpm_raw),
                 (hr.bpm_filtered, back.bpm_filtered)):
        np.testing.assert_array_equal(a, b)


def test_hrv_round_trip(tmp_path):
    io.write_hrv(tmp_path / "v.csv", HrvEstimate(12.5, 40, 2))
    assert io.read_hrv(tmp_path / "v.csv") == HrvEstimate(12.5, 40, 2)


def test_peaks_and_report(tmp_path):
    io.write_peaks(tmp_path / "p.csv", [0.1, 1.0, 1.95])
    assert io.read_peaks(tmp_path / "p.csv").tolist() == [0.1, 1.0, 1.95]
    io.write_report(tmp_path / "r.csv", [("s1_f1", 0.5), ("n", 3)])
    assert io.read_report(tmp_path / "r.csv") == {"s1_f1": 0.5, "n": 3}


@pytest.mark.parametrize("reader", [io.read_labels, io.read_beats, io.read_hr, io.read_hrv,
                                    io.read_peaks, io.read_report])
def test_wrong_header(tmp_path, reader):
    (tmp_path / "w.csv").write_text("foo,bar\n1,2\n")
    with pytest.raises(FormatError):
        reader(tmp_path / "w.csv")


def test_non_numeric(tmp_path):
    (tmp_path / "p.csv").write_text("rpeak_time_s\nabc\n")
    with pytest.raises(FormatError):
        io.read_peaks(tmp_path / "p.csv")
