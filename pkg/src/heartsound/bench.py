"""Per-stage latency for one second of audio."""

from dataclasses import asdict, dataclass
import hashlib
import statistics
import time

from .features import extract_features
from .forest import predict_emissions
from .hsmm import DurationModel, hsmm_decode
from .synth import SynthConfig, generate

MIN_REPEATS = 30


@dataclass(frozen=True)
class LatencyReport:
    features_ms: float
    emissions_ms: float
    viterbi_ms: float
    total_ms: float
    repeats: int
    audio_sha256: str

    def rows(self):
        return list(asdict(self).items())


def bench(model, repeats=MIN_REPEATS, seed=0, durations=None):
    """Median wall time of each stage over ``repeats`` runs on 1 s of synthetic audio.

    ``total_ms`` is the sum of the stage medians plus the median time spent
    between stages, so it is never below the sum of its parts.
    """
    repeats = max(int(repeats), MIN_REPEATS)
    durations = durations or DurationModel()
    audio = generate(SynthConfig(duration_s=1.0, mean_bpm=70.0, snr_db=20.0, rng_seed=seed)).audio
    clock = time.perf_counter
    feats_t, emis_t, vit_t, over_t = [], [], [], []
    for _ in range(repeats):
        t0 = clock()
        feats = extract_features(audio)
        t1 = clock()
        probs = predict_emissions(model, feats)
        t2 = clock()
        hsmm_decode(probs, durations)
        t3 = clock()
        feats_t.append(t1 - t0)
        emis_t.append(t2 - t1)
        vit_t.append(t3 - t2)
        over_t.append(max(0.0, (t3 - t0) - (t1 - t0) - (t2 - t1) - (t3 - t2)))
    med = [1000.0 * statistics.median(x) for x in (feats_t, emis_t, vit_t, over_t)]
    return LatencyReport(
        features_ms=med[0],
        emissions_ms=med[1],
        viterbi_ms=med[2],
        total_ms=sum(med),
        repeats=repeats,
        audio_sha256=hashlib.sha256(audio.samples.tobytes()).hexdigest(),
    )
