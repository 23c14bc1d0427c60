"""Command-line entry point: ``heartsound <command> ...``.

Exit status is 0 on success, 2 for bad input (missing or malformed files,
invalid parameters) and 1 for anything unexpected.
"""

import argparse
import csv
import logging
import sys

import numpy as np

from . import io
from .bench import MIN_REPEATS, bench
from .errors import InputError
from .evaluation import compare_hr, compare_hrv, score_s1_localisation
from .forest import load_forest, save_forest
from .heartrate import (
    GROUND_TRUTH_ALPHA, KalmanConfig, estimate_heart_rate, estimate_hrv, find_beats,
    ground_truth_hr, ground_truth_hrv,
)
from .hsmm import STATE_NAMES, DurationModel
from .pipeline import (
    CHUNK_OVERLAP_S, segment_audio, stream_states, synthetic_training_set, train_from_recordings,
)
from .synth import NOISE_KINDS, SynthConfig, generate

log = logging.getLogger("heartsound")


def _durations(args):
    d = DurationModel()
    means = list(d.means_s)
    stds = list(d.stds_s)
    for i, name in enumerate(("s1", "systole", "s2", "diastole")):
        m = getattr(args, f"{name}_mean", None)
        s = getattr(args, f"{name}_std", None)
        if m is not None:
            means[i] = m
        if s is not None:
            stds[i] = s
    try:
        return DurationModel(tuple(means), tuple(stds))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _add_duration_args(p):
    g = p.add_argument_group("duration model overrides (seconds)")
    for name in ("s1", "systole", "s2", "diastole"):
        g.add_argument(f"--{name}-mean", type=float)
        g.add_argument(f"--{name}-std", type=float)


def cmd_synth(args):
    cfg = SynthConfig(
        duration_s=args.duration, mean_bpm=args.bpm, bpm_jitter_std_ms=args.jitter_ms,
        snr_db=args.snr_db, rng_seed=args.seed, noise=args.noise,
    )
    rec = generate(cfg)
    io.write_wav(args.out, rec.audio)
    if args.peaks:
        io.write_peaks(args.peaks, rec.rpeak_times_s)
    if args.states:
        io.write_labels(args.states, rec.true_states)
    log.info("wrote %.1f s, %d R-peaks, SNR %.2f dB", cfg.duration_s,
             rec.rpeak_times_s.size, rec.measured_snr_db())


def cmd_train(args):
    if args.wav:
        if len(args.wav) != len(args.peaks or []):
            raise InputError("give one --peaks file per --wav file")
        pairs = [(io.read_wav(w), io.read_peaks(p)) for w, p in zip(args.wav, args.peaks)]
    else:
        records = synthetic_training_set(args.synthetic, seed=args.seed, snr_db=args.snr_db)
        pairs = [(r.audio, r.rpeak_times_s) for r in records]
    model = train_from_recordings(pairs, rng_seed=args.seed, durations=_durations(args))
    save_forest(model, args.model)
    log.info("trained forest on %d recordings", len(pairs))


def cmd_segment(args):
    model = load_forest(args.model)
    durations = _durations(args)
    need_all = bool(args.figure or args.emissions)
    labels_all, probs_all = [], []
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(io.LABELS_HEADER)
        if args.whole_file:
            audio = io.read_wav(args.wav)
            states, probs = segment_audio(audio, model, durations)
            pieces = [(0, states.labels, probs)]
        else:
            pieces = stream_states(io.iter_wav_blocks(args.wav), model, durations,
                                   args.chunk_s, CHUNK_OVERLAP_S)
        for first, labels, probs in pieces:
            for i, s in enumerate(labels):
                writer.writerow((first + i, STATE_NAMES[s]))
            if need_all:
                labels_all.append(labels)
                probs_all.append(probs)
    if need_all:
        labels = np.concatenate(labels_all)
        probs = np.concatenate(probs_all)
        if args.emissions:
            io.write_csv(args.emissions, ("frame", "p_sound"), enumerate(probs.tolist()))
        if args.figure:
            from .plotting import plot_segmentation
            peaks = io.read_peaks(args.peaks) if args.peaks else None
            plot_segmentation(args.figure, labels, probs, peaks, io.read_wav(args.wav),
                              window_s=args.figure_window)


def cmd_estimate(args):
    states = io.read_labels(args.labels)
    beats = find_beats(states)
    cfg = KalmanConfig(args.process_variance, args.measurement_variance, args.initial_variance)
    hr = estimate_heart_rate(beats, cfg)
    io.write_hr(args.hr, hr)
    if args.beats:
        io.write_beats(args.beats, beats)
    if args.hrv:
        io.write_hrv(args.hrv, estimate_hrv(beats))
    if args.figure:
        from .plotting import plot_heart_rate
        plot_heart_rate(args.figure, hr)


def cmd_evaluate(args):
    states = io.read_labels(args.labels)
    peaks = io.read_peaks(args.peaks)
    rows = score_s1_localisation(states, peaks).rows()
    truth_t, truth_bpm = ground_truth_hr(peaks, args.alpha)
    if args.hr:
        hr = io.read_hr(args.hr)
    else:
        hr = estimate_heart_rate(find_beats(states))
    rows += compare_hr(hr.times_s, hr.bpm_filtered, truth_t, truth_bpm).rows()
    truth_hrv = ground_truth_hrv(peaks)
    est_hrv = estimate_hrv(find_beats(states))
    rows += [("hrv_ms", est_hrv.value_ms), ("hrv_truth_ms", truth_hrv.value_ms)]
    rows += compare_hrv(est_hrv, truth_hrv).rows()
    io.write_report(args.out, rows)
    if args.figure:
        from .plotting import plot_heart_rate
        plot_heart_rate(args.figure, hr, truth_t, truth_bpm)
    for name, value in rows:
        log.info("%s = %s", name, value)


def cmd_bench(args):
    if args.model:
        model = load_forest(args.model)
    else:
        records = synthetic_training_set(2, seed=args.seed)
        model = train_from_recordings([(r.audio, r.rpeak_times_s) for r in records], args.seed)
    report = bench(model, repeats=args.repeats, seed=args.seed, durations=_durations(args))
    io.write_report(args.out, report.rows())
    if args.figure:
        from .plotting import plot_latency
        plot_latency(args.figure, report)
    print(f"features {report.features_ms:.3f} ms | emissions {report.emissions_ms:.3f} ms | "
          f"viterbi {report.viterbi_ms:.3f} ms | total {report.total_ms:.3f} ms per 1 s of audio")


def build_parser():
    parser = argparse.ArgumentParser(prog="heartsound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic PCG recording with ground truth")
    p.add_argument("--out", required=True, help="output WAV (PCM16 mono 500 Hz)")
    p.add_argument("--peaks", help="output R-peak CSV")
    p.add_argument("--states", help="output true-state labels CSV")
    p.add_argument("--duration", type=float, default=60.0, help="seconds")
    p.add_argument("--bpm", type=float, default=70.0)
    p.add_argument("--jitter-ms", type=float, default=20.0)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--noise", choices=NOISE_KINDS, default="white")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit the emission forest")
    p.add_argument("--model", required=True, help="output forest file")
    p.add_argument("--wav", action="append", help="training WAV (repeatable)")
    p.add_argument("--peaks", action="append", help="R-peak CSV matching each --wav")
    p.add_argument("--synthetic", type=int, default=4,
                   help="without --wav, train on this many synthetic recordings")
    p.add_argument("--snr-db", type=float, default=20.0, help="SNR of synthetic training data")
    p.add_argument("--seed", type=int, default=0)
    _add_duration_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="decode cardiac states from a WAV")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True, help="output labels CSV")
    p.add_argument("--chunk-s", type=float, default=10.0)
    p.add_argument("--whole-file", action="store_true", help="decode in one pass, no chunking")
    p.add_argument("--emissions", help="optional per-frame emission CSV")
    p.add_argument("--figure", help="optional PNG of the segmentation")
    p.add_argument("--figure-window", type=float, default=10.0, help="seconds shown")
    p.add_argument("--peaks", help="R-peak CSV drawn on the figure")
    _add_duration_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("estimate", help="heart rate and HRV from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--hr", required=True, help="output HR CSV")
    p.add_argument("--hrv", help="output single-row HRV CSV")
    p.add_argument("--beats", help="output beats CSV")
    p.add_argument("--process-variance", type=float, default=KalmanConfig.process_variance)
    p.add_argument("--measurement-variance", type=float, default=KalmanConfig.measurement_variance)
    p.add_argument("--initial-variance", type=float, default=KalmanConfig.initial_variance)
    p.add_argument("--figure", help="optional PNG of the HR trace")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="score labels and HR against reference R-peaks")
    p.add_argument("--labels", required=True)
    p.add_argument("--peaks", required=True)
    p.add_argument("--hr", help="HR CSV from 'estimate' (default: recomputed from labels)")
    p.add_argument("--out", required=True, help="output report CSV")
    p.add_argument("--alpha", type=float, default=GROUND_TRUTH_ALPHA,
                   help="smoothing factor for the reference heart rate")
    p.add_argument("--figure", help="optional PNG comparing HR traces")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="per-stage latency for 1 s of audio")
    p.add_argument("--model", help="forest file (default: train a small synthetic one)")
    p.add_argument("--out", required=True, help="output report CSV")
    p.add_argument("--repeats", type=int, default=MIN_REPEATS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figure", help="optional PNG bar chart")
    _add_duration_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except InputError as exc:
        print(f"heartsound {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"heartsound {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"heartsound {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
