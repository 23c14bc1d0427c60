"""Report figures written next to the CSV outputs (Agg backend, PNG)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .hsmm import STATE_NAMES  # noqa: E402

STATE_COLOURS = ("#c0392b", "#f5b7b1", "#2874a6", "#aed6f1")
# fixed metadata keeps the PNG bytes reproducible
_PNG_META = {"Software": None}

plt.rcParams.update({
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
})


def _shade_states(ax, labels, frame_rate_hz):
    labels = np.asarray(labels)
    if labels.size == 0:
        return
    edges = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], edges])
    stops = np.concatenate([edges, [labels.size]])
    for a, b in zip(starts, stops):
        ax.axvspan(a / frame_rate_hz, b / frame_rate_hz, color=STATE_COLOURS[labels[a]],
                   alpha=0.35, lw=0)


def plot_segmentation(path, labels, emissions=None, rpeaks_s=None, audio=None,
                      frame_rate_hz=100, window_s=None):
    """Audio and emission traces over the decoded state bands, R-peaks as ticks."""
    labels = np.asarray(getattr(labels, "labels", labels))
    nrows = 2 if audio is not None else 1
    fig, axes = plt.subplots(nrows, 1, figsize=(9, 2.4 * nrows), sharex=True, squeeze=False)
    axes = axes[:, 0]
    stop = labels.size / frame_rate_hz if window_s is None else min(window_s, labels.size / frame_rate_hz)
    if audio is not None:
        samples = np.asarray(getattr(audio, "samples", audio))
        rate = getattr(audio, "sample_rate_hz", 500)
        t = np.arange(samples.size) / rate
        axes[0].plot(t, samples, lw=0.5, color="0.2")
        axes[0].set_ylabel("amplitude")
        _shade_states(axes[0], labels, frame_rate_hz)
    ax = axes[-1]
    _shade_states(ax, labels, frame_rate_hz)
    if emissions is not None:
        emissions = np.asarray(emissions)
        ax.plot(np.arange(emissions.size) / frame_rate_hz, emissions, lw=0.8, color="k")
    ax.set_ylim(0, 1)
    ax.set_ylabel("P(sound)")
    if rpeaks_s is not None:
        for r in rpeaks_s:
            for a in axes:
                a.axvline(r, color="green", lw=0.6, ls="--")
    ax.set_xlim(0, stop)
    ax.set_xlabel("time / s")
    handles = [plt.Rectangle((0, 0), 1, 1, color=c, alpha=0.5) for c in STATE_COLOURS]
    axes[0].legend(handles, STATE_NAMES, ncol=4, loc="upper right", fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_heart_rate(path, hr, truth_times=None, truth_bpm=None):
    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(hr.times_s, hr.bpm_raw, ".", ms=3, color="0.6", label="raw")
    ax.plot(hr.times_s, hr.bpm_filtered, lw=1.2, color="k", label="Kalman")
    if truth_times is not None:
        ax.step(truth_times, truth_bpm, where="post", lw=1.0, color="green", label="reference")
    ax.set_xlabel("time / s")
    ax.set_ylabel("heart rate / BPM")
    ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_latency(path, report):
    stages = ("features_ms", "emissions_ms", "viterbi_ms")
    fig, ax = plt.subplots(figsize=(5, 2.6))
    ax.barh(stages, [getattr(report, s) for s in stages], color="0.4")
    ax.set_xscale("log")
    ax.set_xlabel("median time per 1 s of audio / ms")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
