"""Duration-explicit Viterbi decoding of the four-state cardiac cycle.

States cycle S1 -> Systole -> S2 -> Diastole -> S1 with no self or skip
transitions. Emissions are tied: S1 and S2 frames score ``log p``, Systole
and Diastole frames score ``log(1 - p)``, where ``p`` is the per-frame
probability that a heart sound is present.

A labelling is scored as

    log(1/4) + sum of frame emission terms + sum of run duration terms

Interior runs contribute ``log P_state(length)`` and must respect the state's
[min, max] frame bounds. The first and last runs may be cut by the edges of
the recording; they contribute the survivor term ``log P_state(D >= length)``
and only need ``length <= max``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import EmptyInput, OutOfRange
from .features import FRAME_RATE_HZ

S1, SYSTOLE, S2, DIASTOLE = range(4)
STATE_NAMES = ("S1", "Systole", "S2", "Diastole")
N_STATES = 4
SOUND_STATES = (S1, S2)

# Scores closer than this are treated as equal when breaking ties.
TIE_TOL = 1e-9


def next_state(s):
    return (s + 1) % N_STATES


@dataclass(frozen=True)
class DurationModel:
    """Per-state Gaussian durations in seconds, discretised on the frame grid.

    Systole/diastole defaults are the observed dataset statistics; S1/S2
    defaults are configurable estimates. Bounds default to mean +/- 3 std,
    floored at one frame.
    """

    means_s: tuple = (0.122, 0.128, 0.092, 0.356)
    stds_s: tuple = (0.022, 0.062, 0.022, 0.121)
    min_frames: tuple = None
    max_frames: tuple = None
    frame_rate_hz: int = FRAME_RATE_HZ
    _tables: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        means = tuple(float(m) for m in self.means_s)
        stds = tuple(float(s) for s in self.stds_s)
        if len(means) != N_STATES or len(stds) != N_STATES:
            raise ValueError("need one mean and one std per state")
        if min(means) <= 0 or min(stds) <= 0:
            raise ValueError("duration means and stds must be positive")
        fps = self.frame_rate_hz
        lo = self.min_frames
        hi = self.max_frames
        if lo is None:
            lo = tuple(max(1, math.ceil(round((m - 3 * s) * fps, 9))) for m, s in zip(means, stds))
        if hi is None:
            hi = tuple(max(l, math.floor(round((m + 3 * s) * fps, 9))) for m, s, l in zip(means, stds, lo))
        lo, hi = tuple(int(v) for v in lo), tuple(int(v) for v in hi)
        if any(l < 1 for l in lo) or any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"invalid duration bounds min={lo} max={hi}")
        object.__setattr__(self, "means_s", means)
        object.__setattr__(self, "stds_s", stds)
        object.__setattr__(self, "min_frames", lo)
        object.__setattr__(self, "max_frames", hi)
        object.__setattr__(self, "_tables", self._build_tables())

    def _build_tables(self):
        fps = self.frame_rate_hz
        log_pmf, log_surv = [], []
        for s in range(N_STATES):
            hi = self.max_frames[s]
            lengths = np.arange(1, hi + 1)
            mu, sd = self.means_s[s] * fps, self.stds_s[s] * fps
            dens = np.exp(-0.5 * ((lengths - mu) / sd) ** 2)
            dens[lengths < self.min_frames[s]] = 0.0
            pmf = dens / dens.sum()
            # index 0 is unused so that table[length] works directly
            with np.errstate(divide="ignore"):
                log_pmf.append(np.concatenate([[-np.inf], np.log(pmf)]))
                surv = np.cumsum(pmf[::-1])[::-1]
                log_surv.append(np.concatenate([[-np.inf], np.log(np.minimum(surv, 1.0))]))
        return {"pmf": log_pmf, "surv": log_surv}

    @property
    def max_duration(self):
        return max(self.max_frames)

    def log_pmf(self, state):
        """Array indexed by run length; entry 0 is unused."""
        return self._tables["pmf"][state]

    def log_survivor(self, state):
        return self._tables["surv"][state]

    def modal_length(self, state):
        return int(np.argmax(self.log_pmf(state)))


def duration_logmass(durations, state, length):
    """log P(run length = ``length`` frames) for ``state``; -inf below the minimum."""
    if not 1 <= length <= durations.max_frames[state]:
        raise OutOfRange(
            f"{STATE_NAMES[state]} length {length} outside [1, {durations.max_frames[state]}]"
        )
    return float(durations.log_pmf(state)[length])


@dataclass(frozen=True)
class StateSequence:
    labels: np.ndarray  # int8 state per frame
    frame_rate_hz: int = FRAME_RATE_HZ
    score: float = None

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))

    def __len__(self):
        return self.labels.size

    def runs(self):
        return run_lengths(self.labels)

    def names(self):
        return [STATE_NAMES[s] for s in self.labels]


def run_lengths(labels):
    """[(state, start, length), ...] for consecutive equal labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    starts = np.concatenate([[0], np.flatnonzero(labels[1:] != labels[:-1]) + 1])
    ends = np.concatenate([starts[1:], [labels.size]])
    return [(int(labels[a]), int(a), int(b - a)) for a, b in zip(starts, ends)]


def validate_state_sequence(labels, durations=None):
    """Raise ValueError unless runs follow the cycle and interior runs fit their bounds."""
    runs = run_lengths(labels)
    for (s, _, _), (s2, start, _) in zip(runs, runs[1:]):
        if s2 != next_state(s):
            raise ValueError(
                f"{STATE_NAMES[s]} followed by {STATE_NAMES[s2]} at frame {start}"
            )
    if durations is not None:
        for k, (s, start, length) in enumerate(runs):
            hi = durations.max_frames[s]
            lo = durations.min_frames[s] if 0 < k < len(runs) - 1 else 1
            if not lo <= length <= hi:
                raise ValueError(
                    f"{STATE_NAMES[s]} run of {length} frames at {start} outside [{lo}, {hi}]"
                )


def log_emissions(probs):
    """(4, T) per-state log-emission table from sound probabilities."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("emissions must be 1-D")
    if np.any(~(p > 0) | ~(p < 1)):
        raise ValueError("emission probabilities must lie strictly inside (0, 1)")
    sound, quiet = np.log(p), np.log1p(-p)
    return np.stack([sound, quiet, sound, quiet])


def path_score(probs, labels, durations):
    """Objective value of an explicit labelling (same terms the decoder maximises)."""
    E = log_emissions(probs)
    labels = np.asarray(labels)
    runs = run_lengths(labels)
    total = math.log(1.0 / N_STATES)
    total += float(E[labels, np.arange(labels.size)].sum())
    for k, (s, _, length) in enumerate(runs):
        boundary = k == 0 or k == len(runs) - 1
        table = durations.log_survivor(s) if boundary else durations.log_pmf(s)
        if length >= table.size:
            return -math.inf
        total += float(table[length])
    return total


def hsmm_decode(emissions, durations=None):
    """Most likely cyclic state labelling of ``emissions`` (per-frame sound probabilities).

    Runs in O(T * 4 * max_duration). Among labellings whose scores agree to
    within ``TIE_TOL`` the one starting in the earliest state wins, then the
    lexicographically smallest sequence of run lengths.
    """
    if durations is None:
        durations = DurationModel()
    p = np.asarray(getattr(emissions, "probs", emissions), dtype=np.float64)
    T = p.size
    if T == 0:
        raise EmptyInput("no emission frames to decode")
    E = log_emissions(p)
    cum = np.concatenate([np.zeros((N_STATES, 1)), np.cumsum(E, axis=1)], axis=1)

    # value[t, s]: best score of frames [t, T) when a non-first run of s starts at t
    value = np.full((T + 1, N_STATES), -np.inf)
    choice = np.zeros((T + 1, N_STATES), dtype=np.int64)
    pmf = [durations.log_pmf(s) for s in range(N_STATES)]
    surv = [durations.log_survivor(s) for s in range(N_STATES)]

    for t in range(T - 1, -1, -1):
        remaining = T - t
        for s in range(N_STATES):
            hi = min(durations.max_frames[s], remaining)
            ls = np.arange(1, hi + 1)
            seg = cum[s, t + ls] - cum[s, t]
            vals = seg + pmf[s][ls] + value[t + ls, next_state(s)]
            if remaining <= durations.max_frames[s]:
                vals[-1] = seg[-1] + surv[s][remaining]
            best = vals.max()
            if best == -np.inf:
                continue
            k = int(np.flatnonzero(vals >= best - TIE_TOL)[0])
            value[t, s] = vals[k]
            choice[t, s] = k + 1

    prior = math.log(1.0 / N_STATES)
    starts, start_vals = [], []
    for s in range(N_STATES):
        hi = min(durations.max_frames[s], T)
        ls = np.arange(1, hi + 1)
        seg = cum[s, ls] - cum[s, 0]
        vals = prior + seg + surv[s][ls] + value[ls, next_state(s)]
        if T <= durations.max_frames[s]:
            vals[-1] = prior + seg[-1] + surv[s][T]
        starts.extend((s, int(l)) for l in ls)
        start_vals.append(vals)
    start_vals = np.concatenate(start_vals)
    best = start_vals.max()
    if best == -np.inf:
        raise ValueError("no labelling satisfies the duration bounds")
    k = int(np.flatnonzero(start_vals >= best - TIE_TOL)[0])
    best_val, best_start = start_vals[k], starts[k]

    labels = np.empty(T, dtype=np.int8)
    s, length = best_start
    t = 0
    while True:
        labels[t:t + length] = s
        t += length
        if t >= T:
            break
        s = next_state(s)
        length = int(choice[t, s])
    return StateSequence(labels, durations.frame_rate_hz, float(best_val))
