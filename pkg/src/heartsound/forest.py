"""Random-forest emission model: P(heart sound present | feature frame).

Trees are CART with Gini impurity, grown on bootstrap samples with three
candidate features per split. A fitted tree is stored as flat node arrays so
prediction is a vectorised walk, and so the model serialises as fixed-size
records.
"""

from dataclasses import dataclass
import struct
import zlib

import numpy as np

from .errors import FormatError, SingleClass, TooFewFrames, UnsortedPeaks
from .features import N_BINS, FeatureMatrix

N_TREES = 10
MAX_DEPTH = 8
MAX_FEATURES = 3
MIN_SAMPLES_SPLIT = 4
MIN_FRAMES = 100
PROB_EPS = 1e-3

LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray    # int32, LEAF for leaves
    threshold: np.ndarray  # float64; x[feature] <= threshold goes left
    left: np.ndarray       # int32 child index, -1 for leaves
    right: np.ndarray
    value: np.ndarray      # float64 positive fraction at leaves

    def __len__(self):
        return self.feature.size

    def apply(self, X):
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat != LEAF
            if not active.any():
                return node
            idx = rows[active]
            n = node[active]
            go_left = X[idx, feat[active]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X):
        return self.value[self.apply(X)]

    def depth(self):
        depths = np.zeros(len(self), dtype=np.int64)
        for i in range(len(self)):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    max_depth: int = MAX_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))

    def validate(self):
        if len(self.trees) != N_TREES:
            raise FormatError(f"expected {N_TREES} trees, got {len(self.trees)}")
        for t in self.trees:
            n = len(t)
            internal = t.feature != LEAF
            if np.any((t.feature[internal] < 0) | (t.feature[internal] >= N_BINS)):
                raise FormatError("feature index out of range")
            if not np.all(np.isfinite(t.threshold[internal])):
                raise FormatError("non-finite threshold")
            parents = np.flatnonzero(internal)
            for kids in (t.left[internal], t.right[internal]):
                if np.any((kids <= parents) | (kids >= n)):
                    raise FormatError("child index out of range")
            leaves = t.value[~internal]
            if np.any(~np.isfinite(leaves)) or np.any((leaves < 0) | (leaves > 1)):
                raise FormatError("leaf value outside [0, 1]")
            if t.depth() > self.max_depth:
                raise FormatError("tree deeper than max_depth")
        return self


def _best_split(X, y, features):
    """Lowest weighted Gini over candidate features; None if nothing splits."""
    n = y.size
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        # boundaries between distinct consecutive values
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if cut.size == 0:
            continue
        pos_left = np.cumsum(ys)[cut]
        n_left = cut + 1.0
        n_right = n - n_left
        pos_right = ys.sum() - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        gini = n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)
        k = int(np.argmin(gini))
        if best is None or gini[k] < best[0]:
            thr = 0.5 * (xs[cut[k]] + xs[cut[k] + 1])
            # midpoint can round up to the right value for adjacent floats
            if thr >= xs[cut[k] + 1]:
                thr = xs[cut[k]]
            best = (gini[k], f, thr)
    return best


def _grow_tree(X, y, rng, max_depth=MAX_DEPTH):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        frac = float(ys.mean())
        value[node] = frac
        if depth >= max_depth or idx.size < MIN_SAMPLES_SPLIT or frac in (0.0, 1.0):
            continue
        cand = rng.choice(N_BINS, size=MAX_FEATURES, replace=False)
        split = _best_split(X[idx], ys, cand)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        l, r = new_node(), new_node()
        feature[node], threshold[node] = int(f), float(thr)
        left[node], right[node] = l, r
        stack.append((r, idx[~mask], depth + 1))
        stack.append((l, idx[mask], depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
    )


def train_forest(features, labels, rng_seed=0):
    """Fit the 10-tree, depth-8 forest; deterministic for a given seed."""
    X = np.asarray(features.frames if isinstance(features, FeatureMatrix) else features,
                   dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[1] != N_BINS:
        raise ValueError(f"features must have shape (n, {N_BINS})")
    if y.size != X.shape[0]:
        raise ValueError("labels and features differ in length")
    if X.shape[0] < MIN_FRAMES:
        raise TooFewFrames(f"need at least {MIN_FRAMES} frames, got {X.shape[0]}")
    if np.all(y == y[0]):
        raise SingleClass("training labels contain a single class")
    rng = np.random.default_rng(rng_seed)
    trees = []
    for _ in range(N_TREES):
        boot = rng.integers(0, y.size, size=y.size)
        trees.append(_grow_tree(X[boot], y[boot], rng))
    return ForestModel(tuple(trees))


def predict_emissions(model, features):
    """Mean leaf positive-fraction over trees, clamped to [1e-3, 1 - 1e-3]."""
    X = np.asarray(features.frames if isinstance(features, FeatureMatrix) else features,
                   dtype=np.float64)
    votes = np.zeros(X.shape[0])
    for tree in model.trees:
        votes += tree.predict(X)
    probs = votes / len(model.trees)
    return np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)


# Binary layout, little-endian:
#   header  b"HSRF" | u16 version | u16 max_depth | u32 n_trees
#   per tree: u32 n_nodes, then n_nodes records of NODE_DTYPE
#   trailer u32 CRC-32 of everything before it
MAGIC = b"HSRF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHI")
_COUNT = struct.Struct("<I")
NODE_DTYPE = np.dtype([
    ("feature", "<i4"), ("left", "<i4"), ("right", "<i4"),
    ("threshold", "<f8"), ("value", "<f8"),
])


def serialize_forest(model):
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, model.max_depth, len(model.trees))]
    for t in model.trees:
        rec = np.empty(len(t), dtype=NODE_DTYPE)
        rec["feature"], rec["left"], rec["right"] = t.feature, t.left, t.right
        rec["threshold"], rec["value"] = t.threshold, t.value
        parts.append(_COUNT.pack(len(t)))
        parts.append(rec.tobytes())
    body = b"".join(parts)
    return body + _COUNT.pack(zlib.crc32(body))


def deserialize_forest(data):
    data = bytes(data)
    if len(data) < _HEADER.size + _COUNT.size:
        raise FormatError("forest file truncated or empty")
    body, (crc,) = data[:-_COUNT.size], _COUNT.unpack(data[-_COUNT.size:])
    magic, version, max_depth, n_trees = _HEADER.unpack_from(body)
    if magic != MAGIC:
        raise FormatError("bad magic header")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported forest format version {version}")
    if zlib.crc32(body) != crc:
        raise FormatError("checksum mismatch (corrupt or truncated)")
    offset = _HEADER.size
    trees = []
    for _ in range(n_trees):
        if offset + _COUNT.size > len(body):
            raise FormatError("truncated tree header")
        (n,) = _COUNT.unpack_from(body, offset)
        offset += _COUNT.size
        end = offset + n * NODE_DTYPE.itemsize
        if n == 0 or end > len(body):
            raise FormatError("truncated node records")
        rec = np.frombuffer(body, dtype=NODE_DTYPE, count=n, offset=offset)
        offset = end
        trees.append(Tree(
            rec["feature"].astype(np.int32), rec["threshold"].astype(np.float64),
            rec["left"].astype(np.int32), rec["right"].astype(np.int32),
            rec["value"].astype(np.float64),
        ))
    if offset != len(body):
        raise FormatError("trailing bytes after last tree")
    return ForestModel(tuple(trees), max_depth=max_depth).validate()


def save_forest(model, path):
    with open(path, "wb") as fh:
        fh.write(serialize_forest(model))


def load_forest(path):
    with open(path, "rb") as fh:
        return deserialize_forest(fh.read())


def derive_frame_labels(rpeaks_s, num_frames, frame_rate_hz=100, durations=None):
    """Binary sound/no-sound frame labels from R-peak times.

    Frames in ``[r, r + S1)`` and ``[r + S1 + Systole, r + S1 + Systole + S2)``
    after each R-peak ``r`` are sound, using the duration-model means.
    """
    from .hsmm import S1, S2, SYSTOLE, DurationModel

    if durations is None:
        durations = DurationModel()
    peaks = np.asarray(rpeaks_s, dtype=np.float64)
    if np.any(np.diff(peaks) < 0):
        raise UnsortedPeaks("R-peak times must be sorted")
    m = durations.means_s
    spans = [(0.0, m[S1]), (m[S1] + m[SYSTOLE], m[S1] + m[SYSTOLE] + m[S2])]
    labels = np.zeros(num_frames, dtype=np.int8)
    for r in peaks:
        for a, b in spans:
            lo = max(0, int(np.ceil(round((r + a) * frame_rate_hz, 9))))
            hi = min(num_frames, int(np.ceil(round((r + b) * frame_rate_hz, 9))))
            labels[lo:hi] = 1
    return labels
