"""From-scratch random forest with minority oversampling.

Trees are grown on bootstrap samples with Gini-impurity splits over a
random feature subset per node. Candidate thresholds are midpoints between
consecutive distinct values; ties between equally good splits resolve to
the lowest feature index, then the lowest threshold, so training is fully
deterministic under (dataset order, config).

Each tree owns an independent counter-based RNG stream derived from the
config seed and the tree index, which makes parallel and serial training
produce identical models. The hot loops are numba-compiled; bootstrap
duplicates are folded into per-row integer weights so split search scales
with the number of distinct rows.

A prediction's confidence is the fraction of trees voting positive; the
escalation risk is that fraction as a rounded percentage, and anything
strictly above 50 is predicted to crit.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .domain import FEATURE_ARITY, FEATURE_NAMES, EscalationRisk, FeatureVector
from .errors import ModelFormatError, TrainingError

MODEL_FORMAT_VERSION = 1

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_INV53 = 1.0 / float(2**53)
_NO_DEPTH_LIMIT = 2**31


@dataclass(frozen=True, slots=True)
class TrainConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: int = math.ceil(math.sqrt(FEATURE_ARITY))
    seed: int = 0
    balance: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.features_per_split < 1:
            raise ValueError(f"features_per_split must be >= 1, got {self.features_per_split}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "balance": self.balance,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


@njit(cache=True, nogil=True, inline="always")
def _mix(state):
    # splitmix64: cheap, seedable, and identical everywhere
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def _grow_tree(x, y, max_depth, min_split, mtry, seed):
    """Bootstrap + grow one tree; returns trimmed node arrays."""
    n, n_feat = x.shape
    state = seed

    counts = np.zeros(n, np.int64)
    for _ in range(n):
        state, r = _mix(state)
        u = float(r >> _S11) * _INV53
        j = int(u * n)
        if j >= n:
            j = n - 1
        counts[j] += 1

    n_unique = 0
    for i in range(n):
        if counts[i] > 0:
            n_unique += 1
    idx = np.empty(n_unique, np.int64)
    k = 0
    for i in range(n):
        if counts[i] > 0:
            idx[k] = i
            k += 1

    cap = 2 * n_unique + 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    neg = np.zeros(cap, np.int64)
    pos = np.zeros(cap, np.int64)

    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    sp = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n_unique
    stack_depth[0] = 0
    sp = 1
    next_node = 1

    feats = np.empty(n_feat, np.int64)
    buf = np.empty(n_unique, np.int64)

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        m = end - start

        w_total = 0
        pos_w = 0
        for k in range(start, end):
            i = idx[k]
            w_total += counts[i]
            pos_w += counts[i] * y[i]
        neg[node] = w_total - pos_w
        pos[node] = pos_w

        if pos_w == 0 or pos_w == w_total or depth >= max_depth or w_total < min_split or m < 2:
            continue

        for f in range(n_feat):
            feats[f] = f
        n_pick = mtry if mtry < n_feat else n_feat
        for j in range(n_pick):
            state, r = _mix(state)
            pick = j + int(r % _U64(n_feat - j))
            tmp = feats[j]
            feats[j] = feats[pick]
            feats[pick] = tmp
        chosen = np.sort(feats[:n_pick])

        best_imp = 1e18
        best_f = -1
        best_thr = 0.0
        wt = float(w_total)
        pt = float(pos_w)
        for c in range(n_pick):
            f = chosen[c]
            vals = np.empty(m, np.float64)
            for k in range(m):
                vals[k] = x[idx[start + k], f]
            order = np.argsort(vals)
            wl = 0.0
            pl = 0.0
            for k in range(m - 1):
                i = idx[start + order[k]]
                wl += counts[i]
                pl += counts[i] * y[i]
                v0 = vals[order[k]]
                v1 = vals[order[k + 1]]
                if v1 > v0:
                    wr = wt - wl
                    pr = pt - pl
                    gl = 1.0 - (pl / wl) ** 2 - ((wl - pl) / wl) ** 2
                    gr = 1.0 - (pr / wr) ** 2 - ((wr - pr) / wr) ** 2
                    imp = (wl * gl + wr * gr) / wt
                    if imp < best_imp:
                        best_imp = imp
                        best_f = f
                        best_thr = v0 + 0.5 * (v1 - v0)

        if best_f < 0:
            continue

        # stable partition: left block keeps original relative order
        nl = 0
        for k in range(start, end):
            if x[idx[k], best_f] <= best_thr:
                buf[nl] = idx[k]
                nl += 1
        nr = nl
        for k in range(start, end):
            if x[idx[k], best_f] > best_thr:
                buf[nr] = idx[k]
                nr += 1
        for k in range(m):
            idx[start + k] = buf[k]

        feature[node] = best_f
        threshold[node] = best_thr
        left_id = next_node
        right_id = next_node + 1
        next_node += 2
        left[node] = left_id
        right[node] = right_id

        stack_node[sp] = left_id
        stack_start[sp] = start
        stack_end[sp] = start + nl
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = right_id
        stack_start[sp] = start + nl
        stack_end[sp] = end
        stack_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:next_node].copy(),
        threshold[:next_node].copy(),
        left[:next_node].copy(),
        right[:next_node].copy(),
        neg[:next_node].copy(),
        pos[:next_node].copy(),
    )


@njit(cache=True, nogil=True)
def _count_votes(x, feature, threshold, left, right, vote, starts):
    n = x.shape[0]
    n_trees = starts.shape[0] - 1
    out = np.zeros(n, np.int64)
    for i in range(n):
        v = 0
        for t in range(n_trees):
            node = starts[t]
            while feature[node] >= 0:
                if x[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            v += vote[node]
        out[i] = v
    return out


@dataclass
class ForestModel:
    """Trained ensemble, stored as packed node arrays for fast traversal."""

    config: TrainConfig
    feature_names: tuple[str, ...]
    feature: np.ndarray  # int32, -1 marks a leaf
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32, packed (global) node ids
    right: np.ndarray
    neg: np.ndarray  # int64 class counts per node
    pos: np.ndarray
    starts: np.ndarray  # int64, root offset per tree plus end sentinel
    format_version: int = MODEL_FORMAT_VERSION

    @property
    def n_trees(self) -> int:
        return len(self.starts) - 1

    @property
    def feature_arity(self) -> int:
        return len(self.feature_names)

    def confidences(self, x: np.ndarray) -> np.ndarray:
        """Positive-vote fraction per row of a dense feature matrix."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.feature_arity:
            raise TrainingError(
                f"feature arity mismatch: model expects {self.feature_arity}, "
                f"got matrix of width {x.shape[-1] if x.ndim == 2 else 'n/a'}"
            )
        vote = (self.pos > self.neg).astype(np.uint8)
        votes = _count_votes(
            x, self.feature, self.threshold, self.left, self.right, vote, self.starts
        )
        return votes / self.n_trees


def _oversample_order(y: np.ndarray, seed: int) -> np.ndarray:
    """Row indices realizing the 1:1 balance: originals, then replicas."""
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("cannot balance single-class data")
    minority = 1 if n_pos < n_neg else 0
    n_min = min(n_pos, n_neg)
    n_maj = max(n_pos, n_neg)
    min_idx = np.flatnonzero(y == minority)
    reps = n_maj // n_min
    rem = n_maj % n_min
    extra_rounds = np.tile(min_idx, reps - 1)
    rng = np.random.default_rng(seed)
    remainder = (
        np.sort(rng.choice(n_min, size=rem, replace=False)) if rem else np.empty(0, np.int64)
    )
    extras = np.concatenate([extra_rounds, min_idx[remainder]])
    return np.concatenate([np.arange(len(y)), extras.astype(np.int64)])


def oversample_arrays(
    x: np.ndarray, y: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Replicate the minority class until the classes are balanced 1:1.

    Every majority row is kept exactly once. Minority rows are appended in
    whole rounds plus a seeded, without-replacement remainder, so the
    minority count lands exactly on the majority count.
    """
    y = np.asarray(y)
    order = _oversample_order(y, seed)
    return x[order], y[order]


def oversample(dataset: list[tuple[FeatureVector, int]], seed: int) -> list:
    """List-of-rows front end; replicas are the original row objects."""
    y = np.array([label for _, label in dataset], dtype=np.uint8)
    order = _oversample_order(y, seed)
    return [dataset[i] for i in order]


def _tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed)
    return ss.generate_state(n_trees + 1, dtype=np.uint64)


def train_arrays(
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    feature_names: tuple[str, ...] | None = None,
    threads: int = 1,
) -> ForestModel:
    """Train on a dense matrix; rows are samples, columns features."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if x.ndim != 2 or len(y) != x.shape[0]:
        raise TrainingError("x must be 2-D with one label per row")
    if len(y) == 0:
        raise TrainingError("cannot train on an empty dataset")
    if feature_names is None:
        if x.shape[1] == FEATURE_ARITY:
            feature_names = FEATURE_NAMES
        else:
            feature_names = tuple(f"f{i}" for i in range(x.shape[1]))
    if len(feature_names) != x.shape[1]:
        raise TrainingError(
            f"feature arity mismatch: {len(feature_names)} names for width {x.shape[1]}"
        )

    seeds = _tree_seeds(config.seed, config.n_trees)
    if config.balance:
        x, y = oversample_arrays(x, y, int(seeds[0]))
    max_depth = config.max_depth if config.max_depth is not None else _NO_DEPTH_LIMIT

    def grow(t: int):
        return _grow_tree(
            x, y, max_depth, config.min_samples_split, config.features_per_split, seeds[t + 1]
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(grow, range(config.n_trees)))
    else:
        trees = [grow(t) for t in range(config.n_trees)]

    return _pack(config, feature_names, trees)


def _pack(config: TrainConfig, feature_names: tuple[str, ...], trees: list) -> ForestModel:
    sizes = [len(t[0]) for t in trees]
    starts = np.zeros(len(trees) + 1, dtype=np.int64)
    np.cumsum(sizes, out=starts[1:])
    total = int(starts[-1])
    feature = np.empty(total, np.int32)
    threshold = np.empty(total, np.float64)
    left = np.empty(total, np.int32)
    right = np.empty(total, np.int32)
    neg = np.empty(total, np.int64)
    pos = np.empty(total, np.int64)
    for t, (f, thr, lt, rt, ng, ps) in enumerate(trees):
        lo, hi = starts[t], starts[t + 1]
        feature[lo:hi] = f
        threshold[lo:hi] = thr
        left[lo:hi] = np.where(lt >= 0, lt + lo, -1)
        right[lo:hi] = np.where(rt >= 0, rt + lo, -1)
        neg[lo:hi] = ng
        pos[lo:hi] = ps
    return ForestModel(
        config=config,
        feature_names=tuple(feature_names),
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        neg=neg,
        pos=pos,
        starts=starts,
    )


def train(
    dataset: list[tuple[FeatureVector, int]], config: TrainConfig, threads: int = 1
) -> ForestModel:
    """Train from (vector, label) pairs; see :func:`train_arrays`."""
    if not dataset:
        raise TrainingError("cannot train on an empty dataset")
    x = np.array([fv.as_tuple() for fv, _ in dataset], dtype=np.float64)
    y = np.array([label for _, label in dataset], dtype=np.uint8)
    return train_arrays(x, y, config, threads=threads)


def predict(model: ForestModel, fv: FeatureVector) -> tuple[EscalationRisk, float]:
    """Score one vector: (risk, positive-vote fraction)."""
    if model.feature_arity != FEATURE_ARITY:
        raise TrainingError(
            f"model has arity {model.feature_arity}, feature vectors have {FEATURE_ARITY}"
        )
    conf = float(model.confidences(np.array([fv.as_tuple()], dtype=np.float64))[0])
    return EscalationRisk.from_confidence(conf), conf


# -- persistence --------------------------------------------------------------


def save_model(model: ForestModel, sink) -> None:
    """Write a model as a self-describing JSON container."""
    trees = []
    for t in range(model.n_trees):
        lo, hi = int(model.starts[t]), int(model.starts[t + 1])
        rel = lambda arr: [v - lo if v >= 0 else -1 for v in arr[lo:hi].tolist()]
        trees.append(
            {
                "feature": model.feature[lo:hi].tolist(),
                "threshold": model.threshold[lo:hi].tolist(),
                "left": rel(model.left),
                "right": rel(model.right),
                "neg": model.neg[lo:hi].tolist(),
                "pos": model.pos[lo:hi].tolist(),
            }
        )
    doc = {
        "kind": "escalade-forest",
        "format_version": model.format_version,
        "config": model.config.to_dict(),
        "feature_names": list(model.feature_names),
        "trees": trees,
    }
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text + "\n", encoding="utf-8")
    else:
        sink.write(text + "\n")


def load_model(source) -> ForestModel:
    """Read a model; rejects unknown versions and skewed feature lists."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"unreadable model file: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != "escalade-forest":
        raise ModelFormatError("not a forest model file")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version!r} (supported: {MODEL_FORMAT_VERSION})"
        )
    try:
        config = TrainConfig.from_dict(doc["config"])
        names = tuple(doc["feature_names"])
        raw_trees = doc["trees"]
        trees = []
        for rt in raw_trees:
            trees.append(
                (
                    np.array(rt["feature"], dtype=np.int32),
                    np.array(rt["threshold"], dtype=np.float64),
                    np.array(rt["left"], dtype=np.int32),
                    np.array(rt["right"], dtype=np.int32),
                    np.array(rt["neg"], dtype=np.int64),
                    np.array(rt["pos"], dtype=np.int64),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"truncated or malformed model file: {exc}") from exc
    if len(names) == FEATURE_ARITY and names != FEATURE_NAMES:
        raise ModelFormatError("model feature names do not match the current feature order")
    if len(trees) != config.n_trees:
        raise ModelFormatError(
            f"model declares {config.n_trees} trees but contains {len(trees)}"
        )
    for rt in trees:
        leaves = rt[0] < 0
        if ((rt[4] + rt[5])[leaves] < 1).any():
            raise ModelFormatError("leaf with empty class counts")
    return _pack(config, names, trees)
