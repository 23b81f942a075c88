"""Gradient-boosted regression trees: squared-error objective, exact greedy
split search, per-round row subsampling and gain-based feature importance.

Second-order boosting with unit hessians: per round the gradients are
``g_i = pred_i - y_i``, a tree is grown by exact greedy search over
midpoints of consecutive distinct feature values, split gain is

    1/2 [ G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - (G_L+G_R)^2/(H_L+H_R+lam) ] - gamma

and only strictly positive gains are accepted. Leaf weight is
``-eta * G/(H+lam)``. A round whose tree accepts no split stops training.

Subsampling draws ``max(1, floor(subsample*n))`` rows without replacement
from a PCG64 generator seeded per training call, which pins the exact row
sets across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


class GbtError(Exception):
    pass


class NonFiniteInput(GbtError):
    pass


class EmptyDataset(GbtError):
    pass


class FeatureMismatch(GbtError):
    pass


class NoSplits(GbtError):
    """Model contains no accepted split; importance is undefined."""


class InvalidHyperParams(GbtError):
    pass


PARAM_NAMES = ("nrounds", "base_score", "eta", "gamma", "max_depth", "subsample")


@dataclass(frozen=True)
class HyperParams:
    nrounds: int
    base_score: float
    eta: float
    gamma: float
    max_depth: int
    subsample: float

    def __post_init__(self):
        if int(self.nrounds) != self.nrounds or self.nrounds < 0:
            raise InvalidHyperParams(f"nrounds must be an integer >= 0: {self.nrounds}")
        if not math.isfinite(self.base_score):
            raise InvalidHyperParams("base_score must be finite")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidHyperParams(f"eta out of [0,1]: {self.eta}")
        if self.gamma < 0:
            raise InvalidHyperParams(f"gamma must be >= 0: {self.gamma}")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise InvalidHyperParams(f"max_depth must be an integer >= 1: {self.max_depth}")
        if not 0.0 < self.subsample <= 1.0:
            raise InvalidHyperParams(f"subsample out of (0,1]: {self.subsample}")

    def replace(self, **kw) -> "HyperParams":
        d = self.as_dict()
        d.update(kw)
        return HyperParams(**d)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def key(self) -> tuple:
        return tuple(getattr(self, name) for name in PARAM_NAMES)


@dataclass
class Tree:
    """One regression tree as flat arrays; node 0 is the root and
    ``feature[i] < 0`` marks a leaf. Rows route left iff value < threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int((self.feature >= 0).sum())


@dataclass
class GbtModel:
    hyperparams: HyperParams
    feature_names: list[str]
    trees: list[Tree]
    lam: float = 1.0
    seed: int = 0
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def n_splits(self) -> int:
        return sum(t.n_splits for t in self.trees)


@njit(cache=True)
def _grow_tree(bins, bin_off, bin_vals, g, in_sample, max_depth, gamma, lam,
               min_child_weight, eta):
    """Grow one tree by exact greedy search.

    ``bins[i, f]`` is the rank of row i's value among the sorted distinct
    values of feature f (global pre-binning); histogramming gradients per
    (node, feature, distinct value) and scanning bins in ascending order is
    exactly the classic sorted-scan over per-node distinct values, including
    the tie-break at lowest feature index then lowest threshold.
    """
    n, m = bins.shape
    total_bins = bin_off[m]
    max_nodes = 2 ** (max_depth + 1)
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes)
    split_bin = np.zeros(max_nodes, np.int64)  # route left iff bins[i,f] <= split_bin
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    weight = np.zeros(max_nodes)
    gain_arr = np.zeros(max_nodes)
    node_g = np.zeros(max_nodes)
    node_h = np.zeros(max_nodes)

    node_of = np.full(n, -1, np.int64)
    g0 = 0.0
    h0 = 0.0
    for i in range(n):
        if in_sample[i]:
            node_of[i] = 0
            g0 += g[i]
            h0 += 1.0
    node_g[0] = g0
    node_h[0] = h0
    n_nodes = 1

    level_start = 0
    for depth in range(max_depth):
        level_end = n_nodes
        n_level = level_end - level_start
        any_active = False
        for nid in range(level_start, level_end):
            if node_h[nid] >= 2.0 * min_child_weight:
                any_active = True
        if not any_active:
            break

        hist_g = np.zeros(n_level * total_bins)
        hist_h = np.zeros(n_level * total_bins)
        for i in range(n):
            nid = node_of[i]
            if nid < level_start:
                continue
            base = (nid - level_start) * total_bins
            gi = g[i]
            for f in range(m):
                b = base + bin_off[f] + bins[i, f]
                hist_g[b] += gi
                hist_h[b] += 1.0

        for nid in range(level_start, level_end):
            if node_h[nid] < 2.0 * min_child_weight:
                continue
            base = (nid - level_start) * total_bins
            tg = node_g[nid]
            th = node_h[nid]
            parent_score = tg * tg / (th + lam)
            best_gain = 0.0
            best_feat = -1
            best_thr = 0.0
            best_bin = -1
            for f in range(m):
                gl = 0.0
                hl = 0.0
                prev_b = -1
                for b in range(bin_off[f], bin_off[f + 1]):
                    hb = hist_h[base + b]
                    if hb == 0.0:
                        continue
                    if prev_b >= 0 and hl >= min_child_weight and th - hl >= min_child_weight:
                        gr = tg - gl
                        hr = th - hl
                        gain = 0.5 * (
                            gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score
                        ) - gamma
                        if gain > 0.0 and gain > best_gain:
                            best_gain = gain
                            best_feat = f
                            best_thr = 0.5 * (bin_vals[prev_b] + bin_vals[b])
                            best_bin = prev_b - bin_off[f]
                    gl += hist_g[base + b]
                    hl += hb
                    prev_b = b
            if best_feat >= 0:
                lc = n_nodes
                rc = n_nodes + 1
                n_nodes += 2
                feat[nid] = best_feat
                thr[nid] = best_thr
                split_bin[nid] = best_bin
                gain_arr[nid] = best_gain
                left[nid] = lc
                right[nid] = rc

        for i in range(n):
            nid = node_of[i]
            if nid >= level_start and nid < level_end and feat[nid] >= 0:
                if bins[i, feat[nid]] <= split_bin[nid]:
                    child = left[nid]
                else:
                    child = right[nid]
                node_of[i] = child
                node_g[child] += g[i]
                node_h[child] += 1.0
        level_start = level_end
        if level_start == n_nodes:
            break

    for nid in range(n_nodes):
        if feat[nid] < 0 and node_h[nid] > 0.0:
            weight[nid] = -eta * node_g[nid] / (node_h[nid] + lam)
    return (
        feat[:n_nodes].copy(),
        thr[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        weight[:n_nodes].copy(),
        gain_arr[:n_nodes].copy(),
    )


@njit(cache=True)
def _add_tree_predictions(X, feat, thr, left, right, weight, out):
    for i in range(X.shape[0]):
        nid = 0
        while feat[nid] >= 0:
            if X[i, feat[nid]] < thr[nid]:
                nid = left[nid]
            else:
                nid = right[nid]
        out[i] += weight[nid]


def bin_matrix(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-encode each column against its sorted distinct values.

    Returns ``(bins, offsets, values)`` where ``bins[i, f]`` is the rank of
    ``X[i, f]`` among feature f's distinct values, ``offsets`` delimits each
    feature's bin range and ``values`` holds the distinct values flattened.
    Reusable across trainings on the same matrix.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, m = X.shape
    bins = np.empty((n, m), dtype=np.int64)
    offsets = np.zeros(m + 1, dtype=np.int64)
    values = []
    for f in range(m):
        uniq, inv = np.unique(X[:, f], return_inverse=True)
        bins[:, f] = inv
        offsets[f + 1] = offsets[f] + len(uniq)
        values.append(uniq)
    return bins, offsets, np.concatenate(values)


def train(
    X,
    y,
    feature_names: list[str],
    hp: HyperParams,
    seed: int,
    lam: float = 1.0,
    min_child_weight: float = 1.0,
    binned: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> GbtModel:
    """Train a boosted ensemble on the (n, m) matrix ``X`` and targets ``y``.

    Deterministic in (X, y, hp, seed). Training stops before ``nrounds``
    if a round grows a tree with no accepted split. ``binned`` may pass a
    precomputed :func:`bin_matrix` of ``X`` to amortize it across calls.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise EmptyDataset(f"bad shapes X{X.shape} y{y.shape}")
    n, m = X.shape
    if n == 0:
        raise EmptyDataset("no rows")
    if m != len(feature_names):
        raise FeatureMismatch(f"{m} columns vs {len(feature_names)} names")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("features and targets must be finite")

    bins, bin_off, bin_vals = binned if binned is not None else bin_matrix(X)
    rng = np.random.Generator(np.random.PCG64(seed))
    pred = np.full(n, hp.base_score, dtype=np.float64)
    k = max(1, int(math.floor(hp.subsample * n)))
    trees: list[Tree] = []
    for _ in range(hp.nrounds):
        if k < n:
            idx = rng.choice(n, size=k, replace=False)
            in_sample = np.zeros(n, dtype=np.bool_)
            in_sample[idx] = True
        else:
            in_sample = np.ones(n, dtype=np.bool_)
        g = pred - y
        feat, thr, left, right, weight, gain = _grow_tree(
            bins, bin_off, bin_vals, g, in_sample,
            hp.max_depth, hp.gamma, lam, min_child_weight, hp.eta,
        )
        if len(feat) == 1:  # no accepted split anywhere
            break
        tree = Tree(feat, thr, left, right, weight, gain)
        trees.append(tree)
        _add_tree_predictions(X, feat, thr, left, right, weight, pred)
    return GbtModel(hp, list(feature_names), trees, lam=lam, seed=seed)


def predict(model: GbtModel, X, n_trees: int | None = None) -> np.ndarray:
    """Predictions for the (n, m) matrix ``X``; ``n_trees`` limits the
    ensemble to its first trees (prefix of the boosting sequence)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise FeatureMismatch(
            f"expected {len(model.feature_names)} features, got {X.shape}"
        )
    out = np.full(X.shape[0], model.hyperparams.base_score, dtype=np.float64)
    trees = model.trees if n_trees is None else model.trees[:n_trees]
    for t in trees:
        _add_tree_predictions(X, t.feature, t.threshold, t.left, t.right, t.weight, out)
    return out


def predict_row(model: GbtModel, features: dict[str, float]) -> float:
    if set(features) != set(model.feature_names):
        missing = sorted(set(model.feature_names) - set(features))
        extra = sorted(set(features) - set(model.feature_names))
        raise FeatureMismatch(f"missing={missing} unexpected={extra}")
    x = np.array([[features[name] for name in model.feature_names]])
    return float(predict(model, x)[0])


def importance(model: GbtModel, top_k: int | None = None) -> list[tuple[str, float]]:
    """Accumulated split gain per feature, relative to the highest-ranked
    feature, sorted descending. Features with no split are absent."""
    totals = np.zeros(len(model.feature_names))
    for t in model.trees:
        for nid in range(t.n_nodes):
            f = t.feature[nid]
            if f >= 0:
                totals[f] += t.gain[nid]
    if not (totals > 0).any():
        raise NoSplits("model has no accepted split")
    top = totals.max()
    ranked = sorted(
        (
            (model.feature_names[i], float(totals[i] / top))
            for i in range(len(totals))
            if totals[i] > 0
        ),
        key=lambda kv: -kv[1],
    )
    if top_k is not None:
        ranked = ranked[:top_k]
    return ranked


# ---------------------------------------------------------------------------
# Serialization: versioned, self-describing text format

FORMAT_TAG = "promokit-gbt"
FORMAT_VERSION = 1


def _dump_node(tree: Tree, nid: int, out: list[str]) -> None:
    if tree.feature[nid] >= 0:
        out.append(
            f"split {tree.feature[nid]} {float(tree.threshold[nid])!r} {float(tree.gain[nid])!r}"
        )
        _dump_node(tree, tree.left[nid], out)
        _dump_node(tree, tree.right[nid], out)
    else:
        out.append(f"leaf {float(tree.weight[nid])!r}")


def dump_model(model: GbtModel) -> str:
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    for key in sorted(model.metadata):
        lines.append(f"meta {key} {model.metadata[key]}")
    hp = model.hyperparams
    lines.append(
        "params "
        f"nrounds={hp.nrounds} base_score={hp.base_score!r} eta={hp.eta!r} "
        f"gamma={hp.gamma!r} max_depth={hp.max_depth} subsample={hp.subsample!r}"
    )
    lines.append(f"lambda {model.lam!r}")
    lines.append(f"seed {model.seed}")
    lines.append(f"features {len(model.feature_names)}")
    lines.extend(f"f {name}" for name in model.feature_names)
    lines.append(f"trees {len(model.trees)}")
    for t in model.trees:
        lines.append(f"tree {t.n_nodes}")
        _dump_node(t, 0, lines)
    return "\n".join(lines) + "\n"


def save_model(path, model: GbtModel) -> None:
    with open(path, "w") as fh:
        fh.write(dump_model(model))


def _parse_tree(lines: list[str], pos: int, n_nodes: int) -> tuple[Tree, int]:
    feature = np.full(n_nodes, -1, np.int64)
    threshold = np.zeros(n_nodes)
    left = np.full(n_nodes, -1, np.int64)
    right = np.full(n_nodes, -1, np.int64)
    weight = np.zeros(n_nodes)
    gain = np.zeros(n_nodes)
    counter = [0]

    # pre-order dump: the i-th record is the i-th visited node
    def read_node() -> int:
        nid = counter[0]
        counter[0] += 1
        parts = lines[pos + nid].split()
        if parts[0] == "split":
            feature[nid] = int(parts[1])
            threshold[nid] = float(parts[2])
            gain[nid] = float(parts[3])
            left[nid] = read_node()
            right[nid] = read_node()
        elif parts[0] == "leaf":
            weight[nid] = float(parts[1])
        else:
            raise GbtError(f"bad node record: {lines[pos + nid]!r}")
        return nid

    read_node()
    if counter[0] != n_nodes:
        raise GbtError(f"tree declared {n_nodes} nodes, parsed {counter[0]}")
    return Tree(feature, threshold, left, right, weight, gain), pos + n_nodes


def loads_model(text: str) -> GbtModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()
    if header[0] != FORMAT_TAG or int(header[1]) != FORMAT_VERSION:
        raise GbtError(f"unsupported model format: {lines[0]!r}")
    pos = 1
    metadata: dict[str, str] = {}
    while lines[pos].startswith("meta "):
        _, key, value = lines[pos].split(" ", 2)
        metadata[key] = value
        pos += 1
    if not lines[pos].startswith("params "):
        raise GbtError("missing params line")
    kv = dict(part.split("=") for part in lines[pos].split()[1:])
    hp = HyperParams(
        nrounds=int(kv["nrounds"]),
        base_score=float(kv["base_score"]),
        eta=float(kv["eta"]),
        gamma=float(kv["gamma"]),
        max_depth=int(kv["max_depth"]),
        subsample=float(kv["subsample"]),
    )
    pos += 1
    lam = float(lines[pos].split()[1])
    pos += 1
    seed = int(lines[pos].split()[1])
    pos += 1
    n_features = int(lines[pos].split()[1])
    pos += 1
    names = [lines[pos + i].split(" ", 1)[1] for i in range(n_features)]
    pos += n_features
    n_trees = int(lines[pos].split()[1])
    pos += 1
    trees = []
    for _ in range(n_trees):
        n_nodes = int(lines[pos].split()[1])
        pos += 1
        tree, pos = _parse_tree(lines, pos, n_nodes)
        trees.append(tree)
    return GbtModel(hp, names, trees, lam=lam, seed=seed, metadata=metadata)


def load_model(path) -> GbtModel:
    with open(path) as fh:
        return loads_model(fh.read())
