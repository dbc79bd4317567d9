"""Least-squares gradient boosting over regression trees, plus random search.

Trees are grown level by level. At each level every open node looks for the
split that most reduces the squared error of its residuals, scanning each
feature's sorted values exactly. Ties go to the lowest feature index, then
the lowest threshold.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError, ShapeError

LEAF = -1


@dataclass(frozen=True)
class BoostParams:
    n_trees: int = 100
    max_depth: int = 3
    shrinkage: float = 0.1
    min_samples_leaf: int = 1
    subsample: float = 1.0

    def __post_init__(self):
        if self.n_trees < 0 or self.max_depth < 0 or self.min_samples_leaf < 1:
            raise ConfigurationError(f"invalid boosting parameters {self}")
        if not 0 < self.subsample <= 1:
            raise ConfigurationError("subsample must lie in (0, 1]")


@dataclass
class Tree:
    """Flat node arrays; ``feature == LEAF`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def depth(self) -> int:
        def walk(node):
            if self.feature[node] == LEAF:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            inner = feat != LEAF
            if not inner.any():
                return self.value[node]
            rows = np.nonzero(inner)[0]
            go_left = x[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            np.array(data["feature"], dtype=np.int64),
            np.array(data["threshold"], dtype=float),
            np.array(data["left"], dtype=np.int64),
            np.array(data["right"], dtype=np.int64),
            np.array(data["value"], dtype=float),
        )


@dataclass
class BoostedEnsemble:
    base_prediction: float
    shrinkage: float
    trees: list = field(default_factory=list)
    num_features: int = 0

    def predict(self, features, n_trees=None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.num_features:
            raise ShapeError(f"model expects {self.num_features} features, got {x.shape[1]}")
        out = np.full(x.shape[0], self.base_prediction)
        for tree in self.trees[:n_trees]:
            out += self.shrinkage * tree.predict(x)
        return out

    def to_dict(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "shrinkage": self.shrinkage,
            "num_features": self.num_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoostedEnsemble":
        return cls(
            float(data["base_prediction"]),
            float(data["shrinkage"]),
            [Tree.from_dict(t) for t in data["trees"]],
            int(data["num_features"]),
        )


def _best_splits(x, r, order, node_of, n_open, min_leaf):
    """Best split per open node.

    ``order[:, f]`` lists rows sorted by feature f; ``node_of`` maps rows to
    open-node slots (-1 for rows not being split). Every feature sees the
    same rows per node, so all features are scanned together as (d, m)
    arrays. Returns per-slot score, feature and threshold; score is -inf
    where no split is allowed.
    """
    d = x.shape[1]
    best_score = np.full(n_open, -np.inf)
    best_feat = np.full(n_open, LEAF, dtype=np.int64)
    best_thr = np.zeros(n_open)
    rows = order.T
    keep = node_of[rows] >= 0
    m = int(keep[0].sum())
    if m < 2:
        return best_score, best_feat, best_thr
    rows = rows[keep].reshape(d, m)
    # stable: rows stay sorted by feature value inside each node
    rows = np.take_along_axis(rows, np.argsort(node_of[rows], axis=1, kind="stable"), axis=1)
    nodes = node_of[rows[0]]
    vals = np.take_along_axis(x.T, rows, axis=1)
    csum = np.cumsum(r[rows], axis=1)

    change = np.ones(m, dtype=bool)
    change[1:] = nodes[1:] != nodes[:-1]
    starts = np.flatnonzero(change)
    sizes = np.diff(np.append(starts, m))
    seg = np.repeat(np.arange(starts.size), sizes)
    padded = np.concatenate([np.zeros((d, 1)), csum], axis=1)
    before = padded[:, starts][:, seg]
    seg_total = (padded[:, starts + sizes] - padded[:, starts])[:, seg]
    n_left = np.arange(m) - starts[seg] + 1
    n_right = sizes[seg] - n_left
    s_left = csum - before
    s_right = seg_total - s_left

    valid = np.zeros((d, m), dtype=bool)
    valid[:, :-1] = (nodes[:-1] == nodes[1:]) & (vals[:, :-1] < vals[:, 1:])
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return best_score, best_feat, best_thr
    score = np.full((d, m), -np.inf)
    nl = np.broadcast_to(n_left, (d, m))[valid]
    nr = np.broadcast_to(n_right, (d, m))[valid]
    score[valid] = s_left[valid] ** 2 / nl + s_right[valid] ** 2 / nr

    seg_max = np.maximum.reduceat(score, starts, axis=1)  # (d, segments)
    feat = np.argmax(seg_max, axis=0)  # first max: lowest feature index
    top = seg_max[feat, np.arange(starts.size)]
    hit = score[feat[seg], np.arange(m)] == top[seg]
    pos = np.minimum.reduceat(np.where(hit, np.arange(m), m), starts)  # lowest threshold
    ok = np.isfinite(top)
    slots = nodes[starts][ok]
    pos, feat, top = pos[ok], feat[ok], top[ok]
    lo, hi = vals[feat, pos], vals[feat, pos + 1]
    thr = lo + (hi - lo) / 2
    best_score[slots] = top
    best_feat[slots] = feat
    best_thr[slots] = np.where(thr < hi, thr, lo)
    return best_score, best_feat, best_thr


def fit_tree(x: np.ndarray, r: np.ndarray, rows: np.ndarray, order: np.ndarray, max_depth: int, min_leaf: int) -> Tree:
    """Grow one squared-error tree on ``rows`` of (x, r)."""
    n = x.shape[0]
    feature, threshold, left, right = [LEAF], [0.0], [LEAF], [LEAF]
    node = np.full(n, -1, dtype=np.int64)
    node[rows] = 0
    open_nodes = [0]
    for _ in range(max_depth):
        if not open_nodes:
            break
        slot_of = np.full(len(feature), -1, dtype=np.int64)
        slot_of[open_nodes] = np.arange(len(open_nodes))
        node_of = np.where(node >= 0, slot_of[np.maximum(node, 0)], -1)
        score, feat, thr = _best_splits(x, r, order, node_of, len(open_nodes), min_leaf)
        sums = np.bincount(node_of[node_of >= 0], weights=r[node_of >= 0], minlength=len(open_nodes))
        counts = np.bincount(node_of[node_of >= 0], minlength=len(open_nodes))
        parent_score = np.where(counts > 0, sums**2 / np.maximum(counts, 1), 0.0)
        sq = np.bincount(node_of[node_of >= 0], weights=r[node_of >= 0] ** 2, minlength=len(open_nodes))
        next_open = []
        for slot, nid in enumerate(open_nodes):
            gain = score[slot] - parent_score[slot]
            if not np.isfinite(score[slot]) or gain <= 1e-12 * max(sq[slot], 1e-300):
                continue
            f, t = int(feat[slot]), float(thr[slot])
            lid, rid = len(feature), len(feature) + 1
            feature[nid], threshold[nid], left[nid], right[nid] = f, t, lid, rid
            feature += [LEAF, LEAF]
            threshold += [0.0, 0.0]
            left += [LEAF, LEAF]
            right += [LEAF, LEAF]
            members = node == nid
            go_left = x[:, f] <= t
            node[members & go_left] = lid
            node[members & ~go_left] = rid
            next_open += [lid, rid]
        open_nodes = next_open
    size = len(feature)
    in_tree = node >= 0
    sums = np.bincount(node[in_tree], weights=r[in_tree], minlength=size)
    counts = np.bincount(node[in_tree], minlength=size)
    value = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        value,
    )


def fit_boosted(features, targets, params: BoostParams = BoostParams(), seed: int = 0) -> BoostedEnsemble:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if y.size == 0:
        raise DataError("cannot fit on an empty dataset")
    if x.shape[0] != y.size:
        raise ShapeError("features and targets disagree on sample count")
    rng = np.random.default_rng(seed)
    # shifted mean: exact for constant targets
    base = float(y[0] + np.mean(y - y[0]))
    model = BoostedEnsemble(base, params.shrinkage, [], x.shape[1])
    order = np.argsort(x, axis=0, kind="stable")
    pred = np.full(y.size, base)
    n_sub = max(1, int(round(params.subsample * y.size)))
    for _ in range(params.n_trees):
        resid = y - pred
        if params.subsample < 1:
            rows = np.sort(rng.choice(y.size, n_sub, replace=False))
        else:
            rows = np.arange(y.size)
        tree = fit_tree(x, resid, rows, order, params.max_depth, params.min_samples_leaf)
        model.trees.append(tree)
        pred = pred + params.shrinkage * tree.predict(x)
    return model


def predict(model: BoostedEnsemble, features) -> np.ndarray:
    return model.predict(features)


@dataclass(frozen=True)
class SearchSpace:
    n_trees: tuple = (50, 400)
    max_depth: tuple = (2, 6)
    shrinkage: tuple = (0.03, 0.3)
    min_samples_leaf: tuple = (1, 8)
    subsample: tuple = (0.6, 1.0)
    budget: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigurationError("search budget must be >= 1")
        for name in ("n_trees", "max_depth", "shrinkage", "min_samples_leaf", "subsample"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigurationError(f"empty range for {name}: {lo} > {hi}")

    def sample(self, rng: np.random.Generator) -> BoostParams:
        return BoostParams(
            n_trees=int(rng.integers(self.n_trees[0], self.n_trees[1] + 1)),
            max_depth=int(rng.integers(self.max_depth[0], self.max_depth[1] + 1)),
            shrinkage=float(rng.uniform(*self.shrinkage)),
            min_samples_leaf=int(rng.integers(self.min_samples_leaf[0], self.min_samples_leaf[1] + 1)),
            subsample=float(rng.uniform(*self.subsample)),
        )


@dataclass
class SearchResult:
    best: BoostParams
    best_index: int
    trials: list


def random_search(space: SearchSpace, features, targets, validation_fraction: float = 0.2) -> SearchResult:
    """Uniformly sample the space, score each trial on a held-out validation slice."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    n_val = int(round(validation_fraction * y.size))
    if not 0 < validation_fraction < 1 or not 1 <= n_val <= y.size - 1:
        raise ConfigurationError(f"validation fraction {validation_fraction} is degenerate for n={y.size}")
    rng = np.random.default_rng(space.seed)
    perm = rng.permutation(y.size)
    val, fit = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    trials = []
    for i in range(space.budget):
        params = space.sample(rng)
        model = fit_boosted(x[fit], y[fit], params, seed=space.seed + i)
        mse = float(np.mean((y[val] - model.predict(x[val])) ** 2))
        trials.append({"trial": i, **asdict(params), "validation_mse": mse})
    best_index = min(range(len(trials)), key=lambda i: (trials[i]["validation_mse"], i))
    best = BoostParams(**{k: trials[best_index][k] for k in asdict(BoostParams())})
    return SearchResult(best, best_index, trials)
