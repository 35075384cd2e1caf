"""In-house gradient-boosted regression trees, squared-error loss.

Exact greedy variance-reduction splits over sorted unique values (no
histogram binning), missing values routed to the larger child learned per
split, shrinkage, seeded row subsampling.  Kept deliberately transparent so
an exhaustive oracle can re-derive every chosen split.

Also hosts the evaluation machinery built on the fitted models: the temporal
train/test split, K-fold hyper-parameter selection, test metrics, partial
dependence, and the interquartile feature effect.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

MODEL_FORMAT_VERSION = 1


@dataclass
class TreeNode:
    """Either a leaf (value set) or an internal split node."""

    value: Optional[float] = None
    feature_index: Optional[int] = None
    threshold: Optional[float] = None
    missing_goes_left: bool = True
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 200
    max_depth: int = 3
    min_samples_leaf: int = 20
    learning_rate: float = 0.1
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth, min_samples_leaf must be positive")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must be in (0, 1]")
        if not (0.0 < self.subsample <= 1.0):
            raise ValueError("subsample must be in (0, 1]")


DEFAULT_GRID: List[Hyperparams] = [
    Hyperparams(n_trees=n, max_depth=d, learning_rate=lr, min_samples_leaf=20, subsample=0.8)
    for n in (200, 500)
    for d in (2, 3, 4)
    for lr in (0.05, 0.1)
]


@dataclass
class BoostedModel:
    base_prediction: float
    trees: List[TreeNode]
    learning_rate: float
    feature_names: List[str]
    train_mse_path: List[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class EvalReport:
    mse: float
    r2: float
    n_test: int


# ---------------------------------------------------------------------------
# Metrics


def mse(y: Sequence[float], yhat: Sequence[float]) -> float:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.size == 0:
        raise ValueError("y and yhat must be nonempty and aligned")
    return float(np.mean((y - yhat) ** 2))


def r2(y: Sequence[float], yhat: Sequence[float]) -> float:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.size == 0:
        raise ValueError("y and yhat must be nonempty and aligned")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("undefined: zero variance in y")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


# ---------------------------------------------------------------------------
# Tree growing


def _best_split(
    X: np.ndarray, g: np.ndarray, rows: np.ndarray, min_leaf: int
) -> Optional[Tuple[int, float, float]]:
    """Exact greedy search over all (feature, threshold) pairs.

    Returns (feature_index, threshold, gain) for the split maximizing the
    reduction in sum of squared deviations of g, scored on observed values
    only.  Thresholds are midpoints of consecutive sorted unique values;
    the left branch takes x <= threshold.  Ties resolve to the lowest
    feature index, then the lowest threshold (first maximum in scan order).
    """
    best: Optional[Tuple[int, float, float]] = None
    for j in range(X.shape[1]):
        x = X[rows, j]
        obs = ~np.isnan(x)
        n_obs = int(obs.sum())
        if n_obs < 2 * min_leaf:
            continue
        xo = x[obs]
        go = g[rows][obs]
        order = np.argsort(xo, kind="stable")
        xs = xo[order]
        gs = go[order]
        csum = np.cumsum(gs)
        total = csum[-1]
        # candidate cut after position k (1-based left count), only at value
        # boundaries and respecting the leaf minimum
        k = np.arange(1, n_obs)
        valid = (xs[1:] != xs[:-1]) & (k >= min_leaf) & ((n_obs - k) >= min_leaf)
        if not valid.any():
            continue
        left_sum = csum[:-1]
        gains = left_sum**2 / k + (total - left_sum) ** 2 / (n_obs - k) - total**2 / n_obs
        gains = np.where(valid, gains, -np.inf)
        pos = int(np.argmax(gains))  # first maximum -> lowest threshold
        gain = float(gains[pos])
        if gain <= 0.0:
            continue
        threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
        if best is None or gain > best[2]:
            best = (j, threshold, gain)
    return best


def _grow_tree(
    X: np.ndarray, g: np.ndarray, rows: np.ndarray, depth: int, hp: Hyperparams
) -> TreeNode:
    if depth >= hp.max_depth or len(rows) < 2 * hp.min_samples_leaf:
        return TreeNode(value=float(g[rows].mean()))
    split = _best_split(X, g, rows, hp.min_samples_leaf)
    if split is None:
        return TreeNode(value=float(g[rows].mean()))
    j, threshold, _ = split
    x = X[rows, j]
    missing = np.isnan(x)
    go_left = x <= threshold
    n_left = int(go_left.sum())
    n_right = int((~go_left & ~missing).sum())
    missing_goes_left = n_left >= n_right  # missing follows the larger child
    if missing_goes_left:
        left_rows = rows[go_left | missing]
        right_rows = rows[~go_left & ~missing]
    else:
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
    if len(left_rows) == 0 or len(right_rows) == 0:
        return TreeNode(value=float(g[rows].mean()))
    return TreeNode(
        feature_index=j,
        threshold=threshold,
        missing_goes_left=missing_goes_left,
        left=_grow_tree(X, g, left_rows, depth + 1, hp),
        right=_grow_tree(X, g, right_rows, depth + 1, hp),
    )


def _predict_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, rows = stack.pop()
        if len(rows) == 0:
            continue
        if nd.is_leaf:
            out[rows] = nd.value
            continue
        x = X[rows, nd.feature_index]
        missing = np.isnan(x)
        left = (x <= nd.threshold) | (missing if nd.missing_goes_left else np.zeros_like(missing))
        stack.append((nd.left, rows[left]))
        stack.append((nd.right, rows[~left]))
    return out


def fit(
    X: np.ndarray, y: Sequence[float], hp: Hyperparams, feature_names: Optional[Sequence[str]] = None
) -> BoostedModel:
    """Least-squares boosting: base = mean(y), then hp.n_trees regression
    trees fit to residuals on seeded row subsamples.

    With subsample = 1 the recorded training-MSE path is non-increasing.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a nonempty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError("y must align with X rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    names = list(feature_names) if feature_names is not None else [f"f{j}" for j in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise ValueError("feature_names must match X width")

    n = X.shape[0]
    rng = np.random.Generator(np.random.PCG64(hp.seed))
    base = float(y.mean())
    pred = np.full(n, base, dtype=np.float64)
    trees: List[TreeNode] = []
    path: List[float] = [float(np.mean((y - pred) ** 2))]
    n_sub = max(1, round(hp.subsample * n))
    for _ in range(hp.n_trees):
        residual = y - pred
        if hp.subsample < 1.0:
            rows = np.sort(rng.choice(n, size=n_sub, replace=False))
        else:
            rows = np.arange(n)
        tree = _grow_tree(X, residual, rows, 0, hp)
        trees.append(tree)
        pred += hp.learning_rate * _predict_tree(tree, X)
        path.append(float(np.mean((y - pred) ** 2)))
    return BoostedModel(
        base_prediction=base,
        trees=trees,
        learning_rate=hp.learning_rate,
        feature_names=names,
        train_mse_path=path,
    )


def predict(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise ValueError(f"width mismatch: model expects {model.n_features}, got {X.shape[1]}")
    out = np.full(X.shape[0], model.base_prediction, dtype=np.float64)
    for tree in model.trees:
        out += model.learning_rate * _predict_tree(tree, X)
    return out


# ---------------------------------------------------------------------------
# Splits and cross-validation


def temporal_split(
    dates: Sequence[str], firm_ids: Sequence[str], test_fraction: float = 0.30
) -> Tuple[np.ndarray, np.ndarray]:
    """Hold out the most recent ceil(test_fraction * n) rows by date.

    Returns (train_idx, test_idx) into the original order.  Ties in date
    break by the stable (firm_id, input position) order, so the split is
    well defined even on a degenerate single-date sample.
    """
    n = len(dates)
    if n != len(firm_ids):
        raise ValueError("dates and firm_ids must align")
    if n < 10:
        raise ValueError("sample too small")
    order = sorted(range(n), key=lambda i: (dates[i], firm_ids[i], i))
    n_test = math.ceil(test_fraction * n)
    train = np.asarray(order[: n - n_test], dtype=np.intp)
    test = np.asarray(order[n - n_test :], dtype=np.intp)
    return train, test


def kfold_cv(
    X: np.ndarray,
    y: Sequence[float],
    grid: Sequence[Hyperparams],
    k: int = 5,
    feature_names: Optional[Sequence[str]] = None,
) -> Hyperparams:
    """Pick the grid point with the lowest mean validation MSE over K
    contiguous, chronologically ordered folds (rows assumed date-sorted).
    Ties go to the first point in grid order."""
    if not grid:
        raise ValueError("empty hyper-parameter grid")
    if k < 2:
        raise ValueError("K must be >= 2")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    bounds = [round(i * n / k) for i in range(k + 1)]
    best_hp, best_score = None, math.inf
    for hp in grid:
        scores = []
        for f in range(k):
            lo, hi = bounds[f], bounds[f + 1]
            if hi <= lo:
                continue
            val = np.arange(lo, hi)
            trn = np.concatenate([np.arange(0, lo), np.arange(hi, n)])
            if len(trn) == 0:
                continue
            model = fit(X[trn], y[trn], hp, feature_names)
            scores.append(mse(y[val], predict(model, X[val])))
        score = float(np.mean(scores))
        if score < best_score:
            best_hp, best_score = hp, score
    return best_hp


def evaluate(model: BoostedModel, X: np.ndarray, y: Sequence[float]) -> EvalReport:
    yhat = predict(model, X)
    return EvalReport(mse=mse(y, yhat), r2=r2(y, yhat), n_test=len(yhat))


# ---------------------------------------------------------------------------
# Partial dependence


def partial_dependence(
    model: BoostedModel, X: np.ndarray, feature: str, grid: Sequence[float]
) -> List[float]:
    """Mean prediction over X with ``feature`` overwritten by each grid value."""
    if feature not in model.feature_names:
        raise ValueError(f"unknown feature: {feature}")
    if len(grid) == 0:
        raise ValueError("empty grid")
    X = np.asarray(X, dtype=np.float64)
    j = model.feature_names.index(feature)
    curve = []
    for g in grid:
        Xg = X.copy()
        Xg[:, j] = g
        curve.append(float(np.mean(predict(model, Xg))))
    return curve


def iqr_effect(model: BoostedModel, X: np.ndarray, feature: str = "sue") -> float:
    """Partial dependence at the feature's 75th minus 25th empirical percentile."""
    if feature not in model.feature_names:
        raise ValueError(f"unknown feature: {feature}")
    X = np.asarray(X, dtype=np.float64)
    col = X[:, model.feature_names.index(feature)]
    col = col[~np.isnan(col)]
    if col.size == 0:
        raise ValueError(f"feature {feature} has no observed values")
    p25, p75 = float(np.quantile(col, 0.25)), float(np.quantile(col, 0.75))
    if p25 == p75:
        return 0.0
    lo, hi = partial_dependence(model, X, feature, [p25, p75])
    return hi - lo


# ---------------------------------------------------------------------------
# Serialization (versioned JSON)


def _node_to_list(node: TreeNode):
    if node.is_leaf:
        return ["leaf", node.value]
    return [
        "split",
        node.feature_index,
        node.threshold,
        bool(node.missing_goes_left),
        _node_to_list(node.left),
        _node_to_list(node.right),
    ]


def _node_from_list(data) -> TreeNode:
    if data[0] == "leaf":
        return TreeNode(value=float(data[1]))
    return TreeNode(
        feature_index=int(data[1]),
        threshold=float(data[2]),
        missing_goes_left=bool(data[3]),
        left=_node_from_list(data[4]),
        right=_node_from_list(data[5]),
    )


def model_to_json(model: BoostedModel) -> str:
    return json.dumps(
        {
            "format_version": MODEL_FORMAT_VERSION,
            "base_prediction": model.base_prediction,
            "learning_rate": model.learning_rate,
            "feature_names": model.feature_names,
            "trees": [_node_to_list(t) for t in model.trees],
        }
    )


def model_from_json(payload: str) -> BoostedModel:
    data = json.loads(payload)
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {data.get('format_version')}")
    return BoostedModel(
        base_prediction=float(data["base_prediction"]),
        learning_rate=float(data["learning_rate"]),
        feature_names=list(data["feature_names"]),
        trees=[_node_from_list(t) for t in data["trees"]],
    )
