"""Gradient-boosted regression trees, written from scratch on numpy.

Squared-error boosting: each tree fits the residuals of the ensemble so far
using an exhaustive axis-aligned split search.  Candidate thresholds are the
midpoints between consecutive sorted unique feature values; ties in gain are
broken by lowest feature index, then lowest threshold.  Rows are put into a
canonical order before training, so the fitted model is bit-identical under
any permutation of the training set.

Targets are log-seconds; callers exponentiate predictions back to linear
time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import PRESET_ORD, Corpus
from .errors import ValidationError

# Model input vector, one row per encode task.
FEATURE_NAMES = ("height", "num_pixels", "framerate", "num_frames",
                 "E", "h", "luma", "preset_ord", "cqp")

MODEL_FORMAT = "corpus-eta-gbrt"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GbrtParams:
    num_trees: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    min_samples_leaf: int = 5

    def __post_init__(self):
        if self.num_trees < 0:
            raise ValidationError(f"num_trees must be >= 0, got {self.num_trees}")
        if self.max_depth < 0:
            raise ValidationError(f"max_depth must be >= 0, got {self.max_depth}")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValidationError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.min_samples_leaf < 1:
            raise ValidationError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")


@dataclass(frozen=True)
class RegressionTree:
    """Flat node arrays; feature == -1 marks a leaf, children index into the arrays."""

    feature: np.ndarray    # int32
    threshold: np.ndarray  # float64, undefined for leaves
    left: np.ndarray       # int32
    right: np.ndarray      # int32
    value: np.ndarray      # float64, leaf outputs


@dataclass(frozen=True)
class GbrtModel:
    base_score: float
    trees: tuple[RegressionTree, ...]
    params: GbrtParams
    num_features: int
    train_mse: tuple[float, ...] = field(default=(), compare=False)


def feature_row(clip, task) -> np.ndarray:
    """Model features for one encode task, ordered per FEATURE_NAMES."""
    return np.array([clip.height, clip.num_pixels, float(clip.framerate),
                     clip.num_frames, clip.E, clip.h, clip.luma,
                     PRESET_ORD[task.preset], task.cqp], dtype=np.float64)


def feature_matrix(corpus: Corpus, task_ids: Sequence[str]) -> np.ndarray:
    task_map = corpus.task_map()
    rows = np.empty((len(task_ids), len(FEATURE_NAMES)), dtype=np.float64)
    for i, task_id in enumerate(task_ids):
        task = task_map.get(task_id)
        if task is None:
            raise ValidationError(f"unknown task_id {task_id!r}")
        rows[i] = feature_row(corpus.clip(task.clip_id), task)
    return rows


class _TreeBuilder:
    """Grows one tree on the residuals; reuses the per-feature presort."""

    def __init__(self, X: np.ndarray, sort_idx: list[np.ndarray], params: GbrtParams):
        self.X = X
        self.sort_idx = sort_idx
        self.params = params

    def build(self, residuals: np.ndarray) -> tuple[RegressionTree, np.ndarray]:
        self.residuals = residuals
        self.train_out = np.empty_like(residuals)
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self._grow(np.ones(self.X.shape[0], dtype=bool), depth=0)
        tree = RegressionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64))
        return tree, self.train_out

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _make_leaf(self, node: int, member: np.ndarray) -> None:
        val = float(np.mean(self.residuals[member]))
        self.value[node] = val
        self.train_out[member] = val

    def _grow(self, member: np.ndarray, depth: int) -> int:
        node = self._new_node()
        m = int(np.count_nonzero(member))
        msl = self.params.min_samples_leaf
        if depth >= self.params.max_depth or m < 2 * msl:
            self._make_leaf(node, member)
            return node

        split = self._best_split(member, m)
        if split is None:
            self._make_leaf(node, member)
            return node

        feat, thr = split
        self.feature[node] = feat
        self.threshold[node] = thr
        go_left = member & (self.X[:, feat] <= thr)
        self.left[node] = self._grow(go_left, depth + 1)
        self.right[node] = self._grow(member & ~go_left, depth + 1)
        return node

    def _best_split(self, member: np.ndarray, m: int) -> tuple[int, float] | None:
        """Exhaustive search maximizing the SSE reduction of the split.

        For squared error the reduction is (sum_L)^2/n_L + (sum_R)^2/n_R minus
        the parent term, so it suffices to maximize the children's score.
        """
        msl = self.params.min_samples_leaf
        resid = self.residuals
        total_all = None
        best_score = None
        best = None
        counts = np.arange(1, m, dtype=np.float64)
        size_ok = (counts >= msl) & (m - counts >= msl)

        for feat in range(self.X.shape[1]):
            order = self.sort_idx[feat]
            node_idx = order[member[order]]
            sv = self.X[node_idx, feat]
            if sv[0] == sv[-1]:
                continue
            prefix = np.cumsum(resid[node_idx])
            total = prefix[-1]
            if total_all is None:
                total_all = total
                best_score = total * total / m  # parent score; only real gains beat it
            valid = (sv[:-1] < sv[1:]) & size_ok
            if not valid.any():
                continue
            pos = np.nonzero(valid)[0]
            left_sum = prefix[pos]
            n_left = counts[pos]
            score = left_sum * left_sum / n_left \
                + (total - left_sum) * (total - left_sum) / (m - n_left)
            j = int(np.argmax(score))  # first max: lowest threshold wins ties
            if score[j] > best_score:
                best_score = score[j]
                p = int(pos[j])
                thr = (sv[p] + sv[p + 1]) / 2.0
                if thr == sv[p + 1]:  # midpoint rounded up to the right value
                    thr = sv[p]
                best = (feat, float(thr))
        return best


def train(rows, targets, params: GbrtParams = GbrtParams(), seed: int = 0) -> GbrtModel:
    """Fit a boosted ensemble on (rows, targets).

    Deterministic for fixed inputs; ``seed`` is accepted for interface
    stability but unused because there is no subsampling.
    """
    X = np.asarray(rows, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValidationError(f"rows must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if X.shape[0] == 0:
        raise ValidationError("empty training set")
    if not np.isfinite(y).all():
        raise ValidationError("targets contain NaN or infinity")
    if not np.isfinite(X).all():
        raise ValidationError("rows contain NaN or infinity")

    # Canonical row order: makes training invariant (bit-for-bit) to any
    # permutation of the input rows.
    order = np.lexsort((y,) + tuple(X[:, f] for f in reversed(range(X.shape[1]))))
    X = np.ascontiguousarray(X[order])
    y = y[order]

    sort_idx = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]
    base = float(np.mean(y))
    pred = np.full(X.shape[0], base)
    builder = _TreeBuilder(X, sort_idx, params)
    trees = []
    mse_hist = []
    for _ in range(params.num_trees):
        tree, out = builder.build(y - pred)
        pred = pred + params.learning_rate * out
        trees.append(tree)
        err = y - pred
        mse_hist.append(float(np.mean(err * err)))
    return GbrtModel(base_score=base, trees=tuple(trees), params=params,
                     num_features=X.shape[1], train_mse=tuple(mse_hist))


def _tree_outputs(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    idx = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = tree.feature[idx]
        live = np.nonzero(feat >= 0)[0]
        if live.size == 0:
            return tree.value[idx]
        at = idx[live]
        go_left = X[live, feat[live]] <= tree.threshold[at]
        idx[live] = np.where(go_left, tree.left[at], tree.right[at])


def predict(model: GbrtModel, rows) -> np.ndarray:
    """Ensemble prediction in log-time units for a matrix of feature rows."""
    X = np.asarray(rows, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X.reshape(1, -1)
    if X.shape[1] != model.num_features:
        raise ValidationError(
            f"model expects {model.num_features} features, got {X.shape[1]}")
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out += model.params.learning_rate * _tree_outputs(tree, X)
    return out[0] if single else out


def predict_row(model: GbrtModel, row) -> float:
    return float(predict(model, np.asarray(row, dtype=np.float64)))


def model_to_dict(model: GbrtModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "base_score": model.base_score,
        "num_features": model.num_features,
        "params": {
            "num_trees": model.params.num_trees,
            "max_depth": model.params.max_depth,
            "learning_rate": model.params.learning_rate,
            "min_samples_leaf": model.params.min_samples_leaf,
        },
        "trees": [{
            "feature": tree.feature.tolist(),
            "threshold": tree.threshold.tolist(),
            "left": tree.left.tolist(),
            "right": tree.right.tolist(),
            "value": tree.value.tolist(),
        } for tree in model.trees],
    }


def model_from_dict(doc: dict) -> GbrtModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ValidationError(f"unsupported model version {doc.get('version')!r}")
    params = GbrtParams(**doc["params"])
    trees = tuple(RegressionTree(
        feature=np.asarray(t["feature"], dtype=np.int32),
        threshold=np.asarray(t["threshold"], dtype=np.float64),
        left=np.asarray(t["left"], dtype=np.int32),
        right=np.asarray(t["right"], dtype=np.int32),
        value=np.asarray(t["value"], dtype=np.float64)) for t in doc["trees"])
    return GbrtModel(base_score=float(doc["base_score"]), trees=trees, params=params,
                     num_features=int(doc["num_features"]))


def save_model(path, model: GbrtModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> GbrtModel:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read model {path}: {exc}") from exc
    with fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"model {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
