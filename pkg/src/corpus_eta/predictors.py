"""The five prediction systems and the completion-ratio cascade.

BP and CP are statistical baselines built on running averages (globally and
per cluster).  XP and CXP wrap the boosted-tree model: per-task predictions
are exp() of the model output and the aggregate is their sum; CXP differs
from XP only in that the corpus is processed in cluster-stratified order.
GXP is the generalised variant, trained once on held-out source groups
instead of online.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterAssignment
from .corpus import Corpus, to_log_time
from .errors import PredictionError, ValidationError
from .gbrt import GbrtModel, feature_matrix, predict

SYSTEMS = ("BP", "CP", "XP", "CXP", "GXP")


@dataclass(frozen=True)
class AggregatePrediction:
    system: str
    c: float
    t_hat: dict[str, float] | None  # per remaining task, when ids were supplied
    T_hat: float                    # predicted seconds for the remaining fraction
    t_bar: float | None = None                   # BP: the global mean
    cluster_means: dict[int, float] | None = None  # CP: per-cluster means


def _mean(times: Sequence[float]) -> float:
    # fsum: exact, so the value is independent of summation order.
    return math.fsum(times) / len(times)


def bp_predict(completed_times: Sequence[float], total_tasks: int,
               remaining_ids: Sequence[str] | None = None) -> AggregatePrediction:
    """Progress-bar baseline: the mean completed time predicts every remaining task.

    The aggregate is (1 - c) * N * mean, the completed-fraction scaling rule
    written so that the per-cluster variant with a single cluster reproduces
    it bit-for-bit.
    """
    n = len(completed_times)
    if n == 0:
        raise PredictionError("BP undefined at c=0")
    if n >= total_tasks:
        raise PredictionError("nothing remaining to predict")
    c = n / total_tasks
    t_bar = _mean(completed_times)
    T_hat = (1.0 - c) * (total_tasks * t_bar)
    t_hat = {tid: t_bar for tid in remaining_ids} if remaining_ids is not None else None
    return AggregatePrediction(system="BP", c=c, t_hat=t_hat, T_hat=T_hat, t_bar=t_bar)


def cp_predict(completed_by_cluster: Mapping[int, Sequence[float]],
               cluster_task_counts, total_tasks: int,
               remaining_clusters: Mapping[str, int] | None = None) -> AggregatePrediction:
    """Per-cluster running averages, aggregated as (1 - c) * sum_j M_j * mean_j.

    A cluster with no completed task yet falls back to the global mean of all
    completed times.
    """
    counts = np.asarray(cluster_task_counts, dtype=np.int64)
    k = counts.shape[0]
    all_times: list[float] = []
    for j, times in completed_by_cluster.items():
        if not 0 <= j < k:
            raise ValidationError(f"cluster index {j} out of range for k={k}")
        all_times.extend(times)
    n = len(all_times)
    if n == 0:
        raise PredictionError("CP undefined: no completed tasks in any cluster")
    if n >= total_tasks:
        raise PredictionError("nothing remaining to predict")
    c = n / total_tasks
    global_mean = _mean(all_times)

    cluster_mean: dict[int, float] = {}
    for j in range(k):
        times = completed_by_cluster.get(j)
        has_any = times is not None and len(times) > 0
        cluster_mean[j] = _mean(times) if has_any else global_mean

    weighted = math.fsum(int(counts[j]) * cluster_mean[j] for j in range(k))
    T_hat = (1.0 - c) * weighted

    t_hat = None
    if remaining_clusters is not None:
        t_hat = {tid: cluster_mean[j] for tid, j in remaining_clusters.items()}
    return AggregatePrediction(system="CP", c=c, t_hat=t_hat, T_hat=T_hat,
                               cluster_means=dict(cluster_mean))


def xp_predict(model: GbrtModel, remaining: Mapping[str, Sequence[float]],
               c: float = 0.0, system: str = "XP") -> AggregatePrediction:
    """exp() the per-task model outputs and sum them for the aggregate."""
    if not remaining:
        raise PredictionError("nothing remaining to predict")
    ids = list(remaining)
    rows = np.asarray([remaining[tid] for tid in ids], dtype=np.float64)
    per_task = np.exp(predict(model, rows))
    t_hat = {tid: float(v) for tid, v in zip(ids, per_task)}
    return AggregatePrediction(system=system, c=c, t_hat=t_hat,
                               T_hat=math.fsum(per_task.tolist()))


def cxp_order(corpus: Corpus, assignment: ClusterAssignment, seed: int) -> list[str]:
    """Cluster-stratified processing order.

    Tasks are drawn round-robin across clusters in cluster-index order,
    uniformly at random without replacement inside each cluster; exhausted
    clusters are skipped.
    """
    buckets: list[list[str]] = [[] for _ in range(assignment.k)]
    for task in corpus.tasks:
        label = assignment.labels.get(task.clip_id)
        if label is None:
            raise ValidationError(
                f"task {task.task_id!r}: clip {task.clip_id!r} has no cluster label")
        buckets[label].append(task.task_id)

    rng = np.random.default_rng(seed)
    for bucket in buckets:
        if len(bucket) > 1:
            perm = rng.permutation(len(bucket))
            bucket[:] = [bucket[i] for i in perm]

    order: list[str] = []
    cursor = [0] * assignment.k
    remaining = len(corpus.tasks)
    while remaining:
        for j in range(assignment.k):
            if cursor[j] < len(buckets[j]):
                order.append(buckets[j][cursor[j]])
                cursor[j] += 1
                remaining -= 1
    return order


@dataclass(frozen=True)
class GxpSplit:
    train_ids: tuple[str, ...]
    train_rows: np.ndarray      # feature matrix for the training tasks
    train_targets: np.ndarray   # log-seconds
    test_ids: tuple[str, ...]


def gxp_train_split(corpus: Corpus, test_groups) -> GxpSplit:
    """Split tasks by their clip's source group; test_groups form the held-out side."""
    test_groups = set(test_groups)
    known = {clip.source_group for clip in corpus.clips}
    missing = test_groups - known
    if missing:
        raise ValidationError(
            f"test groups {sorted(missing)} not present in the corpus")
    train_ids: list[str] = []
    test_ids: list[str] = []
    for task in corpus.tasks:
        if corpus.clip(task.clip_id).source_group in test_groups:
            test_ids.append(task.task_id)
        else:
            train_ids.append(task.task_id)
    if not train_ids:
        raise ValidationError("generalised split has an empty training side")
    if not test_ids:
        raise ValidationError("generalised split has an empty test side")
    if corpus.times is None:
        raise ValidationError("corpus has no measured times to train on")
    targets = []
    for tid in train_ids:
        record = corpus.times.get(tid)
        if record is None:
            raise ValidationError(f"no measured time for training task {tid!r}")
        targets.append(to_log_time(record.seconds))
    return GxpSplit(train_ids=tuple(train_ids),
                    train_rows=feature_matrix(corpus, train_ids),
                    train_targets=np.asarray(targets, dtype=np.float64),
                    test_ids=tuple(test_ids))


@dataclass(frozen=True)
class CascadePolicy:
    """Ordered (c_upper_bound, system) pairs; the first bound >= c wins."""

    thresholds: tuple[tuple[float, str], ...] = ((0.0, "GXP"), (0.06, "CXP"), (1.0, "CP"))

    def __post_init__(self):
        if not self.thresholds:
            raise ValidationError("cascade policy must have at least one entry")
        bounds = [b for b, _ in self.thresholds]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValidationError(f"cascade bounds must be strictly increasing, got {bounds}")
        if bounds[-1] != 1.0:
            raise ValidationError(f"cascade bounds must end at 1.0, got {bounds}")
        for _, system in self.thresholds:
            if system not in SYSTEMS:
                raise ValidationError(f"unknown system {system!r} in cascade policy")


DEFAULT_CASCADE = CascadePolicy()


def cascade_select(policy: CascadePolicy, c: float) -> str:
    """Pick the system for completion ratio c; a step function over the bounds."""
    if not 0.0 <= c < 1.0:
        raise PredictionError(f"cascade defined for 0 <= c < 1, got {c}")
    for bound, system in policy.thresholds:
        if c <= bound:
            return system
    return policy.thresholds[-1][1]
