"""K-means stratification of clips on standardized property + complexity features.

Clips are clustered once, up front; every encode task inherits the label of
its clip.  The cluster structure feeds the per-cluster statistical predictor
and the cluster-stratified processing order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Clip, EncodeTask
from .errors import ValidationError

# Fixed feature order for the clustering space.
CLUSTER_FEATURES = ("height", "num_pixels", "framerate", "num_frames", "E", "h", "luma")

DEFAULT_K = 10


@dataclass(frozen=True)
class StandardizationParams:
    """Per-feature mean and stddev; constant features get stddev 1."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: dict[str, int]        # id -> cluster index in [0, k)
    centroids: np.ndarray         # (k, d), standardized feature space
    sizes: np.ndarray             # (k,) member counts
    sse_per_iter: tuple[float, ...]
    n_iter: int


def clip_feature_matrix(clips: Sequence[Clip]) -> np.ndarray:
    rows = [(c.height, c.num_pixels, float(c.framerate), c.num_frames, c.E, c.h, c.luma)
            for c in clips]
    return np.asarray(rows, dtype=np.float64)


def standardize(clips: Sequence[Clip]) -> tuple[np.ndarray, StandardizationParams]:
    """Z-score the clip feature matrix column-wise."""
    if not clips:
        raise ValidationError("standardize: no clips")
    matrix = clip_feature_matrix(clips)
    params = standardization_params(matrix)
    return apply_standardization(matrix, params), params


def standardization_params(matrix: np.ndarray) -> StandardizationParams:
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return StandardizationParams(mean=mean, std=std)


def apply_standardization(matrix: np.ndarray, params: StandardizationParams) -> np.ndarray:
    return (matrix - params.mean) / params.std


def _sse(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    diff = points - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centroids by D^2 sampling."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    dist_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = dist_sq.sum()
        if total > 0.0:
            idx = rng.choice(n, p=dist_sq / total)
        else:
            idx = rng.integers(n)  # all remaining points coincide with a centroid
        centroids[j] = points[idx]
        dist_sq = np.minimum(dist_sq, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iters: int) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    """One seeded Lloyd's run; returns (labels, centroids, sse history, iters)."""
    n = points.shape[0]
    centroids = _kmeanspp_init(points, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    sse_history: list[float] = []
    iteration = 0

    for iteration in range(1, max_iters + 1):
        dist_sq = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist_sq, axis=1)

        # Refill empty clusters one at a time; moving a point can empty its
        # donor, so re-scan (bounded by k rounds).
        for _ in range(k):
            empty = np.nonzero(np.bincount(new_labels, minlength=k) == 0)[0]
            if empty.size == 0:
                break
            j = int(empty[0])
            own = np.sum((points - centroids[new_labels]) ** 2, axis=1)
            farthest = int(np.argmax(own))
            new_labels[farthest] = j
            centroids[j] = points[farthest]

        sse_history.append(_sse(points, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)

    return labels, centroids, sse_history, iteration


def kmeans(points: np.ndarray, k: int, seed: int, max_iters: int = 300,
           ids: Sequence[str] | None = None, n_init: int = 10) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding; deterministic for a fixed seed.

    Runs n_init independent restarts off one seeded stream and keeps the run
    with the lowest final objective, which makes small instances land on the
    global optimum almost always.  Within a run, iteration stops when the
    assignment stabilizes or after max_iters.  An empty cluster is refilled
    with the point farthest from its own centroid (that cluster's centroid is
    recentred on the point, so the objective still never increases).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError(f"points must be 2-D, got shape {points.shape}")
    n = points.shape[0]
    if k <= 0:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points ({n})")
    if ids is not None and len(ids) != n:
        raise ValidationError(f"got {len(ids)} ids for {n} points")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if n_init < 1:
        raise ValidationError(f"n_init must be >= 1, got {n_init}")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(points, k, rng, max_iters)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    labels, centroids, sse_history, iteration = best

    sizes = np.bincount(labels, minlength=k)
    if ids is None:
        ids = [str(i) for i in range(n)]
    label_map = {str(ids[i]): int(labels[i]) for i in range(n)}
    return ClusterAssignment(k=k, labels=label_map, centroids=centroids,
                             sizes=sizes, sse_per_iter=tuple(sse_history),
                             n_iter=iteration)


def cluster_clips(clips: Sequence[Clip], k: int = DEFAULT_K, seed: int = 0,
                  max_iters: int = 300) -> ClusterAssignment:
    """Standardize the clip features and cluster; labels are keyed by clip_id."""
    matrix, _ = standardize(clips)
    return kmeans(matrix, k, seed, max_iters=max_iters,
                  ids=[c.clip_id for c in clips])


def cluster_sizes_by_task(assignment: ClusterAssignment,
                          tasks: Sequence[EncodeTask]) -> np.ndarray:
    """Task count per cluster; every task inherits its clip's label."""
    sizes = np.zeros(assignment.k, dtype=np.int64)
    for task in tasks:
        label = assignment.labels.get(task.clip_id)
        if label is None:
            raise ValidationError(
                f"task {task.task_id!r}: clip {task.clip_id!r} has no cluster label")
        sizes[label] += 1
    return sizes


def save_clusters_csv(path, assignment: ClusterAssignment) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "cluster"])
        for clip_id, label in assignment.labels.items():
            writer.writerow([clip_id, label])


def save_centroids_csv(path, assignment: ClusterAssignment) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster"] + list(CLUSTER_FEATURES))
        for j, row in enumerate(assignment.centroids):
            writer.writerow([j] + [repr(float(v)) for v in row])
