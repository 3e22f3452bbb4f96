"""Density-based clustering: classic DBSCAN plus k-dist knee epsilon choice.

Point sets here are the 2-D t-SNE projections of failing submissions, so
everything is small; plain numpy distance matrices and an index-ordered
breadth-first expansion keep the labels deterministic for a fixed point
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE = -1


@dataclass(frozen=True)
class ClusterConfig:
    minpts: int = 3
    epsilon: float | None = None  # None = select via the k-dist knee
    tsne_perplexity: float = 30.0
    tsne_iters: int = 1000
    top_clusters: int = 4
    duplicate_jaccard: float = 0.8

    def __post_init__(self):
        if self.minpts < 2:
            raise ValueError("minpts must be >= 2")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("a fixed epsilon must be positive")


def _distance_matrix(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def kdist_curve(points: np.ndarray, minpts: int) -> np.ndarray:
    """Ascending distances from each point to its minpts-th nearest neighbor."""
    n = len(points)
    if n <= minpts:
        raise ValueError("need more points than minpts for a k-dist curve")
    d = _distance_matrix(points)
    d.sort(axis=1)
    k = min(minpts, n - 1)
    return np.sort(d[:, k])  # column 0 is the self-distance


def select_epsilon(points: np.ndarray, minpts: int) -> float:
    """Knee of the sorted k-dist curve: maximum perpendicular chord distance.

    A flat curve (all k-dist values equal) has no knee; its common value is
    returned directly.  A zero at the knee (duplicate-heavy data) falls back
    to the smallest positive k-dist so the radius stays usable.
    """
    curve = kdist_curve(np.asarray(points, dtype=np.float64), minpts)
    n = len(curve)
    first, last = curve[0], curve[-1]
    if first == last:
        return float(first)
    xs = np.arange(n, dtype=np.float64)
    # |cross product| against the chord; the chord norm is constant in i, so
    # the argmax needs only the numerator
    cross = np.abs((n - 1) * (curve - first) - (last - first) * xs)
    knee = int(np.argmax(cross))
    eps = float(curve[knee])
    if eps == 0.0:
        positive = curve[curve > 0]
        eps = float(positive[0]) if len(positive) else 0.0
    return eps


def dbscan(points: np.ndarray, epsilon: float, minpts: int) -> np.ndarray:
    """Classic DBSCAN labels; noise is -1, clusters are numbered in seed order.

    A core point has at least ``minpts`` points within ``epsilon`` counting
    itself (the radius test is inclusive).  Expansion scans points in index
    order, so labels are deterministic for a fixed point order.
    """
    points = np.asarray(points, dtype=np.float64)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = len(points)
    d = _distance_matrix(points)
    neighborhoods = [np.nonzero(d[i] <= epsilon)[0] for i in range(n)]
    core = np.array([len(nb) >= minpts for nb in neighborhoods])
    labels = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if not core[seed] or labels[seed] != NOISE:
            continue
        labels[seed] = cluster
        frontier = [seed]
        while frontier:
            cur = frontier.pop(0)
            for nb in neighborhoods[cur]:
                if labels[nb] == NOISE:
                    labels[nb] = cluster
                    if core[nb]:
                        frontier.append(int(nb))
        cluster += 1
    return labels
