"""Exact (O(N^2)) t-SNE to two dimensions.

Conditional affinities come from a per-point binary search matching the
target perplexity (entropy in nats), symmetrized to joint probabilities.
The low-dimensional kernel is the degree-one Student t.  Optimization is
momentum gradient descent (0.5 switching to 0.8 when early exaggeration
ends) with the standard per-coordinate adaptive gains: a gain grows by 0.2
when the gradient sign opposes the running update and shrinks by x0.8
otherwise, floored at 0.01.  Learning rate 200 is only stable with those
gains.  Early exaggeration multiplies the affinities by 12 for the first
250 of 1000 iterations; the embedding initializes to N(0, 1e-4^2) draws
from the seed.  Runs are bitwise deterministic per seed and backend.

Both O(N^2) kernels (affinity search and gradient/KL) are numba-compiled
under the default backend; the numpy fallback vectorizes the same math, so
the two backends agree to float tolerance on any single evaluation but may
drift apart over a full descent, as any reordered float summation would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import accel

_EPS = 1e-12
_SEARCH_STEPS = 50
_SEARCH_TOL = 1e-5


class TooFewPoints(Exception):
    """t-SNE needs at least four points."""


@dataclass
class Projection2D:
    coords: np.ndarray  # (N, 2)
    kl_final: float
    kl_post_exaggeration: float
    kl_history: list[tuple[int, float]] = field(default_factory=list)
    seed: int = 0
    perplexity: float = 0.0


def squared_distances(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


# ---------------------------------------------------------------------------
# Affinities: per-point binary search on the Gaussian precision
# ---------------------------------------------------------------------------


def _conditional_probs_loops(d2, target_entropy):
    n = d2.shape[0]
    p = np.zeros((n, n))
    for i in range(n):
        beta = 1.0
        beta_min = -np.inf
        beta_max = np.inf
        for _ in range(_SEARCH_STEPS):
            sum_p = 0.0
            for j in range(n):
                if j != i:
                    p[i, j] = np.exp(-d2[i, j] * beta)
                    sum_p += p[i, j]
            if sum_p < _EPS:
                sum_p = _EPS
            sum_dp = 0.0
            for j in range(n):
                if j != i:
                    p[i, j] /= sum_p
                    sum_dp += d2[i, j] * p[i, j]
            entropy = np.log(sum_p) + beta * sum_dp
            diff = entropy - target_entropy
            if abs(diff) <= _SEARCH_TOL:
                break
            if diff > 0.0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
    return p


def _conditional_probs_numpy(d2, target_entropy):
    n = d2.shape[0]
    p = np.zeros((n, n))
    beta = np.ones(n)
    beta_min = np.full(n, -np.inf)
    beta_max = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    eye = np.eye(n, dtype=bool)
    for _ in range(_SEARCH_STEPS):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        w = np.exp(-d2[rows] * beta[rows, None])
        w[eye[rows]] = 0.0
        sum_p = np.maximum(w.sum(axis=1), _EPS)
        pr = w / sum_p[:, None]
        p[rows] = pr
        entropy = np.log(sum_p) + beta[rows] * (d2[rows] * pr).sum(axis=1)
        diff = entropy - target_entropy
        done = np.abs(diff) <= _SEARCH_TOL
        active[rows[done]] = False
        grow = ~done & (diff > 0.0)
        shrink = ~done & ~grow
        g = rows[grow]
        beta_min[g] = beta[g]
        beta[g] = np.where(np.isinf(beta_max[g]), beta[g] * 2.0, (beta[g] + beta_max[g]) / 2.0)
        s = rows[shrink]
        beta_max[s] = beta[s]
        beta[s] = np.where(np.isinf(beta_min[s]), beta[s] / 2.0, (beta[s] + beta_min[s]) / 2.0)
    return p


# ---------------------------------------------------------------------------
# Gradient and KL divergence of the Student-t embedding
# ---------------------------------------------------------------------------


def _grad_kl_loops(p, y):
    n = y.shape[0]
    num = np.zeros((n, n))
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = y[i, 0] - y[j, 0]
            dy = y[i, 1] - y[j, 1]
            v = 1.0 / (1.0 + dx * dx + dy * dy)
            num[i, j] = v
            num[j, i] = v
            total += 2.0 * v
    if total < _EPS:
        total = _EPS
    grad = np.zeros((n, 2))
    kl = 0.0
    for i in range(n):
        g0 = 0.0
        g1 = 0.0
        for j in range(n):
            if j == i:
                continue
            q_raw = num[i, j] / total
            coef = 4.0 * (p[i, j] - q_raw) * num[i, j]
            g0 += coef * (y[i, 0] - y[j, 0])
            g1 += coef * (y[i, 1] - y[j, 1])
            if p[i, j] > _EPS:
                q = q_raw if q_raw > _EPS else _EPS
                kl += p[i, j] * np.log(p[i, j] / q)
        grad[i, 0] = g0
        grad[i, 1] = g1
    return grad, kl


def _grad_kl_numpy(p, y):
    d2 = squared_distances(y)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    total = max(num.sum(), _EPS)
    q_raw = num / total
    pq = (p - q_raw) * num
    grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)
    mask = p > _EPS
    q = np.maximum(q_raw, _EPS)
    kl = float((p[mask] * np.log(p[mask] / q[mask])).sum())
    return grad, kl


if accel.NUMBA_ENABLED:
    from numba import njit

    _conditional_probs_nb = njit(cache=True)(_conditional_probs_loops)
    _grad_kl_nb = njit(cache=True)(_grad_kl_loops)
    _conditional_probs = _conditional_probs_nb
    _grad_kl = _grad_kl_nb
else:
    _conditional_probs = _conditional_probs_numpy
    _grad_kl = _grad_kl_numpy


def joint_probabilities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinity matrix; rows of the conditional matrix match the
    target perplexity, the joint sums to one with a zero diagonal."""
    d2 = squared_distances(x)
    cond = _conditional_probs(d2, math.log(perplexity))
    return (cond + cond.T) / (2.0 * x.shape[0])


def tsne(
    x: np.ndarray,
    perplexity: float = 30.0,
    seed: int = 0,
    iters: int = 1000,
    learning_rate: float = 200.0,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int | None = None,
    log_every: int = 50,
) -> Projection2D:
    """Project rows of ``x`` to 2-D; deterministic for a fixed seed.

    ``exaggeration_iters=None`` exaggerates for the first quarter of the run,
    capped at 250 (so the 1000-iteration default gets exactly 250).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise TooFewPoints(f"need at least 4 points, got {n}")
    if exaggeration_iters is None:
        exaggeration_iters = min(250, max(1, iters // 4))
    if not 0 < exaggeration_iters < iters:
        raise ValueError("exaggeration_iters must lie strictly inside the run")
    perplexity = min(perplexity, (n - 1) / 3.0)
    p = joint_probabilities(x, perplexity)

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    exaggerated = p * early_exaggeration

    history: list[tuple[int, float]] = []
    kl_post_exaggeration = np.inf
    kl = np.inf
    for it in range(iters):
        in_exaggeration = it < exaggeration_iters
        grad, _ = _grad_kl(exaggerated if in_exaggeration else p, y)
        momentum = 0.5 if in_exaggeration else 0.8
        opposing = (grad * update) < 0.0
        gains = np.where(opposing, gains + 0.2, gains * 0.8)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        last = it == iters - 1
        boundary = it == exaggeration_iters - 1
        if boundary or last or (it + 1) % log_every == 0:
            _, kl = _grad_kl(p, y)  # always report against the true P
            history.append((it + 1, float(kl)))
            if boundary:
                kl_post_exaggeration = float(kl)
    return Projection2D(
        coords=y,
        kl_final=float(kl),
        kl_post_exaggeration=float(kl_post_exaggeration),
        kl_history=history,
        seed=seed,
        perplexity=perplexity,
    )
