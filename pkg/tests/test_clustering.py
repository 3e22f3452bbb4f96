import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from miscover.clustering import (
    NOISE,
    ClusterConfig,
    dbscan,
    kdist_curve,
    select_epsilon,
)

from oracles import brute_force_dbscan


def normalize_labels(labels):
    """Rename cluster ids by order of first appearance; noise stays -1."""
    mapping = {}
    out = []
    for lab in labels:
        if lab == NOISE:
            out.append(NOISE)
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return out


class TestDbscan:
    def test_tight_triplet_plus_outlier(self):
        pts = np.array([[0, 0], [0.1, 0], [0, 0.1], [50, 50]])
        labels = dbscan(pts, epsilon=0.5, minpts=3)
        assert list(labels) == [0, 0, 0, NOISE]

    def test_epsilon_below_every_distance(self):
        pts = np.array([[0, 0], [10, 0], [0, 10], [10, 10]])
        labels = dbscan(pts, epsilon=0.5, minpts=2)
        assert (labels == NOISE).all()

    def test_inclusive_radius(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        labels = dbscan(pts, epsilon=1.0, minpts=3)
        # the middle point has exactly 3 neighbors counting itself
        assert labels[1] != NOISE
        assert len(set(labels)) == 1

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError):
            dbscan(np.zeros((4, 2)), epsilon=0.0, minpts=3)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_reference(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 61))
        # mixture of a few gaussian blobs and uniform noise
        centers = rng.uniform(-10, 10, size=(int(rng.integers(1, 4)), 2))
        pts = np.vstack(
            [
                centers[rng.integers(0, len(centers))] + rng.normal(0, 0.5, 2)
                if rng.random() < 0.8
                else rng.uniform(-12, 12, 2)
                for _ in range(n)
            ]
        )
        eps = float(rng.uniform(0.3, 3.0))
        minpts = int(rng.integers(2, 6))
        got = dbscan(pts, eps, minpts)
        want = brute_force_dbscan(pts, eps, minpts)
        assert normalize_labels(got) == normalize_labels(want)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_core_and_noise_status_permutation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(6, 40))
        pts = rng.uniform(-5, 5, size=(n, 2))
        eps, minpts = 1.5, 3
        base = dbscan(pts, eps, minpts)
        perm = rng.permutation(n)
        permuted = dbscan(pts[perm], eps, minpts)
        # noise status must be identical point-for-point under permutation
        assert [(base[p] == NOISE) for p in perm] == [
            (lab == NOISE) for lab in permuted
        ]


class TestSelectEpsilon:
    def test_degenerate_equidistant_octagon(self):
        # regular polygon: every vertex sees the same distance profile, so
        # the k-dist curve is flat and epsilon is its common value
        angles = np.linspace(0, 2 * np.pi, 8, endpoint=False)
        pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        curve = kdist_curve(pts, 3)
        assert np.allclose(curve, curve[0])
        assert select_epsilon(pts, 3) == pytest.approx(curve[0])

    def test_blobs_plus_noise_bracketing(self):
        rng = np.random.default_rng(10)
        blob1 = rng.normal(0, 0.3, size=(12, 2))
        blob2 = rng.normal(0, 0.3, size=(12, 2)) + [30.0, 0.0]
        noise = np.array([[15.0, 40.0], [-20.0, -35.0], [50.0, 50.0]])
        pts = np.vstack([blob1, blob2, noise])
        minpts = 3
        eps = select_epsilon(pts, minpts)

        # bracket: above every blob point's core radius (distance to the
        # (minpts-1)-th other point, since the radius test counts self),
        # below every blob-to-noise gap
        d = np.sqrt(((pts[:, None] - pts[None, :]) ** 2).sum(-1))
        core_radius = max(np.sort(d[i])[minpts - 1] for i in range(24))
        gaps = [np.sqrt(((pts[:24] - p) ** 2).sum(1)).min() for p in noise]
        assert core_radius < eps < min(gaps)

        # at that radius the blobs cluster fully and the noise stays noise
        labels = dbscan(pts, eps, minpts)
        assert (labels[:24] != NOISE).all()
        assert set(labels[:12]) != set(labels[12:24])
        assert (labels[24:] == NOISE).all()

    def test_scale_equivariance(self):
        rng = np.random.default_rng(11)
        pts = np.vstack(
            [rng.normal(0, 0.4, (10, 2)), rng.normal(0, 0.4, (10, 2)) + 8]
        )
        eps = select_epsilon(pts, 3)
        for scale in (0.1, 3.0, 250.0):
            assert select_epsilon(pts * scale, 3) == pytest.approx(
                eps * scale, rel=1e-12
            )

    def test_requires_enough_points(self):
        with pytest.raises(ValueError):
            select_epsilon(np.zeros((3, 2)), 3)

    def test_duplicate_heavy_fallback_positive(self):
        pts = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0], [1.1, 0.0], [5.0, 5.0]])
        eps = select_epsilon(pts, 3)
        assert eps > 0.0


class TestClusterConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ClusterConfig(minpts=1)
        with pytest.raises(ValueError):
            ClusterConfig(epsilon=0.0)
        cfg = ClusterConfig()
        assert cfg.minpts == 3
        assert cfg.epsilon is None
