import math

import numpy as np
import pytest

from miscover.clustering import ClusterConfig
from miscover.discover import (
    ClusterReport,
    VocabMismatch,
    annotate_duplicates,
    cluster_metrics,
    clusters_to_json,
    discover_per_rubric,
    extract_embeddings,
    projection_csv,
    run_discovery,
)
from miscover.generator import GeneratorSpec, generate
from miscover.nnet import TrainConfig, init_code2vec
from miscover.pathctx import build_vocab, encode_corpus, extract_paths
from miscover.turtlelang import parse

from helpers import separable_corpus


def _encoded(max_contexts=30):
    enc, labels, asts, vocab = separable_corpus(max_contexts=max_contexts)
    rng = np.random.default_rng(0)
    cfg = TrainConfig(d_emb=6, d_hidden=6)
    params = init_code2vec(enc.n_terminals, enc.n_paths, cfg, rng)
    return enc, params


class TestExtractEmbeddings:
    def test_shape_and_determinism(self):
        enc, params = _encoded()
        emb = extract_embeddings(params, enc, enc.vocab_hash)
        assert emb.shape == (len(enc), 30 * 6)
        again = extract_embeddings(params, enc, enc.vocab_hash)
        assert np.array_equal(emb, again)

    def test_identical_asts_identical_rows(self):
        src = "pendown move 3 turn 9"
        asts = [parse(src), parse(src)]
        sets = [extract_paths(a) for a in asts]
        vocab = build_vocab(sets)
        enc = encode_corpus(["a", "b"], sets, vocab, max_contexts=10)
        rng = np.random.default_rng(1)
        params = init_code2vec(
            enc.n_terminals, enc.n_paths, TrainConfig(d_emb=4, d_hidden=4), rng
        )
        emb = extract_embeddings(params, enc)
        assert np.array_equal(emb[0], emb[1])

    def test_pad_segments_exactly_zero(self):
        enc, params = _encoded()
        emb = extract_embeddings(params, enc, enc.vocab_hash)
        h = 6
        for i in range(len(enc)):
            k = int(enc.mask[i].sum())
            tail = emb[i, k * h :]
            assert (tail == 0).all()
            head = emb[i, : k * h].reshape(k, h)
            assert (np.abs(head).sum(axis=1) > 0).all()

    def test_vocab_mismatch(self):
        enc, params = _encoded()
        with pytest.raises(VocabMismatch):
            extract_embeddings(params, enc, "someotherhash")

    def test_pooled_kind(self):
        enc, params = _encoded()
        emb = extract_embeddings(params, enc, enc.vocab_hash, kind="pooled")
        assert emb.shape == (len(enc), 6)


class TestClusterMetrics:
    def test_equilateral_triangle_closed_form(self):
        # unit equilateral triangle: mean pairwise = 1, mean distance to
        # centroid = 1/sqrt(3), so normalized ED = sqrt(3)
        embeddings = np.array(
            [[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]
        )
        rows = np.array([0, 1, 2])
        ted = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
        ed, ted_norm, degenerate = cluster_metrics(rows, embeddings, ted, rows)
        assert not degenerate
        assert ed == pytest.approx(math.sqrt(3), rel=1e-12)

    def test_identical_submissions_zero_with_flag(self):
        embeddings = np.ones((4, 3))
        rows = np.array([0, 1, 2, 3])
        ted = np.zeros((4, 4))
        ed, ted_norm, degenerate = cluster_metrics(rows, embeddings, ted, rows)
        assert ed == 0.0 and ted_norm == 0.0
        assert degenerate

    def test_member_order_invariance(self):
        rng = np.random.default_rng(3)
        embeddings = rng.normal(size=(6, 5))
        ted = rng.integers(1, 9, size=(6, 6)).astype(float)
        ted = (ted + ted.T) / 2
        np.fill_diagonal(ted, 0)
        all_rows = np.arange(6)
        a = cluster_metrics(np.array([0, 2, 4]), embeddings, ted, all_rows)
        b = cluster_metrics(np.array([4, 0, 2]), embeddings, ted, all_rows)
        assert a[0] == pytest.approx(b[0], rel=1e-12)
        assert a[1] == pytest.approx(b[1], rel=1e-12)


def _planted_setup(n_per=5):
    """Incorrect submissions with hand-planted 2-D structure per group."""
    corpus, groups = generate(
        GeneratorSpec(n_correct=4, n_dup_moves=n_per, n_fixed_repeat=n_per,
                      n_local_var=n_per, seed=5)
    )
    incorrect = corpus.incorrect()
    centers = {"A": (0.0, 0.0), "B": (40.0, 0.0), "C": (0.0, 40.0)}
    rng = np.random.default_rng(9)
    projection = np.array(
        [
            np.array(centers[groups[s.id]]) + rng.normal(0, 0.8, 2)
            for s in incorrect
        ]
    )
    embeddings = np.hstack([projection, np.zeros((len(incorrect), 3))])
    return incorrect, embeddings, projection, groups


class TestDiscoverPerRubric:
    def test_planted_groups_recovered_exactly(self):
        incorrect, embeddings, projection, groups = _planted_setup()
        report = discover_per_rubric(
            incorrect, embeddings, projection, 0, ClusterConfig()
        )
        assert len(report.clusters) == 3
        recovered = [frozenset(c.members) for c in report.clusters]
        for g in ("A", "B", "C"):
            want = frozenset(s.id for s in incorrect if groups[s.id] == g)
            assert want in recovered

    def test_every_failing_submission_covered_once(self):
        incorrect, embeddings, projection, _ = _planted_setup()
        report = discover_per_rubric(
            incorrect, embeddings, projection, 0, ClusterConfig()
        )
        failing = sorted(s.id for s in incorrect if not s.rubric[0])
        covered = sorted(report.covered_ids())
        assert covered == failing

    def test_density_ranks_sorted_and_selection_cap(self):
        incorrect, embeddings, projection, _ = _planted_setup()
        report = discover_per_rubric(
            incorrect, embeddings, projection, 0, ClusterConfig(top_clusters=2)
        )
        ranks = [c.density_rank for c in report.clusters]
        assert ranks == sorted(ranks)
        intra = [c.mean_intra_2d for c in report.clusters]
        assert intra == sorted(intra)
        assert sum(c.selected for c in report.clusters) == 2

    def test_too_few_failures_note(self):
        incorrect, embeddings, projection, groups = _planted_setup()
        # rubric item 3 fails only for group A submissions; restrict to 2
        keep = [
            k
            for k, s in enumerate(incorrect)
            if groups[s.id] != "A" or k in [0, 1, 2, 3, 4]
        ]
        a_rows = [k for k, s in enumerate(incorrect) if groups[s.id] == "A"][:2]
        rows = [k for k, s in enumerate(incorrect) if groups[s.id] != "A"] + a_rows
        subset = [incorrect[k] for k in rows]
        report = discover_per_rubric(
            subset, embeddings[rows], projection[rows], 3, ClusterConfig(minpts=3)
        )
        assert report.clusters == []
        assert report.note is not None
        assert "minpts" in report.note

    def test_fixed_epsilon_respected(self):
        incorrect, embeddings, projection, _ = _planted_setup()
        report = discover_per_rubric(
            incorrect, embeddings, projection, 0, ClusterConfig(epsilon=5.0)
        )
        assert report.epsilon == 5.0


class TestDuplicates:
    def _cluster(self, members, rank=1):
        from miscover.discover import ClusterInfo

        return ClusterInfo(
            members=tuple(members),
            ed=0.1,
            ted=0.2,
            density_rank=rank,
            mean_intra_2d=1.0,
            selected=True,
        )

    def test_overlapping_cluster_annotated(self):
        r0 = ClusterReport(item=0, item_name="procedure_one_param")
        r0.clusters = [self._cluster(["a", "b", "c", "d", "e"])]
        r3 = ClusterReport(item=3, item_name="repeat_rotations")
        r3.clusters = [self._cluster(["a", "b", "c", "d", "e"]),
                       self._cluster(["x", "y", "z"], rank=2)]
        annotate_duplicates([r0, r3], threshold=0.8)
        assert r0.clusters[0].duplicate_of is None
        assert r3.clusters[0].duplicate_of == "R0/c0"
        assert r3.clusters[1].duplicate_of is None

    def test_below_threshold_not_annotated(self):
        r0 = ClusterReport(item=0, item_name="procedure_one_param")
        r0.clusters = [self._cluster(["a", "b", "c", "d"])]
        r1 = ClusterReport(item=1, item_name="pen_down")
        r1.clusters = [self._cluster(["a", "b", "x", "y"])]
        annotate_duplicates([r0, r1], threshold=0.8)
        assert r1.clusters[0].duplicate_of is None


class TestRunDiscovery:
    def test_pipeline_outputs_consistent(self):
        corpus, _ = generate(
            GeneratorSpec(n_correct=6, n_dup_moves=4, n_fixed_repeat=4,
                          n_local_var=4, seed=11)
        )
        context_sets = [extract_paths(s.ast) for s in corpus]
        vocab = build_vocab(context_sets)
        enc = encode_corpus(corpus.ids(), context_sets, vocab, max_contexts=60)
        rng = np.random.default_rng(2)
        params = init_code2vec(
            enc.n_terminals, enc.n_paths, TrainConfig(d_emb=8, d_hidden=8), rng
        )
        config = ClusterConfig(tsne_iters=300)
        result = run_discovery(
            corpus, params, enc, config, vocab_hash=enc.vocab_hash, tsne_seed=3
        )
        assert len(result.reports) == 6
        incorrect_ids = set(result.incorrect_ids)
        for item, report in enumerate(result.reports):
            failing = sorted(
                s.id for s in corpus.incorrect() if not s.rubric[item]
            )
            if report.note is None:
                assert sorted(report.covered_ids()) == failing
            covered = set(report.covered_ids())
            assert covered <= incorrect_ids

        # serialization round-trips and carries the documented fields
        doc = clusters_to_json(result.reports)
        import json

        parsed = json.loads(doc)
        assert set(parsed) == {f"R{i}" for i in range(6)}
        for clusters in parsed.values():
            for c in clusters:
                assert set(c) == {"members", "ed", "ted", "density_rank", "duplicate_of"}

        csv_text = projection_csv(result)
        lines = csv_text.strip().splitlines()
        assert lines[0] == "id,x,y,failed_items"
        assert len(lines) == 1 + len(result.incorrect_ids)

    def test_repeat_run_identical(self):
        corpus, _ = generate(
            GeneratorSpec(n_correct=5, n_dup_moves=4, n_fixed_repeat=4,
                          n_local_var=3, seed=13)
        )
        context_sets = [extract_paths(s.ast) for s in corpus]
        vocab = build_vocab(context_sets)
        enc = encode_corpus(corpus.ids(), context_sets, vocab, max_contexts=60)
        rng = np.random.default_rng(4)
        params = init_code2vec(
            enc.n_terminals, enc.n_paths, TrainConfig(d_emb=6, d_hidden=6), rng
        )
        config = ClusterConfig(tsne_iters=250)
        a = run_discovery(corpus, params, enc, config, tsne_seed=1)
        b = run_discovery(corpus, params, enc, config, tsne_seed=1)
        assert clusters_to_json(a.reports) == clusters_to_json(b.reports)
        assert projection_csv(a) == projection_csv(b)
