import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from miscover import accel
from miscover.treedist import _ted_kernel, ted_matrix, tree_edit_distance
from miscover.turtlelang import AstNode, parse, tree_size

from oracles import enumerate_trees, naive_ted, random_tree

ALPHABET = ("a", "b", "c")


def _random_trees(seed, count, max_nodes):
    rng = np.random.default_rng(seed)
    return [
        random_tree(rng, int(rng.integers(1, max_nodes + 1)), ALPHABET)
        for _ in range(count)
    ]


class TestBasics:
    def test_identical_trees(self):
        t = parse("to f :n pendown repeat :n [ move 1 turn 2 ] end")
        assert tree_edit_distance(t, t) == 0

    def test_single_relabel(self):
        a = AstNode("Move", (AstNode("1"),))
        b = AstNode("Move", (AstNode("2"),))
        assert tree_edit_distance(a, b) == 1

    def test_single_insert(self):
        a = AstNode("Block", (AstNode("x"),))
        b = AstNode("Block", (AstNode("x"), AstNode("y")))
        assert tree_edit_distance(a, b) == 1

    def test_matrix_matches_pairwise(self):
        trees = _random_trees(7, 6, 10)
        mat = ted_matrix(trees)
        for i in range(len(trees)):
            for j in range(len(trees)):
                assert mat[i, j] == tree_edit_distance(trees[i], trees[j])
        assert (mat == mat.T).all()
        assert (np.diag(mat) == 0).all()


class TestOracle:
    def test_all_pairs_up_to_three_nodes(self):
        trees = enumerate_trees(3, ALPHABET)
        assert len(trees) == 3 + 9 + 54
        for i, a in enumerate(trees):
            for b in trees[i:]:
                assert tree_edit_distance(a, b) == naive_ted(a, b)

    def test_sampled_pairs_up_to_five_nodes(self):
        trees = enumerate_trees(5, ALPHABET)
        assert len(trees) == 3 + 9 + 54 + 405 + 3402
        rng = np.random.default_rng(20240)
        for _ in range(300):
            a = trees[int(rng.integers(0, len(trees)))]
            b = trees[int(rng.integers(0, len(trees)))]
            assert tree_edit_distance(a, b) == naive_ted(a, b)


@st.composite
def small_trees(draw):
    n = draw(st.integers(min_value=1, max_value=15))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return random_tree(np.random.default_rng(seed), n, ALPHABET)


class TestMetricProperties:
    @given(small_trees(), small_trees())
    @settings(max_examples=60, deadline=None)
    def test_symmetry(self, a, b):
        assert tree_edit_distance(a, b) == tree_edit_distance(b, a)

    @given(small_trees(), small_trees(), small_trees())
    @settings(max_examples=40, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        assert tree_edit_distance(a, c) <= tree_edit_distance(
            a, b
        ) + tree_edit_distance(b, c)

    @given(small_trees(), small_trees())
    @settings(max_examples=60, deadline=None)
    def test_zero_iff_equal(self, a, b):
        d = tree_edit_distance(a, b)
        assert (d == 0) == (a == b)

    @given(small_trees(), small_trees())
    @settings(max_examples=60, deadline=None)
    def test_size_upper_bound(self, a, b):
        assert tree_edit_distance(a, b) <= tree_size(a) + tree_size(b)


def _encoded_pool(seed, count, max_nodes):
    from miscover.treedist import _encode, _postorder

    trees = _random_trees(seed, count, max_nodes)
    index: dict[str, int] = {}
    encoded = []
    for t in trees:
        labels, lml, kr = _postorder(t)
        encoded.append(
            (
                _encode(labels, index),
                np.asarray(lml, dtype=np.int64),
                np.asarray(kr, dtype=np.int64),
            )
        )
    return encoded


@pytest.mark.skipif(not accel.NUMBA_ENABLED, reason="numba backend inactive")
def test_compiled_kernel_matches_loop_kernel():
    from miscover.treedist import _ted_kernel_nb

    encoded = _encoded_pool(13, 12, 14)
    for i in range(len(encoded)):
        for j in range(i, len(encoded)):
            assert _ted_kernel(*encoded[i], *encoded[j]) == _ted_kernel_nb(
                *encoded[i], *encoded[j]
            )
