import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zagreb_lab import _kernels
from zagreb_lab.errors import InvalidOrderError
from zagreb_lab.trees import RecursiveTree, TreeModel, draw_choices, generate, grow_tree, make_rng
from zagreb_lab.zagreb import (
    ZagrebAccumulator,
    attachment_increment,
    degree_profile,
    root_degree,
    zagreb_index,
    zagreb_index_edge_form,
)

PATH3 = RecursiveTree.from_parents([1, 2])
STAR3 = RecursiveTree.from_parents([1, 1])
STAR4 = RecursiveTree.from_parents([1, 1, 1])
SINGLE = RecursiveTree.from_parents([])


def test_degree_profiles():
    assert degree_profile(SINGLE) == [0]
    assert degree_profile(PATH3) == [1, 2, 1]
    assert degree_profile(STAR4) == [3, 1, 1, 1]


def test_small_values():
    for k in (2, 3, 5):
        assert zagreb_index(RecursiveTree.from_parents([1]), k) == 2
    assert zagreb_index(PATH3, 2) == 6
    assert zagreb_index(STAR3, 2) == 6
    assert zagreb_index(STAR4, 3) == 30
    assert zagreb_index_edge_form(RecursiveTree.from_parents([1]), 2) == 2
    assert zagreb_index_edge_form(PATH3, 3) == 10 == zagreb_index(PATH3, 3)
    assert zagreb_index(SINGLE, 2) == 0


def test_root_degree():
    assert root_degree(SINGLE) == 0
    assert root_degree(RecursiveTree.from_parents([1])) == 1
    assert root_degree(STAR4) == 3


def test_order_below_two_rejected():
    for f in (zagreb_index, zagreb_index_edge_form):
        with pytest.raises(InvalidOrderError):
            f(PATH3, 1)
    with pytest.raises(InvalidOrderError):
        ZagrebAccumulator(0)


def test_big_values_do_not_overflow():
    star = RecursiveTree.from_parents([1] * 99_999)
    assert zagreb_index(star, 4) == 99_999**4 + 99_999


@pytest.mark.parametrize("model", list(TreeModel))
def test_edge_form_equals_vertex_form_many_trees(model):
    rng = make_rng(2024)
    for t in range(5000):
        n = int(rng.integers(1, 40))
        tree = grow_tree(model, draw_choices(rng, model, n))
        degs = degree_profile(tree)
        assert sum(degs) == 2 * (n - 1)
        if n >= 2:
            assert min(degs) >= 1
        for k in (2, 3, 4, 5):
            assert zagreb_index_edge_form(tree, k) == zagreb_index(tree, k)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 400), seed=st.integers(0, 2**32), k=st.integers(2, 6), plane=st.booleans())
def test_incremental_matches_batch(n, seed, k, plane):
    model = TreeModel.PLANE if plane else TreeModel.NONPLANE
    tree = generate(model, n, seed)
    acc = ZagrebAccumulator.from_tree(tree, k)
    assert acc.value == zagreb_index(tree, k)
    choices = draw_choices(make_rng(seed), model, n, 1)
    zs, rs, mx, _ = _kernels.grow_stats_batch(choices, plane, k, False)
    assert int(zs[0]) == zagreb_index(tree, k)
    assert int(rs[0]) == root_degree(tree)
    assert int(mx[0]) == max(degree_profile(tree))


@settings(max_examples=100, deadline=None)
@given(parents=st.lists(st.integers(0, 10**6), max_size=30), k=st.integers(2, 5))
def test_leaf_increment(parents, k):
    acc = ZagrebAccumulator(k)
    for raw in parents:
        p = raw % acc.n + 1
        before, d = acc.value, acc.degrees[p]
        acc.attach(p)
        assert acc.value - before == (d + 1) ** k - d**k + 1 == attachment_increment(d, k)


def test_k2_depends_only_on_degrees():
    # two different shapes sharing the degree multiset {3, 2, 1, 1, 1}
    a = RecursiveTree.from_parents([1, 1, 1, 2])
    b = RecursiveTree.from_parents([1, 1, 2, 2])
    assert sorted(degree_profile(a)) == sorted(degree_profile(b))
    for k in (2, 3):
        assert zagreb_index(a, k) == zagreb_index(b, k)
        assert zagreb_index_edge_form(a, k) == zagreb_index_edge_form(b, k)
