import itertools
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from zagreb_lab import _kernels
from zagreb_lab.errors import InvalidSizeError, NoSubtreeError
from zagreb_lab.trees import (
    RecursiveTree,
    TreeModel,
    count_trees,
    draw_choices,
    dump_tree,
    gen_nonplane,
    gen_plane,
    generate,
    grow_tree,
    leftmost_subtree_size,
    load_tree,
    make_rng,
)

MODELS = list(TreeModel)


def batch_stats(model, n, count, seed, split=False):
    choices = draw_choices(make_rng(seed), model, n, count)
    return _kernels.grow_stats_batch(choices, model.is_plane, 2, split)


def brute_plane_trees(n):
    """Every gap history replayed on explicit child lists; returns shape -> count."""
    shapes = {}
    for hist in itertools.product(*[range(2 * i - 3) for i in range(2, n + 1)]):
        kids = {1: []}
        for i, g in zip(range(2, n + 1), hist):
            # free places in label order, each node lists its gaps left to right
            places = [(v, slot) for v in sorted(kids) for slot in range(len(kids[v]) + 1)]
            v, slot = places[g]
            kids[v].insert(slot, i)
            kids[i] = []
        key = tuple(tuple(kids[v]) for v in range(1, n + 1))
        shapes[key] = shapes.get(key, 0) + 1
    return shapes


def test_single_node_and_forced_attachment():
    for seed in range(5):
        t = gen_nonplane(1, seed)
        assert t.n == 1 and list(t.edges()) == []
        assert gen_nonplane(2, seed).parents() == [1]
        assert gen_plane(2, seed).parents() == [1]


def test_zero_size_rejected():
    with pytest.raises(InvalidSizeError):
        gen_nonplane(0, 1)
    with pytest.raises(InvalidSizeError):
        gen_plane(0, 1)
    with pytest.raises(InvalidSizeError):
        count_trees(TreeModel.PLANE, 0)


@pytest.mark.parametrize("model", MODELS)
def test_reproducible(model):
    a, b = generate(model, 500, 99), generate(model, 500, 99)
    assert a.shape_key() == b.shape_key()
    assert generate(model, 500, 100).shape_key() != a.shape_key()


def test_seed_reduced_mod_2_64():
    assert gen_plane(50, -1).shape_key() == gen_plane(50, 2**64 - 1).shape_key()


@pytest.mark.parametrize("model", MODELS)
@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 2**64 - 1))
def test_structural_invariants(model, n, seed):
    t = generate(model, n, seed)
    t.check()
    assert np.all(t.parent[2:] < np.arange(2, n + 1))
    assert int(t.child_counts()[1:].sum()) == n - 1
    if model.is_plane and n >= 2:
        ranks = sorted(t.sibling_rank(v) for v in t.children(1))
        assert ranks == list(range(1, len(ranks) + 1))


def test_count_trees():
    assert count_trees(TreeModel.NONPLANE, 4) == 6
    assert count_trees(TreeModel.PLANE, 4) == 15
    assert count_trees(TreeModel.PLANE, 1) == 1
    for n in range(1, 12):
        assert count_trees("plane", n) == math.prod(range(1, 2 * n - 2, 2))


def test_nonplane_parent_of_3():
    rs = batch_stats(TreeModel.NONPLANE, 3, 10**6, 11)[1]
    assert abs(np.mean(rs == 2) - 0.5) < 0.002


def test_plane_root_degree_n3():
    rs = batch_stats(TreeModel.PLANE, 3, 10**6, 12)[1]
    assert abs(np.mean(rs == 2) - 2 / 3) < 0.002


def test_plane_root_degree_mean_n4():
    # 11/5 from the 15 trees of size 4
    shapes = brute_plane_trees(4)
    assert sum(shapes.values()) == 15 and len(shapes) == 15
    exact = sum(len(k[0]) * c for k, c in shapes.items()) / 15
    assert exact == pytest.approx(11 / 5)
    rs = batch_stats(TreeModel.PLANE, 4, 10**6, 13)[1]
    assert abs(rs.mean() - 11 / 5) < 0.01


def test_batch_matches_single_tree_generation():
    rng = make_rng(5)
    block = draw_choices(rng, TreeModel.PLANE, 30, 8)
    rng = make_rng(5)
    rows = [draw_choices(rng, TreeModel.PLANE, 30) for _ in range(8)]
    assert np.array_equal(block, np.array(rows))
    assert grow_tree(TreeModel.PLANE, rows[0]).shape_key() == gen_plane(30, 5).shape_key()


def test_leftmost_subtree():
    t = gen_plane(2, 0)
    assert leftmost_subtree_size(t) == 1
    with pytest.raises(NoSubtreeError):
        leftmost_subtree_size(gen_plane(1, 0))
    # non-plane: first subtree hangs at node 2
    t = RecursiveTree.from_parents([1, 1, 2, 3], "nonplane")
    assert leftmost_subtree_size(t) == 2


def test_leftmost_subtree_plane_uses_order():
    # node 3 inserted left of node 2
    t = RecursiveTree.from_parents([1, 1, 2], "plane", ranks=[2, 1, 1])
    assert list(t.children(1)) == [3, 2]
    assert leftmost_subtree_size(t) == 1


def test_split_frequencies():
    sp = batch_stats(TreeModel.PLANE, 3, 10**6, 14, split=True)[3]
    assert abs(np.mean(sp == 1) - 2 / 3) < 0.002
    sp = batch_stats(TreeModel.NONPLANE, 5, 10**6, 15, split=True)[3]
    for j in range(1, 5):
        assert abs(np.mean(sp == j) - 0.25) < 0.002


def test_kernel_split_matches_tree_walk():
    for model in MODELS:
        choices = draw_choices(make_rng(3), model, 40, 50)
        sp = _kernels.grow_stats_batch(choices, model.is_plane, 2, True)[3]
        for row, s in zip(choices, sp):
            assert leftmost_subtree_size(grow_tree(model, row)) == s


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_nonplane_uniform_over_trees(n):
    reps = 10**5
    counts = {}
    for seed in range(reps // 1000):
        choices = draw_choices(make_rng(seed, 7), TreeModel.NONPLANE, n, 1000)
        for row in choices:
            key = grow_tree(TreeModel.NONPLANE, row).shape_key()
            counts[key] = counts.get(key, 0) + 1
    assert len(counts) == math.factorial(n - 1)
    assert scipy.stats.chisquare(list(counts.values())).pvalue > 0.001


@pytest.mark.parametrize("n", [3, 4, 5])
def test_plane_frequencies_match_gap_law(n):
    exact = brute_plane_trees(n)
    total = sum(exact.values())
    reps = 60_000
    seen = {}
    choices = draw_choices(make_rng(n, 8), TreeModel.PLANE, n, reps)
    for row in choices:
        t = grow_tree(TreeModel.PLANE, row)
        key = tuple(tuple(int(c) for c in t.children(v)) for v in range(1, n + 1))
        seen[key] = seen.get(key, 0) + 1
    assert set(seen) == set(exact)
    for key, c in exact.items():
        p = c / total
        assert abs(seen[key] - reps * p) <= 3 * math.sqrt(reps * p * (1 - p)) + 1


@pytest.mark.parametrize("model", MODELS)
def test_dump_roundtrip(model):
    t = generate(model, 60, 4)
    text = dump_tree(t)
    assert text.splitlines()[0].count("\t") == 2
    back = load_tree(text, model)
    assert back.shape_key() == t.shape_key()
