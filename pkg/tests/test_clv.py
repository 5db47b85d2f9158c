import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from clvsim import clv
from clvsim.clv import Dendrogram, Merge, correlation_distance_matrix, cut_tree, extract_rvs, ward_linkage
from clvsim.errors import DegenerateVariableError, InvalidArgumentError


def merge_tuples(tree):
    return [(m.left_id, m.right_id, m.size) for m in tree.merges]


# -- correlation distance ------------------------------------------------------

def test_distance_perfect_correlations():
    x = np.array([[1, 2, 3], [2, 4, 2], [3, 6, 1]], dtype=float)
    d = correlation_distance_matrix(x).values
    assert d[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert d[0, 2] == pytest.approx(2.0, abs=1e-15)


def test_distance_against_textbook_pearson():
    rng = np.random.default_rng(108)
    x = rng.normal(size=(10, 8))
    d = correlation_distance_matrix(x).values
    for a in range(8):
        for b in range(8):
            expected = 0.0 if a == b else 1.0 - oracles.pearson_textbook(x[:, a].tolist(), x[:, b].tolist())
            assert d[a, b] == pytest.approx(expected, abs=1e-12)


def test_distance_names_degenerate_column():
    x = np.random.default_rng(0).normal(size=(6, 4))
    x[:, 2] = 3.5
    with pytest.raises(DegenerateVariableError) as info:
        correlation_distance_matrix(x)
    assert info.value.index == 2


@settings(max_examples=50, deadline=None)
@given(arrays(float, (7, 5), elements=st.floats(-1e3, 1e3)))
def test_distance_bounds_and_symmetry(x):
    if np.any(np.ptp(x, axis=0) < 1e-6):
        return
    d = correlation_distance_matrix(x).values
    assert np.all(d >= 0) and np.all(d <= 2)
    assert np.all(np.diag(d) == 0)
    assert np.array_equal(d, d.T)


# -- Ward ---------------------------------------------------------------------

def test_ward_first_merge_is_closest_pair():
    d = np.array([[0, 0.1, 1.0], [0.1, 0, 1.0], [1.0, 1.0, 0]])
    tree = ward_linkage(d)
    assert (tree.merges[0].left_id, tree.merges[0].right_id) == (1, 2)
    assert tree.merges[0].height == pytest.approx(0.1)
    # (2*1 + 2*1 - 1*0.01) / 3 for the squared distance of {1,2} to 3
    assert tree.merges[1].height == pytest.approx(np.sqrt((4 - 0.01) / 3))
    assert merge_tuples(tree) == [(1, 2, 2), (3, 4, 3)]


def test_ward_two_variables():
    tree = ward_linkage(np.array([[0, 0.7], [0.7, 0]]))
    assert tree.merges == [Merge(1, 2, 0.7, 2)]


def test_ward_tie_break_lexicographic():
    d = np.ones((4, 4)) - np.eye(4)
    tree = ward_linkage(d)
    # {1,2} -> 5; then d(3,4) = d(3,5) = d(4,5) = 1 and (3, 4) is the smallest key
    assert merge_tuples(tree) == [(1, 2, 2), (3, 4, 2), (5, 6, 4)]
    assert merge_tuples(tree) == [(a, b, s) for a, b, _, s in oracles.naive_ward(d)]


def test_ward_structure_invariants():
    rng = np.random.default_rng(42)
    tree = ward_linkage(correlation_distance_matrix(rng.normal(size=(40, 60))))
    sizes = {i: 1 for i in range(1, 61)}
    for t, m in enumerate(tree.merges, start=1):
        assert m.size == sizes[m.left_id] + sizes[m.right_id]
        sizes[60 + t] = m.size
    assert tree.merges[-1].size == 60
    assert np.all(np.diff(tree.heights) >= 0)


@pytest.mark.parametrize("seed", range(25))
def test_ward_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    n_var = int(rng.integers(2, 13))
    if seed % 2:
        d = correlation_distance_matrix(rng.normal(size=(12, n_var))).values
    else:
        d = rng.uniform(0, 2, size=(n_var, n_var))
        d = (d + d.T) / 2
        np.fill_diagonal(d, 0)
    tree = ward_linkage(d)
    ref = oracles.naive_ward(d)
    assert merge_tuples(tree) == [(a, b, s) for a, b, _, s in ref]
    np.testing.assert_allclose(tree.heights, [h for _, _, h, _ in ref], rtol=1e-10, atol=1e-12)


def test_ward_matches_scipy_heights():
    hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    from scipy.spatial.distance import squareform

    d = correlation_distance_matrix(np.random.default_rng(1).normal(size=(40, 100))).values
    z = hierarchy.linkage(squareform(d, checks=False), "ward")
    np.testing.assert_allclose(ward_linkage(d).heights, z[:, 2], atol=1e-12)


# -- cut ------------------------------------------------------------------------

def test_cut_two_clusters_are_root_children():
    rng = np.random.default_rng(3)
    tree = ward_linkage(correlation_distance_matrix(rng.normal(size=(20, 12))))
    cut = cut_tree(tree, 2)
    root = tree.merges[-1]

    def leaves(node):
        if node <= 12:
            return {node - 1}
        m = tree.merges[node - 13]
        return leaves(m.left_id) | leaves(m.right_id)

    assert {frozenset(cut.members(1)), frozenset(cut.members(2))} == {
        frozenset(leaves(root.left_id)), frozenset(leaves(root.right_id))
    }


def test_cut_full_chain_tree():
    merges = [Merge(1, 2, 0.1, 2), Merge(3, 7, 0.2, 3), Merge(4, 8, 0.3, 4), Merge(5, 9, 0.4, 5), Merge(6, 10, 0.5, 6)]
    cut = cut_tree(Dendrogram(merges, 6), 6)
    assert sorted(cut.assignment.tolist()) == [1, 2, 3, 4, 5, 6]
    assert cut_tree(Dendrogram(merges, 6), 2).assignment.tolist() == [1, 1, 1, 1, 1, 2]


def test_cut_rejects_too_many_clusters():
    tree = ward_linkage(np.array([[0, 1.0], [1.0, 0]]))
    with pytest.raises(InvalidArgumentError):
        cut_tree(tree, 3)


@pytest.mark.parametrize("seed", range(10))
def test_cuts_are_nested(seed):
    rng = np.random.default_rng(seed)
    tree = ward_linkage(correlation_distance_matrix(rng.normal(size=(20, 12))))
    for c in range(2, 6):
        coarse, fine = cut_tree(tree, c), cut_tree(tree, c + 1)
        assert len(np.unique(coarse.assignment)) == c
        for f in range(1, c + 2):
            assert len(np.unique(coarse.assignment[fine.members(f)])) == 1


# -- resultant vectors ---------------------------------------------------------

def test_rv_singleton_is_standardized_variable():
    rng = np.random.default_rng(8)
    x = rng.normal(3, 2, size=(40, 3))
    cut = clv.ClusterCut(np.array([1, 2, 2]), 2)
    rv = extract_rvs(x, cut).values
    expected = (x[:, 0] - x[:, 0].mean()) / x[:, 0].std()
    np.testing.assert_allclose(rv[:, 0], expected, atol=1e-12)
    assert rv[:, 0].std() == pytest.approx(1.0, abs=1e-9)


def test_rv_identical_columns():
    col = np.random.default_rng(2).normal(size=10)
    x = np.column_stack([col, col])
    rv = extract_rvs(x, clv.ClusterCut(np.array([1, 1]), 1)).values
    np.testing.assert_allclose(rv[:, 0], (col - col.mean()) / col.std(), atol=1e-12)


def test_rv_opposites_cancel():
    col = np.random.default_rng(3).normal(size=10)
    rv = extract_rvs(np.column_stack([col, -col]), clv.ClusterCut(np.array([1, 1]), 1)).values
    np.testing.assert_allclose(rv[:, 0], 0.0, atol=1e-12)


def test_rv_columns_have_zero_mean():
    rng = np.random.default_rng(4)
    x = rng.normal(50, 10, size=(40, 30))
    tree = ward_linkage(correlation_distance_matrix(x))
    for r in range(2, 7):
        rv = extract_rvs(x, cut_tree(tree, r)).values
        assert rv.shape == (40, r)
        assert np.all(np.abs(rv.mean(axis=0)) < 1e-9)


def test_rv_sample_sd_option():
    x = np.random.default_rng(5).normal(size=(10, 2))
    rv = extract_rvs(x, clv.ClusterCut(np.array([1, 2]), 2), ddof=1).values
    assert rv[:, 0].std(ddof=1) == pytest.approx(1.0)


def test_rv_degenerate_member():
    x = np.random.default_rng(5).normal(size=(10, 3))
    x[:, 1] = 0.0
    with pytest.raises(DegenerateVariableError):
        extract_rvs(x, clv.ClusterCut(np.array([1, 2, 2]), 2))


# -- affine invariance ---------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_affine_invariance_of_pipeline(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(40, 30)) @ rng.normal(size=(30, 30))
    scale = rng.uniform(0.01, 100, size=30)
    shift = rng.uniform(-1000, 1000, size=30)
    y = x * scale + shift
    dx, dy = correlation_distance_matrix(x).values, correlation_distance_matrix(y).values
    np.testing.assert_allclose(dx, dy, atol=1e-9)
    tx, ty = ward_linkage(dx), ward_linkage(dy)
    assert merge_tuples(tx) == merge_tuples(ty)
    np.testing.assert_allclose(tx.heights, ty.heights, atol=1e-9)
    for r in range(2, 7):
        cx, cy = cut_tree(tx, r), cut_tree(ty, r)
        assert np.array_equal(cx.assignment, cy.assignment)
        np.testing.assert_allclose(extract_rvs(x, cx).values, extract_rvs(y, cy).values, atol=1e-9)
