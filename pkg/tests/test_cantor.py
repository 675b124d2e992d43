import itertools

import numpy as np
import pytest

import oracles
from conftest import rel
from dsmetric import errors
from dsmetric.cantor import (CantorTree, best_matching_lower_bound, bottleneck_assignment, cantor_match,
                             conjugating_pair, dyadic_cantor, point_tree, tree_from_nested)
from dsmetric.metric import FiniteMetricSpace
from dsmetric.relation import ds_distance


def test_dyadic_geometry():
    T = dyadic_cantor(1)
    assert np.allclose(T.leaves[:, 0], [1 / 6, 5 / 6])
    assert T.levels[1].diams.tolist() == pytest.approx([1 / 3, 1 / 3])
    assert dyadic_cantor(2).n_leaves == 4
    shifted = dyadic_cantor(2, origin=0.3)
    assert np.allclose(shifted.leaves, dyadic_cantor(2).leaves + 0.3)
    meshes = dyadic_cantor(4).meshes()
    assert all(b <= a for a, b in zip(meshes, meshes[1:]))
    with pytest.raises(errors.BadGeometry):
        dyadic_cantor(2, gap=2.0)


def test_nested_roundtrip():
    T = dyadic_cantor(3, gap=0.2)
    U = tree_from_nested(T.to_nested())
    assert np.allclose(U.leaves, T.leaves)
    assert U.meshes() == pytest.approx(T.meshes())


def test_point_tree_is_valid():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, (13, 2))
    T = point_tree(pts)
    assert isinstance(T, CantorTree) and T.n_leaves == 13
    assert T.meshes()[-1] == 0


def test_translation_matching():
    A = dyadic_cantor(3)
    B = dyadic_cantor(3, origin=0.01)
    m = cantor_match(A, B, 0.05)
    assert m.displacement == pytest.approx(0.01)
    assert m.is_bijection
    assert best_matching_lower_bound(A, B) == pytest.approx(0.01)


def test_identity_matching():
    A = dyadic_cantor(3)
    m = cantor_match(A, A, 0.1)
    assert m.displacement == 0 and best_matching_lower_bound(A, A) == 0


def test_thirds_vs_fifths_sandwich():
    A, B = dyadic_cantor(2), dyadic_cantor(2, gap=0.2)
    m = cantor_match(A, B, 0.2)
    assert m.hausdorff <= m.displacement <= m.hausdorff + 0.6
    assert best_matching_lower_bound(A, B) >= m.hausdorff


def test_bottleneck_against_permutations(rng):
    for n in (3, 4, 6, 11):
        D = rng.uniform(0, 1, (n, n))
        val, perm = bottleneck_assignment(D)
        assert sorted(perm.tolist()) == list(range(n))
        assert val == max(D[i, perm[i]] for i in range(n))
        if n <= 6:
            assert val == oracles.bottleneck(D.tolist())


def test_four_leaf_lower_bound(rng):
    for _ in range(10):
        A = point_tree(rng.uniform(0, 1, (4, 1)))
        B = point_tree(rng.uniform(0, 1, (4, 1)))
        want = min(max(abs(A.leaves[i, 0] - B.leaves[p[i], 0]) for i in range(4))
                   for p in itertools.permutations(range(4)))
        assert best_matching_lower_bound(A, B) == pytest.approx(want, abs=1e-15)
    with pytest.raises(errors.LeafCountMismatch):
        best_matching_lower_bound(dyadic_cantor(1), dyadic_cantor(2))


def _pair_space(P, Q):
    return FiniteMetricSpace.euclidean(np.vstack([P, Q]))


def test_conjugating_identity_and_translation():
    pts = dyadic_cantor(2).leaves
    s = FiniteMetricSpace.euclidean(pts)
    g = rel(s, [(0, 2), (1, 3), (2, 0), (3, 1)])
    p = conjugating_pair(g, g, 0.1)
    assert all(k == v for k, v in p.h1.items()) and p.displacement1 == p.displacement2 == 0

    t = 0.01
    s2 = _pair_space(pts, pts + t)
    g2 = rel(s2, [(0, 2), (1, 3), (2, 0), (3, 1)])
    j2 = rel(s2, [(4, 6), (5, 7), (6, 4), (7, 5)])
    p = conjugating_pair(g2, j2, 0.05)
    assert p.displacement1 == pytest.approx(t) and p.displacement2 == pytest.approx(t)
    for x, y in g2.pairs.tolist():
        assert (p.h1[x], p.h2[y]) in j2.pair_set()


def test_conjugating_perturbed_swap():
    pts = dyadic_cantor(2).leaves
    moved = pts + np.array([[0.05], [-0.03], [0.02], [0.04]])
    s = _pair_space(pts, moved)
    swap = [(0, 2), (1, 3), (2, 0), (3, 1)]
    g = rel(s, swap)
    j = rel(s, [(a + 4, b + 4) for a, b in swap])
    assert ds_distance(g, j).value == pytest.approx(0.05)
    p = conjugating_pair(g, j, 0.1)
    assert max(p.displacement1, p.displacement2) <= p.graph_displacement < 0.1
    for x in g.as_map():
        assert p.h2[g.as_map()[x]] == j.as_map()[p.h1[x]]


def test_conjugating_preconditions():
    s = FiniteMetricSpace.euclidean([[0.0], [1.0], [5.0], [6.0]])
    g = rel(s, [(0, 1), (1, 0)])
    j = rel(s, [(2, 3), (3, 2)])
    with pytest.raises(errors.DistanceNotBelowDelta):
        conjugating_pair(g, j, 0.5)
    with pytest.raises(errors.NotBijection):
        conjugating_pair(rel(s, [(0, 0), (0, 1), (1, 0)]), g, 10)
