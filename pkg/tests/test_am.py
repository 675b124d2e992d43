import numpy as np
import pytest

import oracles
from conftest import line, random_map, rel, rigid_copy
from dsmetric import errors
from dsmetric.am import am_axioms_suite, am_distance, am_from_close_pair, eps_isometry_report
from dsmetric.discretize import finite_relation_approx
from dsmetric.metric import FiniteMetricSpace, SubsetIndex
from dsmetric.relation import DynamicalRelation, identity_relation


def _local(f):
    c = list(f.carrier)
    pos = {x: i for i, x in enumerate(c)}
    m = f.as_map()
    return f.space.restrict(c).dist.tolist(), [pos[m[x]] for x in c]


def test_eps_isometry_examples():
    s = line(0, 1)
    X = SubsetIndex.of(s, [0, 1])
    r = eps_isometry_report({0: 0, 1: 1}, X, X)
    assert (r.distortion, r.covering, r.eps) == (0, 0, 0)
    r = eps_isometry_report({0: 0, 1: 0}, X, X)
    assert (r.distortion, r.covering, r.eps) == (1, 1, 1)
    t = line(0, 1, 5, 6)
    r = eps_isometry_report({0: 2, 1: 3}, (t, [0, 1]), (t, [2, 3]))
    assert r.eps == 0
    with pytest.raises(errors.PartialMap):
        eps_isometry_report({0: 0}, X, X)


def test_am_examples():
    s = line(0, 1)
    swap, ident = rel(s, [(0, 1), (1, 0)]), identity_relation(s)
    r = am_distance(swap, swap)
    assert r.value == 0 and r.phi == {0: 0, 1: 1} and r.mode == "exact"
    assert am_distance(swap, ident).value == 1.0
    with pytest.raises(errors.NotAFunction):
        am_distance(rel(s, [(0, 0), (0, 1), (1, 0)]), ident)


def test_am_matches_oracle(rng):
    for _ in range(20):
        a = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (3, 1)))
        b = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (4, 1)))
        f = random_map(rng, a, int(rng.integers(1, 4)))
        g = random_map(rng, b, int(rng.integers(1, 5)))
        r = am_distance(f, g)
        assert r.value == pytest.approx(oracles.am(*_local(f), *_local(g)), abs=1e-12)
        assert r.recompute() == r.value


def test_heuristic_mode_is_upper_bound(rng):
    a = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (4, 1)))
    f, g = random_map(rng, a, 4), random_map(rng, a, 4)
    exact = am_distance(f, g)
    heur = am_distance(f, g, budget=1)
    assert heur.mode == "heuristic" and heur.value >= exact.value
    assert heur.recompute() == heur.value


def test_rigid_invariance(rng):
    for _ in range(5):
        s = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (4, 2)))
        f = random_map(rng, s, 4)
        assert am_distance(f, rigid_copy(f, rng)).value <= 1e-9


def test_close_pair_certificate():
    s = line(0, 1, 2, 0.03, 1.03, 2.03)
    f = rel(s, [(0, 1), (1, 2), (2, 0)])
    g = rel(s, [(3, 4), (4, 5), (5, 3)])
    c = am_from_close_pair(f, g, 0.05)
    assert c.phi == {0: 3, 1: 4, 2: 5}
    assert c.eps <= 0.1 and max(*c.phi_defects, *c.psi_defects) <= 0.03 + 1e-12
    same = am_from_close_pair(f, f)
    assert same.eps == 0 and same.phi == {0: 0, 1: 1, 2: 2}
    with pytest.raises(errors.PlacementMissing):
        am_from_close_pair(f, g, 0.01)


def test_close_pair_from_discretizer():
    s = FiniteMetricSpace.euclidean(np.array([0, 0.04, 1, 1.04, 2, 2.04])[:, None])
    f = rel(s, [(0, 2), (1, 3), (2, 4), (3, 5), (4, 0), (5, 1)])
    delta = 0.05
    g = finite_relation_approx(f, delta).relation
    assert len(g.as_map()) == len(g.carrier)
    c = am_from_close_pair(f, g, delta)
    assert c.eps <= 2 * delta


def test_axioms_suite(rng):
    s = line(0, 1, 3)
    f = rel(s, [(0, 1), (1, 2), (2, 0)])
    rep = am_axioms_suite([f, f, f])
    assert rep["ok"] and np.all(np.array(rep["values"]) == 0)
    systems = [random_map(rng, FiniteMetricSpace.euclidean(rng.uniform(0, 1, (3, 1))), 3) for _ in range(3)]
    assert am_axioms_suite(systems)["ok"]
    g = systems[0]
    moved = rigid_copy(DynamicalRelation(g.space, g.pairs), rng)
    assert am_distance(g, systems[1]).value == pytest.approx(am_distance(moved, systems[1]).value, abs=1e-9)
