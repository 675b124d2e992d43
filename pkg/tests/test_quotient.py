import pytest

import oracles
from conftest import line, random_relation, rel, rigid_copy, three_fixed_point_pair
from dsmetric import errors
from dsmetric.metric import FiniteMetricSpace, validate_metric
from dsmetric.quotient import (dgh_bracket, dgh_lower, dgh_upper, euclidean_dgh, glue_by_correspondence,
                               graph_isometry_check, isometric_conjugacy_check)
from dsmetric.relation import ds_distance, identity_relation, inverse


def test_glue_examples():
    X = validate_metric([[0, 1], [1, 0]])
    G = glue_by_correspondence(X, X, [(0, 0), (1, 1)], 0.5)
    assert G.space.d(G.x(0), G.y(0)) == 0.5 and G.space.d(G.x(1), G.y(1)) == 0.5
    Y = validate_metric([[0, 2], [2, 0]])
    G = glue_by_correspondence(X, Y, [(0, 0), (1, 1)], 0.5)
    D = G.space.dist
    assert D[:2, 2:].min(axis=1).max() == 0.5 and D[:2, 2:].min(axis=0).max() == 0.5
    validate_metric(D)
    with pytest.raises(errors.EpsilonBelowHalfDistortion):
        glue_by_correspondence(X, Y, [(0, 0), (1, 1)], 0.4)
    with pytest.raises(errors.NotACorrespondence):
        glue_by_correspondence(X, Y, [(0, 0)], 0.5)


def test_upper_examples():
    a, b = line(0, 1), line(5, 6)
    f = rel(a, [(0, 1), (1, 0)])
    g = rel(b, [(0, 1), (1, 0)])
    assert dgh_upper(f, g).value <= 1e-9
    u = dgh_upper(identity_relation(line(0, 1)), identity_relation(line(0, 2)))
    assert u.value == pytest.approx(0.5) and u.exhaustive
    s = line(0, 1)
    swap, ident = rel(s, [(0, 1), (1, 0)]), identity_relation(s)
    assert dgh_upper(swap, ident).value == pytest.approx(0.5)


def test_upper_is_realised():
    s = line(0, 1, 3)
    f = rel(s, [(0, 1), (1, 2), (2, 0)])
    g = rel(line(0, 2, 3), [(0, 0), (1, 2), (2, 1)])
    u = dgh_upper(f, g)
    realised = ds_distance(*_glued_relations(u, f, g)).value
    assert u.value <= realised <= u.value + u.eps - u.distortion / 2 + 1e-9


def _glued_relations(u, f, g):
    from dsmetric.relation import DynamicalRelation
    cx, cy = f.carrier, g.carrier
    px = {x: i for i, x in enumerate(cx)}
    py = {y: j + len(cx) for j, y in enumerate(cy)}
    fz = DynamicalRelation(u.glued.space, [(px[a], px[b]) for a, b in f.pairs.tolist()])
    gz = DynamicalRelation(u.glued.space, [(py[a], py[b]) for a, b in g.pairs.tolist()])
    return fz, gz


def test_lower_examples():
    s = line(0, 1, 3)
    f = rel(s, [(0, 1), (1, 2), (2, 0), (0, 0)])
    assert dgh_lower(f, f).value == 0
    low = dgh_lower(identity_relation(line(0, 1)), identity_relation(line(0, 2)))
    assert low.value == 0.5 and low.carrier_bound == 0.5
    inv = dgh_lower(f, inverse(f))
    assert inv.graph_bound == 0 and inv.carrier_bound == 0


def test_lower_matches_distortion_oracle(rng):
    for _ in range(15):
        a = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (3, 1)))
        b = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (3, 1)))
        f, g = random_relation(rng, a, 3), random_relation(rng, b, 3)
        low = dgh_lower(f, g)
        want = oracles.correspondence_distortion(a.restrict(f.carrier).dist.tolist(),
                                                 b.restrict(g.carrier).dist.tolist())
        assert low.carrier_bound == pytest.approx(want, abs=1e-12)
        assert low.value <= dgh_upper(f, g).value + 1e-12


def test_euclidean_examples():
    s = line(0, 1)
    f = identity_relation(s)
    assert euclidean_dgh(f, identity_relation(line(5, 6))).value == pytest.approx(0, abs=1e-12)
    assert euclidean_dgh(f, identity_relation(line(0, 2))).value == pytest.approx(0.5)
    with pytest.raises(errors.DimensionMismatch):
        euclidean_dgh(f, identity_relation(FiniteMetricSpace.euclidean([[0, 0], [1, 1]])))
    with pytest.raises(errors.NotEuclideanAmbient):
        euclidean_dgh(identity_relation(validate_metric([[0, 1], [1, 0]])), f)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_rigid_copies(rng, d):
    for _ in range(4):
        s = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (6, d)))
        f = random_relation(rng, s, kmax=6)
        g = rigid_copy(f, rng)
        assert euclidean_dgh(f, g).value <= 1e-9
        assert dgh_upper(f, g).value <= 1e-9
        assert isometric_conjugacy_check(f, g) is not None


def test_euclidean_not_above_ds(rng):
    for _ in range(20):
        s = FiniteMetricSpace.euclidean(rng.uniform(0, 1, (6, 2)))
        f, g = random_relation(rng, s, 4), random_relation(rng, s, 4)
        assert euclidean_dgh(f, g).value <= ds_distance(f, g).value


def test_conjugacy_checks():
    s = line(0, 1, 3)
    f = rel(s, [(0, 1), (1, 2), (2, 0)])
    phi = isometric_conjugacy_check(f, f)
    assert phi == {0: 0, 1: 1, 2: 2}
    a, b = line(0, 1), line(5, 6)
    phi = isometric_conjugacy_check(rel(a, [(0, 1), (1, 0)]), rel(b, [(0, 1), (1, 0)]))
    assert phi is not None and set(phi.values()) == {0, 1}
    iso = graph_isometry_check(f, inverse(f))
    assert all(q == (p[1], p[0]) for p, q in iso)
    assert all(p == q for p, q in graph_isometry_check(f, f))
    swap, ident = rel(line(0, 1), [(0, 1), (1, 0)]), identity_relation(line(0, 1))
    assert graph_isometry_check(swap, ident) is not None
    assert isometric_conjugacy_check(swap, ident) is None


def test_three_fixed_points_fixture():
    f, g = three_fixed_point_pair()
    assert graph_isometry_check(f, g) is not None
    assert isometric_conjugacy_check(f, g) is None
    b = dgh_bracket(f, g)
    assert b.lower.value <= b.upper.value
