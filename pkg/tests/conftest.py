import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dsmetric.metric import FiniteMetricSpace  # noqa: E402
from dsmetric.relation import DynamicalRelation, validate_relation  # noqa: E402

ACCEPTANCE = {}


def line(*xs):
    return FiniteMetricSpace.euclidean(np.asarray(xs, dtype=float)[:, None])


def rel(space, pairs):
    return validate_relation(space, pairs)


def random_line_space(rng, n=8):
    while True:
        xs = np.round(rng.uniform(0, 1, n), 6)
        if len(np.unique(xs)) == n:
            return FiniteMetricSpace.euclidean(xs[:, None])


def random_relation(rng, space, kmax=6, members=None):
    """A surjective relation on a random carrier of size <= kmax."""
    pool = np.arange(space.n) if members is None else np.asarray(members)
    k = int(rng.integers(1, min(kmax, len(pool)) + 1))
    carrier = rng.choice(pool, size=k, replace=False)
    perm = rng.permutation(carrier)
    pairs = set(zip(carrier.tolist(), perm.tolist()))
    extra = int(rng.integers(0, k * k // 2 + 1))
    for _ in range(extra):
        pairs.add((int(rng.choice(carrier)), int(rng.choice(carrier))))
    return validate_relation(space, sorted(pairs))


def random_map(rng, space, k, members=None):
    """A map (every point one image) on k points whose image set is invariant."""
    pool = np.arange(space.n) if members is None else np.asarray(members)
    carrier = rng.choice(pool, size=k, replace=False)
    perm = rng.permutation(carrier)
    return validate_relation(space, list(zip(carrier.tolist(), perm.tolist())))


def three_fixed_point_pair():
    """Five-point sample of an interval homeomorphism with attracting ends and a repelling centre, and its inverse."""
    s = line(0, 0.25, 0.5, 0.75, 1)
    f = validate_relation(s, [(0, 0), (1, 0), (2, 1), (2, 2), (2, 3), (3, 4), (4, 4)])
    g = validate_relation(s, [(b, a) for a, b in f.pairs.tolist()])
    return f, g


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            ok, detail = ACCEPTANCE[k]
            terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def rigid_copy(f, rng, reflect=None):
    """f transported by a random rigid motion into a fresh Euclidean space (same point order)."""
    X = f.space.coords
    d = X.shape[1]
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    if reflect if reflect is not None else rng.random() < 0.5:
        Q[:, 0] = -Q[:, 0]
    t = rng.uniform(-5, 5, d)
    return DynamicalRelation(FiniteMetricSpace.euclidean(X @ Q.T + t), f.pairs)
