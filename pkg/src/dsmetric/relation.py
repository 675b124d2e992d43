"""Surjective relations as dynamical systems and the distance D between them."""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import errors
from .metric import DirectedTerm, FiniteMetricSpace, SubsetIndex, directed_maxmin


def spaces_equal(a: FiniteMetricSpace, b: FiniteMetricSpace) -> bool:
    if a is b:
        return True
    if a.n != b.n or a.kind != b.kind or a.periods != b.periods:
        return False
    if a.coords is not None and b.coords is not None:
        return bool(np.array_equal(a.coords, b.coords))
    return bool(np.array_equal(a.dist, b.dist))


def _require_same_space(f, g):
    if not spaces_equal(f.space, g.space):
        raise errors.SpaceMismatch("relations live in different ambient spaces")


class DynamicalRelation:
    """A finite relation f ⊆ M×M stored as a sorted, duplicate-free pair array.

    The constructor normalises but does not validate; use
    :func:`validate_relation` for checked construction. ``is_surjective``
    tells whether the relation belongs to DS (both projections agree).
    """

    __slots__ = ("space", "pairs", "_fibers")

    def __init__(self, space: FiniteMetricSpace, pairs):
        arr = np.asarray(pairs, dtype=int).reshape(-1, 2)
        if len(arr):
            arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        self.space = space
        self.pairs = arr
        self._fibers = None

    @property
    def src(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def dst(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def domain(self) -> tuple:
        return tuple(int(i) for i in np.unique(self.src))

    @property
    def range(self) -> tuple:
        return tuple(int(i) for i in np.unique(self.dst))

    @property
    def carrier(self) -> tuple:
        """M(f). For an unvalidated relation this is the union of both projections."""
        return tuple(int(i) for i in np.unique(self.pairs))

    @property
    def is_surjective(self) -> bool:
        return self.domain == self.range

    def carrier_subset(self) -> SubsetIndex:
        return SubsetIndex.of(self.space, self.carrier)

    def fibers(self) -> dict:
        if self._fibers is None:
            fib: dict[int, list[int]] = {}
            for x, y in self.pairs.tolist():
                fib.setdefault(x, []).append(y)
            self._fibers = {x: tuple(v) for x, v in fib.items()}
        return self._fibers

    def as_map(self) -> dict:
        """x -> f(x) for a function-like relation."""
        fib = self.fibers()
        bad = [x for x, ys in fib.items() if len(ys) != 1]
        if bad:
            raise errors.NotAFunction(f"fibers of {bad[:5]} are not singletons")
        return {x: ys[0] for x, ys in fib.items()}

    def pair_set(self) -> frozenset:
        return frozenset(map(tuple, self.pairs.tolist()))

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, DynamicalRelation):
            return NotImplemented
        return spaces_equal(self.space, other.space) and np.array_equal(self.pairs, other.pairs)

    def __hash__(self):
        return hash(self.pairs.tobytes())

    def __repr__(self):
        return f"DynamicalRelation({len(self.pairs)} pairs on {len(self.carrier)} points)"


def validate_relation(space: FiniteMetricSpace, pairs) -> DynamicalRelation:
    arr = np.asarray(pairs, dtype=int).reshape(-1, 2) if len(pairs) else np.zeros((0, 2), dtype=int)
    if len(arr) == 0:
        raise errors.ValidationError("relation must contain at least one pair")
    if arr.min() < 0 or arr.max() >= space.n:
        bad = sorted({int(v) for v in arr.ravel() if v < 0 or v >= space.n})
        raise errors.IndexOutOfRange(f"point indices {bad} outside [0, {space.n})", bad)
    f = DynamicalRelation(space, arr)
    dom, rng = set(f.domain), set(f.range)
    no_out = sorted(rng - dom)
    no_in = sorted(dom - rng)
    if no_out or no_in:
        viol = [("NotSurjectiveForward", tuple(no_out)), ("NotSurjectiveBackward", tuple(no_in))]
        msg = f"points without outgoing pairs: {no_out}; points without incoming pairs: {no_in}"
        cls = errors.NotSurjectiveForward if no_out else errors.NotSurjectiveBackward
        raise cls(msg, [v for v in viol if v[1]])
    return f


def identity_relation(space: FiniteMetricSpace, members=None) -> DynamicalRelation:
    pts = range(space.n) if members is None else members
    return DynamicalRelation(space, [(i, i) for i in pts])


def complete_relation(space: FiniteMetricSpace, members=None) -> DynamicalRelation:
    pts = list(range(space.n) if members is None else members)
    return DynamicalRelation(space, [(i, j) for i in pts for j in pts])


def inverse(f: DynamicalRelation) -> DynamicalRelation:
    return DynamicalRelation(f.space, f.pairs[:, ::-1])


def image(f: DynamicalRelation, x: int) -> tuple:
    fib = f.fibers()
    if x not in fib:
        raise errors.PointNotInCarrier(f"point {x} has no image under the relation")
    return fib[x]


class RelationClass(enum.Enum):
    SET_VALUED = "SetValued"
    CONTINUOUS_MAP = "ContinuousMapAnalog"
    BIJECTION = "BijectionAnalog"


def classify(f: DynamicalRelation) -> RelationClass:
    forward = all(len(v) == 1 for v in f.fibers().values())
    if not forward:
        return RelationClass.SET_VALUED
    backward = all(len(v) == 1 for v in inverse(f).fibers().values())
    return RelationClass.BIJECTION if backward else RelationClass.CONTINUOUS_MAP


class DsDistanceWitness(NamedTuple):
    value: float
    from_pair: tuple   # pair attaining the directed max
    to_pair: tuple     # its nearest pair in the other relation
    direction: str     # "f→g" or "g→f"

    def as_json(self) -> dict:
        return {"value": self.value, "from": list(self.from_pair), "to": list(self.to_pair),
                "direction": self.direction}


class DsDistance(NamedTuple):
    value: float
    witness: DsDistanceWitness


_KD_CELLS = 2_000_000


def _directed_ds_kd(f: DynamicalRelation, g: DynamicalRelation) -> DirectedTerm:
    """Same result as the dense scan, using a k-d tree on concatenated pair coordinates.

    With a = d(x, x') and b = d(y, y'), the concatenated Euclidean distance
    sqrt(a² + b²) lies between max(a, b) and √2·max(a, b). A nearest-neighbour
    query gives an upper bound u on the best max(a, b); every pair achieving
    it lies in the ball of radius √2·u, where it is found exactly.
    """
    sp = f.space
    C = sp.coords
    P = np.hstack([C[f.src], C[f.dst]])
    Q = np.hstack([C[g.src], C[g.dst]])
    box = None if sp.kind != "torus" else np.tile(np.asarray(sp.periods, dtype=float), 2)
    tree = cKDTree(Q, boxsize=box)
    _, nn = tree.query(P, k=1)
    u = np.maximum(sp.paired(f.src, g.src[nn]), sp.paired(f.dst, g.dst[nn]))
    cand = tree.query_ball_point(P, r=u * np.sqrt(2.0) * (1 + 1e-9) + 1e-12, return_sorted=True)
    lens = np.fromiter((len(c) for c in cand), dtype=np.int64, count=len(cand))
    cols = np.concatenate([np.asarray(c, dtype=np.int64) for c in cand])
    rows = np.repeat(np.arange(len(P)), lens)
    vals = np.maximum(sp.paired(f.src[rows], g.src[cols]), sp.paired(f.dst[rows], g.dst[cols]))
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    mins = np.minimum.reduceat(vals, starts)
    r = int(np.argmax(mins))
    seg = slice(starts[r], starts[r] + lens[r])
    c = int(cols[seg][np.flatnonzero(vals[seg] == mins[r])[0]])
    return DirectedTerm(float(mins[r]), r, c)


def _directed_ds(f: DynamicalRelation, g: DynamicalRelation):
    sp = f.space
    fs, fd, gs, gd = f.src, f.dst, g.src, g.dst
    if sp.coords is not None and sp._dist is None and len(fs) * len(gs) > _KD_CELLS:
        return _directed_ds_kd(f, g)

    def block(a, b):
        return np.maximum(sp.pairwise(fs[a:b], gs), sp.pairwise(fd[a:b], gd))

    return directed_maxmin(block, len(fs), len(gs))


def ds_distance(f: DynamicalRelation, g: DynamicalRelation) -> DsDistance:
    """Hausdorff distance between the graphs of f and g under the max product metric.

    The value is an attained max-min over pairs, so it is exact and comes with
    the pair realising it.
    """
    _require_same_space(f, g)
    if not len(f) or not len(g):
        raise errors.EmptySubset("relations must be nonempty")
    fwd = _directed_ds(f, g)
    bwd = _directed_ds(g, f)
    if fwd.value >= bwd.value:
        w = DsDistanceWitness(fwd.value, tuple(int(v) for v in f.pairs[fwd.row]),
                              tuple(int(v) for v in g.pairs[fwd.col]), "f→g")
    else:
        w = DsDistanceWitness(bwd.value, tuple(int(v) for v in g.pairs[bwd.row]),
                              tuple(int(v) for v in f.pairs[bwd.col]), "g→f")
    return DsDistance(w.value, w)


def check_ds_witness(f: DynamicalRelation, g: DynamicalRelation, w: DsDistanceWitness) -> bool:
    """Recompute the directed term named by the witness and compare."""
    src, dst = (f, g) if w.direction == "f→g" else (g, f)
    sp = f.space
    p = np.asarray([w.from_pair])
    d = np.maximum(sp.pairwise(p[:, 0], dst.src), sp.pairwise(p[:, 1], dst.dst))[0]
    q = w.to_pair
    partner = max(sp.d(p[0, 0], q[0]), sp.d(p[0, 1], q[1]))
    return (w.from_pair in src.pair_set() and q in dst.pair_set()
            and float(d.min()) == w.value == partner
            and _directed_ds(src, dst).value == w.value)


def c0_distance(f: DynamicalRelation, g: DynamicalRelation) -> float:
    _require_same_space(f, g)
    fm, gm = f.as_map(), g.as_map()
    if set(fm) != set(gm):
        raise errors.CarrierMismatch("C0 distance needs identical carriers")
    xs = sorted(fm)
    a = np.asarray([fm[x] for x in xs])
    b = np.asarray([gm[x] for x in xs])
    return float(f.space.paired(a, b).max())


def max_fiber_diameter(f: DynamicalRelation) -> float:
    best = 0.0
    for ys in f.fibers().values():
        if len(ys) > 1:
            best = max(best, f.space.diameter(ys))
    return best


def relation_compose(f: DynamicalRelation, g: DynamicalRelation, strict: bool = False) -> DynamicalRelation:
    """{(x, z) : (x, y) ∈ f and (y, z) ∈ g for some y}.

    The result may fail surjectivity; it is still returned (check
    ``is_surjective``) unless ``strict`` is set, in which case
    :class:`CompositionNotSurjective` is raised.
    """
    _require_same_space(f, g)
    gf = g.fibers()
    out = [(x, z) for x, y in f.pairs.tolist() for z in gf.get(y, ())]
    h = DynamicalRelation(f.space, out)
    if strict and (not len(h) or not h.is_surjective):
        raise errors.CompositionNotSurjective("composition is not a surjective relation")
    return h
