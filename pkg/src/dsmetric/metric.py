"""Finite metric spaces, Hausdorff distance and related diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import errors

TAU_METRIC = 1e-9
TAU_CMP = 1e-9

# rows per block when a full distance block would be too large
_CHUNK_CELLS = 4_000_000


class Violation(NamedTuple):
    kind: str
    indices: tuple


class FiniteMetricSpace:
    """A finite metric space.

    Three kinds exist:

    ``matrix``
        distances given explicitly.
    ``euclidean``
        points in R^d, distances are Euclidean norms of coordinate differences.
    ``torus``
        points on a flat torus R^d / (periods), distances use the shortest
        representative of each coordinate difference (a circle is the
        one-dimensional case).

    Coordinate-backed spaces compute distance blocks on demand, so large
    samples never need the full n x n matrix unless ``dist`` is requested.
    Instances are immutable; build them with :func:`validate_metric`,
    :meth:`euclidean` or :meth:`torus`.
    """

    __slots__ = ("n", "kind", "coords", "periods", "labels", "_dist")

    def __init__(self, n, kind="matrix", dist=None, coords=None, periods=None, labels=None):
        self.n = int(n)
        self.kind = kind
        if coords is not None:
            coords = np.array(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            coords.setflags(write=False)
        self.coords = coords
        self.periods = None if periods is None else tuple(float(p) for p in periods)
        self.labels = None if labels is None else tuple(str(x) for x in labels)
        if dist is not None:
            dist = np.array(dist, dtype=float)
            dist.setflags(write=False)
        self._dist = dist

    # construction -----------------------------------------------------
    @classmethod
    def euclidean(cls, points, labels=None, tol=TAU_METRIC) -> "FiniteMetricSpace":
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        _check_coords(pts)
        space = cls(len(pts), "euclidean", coords=pts, labels=labels)
        _check_duplicates_coords(space, tol)
        return space

    @classmethod
    def torus(cls, points, periods, labels=None, tol=TAU_METRIC) -> "FiniteMetricSpace":
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        _check_coords(pts)
        periods = tuple(float(p) for p in np.atleast_1d(periods))
        if len(periods) != pts.shape[1] or min(periods) <= 0:
            raise errors.CoordMismatch("torus periods must be positive, one per coordinate")
        pts = _wrap(pts, periods)
        space = cls(len(pts), "torus", coords=pts, periods=periods, labels=labels)
        _check_duplicates_coords(space, tol)
        return space

    # distances --------------------------------------------------------
    @property
    def has_coords(self) -> bool:
        return self.coords is not None

    @property
    def dim(self) -> int:
        return 0 if self.coords is None else self.coords.shape[1]

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            idx = np.arange(self.n)
            d = self.pairwise(idx, idx)
            np.fill_diagonal(d, 0.0)
            d = np.maximum(d, d.T)
            d.setflags(write=False)
            self._dist = d
        return self._dist

    def point_metric(self, P, Q) -> np.ndarray:
        """Distance block between coordinate arrays ``P`` (m, d) and ``Q`` (k, d)."""
        if self.coords is None:
            raise errors.NotEuclideanAmbient("space has no coordinates")
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        diff = np.abs(P[:, None, :] - Q[None, :, :])
        if self.kind == "torus":
            per = np.asarray(self.periods)
            diff = np.mod(diff, per)
            diff = np.minimum(diff, per - diff)
        return _norm(diff)

    def pairwise(self, I, J) -> np.ndarray:
        I = np.asarray(I, dtype=int)
        J = np.asarray(J, dtype=int)
        if self._dist is not None:
            return self._dist[np.ix_(I, J)]
        return self.point_metric(self.coords[I], self.coords[J])

    def paired(self, I, J) -> np.ndarray:
        """Elementwise distances d(I[k], J[k])."""
        I = np.asarray(I, dtype=int)
        J = np.asarray(J, dtype=int)
        if self._dist is not None:
            return self._dist[I, J]
        diff = np.abs(self.coords[I] - self.coords[J])
        if self.kind == "torus":
            per = np.asarray(self.periods)
            diff = np.mod(diff, per)
            diff = np.minimum(diff, per - diff)
        return _norm(diff)

    def d(self, i: int, j: int) -> float:
        if self._dist is not None:
            return float(self._dist[i, j])
        return float(self.point_metric(self.coords[i], self.coords[j])[0, 0])

    def diameter(self, members=None) -> float:
        idx = np.arange(self.n) if members is None else np.asarray(members, dtype=int)
        if len(idx) <= 1:
            return 0.0
        return float(_blocked_max(self, idx, idx))

    # derived spaces ---------------------------------------------------
    def subset(self, members) -> "SubsetIndex":
        return SubsetIndex.of(self, members)

    def all_points(self) -> "SubsetIndex":
        return SubsetIndex(self, tuple(range(self.n)))

    def extend(self, new_coords, tol=TAU_METRIC):
        """Add points given by coordinates.

        Returns ``(space, indices)`` where ``indices[k]`` is the index of
        ``new_coords[k]`` in the returned space. Points that coincide (within
        ``tol``) with existing points or with each other are merged.
        """
        if self.coords is None:
            raise errors.NotEuclideanAmbient("cannot add points to a matrix-defined space")
        new = np.atleast_2d(np.asarray(new_coords, dtype=float))
        if new.shape[1] != self.dim:
            raise errors.DimensionMismatch(f"expected {self.dim}-dimensional points")
        if self.kind == "torus":
            new = _wrap(new, self.periods)
        boxsize = self.periods if self.kind == "torus" else None
        coords = [self.coords]
        index = np.empty(len(new), dtype=int)
        tree = cKDTree(self.coords, boxsize=boxsize) if self.n else None
        if tree is not None:
            dd, ii = tree.query(new, k=1)
            hit = dd <= tol
        else:
            hit = np.zeros(len(new), dtype=bool)
        index[hit] = ii[hit] if tree is not None else 0
        fresh = np.flatnonzero(~hit)
        if len(fresh):
            # merge coincident fresh points among themselves
            ftree = cKDTree(new[fresh], boxsize=boxsize)
            groups = ftree.query_ball_point(new[fresh], r=tol)
            rep = {}
            nxt = self.n
            keep = []
            for k, nbrs in enumerate(groups):
                root = min(nbrs)
                if root not in rep:
                    rep[root] = nxt
                    nxt += 1
                    keep.append(fresh[root])
                index[fresh[k]] = rep[root]
            coords.append(new[keep])
        labels = None
        if self.labels is not None:
            labels = list(self.labels) + [f"p{k}" for k in range(self.n, self.n + sum(len(c) for c in coords[1:]))]
        space = FiniteMetricSpace(
            sum(len(c) for c in coords), self.kind, coords=np.vstack(coords),
            periods=self.periods, labels=labels)
        return space, index

    def restrict(self, members) -> "FiniteMetricSpace":
        """The subspace on ``members`` (re-indexed 0..k-1 in the given order)."""
        idx = np.asarray(members, dtype=int)
        if self.coords is not None:
            return FiniteMetricSpace(len(idx), self.kind, coords=self.coords[idx], periods=self.periods)
        return FiniteMetricSpace(len(idx), "matrix", dist=self.dist[np.ix_(idx, idx)])

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"FiniteMetricSpace(n={self.n}, kind={self.kind!r})"


def _norm(diff):
    # one formula for every distance path, so values agree bit for bit
    if diff.shape[-1] == 1:
        return diff[..., 0]
    acc = diff[..., 0] * diff[..., 0]
    for k in range(1, diff.shape[-1]):
        acc = acc + diff[..., k] * diff[..., k]
    return np.sqrt(acc)


def _wrap(pts, periods):
    per = np.asarray(periods, dtype=float)
    out = np.mod(pts, per)
    # np.mod can round tiny negatives up to the period itself
    return np.where(out >= per, 0.0, out)


def _check_coords(pts):
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise errors.CoordMismatch("points must be a nonempty list of equal-length vectors")
    if not np.all(np.isfinite(pts)):
        raise errors.NonFiniteEntry("coordinates must be finite")


def _check_duplicates_coords(space, tol):
    boxsize = space.periods if space.kind == "torus" else None
    pairs = cKDTree(space.coords, boxsize=boxsize).query_pairs(r=tol, output_type="ndarray")
    if len(pairs):
        viol = [Violation("DuplicatePoint", (int(i), int(j))) for i, j in sorted(map(tuple, pairs))]
        raise errors.DuplicatePoint(f"{len(viol)} coincident point pairs, first {viol[0].indices}", viol)


def _blocked_max(space, I, J):
    rows = max(1, _CHUNK_CELLS // max(1, len(J)))
    best = 0.0
    for s in range(0, len(I), rows):
        best = max(best, float(space.pairwise(I[s:s + rows], J).max()))
    return best


def validate_metric(matrix, coords=None, labels=None, tol=TAU_METRIC) -> FiniteMetricSpace:
    """Check the metric axioms and return a :class:`FiniteMetricSpace`.

    All violations are collected; the raised exception is of the class of the
    first violated axiom (in the order shape, finiteness, sign, diagonal,
    symmetry, distinctness, triangle, coordinates) and carries the full list in
    ``violations``.
    """
    try:
        m = np.array(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise errors.NonSquareMatrix(f"matrix is not numeric: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise errors.NonSquareMatrix(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        bad = [Violation("NonFiniteEntry", (int(i), int(j))) for i, j in np.argwhere(~np.isfinite(m))]
        raise errors.NonFiniteEntry("matrix has non-finite entries", bad)
    n = m.shape[0]
    viol: list[Violation] = []
    for i, j in np.argwhere(m < 0):
        viol.append(Violation("NegativeDistance", (int(i), int(j))))
    for i in np.flatnonzero(np.abs(np.diag(m)) > tol):
        viol.append(Violation("NonzeroDiagonal", (int(i), int(i))))
    for i, j in np.argwhere(np.abs(m - m.T) > tol):
        if i < j:
            viol.append(Violation("AsymmetricMatrix", (int(i), int(j))))
    off = ~np.eye(n, dtype=bool)
    for i, j in np.argwhere((m <= tol) & off):
        if i < j:
            viol.append(Violation("DuplicatePoint", (int(i), int(j))))
    # d[i,j] <= d[i,k] + d[k,j], checked one k-slab at a time
    for k in range(n):
        bad = m > m[:, k][:, None] + m[k, :][None, :] + tol
        for i, j in np.argwhere(bad):
            viol.append(Violation("TriangleViolation", (int(i), int(j), int(k))))
    space_kind = "matrix"
    pts = None
    if coords is not None:
        pts = np.array(coords, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] != n:
            viol.append(Violation("CoordMismatch", ()))
        else:
            eu = FiniteMetricSpace(n, "euclidean", coords=pts).dist
            for i, j in np.argwhere(np.abs(eu - m) > tol):
                if i < j:
                    viol.append(Violation("CoordMismatch", (int(i), int(j))))
            space_kind = "euclidean"
    if viol:
        order = ["NegativeDistance", "NonzeroDiagonal", "AsymmetricMatrix", "DuplicatePoint",
                 "TriangleViolation", "CoordMismatch"]
        first = min(viol, key=lambda v: order.index(v.kind))
        cls = getattr(errors, first.kind)
        raise cls(f"{len(viol)} metric violation(s); first: {first.kind} at {first.indices}", viol)
    return FiniteMetricSpace(n, space_kind, dist=m, coords=pts, labels=labels)


@dataclass(frozen=True)
class SubsetIndex:
    space: FiniteMetricSpace
    members: tuple

    @classmethod
    def of(cls, space, members) -> "SubsetIndex":
        mem = tuple(sorted({int(i) for i in members}))
        if not mem:
            raise errors.EmptySubset("subset must be nonempty")
        if mem[0] < 0 or mem[-1] >= space.n:
            raise errors.IndexOutOfRange(f"subset indices must lie in [0, {space.n})")
        return cls(space, mem)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=int)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


class ProductMetric:
    """The max metric on pairs: d2((a,b),(c,d)) = max(d(a,c), d(b,d))."""

    def __init__(self, base: FiniteMetricSpace):
        self.base = base

    def d2(self, p, q) -> float:
        return max(self.base.d(p[0], q[0]), self.base.d(p[1], q[1]))

    def block(self, P, Q) -> np.ndarray:
        P = np.asarray(P, dtype=int).reshape(-1, 2)
        Q = np.asarray(Q, dtype=int).reshape(-1, 2)
        return np.maximum(self.base.pairwise(P[:, 0], Q[:, 0]), self.base.pairwise(P[:, 1], Q[:, 1]))


# Hausdorff distance ------------------------------------------------------

class DirectedTerm(NamedTuple):
    value: float
    row: int  # position in the source list attaining the max
    col: int  # position of its nearest partner in the target list


def directed_maxmin(block, n_rows: int, n_cols: int) -> DirectedTerm:
    """max over rows of min over columns of ``block(rows, cols)``.

    ``block(r0, r1)`` must return the distance block for rows ``r0:r1``
    against all columns. Ties resolve to the lowest row, then lowest column.
    """
    rows = max(1, _CHUNK_CELLS // max(1, n_cols))
    best = DirectedTerm(-np.inf, -1, -1)
    for s in range(0, n_rows, rows):
        b = block(s, min(n_rows, s + rows))
        mins = b.min(axis=1)
        r = int(np.argmax(mins))
        if mins[r] > best.value:
            best = DirectedTerm(float(mins[r]), s + r, int(np.argmin(b[r])))
    return best


class HausdorffResult(NamedTuple):
    value: float
    point: int      # farthest point (ambient index)
    partner: int    # its nearest point in the other set
    direction: str  # "X→Y" or "Y→X"


def hausdorff_distance(X: SubsetIndex, Y: SubsetIndex) -> HausdorffResult:
    if X.space is not Y.space:
        raise errors.SpaceMismatch("subsets belong to different spaces")
    if not len(X) or not len(Y):
        raise errors.EmptySubset("Hausdorff distance needs nonempty sets")
    space = X.space
    xa, ya = X.array, Y.array
    fwd = directed_maxmin(lambda a, b: space.pairwise(xa[a:b], ya), len(xa), len(ya))
    bwd = directed_maxmin(lambda a, b: space.pairwise(ya[a:b], xa), len(ya), len(xa))
    if fwd.value >= bwd.value:
        return HausdorffResult(fwd.value, int(xa[fwd.row]), int(ya[fwd.col]), "X→Y")
    return HausdorffResult(bwd.value, int(ya[bwd.row]), int(xa[bwd.col]), "Y→X")


def epsilon_net(S: FiniteMetricSpace, eps: float, members=None) -> SubsetIndex:
    """Greedy farthest-point ε-net, seeded at the lowest index.

    Ties for the farthest point go to the lowest index. The result Q
    satisfies max over points of dist(p, Q) <= eps.
    """
    if not eps > 0:
        raise errors.NonpositiveEpsilon(f"eps must be positive, got {eps}")
    pts = np.arange(S.n) if members is None else np.asarray(sorted(set(int(m) for m in members)), dtype=int)
    if len(pts) == 0:
        raise errors.EmptySubset("cannot build a net of an empty set")
    chosen = [int(pts[0])]
    gap = S.pairwise([pts[0]], pts)[0].copy()
    while True:
        k = int(np.argmax(gap))
        if gap[k] <= eps:
            break
        chosen.append(int(pts[k]))
        gap = np.minimum(gap, S.pairwise([pts[k]], pts)[0])
    return SubsetIndex.of(S, chosen)


def frechet_embedding(S: FiniteMetricSpace) -> np.ndarray:
    """Rows are the images phi(x)_k = d(x, c_k) - d(c_k, c_0); isometric in sup-norm."""
    d = S.dist
    return d - d[:, 0][None, :]


class ComponentPartition(NamedTuple):
    components: tuple   # tuples of ambient indices, ordered by smallest member
    mesh: float         # largest component diameter


def scale_components(S: FiniteMetricSpace, X: SubsetIndex, r: float) -> ComponentPartition:
    """Partition X into classes joined by chains with steps <= r."""
    idx = X.array
    adj = S.pairwise(idx, idx) <= r
    _, labels = connected_components(csr_matrix(adj), directed=False)
    groups: dict[int, list[int]] = {}
    for pos, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(int(idx[pos]))
    comps = sorted((tuple(g) for g in groups.values()), key=lambda c: c[0])
    mesh = max(S.diameter(c) for c in comps)
    return ComponentPartition(tuple(comps), mesh)


def isolated_points(S: FiniteMetricSpace, X: SubsetIndex, eps: float) -> tuple:
    """Points of X whose open eps-ball within X is just the point itself."""
    idx = X.array
    d = S.pairwise(idx, idx)
    close = (d < eps).sum(axis=1)
    return tuple(int(i) for i in idx[close == 1])


def directed_hausdorff_coords(space: FiniteMetricSpace, P, Q) -> float:
    """max_p min_q d(p, q) for coordinate arrays in a coordinate space."""
    P = np.atleast_2d(P)
    Q = np.atleast_2d(Q)
    return directed_maxmin(lambda a, b: space.point_metric(P[a:b], Q), len(P), len(Q)).value


def as_subset(space: FiniteMetricSpace, members: Optional[Sequence[int]]) -> SubsetIndex:
    return space.all_points() if members is None else SubsetIndex.of(space, members)
