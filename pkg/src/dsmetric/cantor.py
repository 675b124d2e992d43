"""Finite-depth Cantor trees, clopen-partition leaf matching and conjugating pairs.

A tree is stored level by level: ``cell_of[t][i]`` is the level-t cell holding
leaf i, and every cell carries a representative and a diameter bound. Levels
refine each other, so a level is a clopen partition of the leaf set and its
mesh is the largest diameter bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from . import errors
from .relation import DynamicalRelation, RelationClass, classify, ds_distance

_METRICS = {"euclidean": "euclidean", "max": "chebyshev"}


@dataclass(frozen=True)
class Level:
    cell_of: np.ndarray   # (N,) cell id of each leaf
    reps: np.ndarray      # (c, d) cell representatives
    diams: np.ndarray     # (c,) diameter bounds
    parent: np.ndarray    # (c,) parent cell id at the previous level, -1 at the root

    @property
    def mesh(self) -> float:
        return float(self.diams.max())

    def members(self, cell: int) -> np.ndarray:
        return np.flatnonzero(self.cell_of == cell)


@dataclass(frozen=True)
class CantorTree:
    leaves: np.ndarray            # (N, d) leaf representatives
    levels: tuple                 # Level objects, root first, leaves last
    metric: str = "euclidean"     # or "max" for product (graph) trees

    def __post_init__(self):
        _check_tree(self)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def meshes(self) -> list:
        return [lv.mesh for lv in self.levels]

    def distances(self, other: "CantorTree") -> np.ndarray:
        return cdist(self.leaves, other.leaves, _METRICS[self.metric])

    def to_nested(self) -> dict:
        def node(t, c):
            lv = self.levels[t]
            out = {"rep": lv.reps[c].tolist(), "diam": float(lv.diams[c])}
            if t + 1 < len(self.levels):
                kids = np.flatnonzero(self.levels[t + 1].parent == c)
                out["children"] = [node(t + 1, int(k)) for k in kids]
            return out
        return node(0, 0)


def _check_tree(T: CantorTree):
    n = len(T.leaves)
    if n == 0 or not T.levels:
        raise errors.BadGeometry("tree has no leaves")
    if T.metric not in _METRICS:
        raise errors.BadGeometry(f"unknown tree metric {T.metric!r}")
    prev = None
    for t, lv in enumerate(T.levels):
        if lv.cell_of.shape != (n,) or len(lv.reps) != len(lv.diams) or len(lv.parent) != len(lv.reps):
            raise errors.BadGeometry(f"level {t} has inconsistent shapes")
        if set(np.unique(lv.cell_of).tolist()) != set(range(len(lv.reps))):
            raise errors.BadGeometry(f"level {t} has empty cells")
        if prev is None:
            if len(lv.reps) != 1:
                raise errors.BadGeometry("level 0 must be a single root cell")
        else:
            if not np.array_equal(lv.parent[lv.cell_of], prev.cell_of):
                raise errors.BadGeometry(f"level {t} does not refine level {t - 1}")
            if lv.mesh > prev.mesh + 1e-12:
                raise errors.BadGeometry(f"mesh increases at level {t}")
        prev = lv
    last = T.levels[-1]
    if len(last.reps) != n:
        raise errors.BadGeometry("deepest level must hold one leaf per cell")


def dyadic_cantor(depth: int, origin: float = 0.0, scale: float = 1.0, gap: float = 1 / 3) -> CantorTree:
    """Middle-gap Cantor construction on [origin, origin + scale].

    Each interval of length L keeps two outer pieces of length L(1 - gap/scale)/2.
    Representatives are interval midpoints; the diameter bound is the length.
    """
    if depth < 1 or not (scale > gap > 0):
        raise errors.BadGeometry(f"need depth >= 1 and scale > gap > 0 (got {depth}, {scale}, {gap})")
    keep = 0.5 * (1.0 - gap / scale)
    lows = np.array([float(origin)])
    length = float(scale)
    levels = []
    for t in range(depth + 1):
        c = len(lows)
        levels.append((lows + 0.5 * length, length, c))
        if t < depth:
            child = keep * length
            lows = np.column_stack([lows, lows + length - child]).ravel()
            length = child
    n = 2 ** depth
    out = []
    for t, (mids, length, c) in enumerate(levels):
        cell_of = np.arange(n) >> (depth - t)
        parent = np.arange(c) >> 1 if t else np.array([-1])
        out.append(Level(cell_of, mids[:, None], np.full(c, length), parent))
    return CantorTree(levels[-1][0][:, None].copy(), tuple(out))


def point_tree(points, metric: str = "euclidean") -> CantorTree:
    """Partition tree of an arbitrary finite point set by repeated median splits.

    Each cell is halved along its widest coordinate until all cells are
    singletons; singletons are carried down unchanged. Diameter bounds are
    exact cell diameters.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    if n == 0:
        raise errors.BadGeometry("no points")
    if len(np.unique(P, axis=0)) != n:
        raise errors.BadGeometry("points must be distinct")
    mname = _METRICS[metric]

    def diam(idx):
        return float(cdist(P[idx], P[idx], mname).max()) if len(idx) > 1 else 0.0

    cells = [np.arange(n)]
    parents = [-1]
    levels = []
    while True:
        cell_of = np.empty(n, dtype=int)
        for c, idx in enumerate(cells):
            cell_of[idx] = c
        reps = np.array([P[idx[0]] for idx in cells])
        levels.append(Level(cell_of, reps, np.array([diam(idx) for idx in cells]), np.array(parents)))
        if all(len(idx) == 1 for idx in cells):
            break
        nxt, par = [], []
        for c, idx in enumerate(cells):
            if len(idx) == 1:
                nxt.append(idx)
                par.append(c)
                continue
            sub = P[idx]
            axis = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
            order = idx[np.argsort(sub[:, axis], kind="stable")]
            half = len(order) // 2
            for part in (order[:half], order[half:]):
                nxt.append(np.sort(part))
                par.append(c)
        cells, parents = nxt, par
    return CantorTree(P.copy(), tuple(levels), metric)


def tree_from_nested(obj: dict, metric: str = "euclidean") -> CantorTree:
    """Build a tree from nested {"rep", "diam", "children"} nodes; shallow leaves are carried down."""
    def height(node):
        kids = node.get("children") or []
        return 1 + max((height(k) for k in kids), default=0)

    H = height(obj)
    frontier = [(obj, -1)]
    levels = []
    # leaf ids follow the left-to-right order of the deepest level
    for t in range(H):
        reps = np.array([np.atleast_1d(np.asarray(node["rep"], dtype=float)) for node, _ in frontier])
        diams = np.array([float(node.get("diam", 0.0)) for node, _ in frontier])
        parent = np.array([p for _, p in frontier])
        levels.append((reps, diams, parent))
        nxt = []
        for c, (node, _) in enumerate(frontier):
            kids = node.get("children") or []
            if kids:
                nxt.extend((k, c) for k in kids)
            else:
                nxt.append(({"rep": node["rep"], "diam": 0.0}, c))
        frontier = nxt
    n = len(levels[-1][0])
    out = []
    cell_of = np.arange(n)
    chain = [cell_of]
    for t in range(H - 1, 0, -1):
        cell_of = levels[t][2][cell_of]
        chain.append(cell_of)
    chain = chain[::-1]
    for t, (reps, diams, parent) in enumerate(levels):
        out.append(Level(chain[t], reps, diams, parent))
    return CantorTree(levels[-1][0].copy(), tuple(out), metric)


@dataclass(frozen=True)
class LeafMatching:
    pairs: np.ndarray          # (m, 2) leaf ids (a, b), unique
    multiplicity: np.ndarray   # (m,) copies of each pair used by the refinement
    displacement: float        # max distance over pairs
    hausdorff: float           # d_H of the two leaf sets
    delta: float
    levels: tuple              # (level of A, level of B) used as the partitions
    trace: tuple = field(default=())   # (A cell, B cell, flow) per matched cell pair

    @property
    def is_bijection(self) -> bool:
        return (bool(np.all(self.multiplicity == 1))
                and len(np.unique(self.pairs[:, 0])) == len(self.pairs)
                and len(np.unique(self.pairs[:, 1])) == len(self.pairs))

    def as_dict(self) -> dict:
        return {int(a): int(b) for a, b in self.pairs.tolist()}


def _shallowest_fine_level(T: CantorTree, delta: float, name: str) -> int:
    for t, lv in enumerate(T.levels):
        if lv.mesh < delta:
            return t
    need = min(T.meshes())
    raise errors.MeshTooCoarse(f"tree {name} has no level with mesh < {delta}; need delta > {need}", need)


def _tree_flows(n_a, n_b, edges, demand):
    """Unique edge flows on a forest meeting every node demand, or None if some flow < 1."""
    adj = {v: set() for v in range(n_a + n_b)}
    for e, (u, v) in enumerate(edges):
        adj[u].add(e)
        adj[n_a + v].add(e)
    rem = list(demand)
    flow = [0] * len(edges)
    stack = [v for v in adj if len(adj[v]) == 1]
    while stack:
        v = stack.pop()
        if len(adj[v]) != 1:
            continue
        e = adj[v].pop()
        u, w = edges[e]
        other = n_a + w if v == u else u
        if rem[v] < 1:
            return None
        flow[e] = rem[v]
        rem[other] -= rem[v]
        rem[v] = 0
        adj[other].discard(e)
        if len(adj[other]) == 1:
            stack.append(other)
    if any(rem) or any(f < 1 for f in flow):
        return None
    return flow


def cantor_match(A: CantorTree, B: CantorTree, delta: float, refine: bool = True) -> LeafMatching:
    """Match the leaves of A and B cell by cell with displacement at most d_H + 3δ.

    The shallowest levels of mesh < δ are used as partitions. Every A cell is
    sent to the B cell holding the point of B nearest to it, B cells left over
    are sent back to the A cell holding their nearest A point, and leaves are
    then split across the resulting cell pairs. When leaf counts make an exact
    split impossible and ``refine`` is set, every cell pair carries the same
    number of slots and leaves are repeated evenly to fill them.
    """
    if not delta > 0:
        raise errors.NonpositiveEpsilon(f"delta must be positive, got {delta}")
    if A.leaves.shape[1] != B.leaves.shape[1]:
        raise errors.DimensionMismatch("trees live in different dimensions")
    D = A.distances(B)
    rho = float(max(D.min(axis=1).max(), D.min(axis=0).max()))
    ta = _shallowest_fine_level(A, delta, "A")
    tb = _shallowest_fine_level(B, delta, "B")
    la, lb = A.levels[ta], B.levels[tb]
    na, nb = len(la.reps), len(lb.reps)
    members_a = [la.members(c) for c in range(na)]
    members_b = [lb.members(c) for c in range(nb)]

    edges = []
    for u, idx in enumerate(members_a):
        sub = D[idx]
        i, j = np.unravel_index(np.argmin(sub), sub.shape)   # row-major: lexicographic tie-break
        edges.append((u, int(lb.cell_of[j])))
    hit = {v for _, v in edges}
    for v, idx in enumerate(members_b):
        if v in hit:
            continue
        sub = D[:, idx].T
        _, i = np.unravel_index(np.argmin(sub), sub.shape)
        edges.append((int(la.cell_of[i]), v))
    edges.sort()

    demand = [len(m) for m in members_a] + [len(m) for m in members_b]
    flows = _tree_flows(na, nb, edges, demand)
    copies = flows is None
    if copies:
        if not refine:
            raise errors.RefinementImpossible("cell leaf counts admit no exact cellwise bijection")
        K = max(demand)
        flows = [K] * len(edges)

    def slots(members, cell_edges, node_flows):
        total = sum(node_flows)
        ids = members[(np.arange(total) * len(members)) // total]
        out, s = {}, 0
        for e, f in zip(cell_edges, node_flows):
            out[e] = ids[s:s + f]
            s += f
        return out

    by_a = {u: [] for u in range(na)}
    by_b = {v: [] for v in range(nb)}
    for e, (u, v) in enumerate(edges):
        by_a[u].append(e)
        by_b[v].append(e)
    slot_a, slot_b = {}, {}
    for u, es in by_a.items():
        slot_a.update(slots(members_a[u], es, [flows[e] for e in es]))
    for v, es in by_b.items():
        slot_b.update(slots(members_b[v], es, [flows[e] for e in es]))
    raw = np.concatenate([np.column_stack([slot_a[e], slot_b[e]]) for e in range(len(edges))])
    pairs, mult = np.unique(raw, axis=0, return_counts=True)
    disp = float(D[pairs[:, 0], pairs[:, 1]].max())
    trace = tuple((u, v, flows[e]) for e, (u, v) in enumerate(edges))
    return LeafMatching(pairs, mult, disp, rho, float(delta), (ta, tb), trace)


def _bottleneck_exhaustive(D: np.ndarray):
    n = len(D)
    INF = float("inf")
    best = [INF] * (1 << n)
    choice = [-1] * (1 << n)
    best[0] = 0.0
    for mask in range(1 << n):
        if best[mask] == INF:
            continue
        i = bin(mask).count("1")
        if i == n:
            continue
        for j in range(n):
            if not mask >> j & 1:
                nm = mask | (1 << j)
                val = max(best[mask], D[i, j])
                if val < best[nm]:
                    best[nm], choice[nm] = val, j
    perm, mask = [0] * n, (1 << n) - 1
    for i in range(n - 1, -1, -1):
        j = choice[mask]
        perm[i] = j
        mask ^= 1 << j
    return float(best[(1 << n) - 1]), np.array(perm)


def _perfect_under(D, thr):
    M = csr_matrix(D <= thr)
    match = maximum_bipartite_matching(M, perm_type="column")
    return match if np.all(match >= 0) else None


def bottleneck_assignment(D: np.ndarray):
    """Minimise the largest cost of a perfect matching of a square cost matrix.

    Returns (value, perm) with row i matched to column perm[i].
    """
    D = np.asarray(D, dtype=float)
    if D.shape[0] != D.shape[1]:
        raise errors.LeafCountMismatch(f"cost matrix is {D.shape[0]}x{D.shape[1]}")
    if len(D) <= 10:
        return _bottleneck_exhaustive(D)
    vals = np.unique(D)
    lo, hi = 0, len(vals) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_under(D, vals[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    return float(vals[lo]), _perfect_under(D, vals[lo])


def best_matching_lower_bound(A: CantorTree, B: CantorTree) -> float:
    """Smallest possible displacement over all leaf bijections A -> B."""
    if A.n_leaves != B.n_leaves:
        raise errors.LeafCountMismatch(f"{A.n_leaves} leaves vs {B.n_leaves} leaves")
    return bottleneck_assignment(A.distances(B))[0]


@dataclass(frozen=True)
class ConjugatingPair:
    h1: dict                  # carrier of g -> carrier of j
    h2: dict
    displacement1: float
    displacement2: float
    graph_displacement: float
    method: str               # "cantor" or "bottleneck"


def _bijection_map(f: DynamicalRelation, name: str) -> dict:
    if classify(f) is not RelationClass.BIJECTION:
        raise errors.NotBijection(f"{name} is not a bijection")
    return f.as_map()


def conjugating_pair(g: DynamicalRelation, j: DynamicalRelation, delta: float) -> ConjugatingPair:
    """Bijections h1, h2 close to the identity with h2∘g = j∘h1.

    The graphs of g and j are matched as finite Cantor sets (max metric on
    pairs); projecting the graph matching gives h1 on the first coordinate
    and h2 on the second.
    """
    gm = _bijection_map(g, "g")
    jm = _bijection_map(j, "j")
    space = g.space
    if space.coords is None:
        raise errors.NotEuclideanAmbient("conjugating pairs need a coordinate ambient")
    dist = ds_distance(g, j).value
    if not dist < delta:
        raise errors.DistanceNotBelowDelta(f"D(g, j) = {dist} is not below delta = {delta}")
    if len(gm) != len(jm):
        raise errors.NoConjugatingBijection("carriers have different sizes")
    xs, ys = sorted(gm), sorted(jm)
    C = space.coords
    P = np.hstack([C[xs], C[[gm[x] for x in xs]]])
    Q = np.hstack([C[ys], C[[jm[y] for y in ys]]])
    A, B = point_tree(P, "max"), point_tree(Q, "max")
    m = cantor_match(A, B, (delta - dist) / 2.5)
    if m.is_bijection and m.displacement < delta:
        perm = dict(m.pairs.tolist())
        perm = np.array([perm[i] for i in range(len(xs))])
        gdisp, method = m.displacement, "cantor"
    else:
        gdisp, perm = bottleneck_assignment(cdist(P, Q, "chebyshev"))
        method = "bottleneck"
        if not gdisp < delta:
            raise errors.NoConjugatingBijection(f"best graph bijection moves points by {gdisp} >= {delta}")
    h1 = {xs[i]: ys[int(perm[i])] for i in range(len(xs))}
    h2 = {gm[xs[i]]: jm[ys[int(perm[i])]] for i in range(len(xs))}
    for x in xs:
        if h2[gm[x]] != jm[h1[x]]:
            raise errors.CertificateFailure("projected maps do not intertwine g and j")
    d1 = float(space.paired(np.array(list(h1)), np.array(list(h1.values()))).max())
    d2 = float(space.paired(np.array(list(h2)), np.array(list(h2.values()))).max())
    return ConjugatingPair(h1, h2, d1, d2, float(gdisp), method)
