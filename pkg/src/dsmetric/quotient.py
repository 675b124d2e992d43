"""Distances between isometric-conjugacy classes of finite systems.

Systems may live in different ambient spaces. Upper bounds come from concrete
placements: two carriers glued along a correspondence form one metric space in
which D is computed exactly. Lower bounds are half the smallest distortion of a
correspondence, between carriers and between graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.spatial.transform import Rotation

from . import errors
from .metric import TAU_CMP, TAU_METRIC, FiniteMetricSpace, validate_metric
from .relation import DynamicalRelation, ds_distance, spaces_equal

TAU_ISO = 1e-9
EPS_FLOOR = 1e-12
DEFAULT_BUDGET = 200_000
EXHAUSTIVE_CELLS = 12


# ----------------------------------------------------------------- helpers

@dataclass(frozen=True)
class _Local:
    carrier: tuple        # ambient indices of M(f)
    D: np.ndarray         # carrier distance matrix
    pairs: np.ndarray     # relation pairs in local indices


def _local(f: DynamicalRelation) -> _Local:
    carrier = f.carrier
    pos = {x: i for i, x in enumerate(carrier)}
    idx = np.asarray(carrier)
    D = f.space.pairwise(idx, idx)
    pairs = np.array([(pos[x], pos[y]) for x, y in f.pairs.tolist()], dtype=int).reshape(-1, 2)
    return _Local(carrier, D, pairs)


def _graph_matrix(L: _Local) -> np.ndarray:
    p = L.pairs
    return np.maximum(L.D[np.ix_(p[:, 0], p[:, 0])], L.D[np.ix_(p[:, 1], p[:, 1])])


def distortion(DX: np.ndarray, DY: np.ndarray, R) -> float:
    R = np.asarray(R, dtype=int).reshape(-1, 2)
    a, b = R[:, 0], R[:, 1]
    return float(np.abs(DX[np.ix_(a, a)] - DY[np.ix_(b, b)]).max())


def _is_correspondence(R, nx, ny) -> bool:
    R = np.asarray(R).reshape(-1, 2)
    return len(np.unique(R[:, 0])) == nx and len(np.unique(R[:, 1])) == ny


def _cross(DX, DY, R, eps):
    a, b = R[:, 0], R[:, 1]
    # (x, r, y) -> d_X(x, a_r) + d_Y(b_r, y); the sum is formed before eps is added
    # so that gluing Y to X gives exactly the transposed matrix
    return (DX[:, a][:, :, None] + DY[b, :][None, :, :]).min(axis=1) + eps


def _hausdorff_cross(C, fp, gp) -> float:
    d = np.maximum(C[np.ix_(fp[:, 0], gp[:, 0])], C[np.ix_(fp[:, 1], gp[:, 1])])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ----------------------------------------------------------------- gluing

@dataclass(frozen=True)
class GluedSpace:
    space: FiniteMetricSpace    # X occupies indices 0..nx-1, Y follows
    nx: int
    ny: int
    correspondence: np.ndarray  # (r, 2) local (x, y) pairs
    eps: float

    def x(self, i):
        return i

    def y(self, j):
        return self.nx + j


def glue_by_correspondence(X: FiniteMetricSpace, Y: FiniteMetricSpace, R, eps: float) -> GluedSpace:
    """Metric on X ⊔ Y with d(x, y) = min over (a, b) in R of d(x, a) + eps + d(b, y)."""
    R = np.asarray(R, dtype=int).reshape(-1, 2)
    if not len(R) or R[:, 0].min() < 0 or R[:, 0].max() >= X.n or R[:, 1].min() < 0 or R[:, 1].max() >= Y.n:
        raise errors.NotACorrespondence("correspondence indices out of range")
    if not _is_correspondence(R, X.n, Y.n):
        raise errors.NotACorrespondence("relation does not cover both spaces")
    if eps == 0:
        raise errors.DegenerateIdentification("eps = 0 would identify points")
    if not eps > 0:
        raise errors.NonpositiveEpsilon(f"eps must be positive, got {eps}")
    dis = distortion(X.dist, Y.dist, R)
    if eps < dis / 2 - TAU_CMP:
        raise errors.EpsilonBelowHalfDistortion(f"eps = {eps} is below dis(R)/2 = {dis / 2}")
    C = _cross(X.dist, Y.dist, R, float(eps))
    M = np.block([[X.dist, C], [C.T, Y.dist]])
    # points glued at the 1e-12 floor are distinct, so the duplicate threshold scales with eps
    space = validate_metric(M, tol=min(TAU_METRIC, eps / 2))
    return GluedSpace(space, X.n, Y.n, R, float(eps))


# ----------------------------------------------------------------- correspondence search

class _Search:
    """Depth-first search over correspondences graph(φ) ∪ graph(ψ)^T.

    Every correspondence contains one of this form with no larger distortion,
    so minimising over them is exhaustive. ``score`` maps a complete
    correspondence to the objective; ``bound`` maps a partial distortion to a
    lower bound on the objective of any completion.
    """

    def __init__(self, DX, DY, budget, score=None, bound=None):
        self.DX, self.DY = DX, DY
        self.nx, self.ny = len(DX), len(DY)
        self.budget = budget
        self.nodes = 0
        self.exhausted = False
        self.score = score or (lambda R, dis: dis)
        self.bound = bound or (lambda dis: dis)
        self.best = float("inf")
        self.best_R = None

    def offer(self, R):
        R = np.unique(np.asarray(R, dtype=int).reshape(-1, 2), axis=0)
        val = self.score(R, distortion(self.DX, self.DY, R))
        if val < self.best:
            self.best, self.best_R = val, R

    def run(self):
        self._step(0, [], [], 0.0, set())
        return self

    def _gain(self, a, b, A, B, cur):
        if not A:
            return cur
        return max(cur, float(np.abs(self.DX[a, A] - self.DY[b, B]).max()))

    def _step(self, k, A, B, cur, present):
        if self.exhausted:
            return
        self.nodes += 1
        if self.nodes > self.budget:
            self.exhausted = True
            return
        if self.bound(cur) >= self.best:
            return
        if k == self.nx + self.ny:
            val = self.score(np.column_stack([A, B]), cur)
            if val < self.best:
                self.best, self.best_R = val, np.unique(np.column_stack([A, B]), axis=0)
            return
        if k < self.nx:
            options = [(k, b) for b in range(self.ny)]
        else:
            options = [(a, k - self.nx) for a in range(self.nx)]
        ranked = sorted((self._gain(a, b, A, B, cur), a, b) for a, b in options)
        for gain, a, b in ranked:
            if self.bound(gain) >= self.best:
                break
            if (a, b) in present:
                self._step(k + 1, A, B, cur, present)
            else:
                present.add((a, b))
                self._step(k + 1, A + [a], B + [b], gain, present)
                present.discard((a, b))
            if self.exhausted:
                return


def min_distortion(DX, DY, budget=DEFAULT_BUDGET):
    """(smallest distortion, correspondence, search completed)."""
    s = _Search(DX, DY, budget)
    s.offer(np.array([(a, b) for a in range(len(DX)) for b in range(len(DY))]))
    s.run()
    return s.best, s.best_R, not s.exhausted


# ----------------------------------------------------------------- brackets

@dataclass(frozen=True)
class UpperResult:
    value: float
    correspondence: tuple      # (x, y) pairs of ambient indices
    eps: float
    distortion: float
    glued: GluedSpace
    witness: object            # D witness inside the glued space (glued indices)
    exhaustive: bool
    budget_exhausted: bool


@dataclass(frozen=True)
class LowerResult:
    value: float
    carrier_bound: float
    graph_bound: float
    carrier_correspondence: tuple
    graph_correspondence: tuple  # (pair index in f, pair index in g)
    exact_search: bool           # both distortion searches completed


@dataclass(frozen=True)
class BracketResult:
    lower: LowerResult
    upper: UpperResult

    @property
    def exact(self) -> bool:
        return abs(self.upper.value - self.lower.value) <= TAU_CMP


def _realized(LX, LY, R):
    # limit of the glued D as eps decreases to dis/2 (D is continuous in eps)
    eps = distortion(LX.D, LY.D, R) / 2
    return _hausdorff_cross(_cross(LX.D, LY.D, R, eps), LX.pairs, LY.pairs)


def _upper_search(LX, LY, budget, seeds):
    nx, ny = len(LX.carrier), len(LY.carrier)
    score = lambda R, dis: _realized(LX, LY, R)   # noqa: E731
    if nx * ny <= EXHAUSTIVE_CELLS:
        cells = [(a, b) for a in range(nx) for b in range(ny)]
        best, best_R = float("inf"), None
        for mask in range(1, 1 << len(cells)):
            R = np.array([cells[i] for i in range(len(cells)) if mask >> i & 1])
            if not _is_correspondence(R, nx, ny):
                continue
            val = score(R, None)
            if val < best:
                best, best_R = val, R
        return best, best_R, True, False
    s = _Search(LX.D, LY.D, budget, score=score, bound=lambda dis: dis / 2)
    for R in seeds:
        s.offer(R)
    s.run()
    return s.best, s.best_R, False, s.exhausted


def _seeds(f, g, LX, LY, conj):
    nx, ny = len(LX.carrier), len(LY.carrier)
    out = [np.array([(a, b) for a in range(nx) for b in range(ny)])]
    if conj is not None:
        py = {y: j for j, y in enumerate(LY.carrier)}
        out.append(np.array([(i, py[conj[x]]) for i, x in enumerate(LX.carrier)]))
    if spaces_equal(f.space, g.space):
        D = f.space.pairwise(np.asarray(LX.carrier), np.asarray(LY.carrier))
        near = [(i, int(np.argmin(D[i]))) for i in range(nx)] + [(int(np.argmin(D[:, j])), j) for j in range(ny)]
        out.append(np.array(near))
    return out


def dgh_upper(f: DynamicalRelation, g: DynamicalRelation, budget: int = DEFAULT_BUDGET) -> UpperResult:
    """Smallest D found over placements of f and g glued along a correspondence.

    The glued D is continuous and nondecreasing in the gluing parameter eps
    > dis/2, so the reported value is its limit at eps = dis/2; the returned
    ``glued`` space realises it up to max(dis/2, 1e-12) - dis/2. Small instances (|M(f)|·|M(g)| <= 12) try every
    correspondence; larger ones run a pruned search within ``budget`` nodes,
    in both orientations, and set ``budget_exhausted`` if it was cut short.
    """
    LX, LY = _local(f), _local(g)
    conj = isometric_conjugacy_check(f, g)
    v1, R1, exh, cut1 = _upper_search(LX, LY, budget, _seeds(f, g, LX, LY, conj))
    cut2 = False
    if not exh:
        inv = {v: k for k, v in conj.items()} if conj is not None else None
        v2, R2, _, cut2 = _upper_search(LY, LX, budget, _seeds(g, f, LY, LX, inv))
        if v2 < v1:
            v1, R1 = v2, np.unique(R2[:, ::-1], axis=0)
    dis = distortion(LX.D, LY.D, R1)
    eps = max(dis / 2, EPS_FLOOR)
    Xs = FiniteMetricSpace(len(LX.D), "matrix", dist=LX.D)
    Ys = FiniteMetricSpace(len(LY.D), "matrix", dist=LY.D)
    glued = glue_by_correspondence(Xs, Ys, R1, eps)
    nx = len(LX.carrier)
    fz = DynamicalRelation(glued.space, LX.pairs)
    gz = DynamicalRelation(glued.space, LY.pairs + nx)
    realised, wit = ds_distance(fz, gz)
    if not -TAU_CMP <= realised - v1 <= eps - dis / 2 + TAU_CMP:
        raise errors.CertificateFailure(f"glued placement gives {realised}, search reported {v1}")
    value = float(v1)
    corr = tuple((LX.carrier[a], LY.carrier[b]) for a, b in R1.tolist())
    return UpperResult(value, corr, eps, dis, glued, wit, exh, cut1 or cut2)


def _diam_gap(DX, DY):
    return abs(float(DX.max()) - float(DY.max()))


def dgh_lower(f: DynamicalRelation, g: DynamicalRelation, budget: int = DEFAULT_BUDGET) -> LowerResult:
    """max(½ min distortion between carriers, ½ min distortion between graphs).

    If a search runs out of budget, the diameter gap of that pair of spaces
    (a distortion lower bound) is used instead and ``exact_search`` is False.
    """
    LX, LY = _local(f), _local(g)
    c_val, c_R, c_ok = min_distortion(LX.D, LY.D, budget)
    GX, GY = _graph_matrix(LX), _graph_matrix(LY)
    g_val, g_R, g_ok = min_distortion(GX, GY, budget)
    if not c_ok:
        c_val, c_R = _diam_gap(LX.D, LY.D), None
    if not g_ok:
        g_val, g_R = _diam_gap(GX, GY), None
    cb, gb = c_val / 2, g_val / 2
    carrier_corr = () if c_R is None else tuple((LX.carrier[a], LY.carrier[b]) for a, b in c_R.tolist())
    graph_corr = () if g_R is None else tuple(map(tuple, g_R.tolist()))
    return LowerResult(max(cb, gb), cb, gb, carrier_corr, graph_corr, c_ok and g_ok)


def dgh_bracket(f, g, budget: int = DEFAULT_BUDGET) -> BracketResult:
    return BracketResult(dgh_lower(f, g, budget), dgh_upper(f, g, budget))


# ----------------------------------------------------------------- rigid motions

@dataclass(frozen=True)
class EuclideanResult:
    value: float
    rotation: np.ndarray       # orthogonal d x d (reflections allowed)
    translation: np.ndarray
    evaluations: int
    budget_exhausted: bool

    def apply(self, pts):
        return np.asarray(pts, dtype=float) @ self.rotation.T + self.translation


def _euclid_pairs(f: DynamicalRelation):
    if f.space.kind != "euclidean":
        raise errors.NotEuclideanAmbient("rigid motions need a Euclidean ambient")
    C = f.space.coords
    return C[f.src], C[f.dst]


class _MotionEval:
    def __init__(self, F0, F1, G0, G1, budget):
        self.F0, self.F1, self.G0, self.G1 = F0, F1, G0, G1
        self.budget = budget
        self.count = 0
        self.best = (float("inf"), None, None)

    def __call__(self, Rm, t):
        self.count += 1
        G0 = self.G0 @ Rm.T + t
        G1 = self.G1 @ Rm.T + t
        d = np.maximum(cdist(self.F0, G0), cdist(self.F1, G1))
        val = float(max(d.min(axis=1).max(), d.min(axis=0).max()))
        if val < self.best[0]:
            self.best = (val, Rm, np.asarray(t, dtype=float))
        return val

    @property
    def spent(self):
        return self.count >= self.budget


def _line_search(ev, X, Y):
    diffs_all = []
    for s in (1.0, -1.0):
        c = np.unique((X[:, None] - s * Y[None, :]).ravel())
        mids = (c[:, None] + c[None, :]) / 2
        cand = np.unique(np.concatenate([c, mids[np.triu_indices(len(c), 1)]]))
        diffs_all.append((s, cand))
    for s, cand in diffs_all:
        Rm = np.array([[s]])
        for t in cand:
            if ev.spent:
                return
            ev(Rm, np.array([t]))


def _procrustes(X, Y):
    """Orthogonal map plus translation sending the rows of Y closest to the rows of X."""
    cx, cy = X.mean(axis=0), Y.mean(axis=0)
    R, _ = orthogonal_procrustes(Y - cy, X - cx)
    return R.T, cx - cy @ R


def _point_isometry(DX, DY, budget=10_000):
    """Order of Y's rows making it isometric to X, if a short search finds one."""
    if len(DX) != len(DY):
        return None
    px, py = _profiles(DX), _profiles(DY)
    n = len(DX)
    compat = [[_profile_match(px[i], py[j], TAU_ISO) for j in range(n)] for i in range(n)]
    try:
        return _backtrack(DX, DY, compat, lambda k, b, a: True, lambda k: range(n), budget)
    except errors.BudgetExceeded:
        return None


def _icp(ev, X, Y, Rm, t, rounds=20):
    """Alternate nearest-point pairing (both directions) and Procrustes fits."""
    for _ in range(rounds):
        if ev.spent:
            return
        Ym = Y @ Rm.T + t
        D = cdist(X, Ym)
        pairs = {(i, int(j)) for i, j in enumerate(D.argmin(axis=1))}
        pairs |= {(int(i), j) for j, i in enumerate(D.argmin(axis=0))}
        a, b = map(list, zip(*sorted(pairs)))
        R2, t2 = _procrustes(X[a], Y[b])
        if np.allclose(R2, Rm) and np.allclose(t2, t):
            return
        Rm, t = R2, t2
        ev(Rm, t)


def _rotation_params(d, Rm, t):
    if d == 2:
        return np.array([np.arctan2(Rm[1, 0], Rm[0, 0]), *t])
    if d == 3:
        return np.concatenate([Rotation.from_matrix(Rm).as_rotvec(), t])
    return np.asarray(t, dtype=float)


def _refine(ev, d, Rm, t, maxiter):
    refl = np.eye(d)
    if np.linalg.det(Rm) < 0:
        refl[0, 0] = -1.0
    base = Rm @ refl   # proper rotation; Rm = base @ refl

    def build(p):
        if d == 2:
            c, s = np.cos(p[0]), np.sin(p[0])
            return np.array([[c, -s], [s, c]]) @ refl, p[1:]
        if d == 3:
            return Rotation.from_rotvec(p[:3]).as_matrix() @ refl, p[3:]
        return Rm, p

    def obj(p):
        Rx, tx = build(p)
        return ev(Rx, tx)

    p0 = _rotation_params(d, base, t)
    minimize(obj, p0, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-12, "fatol": 1e-13})


def euclidean_dgh(f: DynamicalRelation, g: DynamicalRelation, budget: int = 50_000) -> EuclideanResult:
    """Smallest D(f, ψ·g) found over rigid motions ψ (rotations, reflections, translations).

    On the line the search is exact: the optimum is one of finitely many
    candidate translations. In higher dimensions candidates come from
    Procrustes alignment of carrier bijections (exhaustive up to 7 points) and
    a rotation grid, then the best few are polished with Nelder-Mead.
    """
    F0, F1 = _euclid_pairs(f)
    G0, G1 = _euclid_pairs(g)
    d = F0.shape[1]
    if G0.shape[1] != d:
        raise errors.DimensionMismatch(f"dimensions {d} and {G0.shape[1]} differ")
    ev = _MotionEval(F0, F1, G0, G1, budget)
    I = np.eye(d)
    ev(I, np.zeros(d))
    X = f.space.coords[list(f.carrier)]
    Y = g.space.coords[list(g.carrier)]
    if d == 1:
        _line_search(ev, X[:, 0], Y[:, 0])
    else:
        cands = []
        cx, cy = X.mean(axis=0), Y.mean(axis=0)
        if len(X) == len(Y) and len(X) <= 7:
            for perm in itertools.permutations(range(len(Y))):
                cands.append(_procrustes(X, Y[list(perm)]))
        iso = _point_isometry(cdist(X, X), cdist(Y, Y))
        if iso is not None:
            cands.append(_procrustes(X, Y[iso]))
        if d == 2:
            for k in range(36):
                a = 2 * np.pi * k / 36
                c, s = np.cos(a), np.sin(a)
                for refl in (np.eye(2), np.diag([-1.0, 1.0])):
                    Rm = np.array([[c, -s], [s, c]]) @ refl
                    cands.append((Rm, cx - cy @ Rm.T))
        elif d == 3:
            for Rm in Rotation.create_group("O").as_matrix():
                for refl in (np.eye(3), np.diag([-1.0, 1.0, 1.0])):
                    R2 = Rm @ refl
                    cands.append((R2, cx - cy @ R2.T))
        else:
            for refl in (I, np.diag([-1.0] + [1.0] * (d - 1))):
                cands.append((refl, cx - cy @ refl.T))
        scored = []
        for Rm, t in cands:
            if ev.spent:
                break
            scored.append((ev(Rm, t), len(scored), Rm, t))
        scored.sort(key=lambda s: (s[0], s[1]))
        for _, _, Rm, t in scored[:3]:
            if ev.spent:
                break
            _icp(ev, X, Y, Rm, t)
            _refine(ev, d, Rm, t, maxiter=min(2000, max(1, budget - ev.count)))
        _refine(ev, d, ev.best[1], ev.best[2], maxiter=min(2000, max(1, budget - ev.count)))
    val, Rm, t = ev.best
    if spaces_equal(f.space, g.space):
        direct = ds_distance(f, g).value
        if direct <= val:
            val, Rm, t = direct, I, np.zeros(d)
    return EuclideanResult(val, Rm, t, ev.count, ev.spent)


# ----------------------------------------------------------------- isometry checks

def _profiles(D):
    return [np.sort(row) for row in D]


def _profile_match(p, q, tol):
    return len(p) == len(q) and bool(np.all(np.abs(p - q) <= tol))


def _backtrack(DA, DB, compat, extra_ok, order_hint, budget):
    """Distance-preserving bijections A -> B by backtracking; returns a list or None."""
    n = len(DA)
    if n != len(DB):
        return None
    assign = [-1] * n
    used = [False] * n
    nodes = [0]

    def rec(k):
        if k == n:
            return True
        nodes[0] += 1
        if nodes[0] > budget:
            raise errors.BudgetExceeded(f"isometry search exceeded {budget} nodes")
        for b in order_hint(k):
            if used[b] or not compat[k][b]:
                continue
            if k and np.any(np.abs(DA[k, :k] - DB[b, assign[:k]]) > TAU_ISO):
                continue
            if not extra_ok(k, b, assign):
                continue
            assign[k], used[b] = b, True
            if rec(k + 1):
                return True
            assign[k], used[b] = -1, False
        return False

    return list(assign) if rec(0) else None


def isometric_conjugacy_check(f: DynamicalRelation, g: DynamicalRelation,
                              budget: int = DEFAULT_BUDGET) -> Optional[dict]:
    """An isometry φ: M(f) -> M(g) with (x, y) ∈ f iff (φx, φy) ∈ g, or None."""
    LX, LY = _local(f), _local(g)
    n = len(LX.carrier)
    if n != len(LY.carrier) or len(LX.pairs) != len(LY.pairs):
        return None
    AX = np.zeros((n, n), dtype=bool)
    AX[LX.pairs[:, 0], LX.pairs[:, 1]] = True
    AY = np.zeros((n, n), dtype=bool)
    AY[LY.pairs[:, 0], LY.pairs[:, 1]] = True
    px, py = _profiles(LX.D), _profiles(LY.D)
    sig_x = [(int(AX[i].sum()), int(AX[:, i].sum()), bool(AX[i, i])) for i in range(n)]
    sig_y = [(int(AY[j].sum()), int(AY[:, j].sum()), bool(AY[j, j])) for j in range(n)]
    compat = [[sig_x[i] == sig_y[j] and _profile_match(px[i], py[j], TAU_ISO) for j in range(n)]
              for i in range(n)]
    same = spaces_equal(f.space, g.space)
    ypos = {y: j for j, y in enumerate(LY.carrier)}

    def hint(k):
        first = ypos.get(LX.carrier[k]) if same else None
        rest = [j for j in range(n) if j != first]
        return ([first] if first is not None else []) + rest

    def extra(k, b, assign):
        if AX[k, k] != AY[b, b]:
            return False
        for i in range(k):
            if AX[k, i] != AY[b, assign[i]] or AX[i, k] != AY[assign[i], b]:
                return False
        return True

    res = _backtrack(LX.D, LY.D, compat, extra, hint, budget)
    if res is None:
        return None
    return {LX.carrier[i]: LY.carrier[res[i]] for i in range(n)}


def graph_isometry_check(f: DynamicalRelation, g: DynamicalRelation,
                         budget: int = DEFAULT_BUDGET) -> Optional[list]:
    """A d₂-isometry between the graphs, as a list of ((x, y) in f, (x', y') in g), or None."""
    LX, LY = _local(f), _local(g)
    GX, GY = _graph_matrix(LX), _graph_matrix(LY)
    m = len(GX)
    if m != len(GY):
        return None
    fpairs = [tuple(p) for p in f.pairs.tolist()]
    gpairs = [tuple(p) for p in g.pairs.tolist()]
    gpos = {p: j for j, p in enumerate(gpairs)}

    def as_result(perm):
        return [(fpairs[i], gpairs[perm[i]]) for i in range(m)]

    if spaces_equal(f.space, g.space):
        for mapper in (lambda p: p, lambda p: (p[1], p[0])):
            perm = [gpos.get(mapper(p)) for p in fpairs]
            if None not in perm and len(set(perm)) == m:
                if np.all(np.abs(GX - GY[np.ix_(perm, perm)]) <= TAU_ISO):
                    return as_result(perm)
    px, py = _profiles(GX), _profiles(GY)
    compat = [[_profile_match(px[i], py[j], TAU_ISO) for j in range(m)] for i in range(m)]
    res = _backtrack(GX, GY, compat, lambda k, b, a: True, lambda k: range(m), budget)
    return None if res is None else as_result(res)
