"""ε-isometries and the C⁰-Gromov-Hausdorff distance between finite maps.

For maps f on X and g on Y the distance is the least ε for which some
φ: X -> Y and ψ: Y -> X are ε-isometries with C⁰ conjugation defects at most
ε. The two directions do not interact, so the minimum over pairs (φ, ψ) is
the larger of two independent minima; the exact mode enumerates every map in
each direction (vectorised), the heuristic mode improves one coordinate at a
time from a correspondence seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import errors
from .metric import TAU_CMP, SubsetIndex
from .relation import DynamicalRelation, ds_distance, spaces_equal

EXACT_LIMIT = 10 ** 8
_CHUNK = 20_000


@dataclass(frozen=True)
class EpsIsometryReport:
    distortion: float
    covering: float

    @property
    def eps(self) -> float:
        return max(self.distortion, self.covering)


def _subset(obj) -> SubsetIndex:
    if isinstance(obj, SubsetIndex):
        return obj
    space, members = obj
    return SubsetIndex.of(space, members)


def eps_isometry_report(phi: dict, X, Y) -> EpsIsometryReport:
    """Distortion and covering defect of φ: X -> Y (X, Y given as SubsetIndex or (space, members))."""
    X, Y = _subset(X), _subset(Y)
    missing = [x for x in X.members if x not in phi]
    if missing:
        raise errors.PartialMap(f"map is undefined at {missing[:5]}")
    ys = set(Y.members)
    outside = [phi[x] for x in X.members if phi[x] not in ys]
    if outside:
        raise errors.PartialMap(f"map leaves the target set at {outside[:5]}")
    xs = X.array
    img = np.array([phi[x] for x in X.members])
    dis = float(np.abs(Y.space.pairwise(img, img) - X.space.pairwise(xs, xs)).max())
    cov = float(Y.space.pairwise(Y.array, np.unique(img)).min(axis=1).max())
    return EpsIsometryReport(dis, cov)


@dataclass(frozen=True)
class _MapSystem:
    carrier: tuple
    D: np.ndarray
    step: np.ndarray      # local index of f(x)


def _map_system(f: DynamicalRelation) -> _MapSystem:
    fm = f.as_map()
    carrier = f.carrier
    if set(fm) != set(carrier):
        raise errors.NotAFunction("map is not defined on its whole carrier")
    pos = {x: i for i, x in enumerate(carrier)}
    idx = np.asarray(carrier)
    return _MapSystem(carrier, f.space.pairwise(idx, idx), np.array([pos[fm[x]] for x in carrier]))


def _score(maps: np.ndarray, S: _MapSystem, T: _MapSystem) -> np.ndarray:
    """max(distortion, covering, C⁰ defect) for each row of ``maps`` (maps S -> T as local indices)."""
    dis = np.abs(T.D[maps[:, :, None], maps[:, None, :]] - S.D[None]).max(axis=(1, 2))
    cov = T.D[maps].min(axis=1).max(axis=1)
    c0 = T.D[T.step[maps], maps[:, S.step]].max(axis=1)
    return np.maximum(np.maximum(dis, cov), c0)


def _defects(m: np.ndarray, S: _MapSystem, T: _MapSystem):
    row = m[None]
    dis = float(np.abs(T.D[row[:, :, None], row[:, None, :]] - S.D[None]).max())
    cov = float(T.D[row].min(axis=1).max())
    c0 = float(T.D[T.step[m], m[S.step]].max())
    return dis, cov, c0


def _exact_direction(S: _MapSystem, T: _MapSystem):
    m, n = len(S.carrier), len(T.carrier)
    best, best_map = np.inf, None
    it = itertools.product(range(n), repeat=m)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, _CHUNK)), dtype=np.int64)
        if not len(block):
            break
        maps = block.reshape(-1, m)
        sc = _score(maps, S, T)
        k = int(np.argmin(sc))
        if sc[k] < best:
            best, best_map = float(sc[k]), maps[k].copy()
    return best, best_map


def _heuristic_direction(S: _MapSystem, T: _MapSystem, seed: np.ndarray, rounds: int = 50):
    cur = seed.copy()
    best = float(_score(cur[None], S, T)[0])
    n = len(T.carrier)
    for _ in range(rounds):
        improved = False
        for i in range(len(cur)):
            trial = np.repeat(cur[None], n, axis=0)
            trial[:, i] = np.arange(n)
            sc = _score(trial, S, T)
            k = int(np.argmin(sc))
            if sc[k] < best:
                best, cur, improved = float(sc[k]), trial[k].copy(), True
        if not improved:
            break
    return best, cur


@dataclass(frozen=True)
class AmResult:
    value: float
    phi: dict             # M(f) -> M(g)
    psi: dict             # M(g) -> M(f)
    mode: str             # "exact" or "heuristic"
    phi_defects: tuple    # (distortion, covering, C⁰ defect)
    psi_defects: tuple

    def recompute(self) -> float:
        return max(*self.phi_defects, *self.psi_defects)


def _seed_maps(f, g, S, T):
    """Nearest-partner maps read off the best glued placement."""
    from .quotient import dgh_upper   # local import keeps module layering one-way at load time

    up = dgh_upper(f, g, budget=20_000)
    px = {x: i for i, x in enumerate(S.carrier)}
    py = {y: j for j, y in enumerate(T.carrier)}
    phi = np.zeros(len(S.carrier), dtype=np.int64)
    psi = np.zeros(len(T.carrier), dtype=np.int64)
    seen_x, seen_y = set(), set()
    for x, y in up.correspondence:
        if x not in seen_x:
            phi[px[x]] = py[y]
            seen_x.add(x)
        if y not in seen_y:
            psi[py[y]] = px[x]
            seen_y.add(y)
    return phi, psi


def am_distance(f: DynamicalRelation, g: DynamicalRelation, budget: int = EXACT_LIMIT) -> AmResult:
    """C⁰-Gromov-Hausdorff distance of two finite maps.

    Exact when |Y|^|X| + |X|^|Y| <= budget, otherwise a flagged upper bound.
    """
    S, T = _map_system(f), _map_system(g)
    m, n = len(S.carrier), len(T.carrier)
    count = n ** m + m ** n
    if count <= budget:
        a, phi = _exact_direction(S, T)
        b, psi = _exact_direction(T, S)
        mode = "exact"
    else:
        phi0, psi0 = _seed_maps(f, g, S, T)
        a, phi = _heuristic_direction(S, T, phi0)
        b, psi = _heuristic_direction(T, S, psi0)
        mode = "heuristic"
    phi_d, psi_d = _defects(phi, S, T), _defects(psi, T, S)
    value = max(a, b)
    if max(*phi_d, *psi_d) != value:
        raise errors.CertificateFailure("AM value does not match its witnesses")
    return AmResult(value,
                    {S.carrier[i]: T.carrier[int(j)] for i, j in enumerate(phi)},
                    {T.carrier[j]: S.carrier[int(i)] for j, i in enumerate(psi)},
                    mode, phi_d, psi_d)


@dataclass(frozen=True)
class CloseCertificate:
    phi: dict
    psi: dict
    delta: float
    phi_defects: tuple
    psi_defects: tuple

    @property
    def eps(self) -> float:
        return max(*self.phi_defects, *self.psi_defects)


def _partner_map(src: DynamicalRelation, dst: DynamicalRelation):
    sp = src.space
    d = np.maximum(sp.pairwise(src.src, dst.src), sp.pairwise(src.dst, dst.dst))
    best = d.argmin(axis=1)   # first minimum: lowest partner pair
    return {int(x): int(dst.src[k]) for x, k in zip(src.src, best)}


def am_from_close_pair(f: DynamicalRelation, g: DynamicalRelation, delta: Optional[float] = None) -> CloseCertificate:
    """ε-isometries both ways with all defects at most 2δ, read off a common placement.

    φ(x) is the first coordinate of the graph point of g nearest to (x, f(x)).
    """
    if not spaces_equal(f.space, g.space):
        raise errors.PlacementMissing("f and g must share one ambient placement")
    S, T = _map_system(f), _map_system(g)
    dist = ds_distance(f, g).value
    if delta is None:
        delta = dist
    if dist > delta + TAU_CMP:
        raise errors.PlacementMissing(f"placement has D = {dist} > delta = {delta}")
    phi = _partner_map(f, g)
    psi = _partner_map(g, f)
    px = {x: i for i, x in enumerate(S.carrier)}
    py = {y: j for j, y in enumerate(T.carrier)}
    phi_loc = np.array([py[phi[x]] for x in S.carrier])
    psi_loc = np.array([px[psi[y]] for y in T.carrier])
    cert = CloseCertificate(phi, psi, float(delta), _defects(phi_loc, S, T), _defects(psi_loc, T, S))
    if cert.eps > 2 * delta + TAU_CMP:
        raise errors.CertificateFailure(f"defect {cert.eps} exceeds 2*delta = {2 * delta}")
    return cert


def am_axioms_suite(systems, budget: int = EXACT_LIMIT) -> dict:
    """Symmetry and coefficient-2 triangle checks over all pairs and triples of ``systems``."""
    k = len(systems)
    val = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i != j:
                val[i, j] = am_distance(systems[i], systems[j], budget).value
    sym = [(i, j) for i in range(k) for j in range(i + 1, k) if val[i, j] != val[j, i]]
    tri = [(i, j, h) for i in range(k) for j in range(k) for h in range(k)
           if val[i, j] > 2 * (val[i, h] + val[h, j]) + TAU_CMP]
    return {"values": val.tolist(), "pairs": k * (k - 1), "triples": k ** 3,
            "symmetry_defects": sym, "triangle_defects": tri, "ok": not sym and not tri}
