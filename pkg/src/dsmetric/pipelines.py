"""End-to-end procedures: Cantor approximation of sampled manifold maps,
the x^n regression and fiber/component diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import errors
from .discretize import finite_relation_approx
from .metric import (TAU_CMP, FiniteMetricSpace, SubsetIndex, hausdorff_distance, isolated_points,
                     scale_components)
from .relation import DynamicalRelation, ds_distance, inverse, max_fiber_diameter, validate_relation
from .sft import DEFAULT_BUDGET, embed_cylinders, sft_from_relation


@dataclass(frozen=True)
class SampledManifoldMap:
    """A map sampled on a grid, with a declared continuity modulus.

    ``table[i]`` is the grid index of the image of grid point i. The modulus
    is either a Lipschitz constant or a list of (eps, delta) rows meaning
    d(x, x') < delta implies d(f x, f x') < eps.
    """
    space: FiniteMetricSpace
    table: np.ndarray
    lipschitz: Optional[float] = None
    modulus: tuple = ()
    func: Optional[Callable] = field(default=None, compare=False)
    name: str = "map"

    def relation(self) -> DynamicalRelation:
        return validate_relation(self.space, np.column_stack([np.arange(self.space.n), self.table]))

    def resolution(self) -> float:
        """Largest nearest-neighbour gap of the grid."""
        D = self.space.dist.copy()
        np.fill_diagonal(D, np.inf)
        return float(D.min(axis=1).max())

    def check_modulus(self):
        D = self.space.dist
        Dimg = D[np.ix_(self.table, self.table)]
        if self.lipschitz is None and not self.modulus:
            raise errors.ModulusInconsistent("no modulus declared")
        if self.lipschitz is not None:
            bad = np.argwhere(Dimg > self.lipschitz * D + TAU_CMP)
            if len(bad):
                i, j = bad[0]
                raise errors.ModulusInconsistent(
                    f"Lipschitz constant {self.lipschitz} fails at grid pair ({i}, {j})")
        for eps, delta in self.modulus:
            bad = np.argwhere((D < delta) & (Dimg >= eps))
            if len(bad):
                i, j = bad[0]
                raise errors.ModulusInconsistent(f"modulus row ({eps}, {delta}) fails at grid pair ({i}, {j})")

    def delta_for(self, eps: float) -> float:
        """A delta with d < delta => d(f x, f x') < eps."""
        cands = []
        if self.lipschitz is not None:
            cands.append(eps / self.lipschitz if self.lipschitz > 0 else np.inf)
        cands += [d for e, d in self.modulus if e <= eps]
        if not cands:
            raise errors.ModulusInconsistent(f"declared modulus does not reach {eps}")
        return float(max(cands))

    def omega(self, d: float) -> float:
        """Declared bound on d(f x, f x') given d(x, x') <= d."""
        vals = []
        if self.lipschitz is not None:
            vals.append(self.lipschitz * d)
        vals += [e for e, dl in self.modulus if d < dl]
        return float(min(vals)) if vals else float("inf")


def circle_rotation(n: int = 100, angle: float = 2 * np.pi / 5) -> SampledManifoldMap:
    """Rotation of the circle (arc-length metric) sampled at n equally spaced angles."""
    steps = angle * n / (2 * np.pi)
    k = int(round(steps))
    if abs(steps - k) > 1e-9:
        raise errors.GridTooCoarse("rotation angle is not a multiple of the grid step")
    theta = 2 * np.pi * np.arange(n) / n
    space = FiniteMetricSpace.torus(theta[:, None], (2 * np.pi,))
    table = (np.arange(n) + k) % n

    def func(p):
        return np.mod(p + angle, 2 * np.pi)

    return SampledManifoldMap(space, table, lipschitz=1.0, func=func, name="circle-rotation")


def torus_cat_map(n: int = 32) -> SampledManifoldMap:
    """(x, y) -> (2x + y, x + y) mod 1 on an n x n grid of the flat torus."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    space = FiniteMetricSpace.torus(np.column_stack([i, j]) / n, (1.0, 1.0))
    table = ((2 * i + j) % n) * n + (i + j) % n

    def func(p):
        p = np.atleast_2d(p)
        return np.mod(np.column_stack([2 * p[:, 0] + p[:, 1], p[:, 0] + p[:, 1]]), 1.0)

    return SampledManifoldMap(space, table, lipschitz=(3 + np.sqrt(5)) / 2, func=func, name="torus-cat-map")


def interval_identity(n: int = 101) -> SampledManifoldMap:
    space = FiniteMetricSpace.euclidean(np.linspace(0.0, 1.0, n)[:, None])
    return SampledManifoldMap(space, np.arange(n), lipschitz=1.0, func=lambda p: np.asarray(p, float),
                              name="interval-identity")


@dataclass(frozen=True)
class CantorApproxCertificate:
    relation: DynamicalRelation   # the approximating system on cylinder points
    eps: float
    delta: float
    density_defect: float         # d_H(M(h), grid)
    closeness: float              # sup of d(y, f(x)) over (x, y) in h, or the declared-modulus bound
    closeness_method: str         # "exact" or "modulus-bound"
    distance_to_f: float          # D(h, f) inside the extended ambient
    net_size: int
    n_points: int
    depth: int
    bits: int

    @property
    def ok(self) -> bool:
        return self.density_defect < self.eps and self.closeness < self.eps


def manifold_cantor_approx(m: SampledManifoldMap, eps: float, depth: int = 1, bits: int = 0,
                           budget: int = DEFAULT_BUDGET) -> CantorApproxCertificate:
    """Discretize at δ/2, lift to cylinders at δ/2, certify density and closeness below ε.

    δ = min(ε/2, modulus⁻¹(ε/2)). Fails loudly if either certified number is
    not strictly below ε.
    """
    if not eps > 0:
        raise errors.NonpositiveEpsilon(f"eps must be positive, got {eps}")
    res = m.resolution()
    if eps <= res:
        raise errors.GridTooCoarse(f"eps = {eps} does not exceed the grid resolution {res}")
    m.check_modulus()
    delta = min(eps / 2, m.delta_for(eps / 2))
    f = m.relation()
    approx = finite_relation_approx(f, delta / 2)
    g = approx.relation
    E = embed_cylinders(sft_from_relation(g), g, depth, delta / 2, bits, budget)
    h, ext = E.relation, E.space
    n_grid = m.space.n
    density = hausdorff_distance(SubsetIndex.of(ext, h.carrier), SubsetIndex.of(ext, range(n_grid))).value
    f_ext = DynamicalRelation(ext, f.pairs)
    to_f = ds_distance(h, f_ext).value
    if m.func is not None:
        C = ext.coords
        img = m.func(C[h.src])
        closeness = float(_rowwise(ext, C[h.dst], np.asarray(img).reshape(len(h), -1)).max())
        method = "exact"
    else:
        closeness = to_f + m.omega(to_f)
        method = "modulus-bound"
    cert = CantorApproxCertificate(h, float(eps), float(delta), float(density), closeness, method, float(to_f),
                                   len(approx.net), len(E.cylinders), depth, bits)
    if not cert.ok:
        raise errors.CertificateFailure(
            f"{m.name}: density {density} / closeness {closeness} not below eps = {eps}")
    return cert


def _rowwise(space: FiniteMetricSpace, P, Q) -> np.ndarray:
    diff = np.abs(np.asarray(P, float) - np.asarray(Q, float))
    if space.kind == "torus":
        per = np.asarray(space.periods, dtype=float)
        diff = np.minimum(diff, per - diff)
    return np.sqrt((diff ** 2).sum(axis=1))


def power_map_regression(n_list, grid: int = 1001) -> list:
    """D(f_n, f_limit) for f_n(x) = x^n on [0, 1], sampled at ``grid`` resolution.

    The limit graph is ([0,1] x {0}) ∪ ({1} x [0,1]) on the grid. The graph of
    f_n is sampled at the grid abscissae and at the preimages of the grid
    ordinates, so both of its projections are grid-dense even where x^n is
    steep. Graph samples are compared as plain pair sets.
    """
    x = np.linspace(0.0, 1.0, grid)
    base = FiniteMetricSpace.euclidean(x[:, None])
    idx = np.arange(grid)
    limit = np.concatenate([np.column_stack([idx, np.zeros(grid, int)]),
                            np.column_stack([np.full(grid, grid - 1), idx])])
    out = []
    for n in n_list:
        n = int(n)
        if n < 1:
            raise errors.ValidationError("exponents must be positive integers")
        xs = np.unique(np.concatenate([x, x ** (1.0 / n)]))
        space, pts = base.extend(np.concatenate([xs, xs ** n])[:, None])
        fn = DynamicalRelation(space, np.column_stack([pts[:len(xs)], pts[len(xs):]]))
        fl = DynamicalRelation(space, limit)
        dist, wit = ds_distance(fn, fl)
        out.append({"n": n, "D": dist, "witness": wit})
    return out


@dataclass(frozen=True)
class GenericityReport:
    fiber_diameter: float          # max diam f(x)
    inverse_fiber_diameter: float  # max diam f^-1(x)
    in_A: dict                     # eps -> both fiber diameters < eps
    component_mesh: dict           # r -> largest r-chain component diameter of M(f)
    isolated: dict                 # eps -> points x with B_eps(x) ∩ M(f) = {x}

    @property
    def enters_A_above(self) -> float:
        return max(self.fiber_diameter, self.inverse_fiber_diameter)

    def as_dict(self) -> dict:
        return {"fiber_diameter": self.fiber_diameter,
                "inverse_fiber_diameter": self.inverse_fiber_diameter,
                "enters_A_above": self.enters_A_above,
                "in_A": {str(k): v for k, v in self.in_A.items()},
                "component_mesh": {str(k): v for k, v in self.component_mesh.items()},
                "isolated": {str(k): list(v) for k, v in self.isolated.items()}}


def genericity_report(f: DynamicalRelation, eps_list=(), r_list=()) -> GenericityReport:
    fd = max_fiber_diameter(f)
    ifd = max_fiber_diameter(inverse(f))
    X = f.carrier_subset()
    in_a = {float(e): bool(fd < e and ifd < e) for e in eps_list}
    mesh = {float(r): scale_components(f.space, X, r).mesh for r in r_list}
    iso = {float(e): tuple(isolated_points(f.space, X, e)) for e in eps_list}
    return GenericityReport(fd, ifd, in_a, mesh, iso)
