"""Finite-relation approximation of sampled systems with a distance certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .metric import SubsetIndex, epsilon_net
from .relation import DynamicalRelation, ds_distance, validate_relation


@dataclass(frozen=True)
class Approximation:
    relation: DynamicalRelation
    net: SubsetIndex
    eps: float
    distance: float     # ds_distance(f, relation), recomputed
    witness: object

    @property
    def certified(self) -> bool:
        return self.distance <= self.eps


def finite_relation_approx(f: DynamicalRelation, eps: float) -> Approximation:
    """Coarse-grain f onto an eps-net Q of its sampled carrier.

    (a, b) ∈ Q×Q is kept iff some (x, y) ∈ f has d(x, a) <= eps and
    d(y, b) <= eps. Because Q is drawn from the carrier itself, every net
    point inherits an outgoing and an incoming pair.
    """
    if not eps > 0:
        raise errors.NonpositiveEpsilon(f"eps must be positive, got {eps}")
    if not len(f):
        raise errors.ValidationError("cannot approximate an empty relation")
    space = f.space
    net = epsilon_net(space, eps, members=f.carrier)
    q = net.array
    near_src = space.pairwise(f.src, q) <= eps
    near_dst = space.pairwise(f.dst, q) <= eps
    adj = near_src.T.astype(np.int32) @ near_dst.astype(np.int32)
    a, b = np.nonzero(adj)
    pairs = np.column_stack([q[a], q[b]])
    try:
        g = validate_relation(space, pairs)
    except (errors.NotSurjectiveForward, errors.NotSurjectiveBackward) as exc:
        # only reachable when the input sample is itself not surjective
        raise errors.SurjectivityFailure(str(exc)) from None
    dist, wit = ds_distance(f, g)
    if dist > eps:
        raise errors.CertificateFailure(f"approximation is at distance {dist} > eps={eps}")
    return Approximation(g, net, float(eps), dist, wit)


def coarsen_chain(f: DynamicalRelation, eps_list) -> list:
    """One certified approximation per eps, for a strictly decreasing eps list.

    Each entry is ``(relation, bound)`` with ``bound = eps`` (verified against
    the recomputed distance), so the bounds are monotone by construction.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise errors.NonpositiveEpsilon("all eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise errors.ValidationError("eps list must be strictly decreasing")
    out = []
    for e in eps_list:
        approx = finite_relation_approx(f, e)
        out.append((approx.relation, approx.eps))
    return out
