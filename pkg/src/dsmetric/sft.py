"""Subshift-of-finite-type lift of a finite relation and its finite-depth embeddings.

A finite relation g on Q = {q_1..q_k} gives a 0/1 transition matrix. Windows
of 2n+1 admissible letters (optionally paired with a window of perfection
bits) are placed as distinct points inside small balls around their centre
symbol; the shift acting on windows then induces a relation h_n on those
points, and D(h_n, g) is bounded by the ball radius.

Placement is a nested-interval (Cantor address) scheme along the first
coordinate: the centre letter picks the ball, then letters at distance
1, 2, .., n from the centre (right before left) and finally the bits pick
ever smaller sub-intervals. A letter only branches among the admissible
successors (or predecessors) of its inner neighbour, so the radix stays small.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import errors
from .relation import DynamicalRelation, ds_distance, inverse, max_fiber_diameter

DEFAULT_BUDGET = 200_000
_COUNT_CAP = 2 ** 40


@dataclass(frozen=True)
class TransitionSystem:
    symbols: tuple          # ambient point indices q_1..q_k
    matrix: np.ndarray      # k x k, entries 0/1

    @property
    def k(self) -> int:
        return len(self.symbols)

    def successors(self, i: int) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(self.matrix[i]))

    def predecessors(self, j: int) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.matrix[:, j]))

    def word_count(self, length: int) -> int:
        """Number of admissible words with ``length`` letters (sum of entries of A^(length-1)).

        Counts saturate at 2**40, far above any enumeration budget.
        """
        if length <= 0:
            return 0
        A = self.matrix.astype(np.int64)
        vec = np.ones(self.k, dtype=np.int64)
        for _ in range(length - 1):
            vec = np.minimum(A @ vec, _COUNT_CAP)
        return int(min(int(vec.sum()), _COUNT_CAP))


def sft_from_relation(g: DynamicalRelation) -> TransitionSystem:
    symbols = g.carrier
    pos = {q: i for i, q in enumerate(symbols)}
    A = np.zeros((len(symbols), len(symbols)), dtype=np.int8)
    for x, y in g.pairs.tolist():
        A[pos[x], pos[y]] = 1
    empty_rows = [symbols[i] for i in np.flatnonzero(A.sum(axis=1) == 0)]
    empty_cols = [symbols[j] for j in np.flatnonzero(A.sum(axis=0) == 0)]
    if empty_rows or empty_cols:
        raise errors.ValidationError(
            f"relation is not surjective: symbols {empty_rows} have no successor, {empty_cols} no predecessor")
    A.setflags(write=False)
    return TransitionSystem(tuple(symbols), A)


def enumerate_words(T: TransitionSystem, n: int, budget: int = DEFAULT_BUDGET) -> list:
    """All admissible windows (w_-n, .., w_n) as tuples of symbol positions, sorted."""
    if n < 0:
        raise errors.ValidationError("depth must be nonnegative")
    total = T.word_count(2 * n + 1)
    if total > budget:
        raise errors.DepthOverflow(f"{total} words at depth {n} exceed the budget {budget}")
    succ = [T.successors(i) for i in range(T.k)]
    words = [(i,) for i in range(T.k)]
    for _ in range(2 * n):
        words = [w + (a,) for w in words for a in succ[w[-1]]]
    return words


@dataclass(frozen=True)
class EmbeddedSft:
    system: TransitionSystem
    depth: int
    bits: int
    eps: float
    radius: float            # ball radius actually used (<= eps)
    words: tuple             # letter windows
    bitstrings: tuple        # bit windows
    cylinders: tuple         # (word, bitstring) in point order
    offsets: np.ndarray      # displacement of each cylinder point from its centre symbol
    points: np.ndarray       # ambient index of each cylinder point
    space: object            # ambient extended by the cylinder points
    relation: DynamicalRelation   # induced shift relation h_n
    source: DynamicalRelation     # g re-expressed in the extended ambient
    distance: float          # D(h_n, g), recomputed
    witness: object


def _digits(word, bitstring, n, succ, pred):
    c = n
    out = []
    for d in range(1, n + 1):
        s = succ[word[c + d - 1]]
        out.append((len(s), s.index(word[c + d])))
        p = pred[word[c - d + 1]]
        out.append((len(p), p.index(word[c - d])))
    B = len(bitstring)
    centre = (B - 1) / 2.0
    order = sorted(range(B), key=lambda i: (abs(i - centre), -i))
    out.extend((2, bitstring[i]) for i in order)
    return out


def _offset(digits, r):
    lo, hi = -r, r
    for radix, i in digits:
        if radix == 1:
            continue
        width = hi - lo
        centre = lo + (i + 0.5) * width / radix
        half = width / (4 * radix)
        lo, hi = centre - half, centre + half
    return 0.5 * (lo + hi)


def embed_cylinders(T: TransitionSystem, g: DynamicalRelation, n: int, eps: float,
                    bits: int = 0, budget: int = DEFAULT_BUDGET) -> EmbeddedSft:
    """Place depth-n cylinders in closed eps-balls around their centre symbols.

    ``bits`` is the length of the perfection-bit window carried next to the
    letter window; each extra bit doubles every cylinder.
    """
    if not eps > 0:
        raise errors.NonpositiveEpsilon(f"eps must be positive, got {eps}")
    if bits < 0:
        raise errors.ValidationError("bits must be nonnegative")
    space = g.space
    if space.coords is None:
        raise errors.NotEuclideanAmbient("cylinder embedding needs a coordinate ambient")
    if tuple(g.carrier) != tuple(T.symbols):
        raise errors.ValidationError("transition system does not match the source relation")
    n_points = T.word_count(2 * n + 1) * (2 ** bits)
    if n_points > budget:
        raise errors.BudgetExceeded(f"{n_points} cylinder points exceed the budget {budget}")
    words = enumerate_words(T, n, budget)
    bitstrings = list(itertools.product((0, 1), repeat=bits))
    succ = [T.successors(i) for i in range(T.k)]
    pred = [T.predecessors(j) for j in range(T.k)]

    sym = np.asarray(T.symbols)
    if T.k > 1:
        dq = space.pairwise(sym, sym)
        sep = float(dq[~np.eye(T.k, dtype=bool)].min())
        radius = min(float(eps), sep / 4.0)
    else:
        radius = float(eps)

    cylinders = [(w, b) for w in words for b in bitstrings]
    offsets = np.array([_offset(_digits(w, b, n, succ, pred), radius) for w, b in cylinders])
    centres = np.array([w[n] for w, _ in cylinders], dtype=int)
    coords = space.coords[sym[centres]].copy()
    coords[:, 0] += offsets
    ext, index = space.extend(coords)
    if len(set(index.tolist())) != len(cylinders):
        raise errors.ValidationError("cylinder points collide; depth too large for float resolution")

    lookup = {c: int(index[k]) for k, c in enumerate(cylinders)}
    pairs = []
    for (w, b), p in zip(cylinders, index.tolist()):
        tails = [b[1:] + (x,) for x in (0, 1)] if bits else [()]
        for a in succ[w[-1]]:
            w2 = w[1:] + (a,)
            for b2 in tails:
                pairs.append((p, lookup[(w2, b2)]))
    h = DynamicalRelation(ext, pairs)
    source = DynamicalRelation(ext, g.pairs)
    dist, wit = ds_distance(h, source)
    if dist > eps:
        raise errors.CertificateFailure(f"embedded shift is at distance {dist} > eps={eps}")
    return EmbeddedSft(T, n, bits, float(eps), radius, tuple(words), tuple(bitstrings),
                       tuple(cylinders), offsets, index, ext, h, source, dist, wit)


def shift_fiber_profile(E: EmbeddedSft) -> tuple:
    """(largest diameter of h(x), largest diameter of h^-1(x)) over cylinder points."""
    return max_fiber_diameter(E.relation), max_fiber_diameter(inverse(E.relation))
