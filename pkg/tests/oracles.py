"""Independent brute-force references written in plain Python (no package code)."""

import itertools
import math


def d2(d, p, q):
    return max(d[p[0]][q[0]], d[p[1]][q[1]])


def ds(d, f, g):
    """Max-min Hausdorff distance between two pair lists under the max product metric."""
    fwd = max(min(d2(d, p, q) for q in g) for p in f)
    bwd = max(min(d2(d, q, p) for p in f) for q in g)
    return max(fwd, bwd)


def hausdorff(d, X, Y):
    return max(max(min(d[x][y] for y in Y) for x in X), max(min(d[x][y] for x in X) for y in Y))


def line_metric(xs):
    return [[abs(a - b) for b in xs] for a in xs]


def bottleneck(D):
    n = len(D)
    return min(max(D[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def am(dx, fx, dy, fy):
    """C0 Gromov-Hausdorff distance of maps fx on range(len(dx)) and fy on range(len(dy))."""
    def side(da, fa, db, fb):
        m, n = len(da), len(db)
        best = math.inf
        for phi in itertools.product(range(n), repeat=m):
            dis = max(abs(db[phi[i]][phi[j]] - da[i][j]) for i in range(m) for j in range(m))
            cov = max(min(db[y][phi[i]] for i in range(m)) for y in range(n))
            c0 = max(db[fb[phi[i]]][phi[fa[i]]] for i in range(m))
            best = min(best, max(dis, cov, c0))
        return best
    return max(side(dx, fx, dy, fy), side(dy, fy, dx, fx))


def correspondence_distortion(dx, dy):
    """Half of the least distortion over all correspondences (small sizes only)."""
    cells = [(a, b) for a in range(len(dx)) for b in range(len(dy))]
    best = math.inf
    for mask in range(1, 1 << len(cells)):
        R = [cells[i] for i in range(len(cells)) if mask >> i & 1]
        if {a for a, _ in R} != set(range(len(dx))) or {b for _, b in R} != set(range(len(dy))):
            continue
        best = min(best, max(abs(dx[a][c] - dy[b][e]) for a, b in R for c, e in R))
    return best / 2
