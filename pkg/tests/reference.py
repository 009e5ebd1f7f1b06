"""Independent reference computations for the test suite.

Nothing here imports the package's algorithms: the distances are evaluated
straight from their definitions (enumeration of couplings / matchings, or a
plain full-matrix recurrence) so that tests never check the package against
itself.
"""

from __future__ import annotations

import itertools
import math
import random


def dist(p, q, kind="abs1d"):
    p = p if isinstance(p, tuple) else (p,)
    q = q if isinstance(q, tuple) else (q,)
    diffs = [abs(a - b) for a, b in zip(p, q)]
    return max(diffs) if kind == "linf" else sum(diffs)


def couplings(n, m):
    """All couplings as tuples of 1-based pairs, by recursion on the last step."""
    if n == 1 and m == 1:
        return [((1, 1),)]
    out = []
    for dn, dm in ((1, 0), (0, 1), (1, 1)):
        if n - dn >= 1 and m - dm >= 1:
            out.extend(c + ((n, m),) for c in couplings(n - dn, m - dm))
    return out


def matchings(n, m):
    """All monotone matchings: choose k rows and k columns, pair them in order."""
    for k in range(min(n, m) + 1):
        for rows in itertools.combinations(range(1, n + 1), k):
            for cols in itertools.combinations(range(1, m + 1), k):
                yield tuple(zip(rows, cols))


def dtw_brute(A, B, kind="abs1d"):
    return min(
        sum(dist(A[i - 1], B[j - 1], kind) for i, j in C) for C in couplings(len(A), len(B))
    )


def ged_brute(A, B, rho, kind="abs1d"):
    n, m = len(A), len(B)
    return min(
        sum(dist(A[i - 1], B[j - 1], kind) for i, j in M) + rho * (n + m - 2 * len(M))
        for M in matchings(n, m)
    )


def dp_matrix(A, B, rho=None, kind="abs1d"):
    """Full DP matrix; DTW when ``rho`` is None, GED otherwise."""
    n, m = len(A), len(B)
    M = [[math.inf] * (m + 1) for _ in range(n + 1)]
    for l in range(n + 1):
        for k in range(m + 1):
            if l == 0 or k == 0:
                if rho is None:
                    M[l][k] = 0 if l == k == 0 else math.inf
                else:
                    M[l][k] = rho * (l + k)
                continue
            d = dist(A[l - 1], B[k - 1], kind)
            if rho is None:
                M[l][k] = d + min(M[l - 1][k - 1], M[l - 1][k], M[l][k - 1])
            else:
                M[l][k] = min(M[l - 1][k - 1] + d, M[l - 1][k] + rho, M[l][k - 1] + rho)
    return M


def box_paths(g, start, ends):
    """All monotone move sequences inside a g x g box from ``start`` that
    end on a cell of ``ends``, with that end cell (1 = up, 2 = right,
    3 = up-right). A path may run through other cells of ``ends`` first."""
    out = []

    def walk(pos, moves):
        for mv, (dl, dm) in ((1, (1, 0)), (2, (0, 1)), (3, (1, 1))):
            nxt = (pos[0] + dl, pos[1] + dm)
            if nxt[0] > g or nxt[1] > g:
                continue
            if nxt in ends:
                out.append((moves + (mv,), nxt))
            walk(nxt, moves + (mv,))

    walk(start, ())
    return out


def random_instance(rng: random.Random, n_max, lo=-(10**6), hi=10**6, dim=1, n_min=1):
    n, m = rng.randint(n_min, n_max), rng.randint(n_min, n_max)

    def point():
        if dim == 1:
            return rng.randint(lo, hi)
        return tuple(rng.randint(lo, hi) for _ in range(dim))

    return [point() for _ in range(n)], [point() for _ in range(m)]


def r_positions(g):
    """Cells of the right column and top row of a g x g box."""
    return {(k, g) for k in range(1, g + 1)} | {(g, k) for k in range(1, g + 1)}


def local_dist(A, B, g, i, j, l, m, kind="abs1d"):
    """D_ij(l, m) straight from the sequences; padded cells are infinite."""
    r = (i - 1) * (g - 1) + l - 1
    c = (j - 1) * (g - 1) + m - 1
    if r == 0 or c == 0 or r > len(A) or c > len(B):
        return math.inf
    return dist(A[r - 1], B[c - 1], kind)


def box_cost(A, B, g, i, j, start, moves, rho=None, kind="abs1d"):
    """Start-exclusive cost of a move sequence in box (i, j); GED when
    ``rho`` is given (gap moves cost rho, diagonal moves the distance)."""
    delta = {1: (1, 0), 2: (0, 1), 3: (1, 1)}
    l, m = start
    total = 0
    for mv in moves:
        l, m = l + delta[mv][0], m + delta[mv][1]
        d = local_dist(A, B, g, i, j, l, m, kind)
        if d == math.inf:
            return math.inf
        total += rho if (rho is not None and mv != 3) else d
    return total
