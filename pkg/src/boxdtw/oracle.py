"""Reference quadratic dynamic programs for DTW and GED, with traceback.

These are the ground truth for everything else in the package, together
with the exhaustive enumerators at the bottom of the module, which evaluate
the defining minimisations directly on tiny inputs.

Matrices are indexed ``M[l][m]`` with ``l`` over A (rows, 0..n) and ``m``
over B (columns, 0..m). Ties in the recurrence prefer the diagonal
predecessor, then the left one ``(l, m-1)``, then the one below
``(l-1, m)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import (
    ABS,
    INF,
    Coupling,
    Metric,
    MonotoneMatching,
    check_inputs,
    infer_arith,
    InputError,
)

__all__ = [
    "DIAG",
    "LEFT",
    "DOWN",
    "DPMatrix",
    "dtw_matrix",
    "ged_matrix",
    "dtw_quadratic",
    "ged_quadratic",
    "dtw_value",
    "ged_value",
    "dtw_bruteforce",
    "ged_bruteforce",
    "all_couplings",
    "all_matchings",
]

NONE, DIAG, LEFT, DOWN = 0, 1, 2, 3
_STEP = {DIAG: (1, 1), LEFT: (0, 1), DOWN: (1, 0)}


@dataclass
class DPMatrix:
    """Full (n+1) x (m+1) value matrix and predecessor tags."""

    values: list
    back: list

    @property
    def shape(self):
        return len(self.values), len(self.values[0])

    def trace(self) -> list[tuple[int, int]]:
        """Cells from (n, m) back to the border, reversed into forward order."""
        l, m = len(self.values) - 1, len(self.values[0]) - 1
        cells = []
        while l > 0 and m > 0:
            cells.append((l, m))
            dl, dm = _STEP[self.back[l][m]]
            l, m = l - dl, m - dm
        cells.append((l, m))
        cells.reverse()
        return cells


def _pick(diag, left, down):
    if diag <= left and diag <= down:
        return diag, DIAG
    if left <= down:
        return left, LEFT
    return down, DOWN


def dtw_matrix(A, B, metric: Metric = ABS, *, stats=None) -> DPMatrix:
    A, B = check_inputs(A, B, metric)
    n, m = len(A), len(B)
    M = [[INF] * (m + 1) for _ in range(n + 1)]
    back = [[NONE] * (m + 1) for _ in range(n + 1)]
    M[0][0] = 0
    for l in range(1, n + 1):
        prev, row, brow, p = M[l - 1], M[l], back[l], A[l - 1]
        for k in range(1, m + 1):
            best, tag = _pick(prev[k - 1], row[k - 1], prev[k])
            row[k] = metric(p, B[k - 1]) + best
            brow[k] = tag
    if stats is not None:
        stats.cell_updates += n * m
    return DPMatrix(M, back)


def ged_matrix(A, B, rho, metric: Metric = ABS, *, stats=None) -> DPMatrix:
    A, B = check_inputs(A, B, metric)
    infer_arith(rho)
    if rho < 0:
        raise InputError("gap penalty rho must be >= 0")
    n, m = len(A), len(B)
    M = [[0] * (m + 1) for _ in range(n + 1)]
    back = [[NONE] * (m + 1) for _ in range(n + 1)]
    for k in range(1, m + 1):
        M[0][k] = rho * k
        back[0][k] = LEFT
    for l in range(1, n + 1):
        M[l][0] = rho * l
        back[l][0] = DOWN
        prev, row, brow, p = M[l - 1], M[l], back[l], A[l - 1]
        for k in range(1, m + 1):
            row[k], brow[k] = _pick(
                prev[k - 1] + metric(p, B[k - 1]), row[k - 1] + rho, prev[k] + rho
            )
    if stats is not None:
        stats.cell_updates += n * m
    return DPMatrix(M, back)


def dtw_value(A, B, metric: Metric = ABS, *, stats=None):
    """DTW distance with two rolling rows (no traceback)."""
    A, B = check_inputs(A, B, metric)
    m = len(B)
    prev = [0] + [INF] * m
    for p in A:
        row = [INF] * (m + 1)
        for k in range(1, m + 1):
            row[k] = metric(p, B[k - 1]) + min(prev[k - 1], row[k - 1], prev[k])
        prev = row
    if stats is not None:
        stats.cell_updates += len(A) * m
    return prev[m]


def ged_value(A, B, rho, metric: Metric = ABS, *, stats=None):
    """Geometric edit distance with two rolling rows (no traceback)."""
    A, B = check_inputs(A, B, metric)
    m = len(B)
    prev = [rho * k for k in range(m + 1)]
    for l, p in enumerate(A, start=1):
        row = [rho * l] + [0] * m
        for k in range(1, m + 1):
            row[k] = min(prev[k - 1] + metric(p, B[k - 1]), row[k - 1] + rho, prev[k] + rho)
        prev = row
    if stats is not None:
        stats.cell_updates += len(A) * m
    return prev[m]


def dtw_quadratic(A, B, metric: Metric = ABS, *, stats=None) -> tuple:
    """DTW distance and an optimal coupling, in O(nm) time and memory."""
    dp = dtw_matrix(A, B, metric, stats=stats)
    cells = dp.trace()
    # the walk ends at the origin (0, 0), which is not part of the coupling
    return dp.values[-1][-1], Coupling(tuple(c for c in cells if c[0] > 0 and c[1] > 0))


def ged_quadratic(A, B, rho, metric: Metric = ABS, *, stats=None) -> tuple:
    """Geometric edit distance and an optimal monotone matching."""
    dp = ged_matrix(A, B, rho, metric, stats=stats)
    n, m = dp.shape
    matched = []
    l, k = n - 1, m - 1
    while l > 0 or k > 0:
        tag = dp.back[l][k]
        if tag == DIAG:
            matched.append((l, k))
        dl, dk = _STEP[tag]
        l, k = l - dl, k - dk
    return dp.values[-1][-1], MonotoneMatching(tuple(matched))


def all_couplings(n: int, m: int):
    """Every coupling between sequences of lengths n and m."""

    def walk(i, j, acc):
        if (i, j) == (n, m):
            yield Coupling(tuple(acc))
            return
        for di, dj in ((1, 1), (0, 1), (1, 0)):
            a, b = i + di, j + dj
            if a <= n and b <= m:
                acc.append((a, b))
                yield from walk(a, b, acc)
                acc.pop()

    yield from walk(1, 1, [(1, 1)])


def all_matchings(n: int, m: int):
    """Every monotone matching between sequences of lengths n and m."""
    for k in range(min(n, m) + 1):
        for rows in itertools.combinations(range(1, n + 1), k):
            for cols in itertools.combinations(range(1, m + 1), k):
                yield MonotoneMatching(tuple(zip(rows, cols)))


def dtw_bruteforce(A, B, metric: Metric = ABS):
    """Minimum coupling cost by exhaustive enumeration (tiny inputs only)."""
    A, B = check_inputs(A, B, metric)
    best, arg = INF, None
    for C in all_couplings(len(A), len(B)):
        cost = sum(metric(A[i - 1], B[j - 1]) for i, j in C.pairs)
        if cost < best:
            best, arg = cost, C
    return best, arg


def ged_bruteforce(A, B, rho, metric: Metric = ABS):
    """Minimum matching cost by exhaustive enumeration (tiny inputs only)."""
    A, B = check_inputs(A, B, metric)
    n, m = len(A), len(B)
    best, arg = INF, None
    for M in all_matchings(n, m):
        cost = sum(metric(A[i - 1], B[j - 1]) for i, j in M.pairs) + rho * (n + m - 2 * len(M))
        if cost < best:
            best, arg = cost, M
    return best, arg
