"""Second stage of the boxed algorithm: DP over box boundaries.

Each box maps the DP values on its L boundary to the values on its R
boundary::

    M[R(w)] = min over admissible u of  M[L(u)] + cost(P*_{u, w})

with the in-box shortest path P*_{u,w} and its cost taken from the
preprocessing in O(1). Minimal pairs do not cross (larger w is served by a
larger or equal u along a path lying above), so the minimisation is done by
divide and conquer over w: solve the median w by a scan, then each half only
needs the u range on its side of the median's optimum.

Boxes on one anti-diagonal are independent, so the engine processes a whole
anti-diagonal at a time with numpy, keeping only the previous diagonal's R
values (plus, for traceback, the chosen u of every box and R position).
The two corner positions R(1) = L(1) and R(2g-1) = L(2g-1) are the same
cells as the corresponding L positions and are copied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import (
    ABS,
    INF,
    Coupling,
    GridCostModel,
    InputError,
    InvariantError,
    Metric,
    MonotoneMatching,
    infer_arith,
)
from .preprocess import Signatures, ValueTables, preprocess, to_scalar
from .staircase import (
    UPRIGHT,
    BoxGrid,
    L_index,
    L_position,
    R_index,
    decompose,
    pair_table,
    path_info,
)

__all__ = [
    "WorkStats",
    "MinimalPair",
    "BoundaryValues",
    "minimal_pairs_dc",
    "box_propagate",
    "boxed_dp",
    "BoxedResult",
    "dtw_subquadratic",
    "ged_subquadratic",
    "evaluation_bound",
]

# tags of the last step into a cell of the final-box patch (same preference
# order as the quadratic programs)
_DIAG, _LEFT, _DOWN = 1, 2, 3


@dataclass
class WorkStats:
    """Deterministic work counters.

    ``cell_updates`` counts evaluations of the quadratic recurrence,
    ``candidate_evaluations`` the (u, w) candidates scanned by the boxed
    minimisation, ``dominance_pairs_reported`` the pairs reported during
    faithful preprocessing. ``monge_violations`` counts failed non-crossing
    checks of selected minimal pairs.
    """

    cell_updates: int = 0
    candidate_evaluations: int = 0
    dominance_pairs_reported: int = 0
    boxes: int = 0
    max_box_evaluations: int = 0
    monge_checks: int = 0
    monge_violations: int = 0

    def work_units(self) -> dict:
        return {
            "cell_updates": self.cell_updates,
            "candidate_evaluations": self.candidate_evaluations,
            "dominance_pairs_reported": self.dominance_pairs_reported,
        }

    def merge(self, other: "WorkStats") -> None:
        self.cell_updates += other.cell_updates
        self.candidate_evaluations += other.candidate_evaluations
        self.dominance_pairs_reported += other.dominance_pairs_reported
        self.boxes += other.boxes
        self.max_box_evaluations = max(self.max_box_evaluations, other.max_box_evaluations)
        self.monge_checks += other.monge_checks
        self.monge_violations += other.monge_violations


def evaluation_bound(g: int, c: int = 4) -> float:
    """Per-box budget c * (4g - 2) * (1 + log2(2g - 1)) for candidate scans."""
    return c * (4 * g - 2) * (1 + math.log2(2 * g - 1))


@dataclass(frozen=True)
class MinimalPair:
    """Best L index ``u`` for R index ``w`` and its cumulative cost."""

    w: int
    u: int
    ccost: object


@dataclass
class BoundaryValues:
    """DP values on a box boundary, ``values[k-1]`` at index k (1..2g-1).

    For R boundaries ``provenance[k-1]`` is ``(u, word)``: the L index and
    path word of the minimal pair, or None at copied corners and
    unreachable positions.
    """

    values: list
    provenance: list = None

    def __getitem__(self, k: int):
        return self.values[k - 1]

    def __len__(self):
        return len(self.values)


# -- scalar reference of the minimisation ------------------------------------


def minimal_pairs_dc(L_range, R_range, lookup, L_values, *, stats=None) -> list:
    """Minimal pair of every w in ``R_range`` by Monge divide and conquer.

    ``lookup(u, w)`` returns the cost of the stored path of (u, w), or None
    if the pair is not admissible; ``L_values[u]`` is M at L(u). The median
    w is solved by a scan over its u range; the lower half of R then scans
    only u up to the median's optimum and the upper half only from it. If
    the median is unreachable both halves keep the full range. Ties go to
    the smaller u.
    """
    L_range, R_range = list(L_range), list(R_range)
    result = {}
    evaluations = 0

    def scan(w, lo, hi):
        nonlocal evaluations
        best, arg = INF, 0
        for u in L_range:
            if u < lo or u > hi:
                continue
            c = lookup(u, w)
            if c is None:
                continue
            evaluations += 1
            val = L_values[u] + c
            if val < best:
                best, arg = val, u
        return best, arg

    def solve(a, b, lo, hi):
        if a > b:
            return
        mid = (a + b) // 2
        w = R_range[mid]
        best, arg = scan(w, lo, hi)
        result[w] = MinimalPair(w, arg, best)
        if best == INF:
            solve(a, mid - 1, lo, hi)
            solve(mid + 1, b, lo, hi)
        else:
            solve(a, mid - 1, lo, arg)
            solve(mid + 1, b, arg, hi)

    if L_range:
        solve(0, len(R_range) - 1, min(L_range), max(L_range))
    if stats is not None:
        stats.candidate_evaluations += evaluations
        stats.max_box_evaluations = max(stats.max_box_evaluations, evaluations)
    return [result.get(w, MinimalPair(w, 0, INF)) for w in R_range]


def box_propagate(
    i: int,
    j: int,
    L_values: BoundaryValues,
    signatures: Signatures,
    tables: ValueTables,
    model: GridCostModel,
    *,
    stats=None,
) -> BoundaryValues:
    """R boundary of box (i, j) from its L boundary."""
    g = signatures.g
    s_rows, s_cols = signatures.shape
    if not (1 <= i <= s_rows and 1 <= j <= s_cols):
        raise InputError(f"box ({i}, {j}) has no signature")
    if len(L_values) != 2 * g - 1:
        raise InputError("L boundary must have 2g - 1 entries")
    sid = signatures.signature_id(i, j)
    costs = tables.box_costs(np.array([sid]), [i - 1], [j - 1])[0]
    table = pair_table(g)

    def lookup(u, w):
        p = table[u][w]
        return None if p < 0 else costs[p]

    Lv = {u: L_values[u] for u in range(1, 2 * g)}
    pairs = minimal_pairs_dc(range(1, 2 * g), range(2, 2 * g - 1), lookup, Lv, stats=stats)
    values = [None] * (2 * g - 1)
    prov = [None] * (2 * g - 1)
    values[0], values[-1] = L_values[1], L_values[2 * g - 1]
    for mp in pairs:
        values[mp.w - 1] = to_scalar(mp.ccost, tables.arith) if mp.ccost != INF else INF
        if mp.u:
            prov[mp.w - 1] = (mp.u, int(signatures.paths[sid, table[mp.u][mp.w]]))
    if stats is not None:
        stats.boxes += 1
    return BoundaryValues(values, prov)


# -- vectorised engine --------------------------------------------------------


@dataclass
class BoxedResult:
    """Value at (n, m) and, with traceback, the global path as (cell, move)
    steps; ``move`` is the step into ``cell`` (0 for the path's first cell)."""

    value: object
    steps: list = field(default=None)


def _border_values(model: GridCostModel, r: np.ndarray, c: np.ndarray, dtype) -> np.ndarray:
    if model.is_ged:
        return (r + c).astype(dtype) * np.array(model.rho, dtype=dtype)
    origin = (r == 0) & (c == 0)
    out = np.empty(r.shape, dtype=dtype)
    out[...] = INF
    out[origin] = 0
    return out


class _Engine:
    def __init__(self, grid, model, sigs, tables, stats, traceback, check_monge, compiled=True):
        self.grid, self.model, self.sigs, self.tables = grid, model, sigs, tables
        self.compiled = compiled
        self.g = g = grid.g
        self.dtype = grid.working_dtype(model.rho)
        self.stats = stats
        self.check_monge = check_monge
        self.table = np.array(pair_table(g), dtype=np.int64)
        self.prov = np.zeros((grid.s_rows, grid.s_cols, 2 * g), np.int8) if traceback else None
        if check_monge:
            self._profiles()

    def _run_compiled(self):
        g, t = self.g, self.tables
        keep = self.prov is not None
        prov = self.prov if keep else np.zeros((1, 1, 2 * g), np.int8)
        if self.check_monge:
            low, high = self.low, self.high
        else:
            low = high = np.zeros((1, 1, g), np.int8)
        L, R, total, max_evals, checks, bad = _boxed_kernel(
            g, np.ascontiguousarray(self.sigs.box, dtype=np.int64),
            t.V_row, t.V_col, t.rk.astype(np.int64), t.ck.astype(np.int64),
            t.rowmask, t.colmask, t.row_pad_bits, t.col_pad_bits, self.table,
            self.model.is_ged, float(self.model.rho), bool(self.check_monge),
            low, high, prov, keep,
        )
        if self.stats is not None:
            st = self.stats
            st.candidate_evaluations += int(total)
            st.max_box_evaluations = max(st.max_box_evaluations, int(max_evals))
            st.boxes += self.sigs.box.size
            st.monge_checks += int(checks)
            st.monge_violations += int(bad)
        if bad and self.check_monge == "raise":
            raise InvariantError(f"minimal pairs cross in {bad} box(es)")
        return L, R

    def _profiles(self):
        g, sigs = self.g, self.sigs
        uw, inv = np.unique(sigs.paths, return_inverse=True)
        low = np.array([path_info(g, int(w)).low for w in uw], dtype=np.int8)
        high = np.array([path_info(g, int(w)).high for w in uw], dtype=np.int8)
        inv = inv.reshape(sigs.paths.shape)
        self.low, self.high = low[inv], high[inv]  # (nsig, npairs, g)

    # one anti-diagonal of boxes
    def _boundary(self, ii, jj, prev):
        """L values (nbox, 2g) for boxes (ii+1, jj+1); ``prev[i]`` holds the R
        values of the previous anti-diagonal's box in row group i."""
        g, nb = self.g, len(ii)
        L = np.empty((nb, 2 * g), dtype=self.dtype)
        L[:, 0] = INF
        base_r = ii * (g - 1)
        base_c = jj * (g - 1)
        for k in range(1, 2 * g):
            l, m = L_position(g, k)
            r, c = base_r + l - 1, base_c + m - 1
            on_border = (r == 0) | (c == 0)
            if k <= g:
                src_rows, src_k = ii - 1, (g + k - 1) if k < g else 2 * g - 1
            else:
                src_rows, src_k = ii, k - g + 1
            vals = np.empty(nb, dtype=self.dtype)
            inner = ~on_border
            if inner.any():
                vals[inner] = prev[src_rows[inner], src_k]
            if on_border.any():
                vals[on_border] = _border_values(self.model, r[on_border], c[on_border], self.dtype)
            L[:, k] = vals
        return L

    def _propagate(self, ii, jj, L):
        g, nb = self.g, len(ii)
        sids = self.sigs.box[ii, jj]
        costs = self.tables.box_costs(sids, ii, jj)
        R = np.empty((nb, 2 * g), dtype=self.dtype)
        R[:, 0] = INF
        R[:, 1] = L[:, 1]
        R[:, 2 * g - 1] = L[:, 2 * g - 1]
        ubest = np.zeros((nb, 2 * g), np.int64)
        evals = np.zeros(nb, np.int64)
        table = self.table

        def solve(a, b, lo, hi):
            if a > b:
                return
            w = (a + b) // 2
            best = np.empty(nb, dtype=self.dtype)
            best[:] = INF
            arg = np.zeros(nb, np.int64)
            for u in range(1, 2 * g):
                p = table[u, w]
                if p < 0:
                    continue
                live = (lo <= u) & (u <= hi)
                if not live.any():
                    continue
                evals[live] += 1
                val = L[:, u] + costs[:, p]
                take = live & np.asarray(val < best, dtype=bool)
                best[take] = val[take]
                arg[take] = u
            R[:, w] = best
            ubest[:, w] = arg
            found = arg > 0
            solve(a, w - 1, lo, np.where(found, arg, hi))
            solve(w + 1, b, np.where(found, arg, lo), hi)

        solve(2, 2 * g - 2, np.ones(nb, np.int64), np.full(nb, 2 * g - 1))
        if self.stats is not None:
            st = self.stats
            st.candidate_evaluations += int(evals.sum())
            st.max_box_evaluations = max(st.max_box_evaluations, int(evals.max()))
            st.boxes += nb
        if self.check_monge:
            self._monge(sids, ubest)
        if self.prov is not None:
            self.prov[ii, jj] = ubest
        return R

    def _monge(self, sids, ubest):
        """Selected minimal pairs must not cross: for consecutive reachable
        w < w2, u(w) <= u(w2) and, in every column both paths visit, the
        path of w2 lies weakly above that of w (lowest and highest rows)."""
        g, nb = self.g, len(sids)
        table = self.table
        last_u = np.zeros(nb, np.int64)
        last_p = np.zeros(nb, np.int64)
        bad = np.zeros(nb, bool)
        checks = 0
        for w in range(2, 2 * g - 1):
            u = ubest[:, w]
            cur = u > 0
            p = np.where(cur, table[np.maximum(u, 1), w], 0)
            both = cur & (last_u > 0)
            if both.any():
                checks += int(both.sum())
                lo1, hi1 = self.low[sids, last_p], self.high[sids, last_p]
                lo2, hi2 = self.low[sids, p], self.high[sids, p]
                shared = (lo1 > 0) & (lo2 > 0)
                crossing = shared & ((lo2 < lo1) | (hi2 < hi1))
                bad |= both & ((u < last_u) | crossing.any(axis=1))
            last_u = np.where(cur, u, last_u)
            last_p = np.where(cur, p, last_p)
        nbad = int(bad.sum())
        if self.stats is not None:
            self.stats.monge_checks += checks
            self.stats.monge_violations += nbad
        if nbad and self.check_monge == "raise":
            raise InvariantError(f"minimal pairs cross in {nbad} box(es)")

    def run(self):
        if self.dtype == np.float64 and self.compiled:
            return self._run_compiled()
        grid, g = self.grid, self.g
        s_rows, s_cols = grid.s_rows, grid.s_cols
        prev = np.empty((s_rows, 2 * g), dtype=self.dtype)
        last_L = None
        for t in range(s_rows + s_cols - 1):
            ii = np.arange(max(0, t - s_cols + 1), min(s_rows, t + 1))
            jj = t - ii
            L = self._boundary(ii, jj, prev)
            R = self._propagate(ii, jj, L)
            cur = np.empty_like(prev)
            cur[ii] = R
            prev = cur
            if t == s_rows + s_cols - 2:
                last_L, last_R = L[0], R[0]
        return last_L, last_R


@numba.njit(cache=True)
def _boxed_kernel(
    g, box, V_row, V_col, rk, ck, rowmask, colmask, rpad, cpad, table,
    is_ged, rho, check, low, high, prov, keep_prov,
):
    """Compiled twin of :class:`_Engine` for float64 tables, row-major.

    Candidate costs are read from the tables on demand inside the scan.
    Returns the last box's L and R values and the work counters.
    """
    s_rows, s_cols = box.shape
    W = 2 * g
    prev_R = np.full((s_cols, W), np.inf)
    cur_R = np.full((s_cols, W), np.inf)
    L = np.empty(W)
    R = np.empty(W)
    last_L = np.empty(W)
    last_R = np.empty(W)
    ubest = np.zeros(W, np.int64)
    stack = np.zeros((4 * W, 4), np.int64)
    total = 0
    max_evals = 0
    checks = 0
    bad = 0
    for i in range(s_rows):
        for j in range(s_cols):
            for k in range(1, W):
                if k <= g:
                    l, m = 1, g - k + 1
                else:
                    l, m = k - g + 1, 1
                r = i * (g - 1) + l - 1
                c = j * (g - 1) + m - 1
                if r == 0 or c == 0:
                    if is_ged:
                        L[k] = (r + c) * rho
                    elif r == 0 and c == 0:
                        L[k] = 0.0
                    else:
                        L[k] = np.inf
                elif k < g:
                    L[k] = prev_R[j, g + k - 1]
                elif k == g:
                    L[k] = prev_R[j, W - 1]
                else:
                    L[k] = cur_R[j - 1, k - g + 1]
            sid = box[i, j]
            R[0] = np.inf
            R[1] = L[1]
            R[W - 1] = L[W - 1]
            ubest[:] = 0
            evals = 0
            top = 0
            stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 2, W - 2, 1, W - 1
            top = 1
            while top > 0:
                top -= 1
                a, b, lo, hi = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3]
                if a > b:
                    continue
                w = (a + b) // 2
                best = np.inf
                arg = 0
                for u in range(lo, hi + 1):
                    p = table[u, w]
                    if p < 0:
                        continue
                    evals += 1
                    if (rowmask[sid, p] & rpad[i]) or (colmask[sid, p] & cpad[j]):
                        continue
                    val = L[u] + (V_row[rk[sid, p], i] - V_col[ck[sid, p], j])
                    if val < best:
                        best = val
                        arg = u
                R[w] = best
                ubest[w] = arg
                split_lo = arg if arg > 0 else hi
                split_hi = arg if arg > 0 else lo
                stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = a, w - 1, lo, split_lo
                stack[top + 1, 0], stack[top + 1, 1], stack[top + 1, 2], stack[top + 1, 3] = w + 1, b, split_hi, hi
                top += 2
            total += evals
            if evals > max_evals:
                max_evals = evals
            if check:
                last_u = 0
                last_p = 0
                crossed = False
                for w in range(2, W - 1):
                    u = ubest[w]
                    if u == 0:
                        continue
                    p = table[u, w]
                    if last_u > 0:
                        checks += 1
                        if u < last_u:
                            crossed = True
                        for col in range(g):
                            lo1, lo2 = low[sid, last_p, col], low[sid, p, col]
                            if lo1 > 0 and lo2 > 0:
                                if lo2 < lo1 or high[sid, p, col] < high[sid, last_p, col]:
                                    crossed = True
                    last_u = u
                    last_p = p
                if crossed:
                    bad += 1
            for k in range(W):
                cur_R[j, k] = R[k]
                if keep_prov:
                    prov[i, j, k] = ubest[k]
            if i == s_rows - 1 and j == s_cols - 1:
                last_L[:] = L
                last_R[:] = R
        prev_R, cur_R = cur_R, prev_R
    return last_L, last_R, total, max_evals, checks, bad


def _patch(grid: BoxGrid, model: GridCostModel, L, lt: int, mt: int, stats):
    """Plain DP inside the last box up to local (lt, mt) from its L values."""
    g = grid.g
    i, j = grid.s_rows, grid.s_cols
    val = {}
    back = {}
    for l in range(1, lt + 1):
        for m in range(1, mt + 1):
            if l == 1 or m == 1:
                val[l, m] = L[L_index(g, (l, m))]
                continue
            d = model.metric(grid.A[grid.global_row(i, l) - 1], grid.B[grid.global_col(j, m) - 1])
            diag, left, down = val[l - 1, m - 1], val[l, m - 1], val[l - 1, m]
            if model.is_ged:
                cands = ((diag + d, _DIAG), (left + model.rho, _LEFT), (down + model.rho, _DOWN))
            else:
                cands = ((diag + d, _DIAG), (left + d, _LEFT), (down + d, _DOWN))
            best, tag = cands[0]
            for v, t in cands[1:]:
                if v < best:
                    best, tag = v, t
            val[l, m], back[l, m] = best, tag
    if stats is not None:
        stats.cell_updates += (lt - 1) * (mt - 1)
    return val, back


def boxed_dp(
    grid: BoxGrid,
    model: GridCostModel,
    signatures: Signatures,
    tables: ValueTables,
    *,
    traceback: bool = True,
    stats: WorkStats | None = None,
    check_monge="raise",
    compiled: bool = True,
) -> BoxedResult:
    """Run the boundary DP over all boxes and read off M[n, m].

    float64 problems use the compiled row-major kernel unless ``compiled``
    is False; exact (object) arithmetic always uses the numpy wavefront.
    """
    g = grid.g
    engine = _Engine(grid, model, signatures, tables, stats, traceback, check_monge, compiled)
    L, R = engine.run()
    i, j, lt, mt = grid.target()
    arith = infer_arith(*grid.A.scalars(), *grid.B.scalars(), model.rho)
    w = R_index(g, (lt, mt))
    if w:
        value = R[w]
        patch = None
    else:
        Lvals = {k: L[k] for k in range(1, 2 * g)}
        val, back = _patch(grid, model, Lvals, lt, mt, stats)
        value = val[lt, mt]
        patch = back
    value = to_scalar(value, arith)
    if not traceback:
        return BoxedResult(value)
    if value == INF:
        raise InvariantError("target cell is unreachable")
    steps = _trace(grid, signatures, engine.prov, (i, j, lt, mt), w, patch)
    return BoxedResult(value, steps)


def _trace(grid, sigs, prov, target, w, patch):
    g = grid.g
    table = pair_table(g)
    i, j, lt, mt = target
    steps = []  # reversed (global cell, move into it)

    def glob(i, j, l, m):
        return grid.global_row(i, l), grid.global_col(j, m)

    if w:
        state = ("R", i, j, w)
    else:
        l, m = lt, mt
        while l > 1 and m > 1:
            tag = patch[l, m]
            move = {_DIAG: UPRIGHT, _LEFT: 2, _DOWN: 1}[tag]
            steps.append((glob(i, j, l, m), move))
            if tag == _DIAG:
                l, m = l - 1, m - 1
            elif tag == _LEFT:
                m -= 1
            else:
                l -= 1
        state = ("L", i, j, L_index(g, (l, m)))

    while True:
        kind, i, j, k = state
        if kind == "R":
            if k == 1 or k == 2 * g - 1:
                state = ("L", i, j, k)
                continue
            u = int(prov[i - 1, j - 1, k])
            if u <= 0:
                raise InvariantError(f"no provenance for R({k}) of box ({i}, {j})")
            word = int(sigs.paths[sigs.box[i - 1, j - 1], table[u][k]])
            info = path_info(g, word)
            for mv, (l, m) in zip(reversed(info.moves), reversed(info.cells)):
                steps.append((glob(i, j, l, m), mv))
            state = ("L", i, j, u)
            continue
        l, m = L_position(g, k)
        r, c = glob(i, j, l, m)
        if r == 0 or c == 0:
            steps.append(((r, c), 0))
            break
        if k < g:
            state = ("R", i - 1, j, g + k - 1)
        elif k == g:
            state = ("R", i - 1, j, 2 * g - 1)
        else:
            state = ("R", i, j - 1, k - g + 1)
    steps.reverse()
    return steps


# -- public entry points ------------------------------------------------------


def _run(A, B, g, model, *, mode, traceback, stats, check_monge, prepared):
    grid = decompose(A, B, g)
    if model.metric.dim != grid.dim:
        raise InputError(
            f"metric dimension {model.metric.dim} does not match sequence dimension {grid.dim}"
        )
    if prepared is None:
        sigs, tables = preprocess(grid, model, mode, stats=stats)
    else:
        sigs, tables = prepared
    return boxed_dp(grid, model, sigs, tables, traceback=traceback, stats=stats, check_monge=check_monge)


def dtw_subquadratic(
    A,
    B,
    g: int,
    *,
    metric: Metric = ABS,
    mode: str = "direct",
    traceback: bool = True,
    stats: WorkStats | None = None,
    check_monge="raise",
    prepared=None,
):
    """DTW distance and an optimal coupling by the boxed algorithm.

    ``check_monge`` is ``"raise"`` (abort on a crossing of minimal pairs),
    ``"count"`` (only count them in ``stats``) or False. ``prepared`` may
    carry ``(signatures, tables)`` from an earlier preprocessing run.
    """
    model = GridCostModel.dtw(metric)
    res = _run(A, B, g, model, mode=mode, traceback=traceback, stats=stats,
               check_monge=check_monge, prepared=prepared)
    if not traceback:
        return res.value, None
    cells = [cell for cell, _ in res.steps if cell[0] > 0 and cell[1] > 0]
    return res.value, Coupling(tuple(cells))


def ged_subquadratic(
    A,
    B,
    rho,
    g: int,
    *,
    metric: Metric = ABS,
    mode: str = "direct",
    traceback: bool = True,
    stats: WorkStats | None = None,
    check_monge="raise",
    prepared=None,
):
    """Geometric edit distance and an optimal monotone matching by the boxed
    algorithm; the matching is the set of cells entered diagonally."""
    model = GridCostModel.ged(rho, metric)
    res = _run(A, B, g, model, mode=mode, traceback=traceback, stats=stats,
               check_monge=check_monge, prepared=prepared)
    if not traceback:
        return res.value, None
    matched = [cell for cell, mv in res.steps if mv == UPRIGHT]
    return res.value, MonotoneMatching(tuple(matched))
