"""Box decomposition of the DP grid and staircase-path machinery.

Local box coordinates are ``(l, m)`` with ``1 <= l, m <= g``; ``l`` indexes
the A side (rows, bottom to top) and ``m`` the B side (columns, left to
right). Box ``(i, j)`` (1-based) covers global DP rows
``(i-1)(g-1) .. i(g-1)`` and columns ``(j-1)(g-1) .. j(g-1)``, so
``M_ij[l, m] = M[(i-1)(g-1) + l - 1, (j-1)(g-1) + m - 1]`` and neighbouring
boxes share one row or column. Global row 0 / column 0 (the DP border) and
rows/columns past the end of a sequence are *padded*: entering a padded cell
costs infinity.

Boundary positions are numbered from 1. ``L`` runs clockwise from the
bottom-right corner ``(1, g)`` along the bottom row and up the left column to
``(g, 1)``; ``R`` runs counterclockwise from ``(1, g)`` up the right column
and along the top row to ``(g, 1)``.

A staircase path is stored as one integer word: the start's L index in the
high bits, followed by ``2g - 1`` two-bit move slots, first move most
significant, unused slots zero. Move codes are ``UP = 1 < RIGHT = 2 <
UPRIGHT = 3``, so integer order on words is the lexicographic enumeration
order (start index, then move sequence).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import (
    INF,
    Arith,
    ConfigError,
    GridCostModel,
    InputError,
    InvariantError,
    Metric,
    MetricKind,
    PointSequence,
    as_sequence,
    infer_arith,
)

__all__ = [
    "G_MAX",
    "UP",
    "RIGHT",
    "UPRIGHT",
    "MOVES",
    "DELTA",
    "L_position",
    "R_position",
    "L_index",
    "R_index",
    "word_bits",
    "pack",
    "unpack",
    "StaircasePath",
    "iter_paths",
    "enumerate_paths",
    "count_paths",
    "verify_codec",
    "admissible_pairs",
    "pair_table",
    "paths_by_pair",
    "smallest_path_word",
    "BoxGrid",
    "decompose",
    "path_cost",
    "SignAssignment",
    "sign_assignment",
    "BoxSignature",
    "shortest_paths_direct",
    "shortest_paths_batch",
    "box_arrays",
    "signs_from_diff",
    "path_info",
]

G_MAX = 13

UP, RIGHT, UPRIGHT = 1, 2, 3
MOVES = (UP, RIGHT, UPRIGHT)
DELTA = {UP: (1, 0), RIGHT: (0, 1), UPRIGHT: (1, 1)}
_MOVE_NAMES = {UP: "U", RIGHT: "R", UPRIGHT: "D"}


def _check_g(g: int) -> None:
    if not isinstance(g, (int, np.integer)) or not 2 <= g <= G_MAX:
        raise ConfigError(f"box side g must be an integer in [2, {G_MAX}], got {g!r}")


# -- boundary numbering -------------------------------------------------------


def L_position(g: int, k: int) -> tuple[int, int]:
    if not 1 <= k <= 2 * g - 1:
        raise InputError(f"L index {k} out of range for g={g}")
    return (1, g - k + 1) if k <= g else (k - g + 1, 1)


def R_position(g: int, k: int) -> tuple[int, int]:
    if not 1 <= k <= 2 * g - 1:
        raise InputError(f"R index {k} out of range for g={g}")
    return (k, g) if k <= g else (g, 2 * g - k)


def L_index(g: int, pos) -> int:
    """L index of a local position, 0 if the position is not on L."""
    l, m = pos
    if l == 1 and 1 <= m <= g:
        return g - m + 1
    if m == 1 and 1 <= l <= g:
        return l + g - 1
    return 0


def R_index(g: int, pos) -> int:
    """R index of a local position, 0 if the position is not on R."""
    l, m = pos
    if m == g and 1 <= l <= g:
        return l
    if l == g and 1 <= m <= g:
        return 2 * g - m
    return 0


# -- word codec ---------------------------------------------------------------


def start_bits(g: int) -> int:
    return 2 * math.ceil(math.log2(2 * g - 1))


def word_bits(g: int) -> int:
    """Bits reserved for one packed path: start field plus 2g-1 move slots."""
    return start_bits(g) + 2 * (2 * g - 1)


def _pack_kernel(g, start, moves, nmoves):
    slots = 2 * g - 1
    word = start
    for t in range(slots):
        word = word << 2
        if t < nmoves:
            word = word | moves[t]
    return word


def _unpack_kernel(g, word, out):
    slots = 2 * g - 1
    n = 0
    for t in range(slots):
        code = (word >> (2 * (slots - 1 - t))) & 3
        if code == 0:
            break
        out[t] = code
        n += 1
    return word >> (2 * slots), n


def pack(g: int, start: int, moves) -> int:
    moves = tuple(moves)
    if len(moves) > 2 * g - 1:
        raise InputError("too many moves for box side")
    return _pack_kernel(g, start, moves, len(moves))


def unpack(g: int, word: int) -> tuple[int, tuple]:
    word = int(word)
    if word < 0 or word >> word_bits(g):
        raise InputError(f"word {word:#x} does not fit the layout for g={g}")
    out = [0] * (2 * g - 1)
    start, n = _unpack_kernel(g, word, out)
    if not 1 <= start <= 2 * g - 1:
        raise InputError(f"word {word:#x} has start index {start} outside [1, {2 * g - 1}]")
    if word & ((1 << 2 * (2 * g - 1 - n)) - 1):
        raise InputError(f"word {word:#x} has moves after the terminator")
    return start, tuple(out[:n])


@dataclass(frozen=True)
class StaircasePath:
    """Monotone path inside a g x g box from an L position to an R position."""

    g: int
    start: int
    moves: tuple

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(int(mv) for mv in self.moves))
        _check_g(self.g)
        if not self.moves:
            raise InputError("a staircase path needs at least one move")
        if any(mv not in DELTA for mv in self.moves):
            raise InputError(f"invalid move code in {self.moves}")
        pos = self.positions
        if any(not (1 <= l <= self.g and 1 <= m <= self.g) for l, m in pos):
            raise InputError("path leaves the box")
        if not R_index(self.g, pos[-1]):
            raise InputError(f"path ends at {pos[-1]}, which is not on R")

    @classmethod
    def from_word(cls, g: int, word: int) -> "StaircasePath":
        start, moves = unpack(g, word)
        return cls(g, start, moves)

    @functools.cached_property
    def positions(self) -> tuple:
        l, m = L_position(self.g, self.start)
        cells = [(l, m)]
        for mv in self.moves:
            dl, dm = DELTA[mv]
            l, m = l + dl, m + dm
            cells.append((l, m))
        return tuple(cells)

    @property
    def end(self) -> tuple:
        return self.positions[-1]

    @property
    def end_index(self) -> int:
        return R_index(self.g, self.end)

    @property
    def word(self) -> int:
        return pack(self.g, self.start, self.moves)

    encode = word

    def __str__(self):
        return f"L{self.start}:" + "".join(_MOVE_NAMES[mv] for mv in self.moves)


def iter_paths(g: int):
    """All staircase paths of a g x g box in enumeration (= word) order."""
    _check_g(g)
    for k in range(1, 2 * g):
        l0, m0 = L_position(g, k)
        stack = [(l0, m0, ())]
        # explicit DFS; children pushed in reverse so UP is expanded first
        while stack:
            l, m, moves = stack.pop()
            if moves and (l == g or m == g):
                yield StaircasePath(g, k, moves)
            for mv in (UPRIGHT, RIGHT, UP):
                dl, dm = DELTA[mv]
                if l + dl <= g and m + dm <= g:
                    stack.append((l + dl, m + dm, moves + (mv,)))


@functools.lru_cache(maxsize=None)
def enumerate_paths(g: int) -> tuple:
    """Materialised :func:`iter_paths`; practical for g up to about 8."""
    return tuple(iter_paths(g))


def count_paths(g: int) -> int:
    """Number of staircase paths, by dynamic programming over end cells."""
    _check_g(g)

    @functools.lru_cache(maxsize=None)
    def ends_from(l, m):
        total = 0
        for dl, dm in DELTA.values():
            a, b = l + dl, m + dm
            if a <= g and b <= g:
                total += ends_from(a, b) + (a == g or b == g)
        return total

    return sum(ends_from(*L_position(g, k)) for k in range(1, 2 * g))


def _codec_walk(g, pack_fn, unpack_fn):
    """Enumerate every path in order, round-tripping each through the codec.

    Returns (count, mismatches, max_word, order_violations). Written with
    plain integer arrays so that it can be compiled by numba.
    """
    slots = 2 * g - 1
    moves = np.zeros(slots, np.int64)
    decoded = np.zeros(slots, np.int64)
    ls = np.zeros(slots + 1, np.int64)
    ms = np.zeros(slots + 1, np.int64)
    nxt = np.zeros(slots + 1, np.int64)
    count = 0
    bad = 0
    max_word = 0
    unordered = 0
    prev = -1
    for k in range(1, 2 * g):
        if k <= g:
            ls[0] = 1
            ms[0] = g - k + 1
        else:
            ls[0] = k - g + 1
            ms[0] = 1
        depth = 0
        nxt[0] = 1
        while depth >= 0:
            mv = nxt[depth]
            if mv > 3:
                depth -= 1
                continue
            nxt[depth] = mv + 1
            dl = 1 if mv != 2 else 0
            dm = 1 if mv != 1 else 0
            l = ls[depth] + dl
            m = ms[depth] + dm
            if l > g or m > g:
                continue
            moves[depth] = mv
            depth += 1
            ls[depth] = l
            ms[depth] = m
            nxt[depth] = 1
            if l == g or m == g:
                word = pack_fn(g, k, moves, depth)
                count += 1
                if word > max_word:
                    max_word = word
                if word <= prev:
                    unordered += 1
                prev = word
                start, n = unpack_fn(g, word, decoded)
                if start != k or n != depth:
                    bad += 1
                else:
                    for t in range(n):
                        if decoded[t] != moves[t]:
                            bad += 1
                            break
    return count, bad, max_word, unordered


def verify_codec(g: int, *, jit: bool = True) -> dict:
    """Exhaustively round-trip every path of a g x g box through the codec.

    With ``jit`` the walk and this module's pack/unpack kernels are compiled
    with numba (needed for g >= 10, where there are 10^7 to 10^9 paths).
    """
    _check_g(g)
    if jit:
        import numba

        pack_fn = numba.njit(cache=False)(_pack_kernel)
        unpack_fn = numba.njit(cache=False)(_unpack_kernel)
        walk = numba.njit(cache=False)(_codec_walk)
    else:
        pack_fn, unpack_fn, walk = _pack_kernel, _unpack_kernel, _codec_walk
    count, bad, max_word, unordered = walk(g, pack_fn, unpack_fn)
    return {
        "g": g,
        "count": int(count),
        "mismatches": int(bad),
        "order_violations": int(unordered),
        "max_word_bits": int(max_word).bit_length(),
        "reserved_bits": word_bits(g),
    }


# -- admissible pairs ---------------------------------------------------------


def smallest_path_word(g: int, vk: int, wk: int) -> int:
    """Word of the lexicographically smallest path from L(vk) to R(wk)."""
    (vl, vm), (wl, wm) = L_position(g, vk), R_position(g, wk)
    return pack(g, vk, (UP,) * (wl - vl) + (RIGHT,) * (wm - vm))


@functools.lru_cache(maxsize=None)
def admissible_pairs(g: int) -> tuple:
    """(L index, R index) pairs joined by at least one staircase path.

    Ordered by first appearance in the path enumeration, i.e. by the word of
    the smallest path of each pair.
    """
    _check_g(g)
    pairs = []
    for vk in range(1, 2 * g):
        vl, vm = L_position(g, vk)
        for wk in range(1, 2 * g):
            wl, wm = R_position(g, wk)
            if vl <= wl and vm <= wm and (vl, vm) != (wl, wm):
                pairs.append((vk, wk))
    pairs.sort(key=lambda p: smallest_path_word(g, *p))
    return tuple(pairs)


@functools.lru_cache(maxsize=None)
def pair_table(g: int) -> tuple:
    """``table[vk][wk]`` = position in :func:`admissible_pairs` or -1."""
    table = [[-1] * (2 * g) for _ in range(2 * g)]
    for p, (vk, wk) in enumerate(admissible_pairs(g)):
        table[vk][wk] = p
    return tuple(tuple(row) for row in table)


@functools.lru_cache(maxsize=None)
def paths_by_pair(g: int) -> tuple:
    """Words of all paths of each admissible pair, pairs in enumeration
    order, words ascending (small g only: this enumerates every path)."""
    table = pair_table(g)
    out = [[] for _ in admissible_pairs(g)]
    for P in enumerate_paths(g):
        out[table[P.start][P.end_index]].append(P.word)
    return tuple(tuple(ws) for ws in out)


# -- grid ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Decomposition of A and B into overlapping groups of g elements.

    ``A_vals[i-1, l-1]`` is the point of group A_i at local row ``l`` (zeros
    where padded); ``row_padded[i-1, l-1]`` flags padded rows. Same for B.
    """

    g: int
    A: PointSequence
    B: PointSequence
    A_vals: np.ndarray
    B_vals: np.ndarray
    row_padded: np.ndarray
    col_padded: np.ndarray
    arith: Arith
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def m(self) -> int:
        return len(self.B)

    @property
    def dim(self) -> int:
        return self.A.dim

    @property
    def s_rows(self) -> int:
        return self.A_vals.shape[0]

    @property
    def s_cols(self) -> int:
        return self.B_vals.shape[0]

    @property
    def padded(self) -> tuple:
        return self.row_padded, self.col_padded

    def global_row(self, i: int, l: int) -> int:
        return (i - 1) * (self.g - 1) + l - 1

    def global_col(self, j: int, m: int) -> int:
        return (j - 1) * (self.g - 1) + m - 1

    def group_A(self, i: int) -> tuple:
        """Points of A_i; padded rows are reported as None."""
        return tuple(
            None if self.row_padded[i - 1, l] else self.A[self.global_row(i, l + 1) - 1]
            for l in range(self.g)
        )

    def group_B(self, j: int) -> tuple:
        return tuple(
            None if self.col_padded[j - 1, m] else self.B[self.global_col(j, m + 1) - 1]
            for m in range(self.g)
        )

    def cell_padded(self, i: int, j: int, l: int, m: int) -> bool:
        return bool(self.row_padded[i - 1, l - 1] or self.col_padded[j - 1, m - 1])

    def target(self) -> tuple:
        """Box and local position of the final DP cell (n, m)."""
        i, j = self.s_rows, self.s_cols
        return i, j, self.n - self.global_row(i, 1) + 1, self.m - self.global_col(j, 1) + 1

    def working_dtype(self, rho=0):
        """numpy dtype used for vectorised arithmetic on this grid.

        Integer inputs use float64 whenever every partial sum the algorithm
        can form stays below 2**53, where float64 arithmetic on integers is
        exact and still offers a real infinity; otherwise, and for
        rationals, Python objects are used.
        """
        key = ("dtype", rho)
        if key not in self._cache:
            arith = infer_arith(*self.A.scalars(), *self.B.scalars(), rho)
            if arith is Arith.FLOAT:
                dt = np.dtype(np.float64)
            elif arith is Arith.INT:
                big = max(abs(v) for v in (*self.A.scalars(), *self.B.scalars(), rho))
                bound = (self.n + self.m + 2 * self.g**2) * (2 * self.dim * big + abs(rho) + 1)
                dt = np.dtype(np.float64) if bound < 2**53 else np.dtype(object)
            else:
                dt = np.dtype(object)
            self._cache[key] = dt
        return self._cache[key]

    def values(self, dtype) -> tuple[np.ndarray, np.ndarray]:
        key = ("values", np.dtype(dtype).str)
        if key not in self._cache:
            self._cache[key] = (self.A_vals.astype(dtype), self.B_vals.astype(dtype))
        return self._cache[key]


def _groups(seq: PointSequence, g: int):
    s = -(-len(seq) // (g - 1))
    vals = np.zeros((s, g, seq.dim), dtype=object)
    pad = np.zeros((s, g), dtype=bool)
    for i in range(s):
        for l in range(g):
            r = i * (g - 1) + l
            if r == 0 or r > len(seq):
                pad[i, l] = True
            else:
                vals[i, l] = seq[r - 1]
    return vals, pad


def decompose(A, B, g: int) -> BoxGrid:
    """Split A and B into s = ceil(n / (g-1)) overlapping groups each."""
    _check_g(g)
    A, B = as_sequence(A, "A"), as_sequence(B, "B")
    if A.dim != B.dim:
        raise InputError("A and B have different dimensions")
    arith = infer_arith(*A.scalars(), *B.scalars())
    A_vals, row_pad = _groups(A, g)
    B_vals, col_pad = _groups(B, g)
    for arr in (A_vals, B_vals, row_pad, col_pad):
        arr.setflags(write=False)
    return BoxGrid(g, A, B, A_vals, B_vals, row_pad, col_pad, arith)


def path_cost(grid: BoxGrid, i: int, j: int, P: StaircasePath, model: GridCostModel):
    """Cost of a path in box (i, j), start excluded, from the raw sequences."""
    metric = model.metric
    cost = 0
    for mv, (l, m) in zip(P.moves, P.positions[1:]):
        if grid.cell_padded(i, j, l, m):
            return INF
        if model.is_ged and mv != UPRIGHT:
            cost += model.rho
        else:
            cost += metric(grid.A[grid.global_row(i, l) - 1], grid.B[grid.global_col(j, m) - 1])
    return cost


# -- per-path geometry --------------------------------------------------------


@dataclass(frozen=True)
class PathInfo:
    """Precomputed geometry of one packed path."""

    word: int
    cells: tuple  # positions after the start
    moves: tuple
    rowmask: int  # bit l-1 set if some cell after the start lies in row l
    colmask: int
    nondiag: int
    low: tuple  # lowest row visited in each column m (index m-1), 0 if absent
    high: tuple


@functools.lru_cache(maxsize=1 << 16)
def path_info(g: int, word: int) -> PathInfo:
    P = StaircasePath.from_word(g, word)
    cells = P.positions[1:]
    low = [0] * g
    high = [0] * g
    for l, m in P.positions:
        if not low[m - 1] or l < low[m - 1]:
            low[m - 1] = l
        high[m - 1] = max(high[m - 1], l)
    rowmask = colmask = 0
    for l, m in cells:
        rowmask |= 1 << (l - 1)
        colmask |= 1 << (m - 1)
    nondiag = sum(mv != UPRIGHT for mv in P.moves)
    return PathInfo(word, cells, P.moves, rowmask, colmask, nondiag, tuple(low), tuple(high))


# -- sign assignments ---------------------------------------------------------


def signs_from_diff(diff: np.ndarray, kind: MetricKind) -> np.ndarray:
    """Per-cell sign records turning dist(a, b) into sum_k s_k (a_k - b_k).

    ``diff`` has shape (..., d). L1 / abs1d: s_k = +1 if a_k >= b_k else -1.
    L-infinity: one-hot at the smallest maximising coordinate, carrying its
    sign (+1 on ties with zero).
    """
    nonneg = np.asarray(diff >= 0, dtype=bool)
    if kind is not MetricKind.LINF:
        return np.where(nonneg, 1, -1).astype(np.int8)
    kstar = np.asarray(np.abs(diff).argmax(axis=-1))
    out = np.zeros(diff.shape, dtype=np.int8)
    sgn = np.where(np.take_along_axis(nonneg, kstar[..., None], -1), 1, -1).astype(np.int8)
    np.put_along_axis(out, kstar[..., None], sgn, -1)
    return out


@dataclass(frozen=True, eq=False)
class SignAssignment:
    """Sign record of a box: ``signs[l-1, m-1, k]`` in {-1, 0, +1}."""

    kind: MetricKind
    signs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.signs, dtype=np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "signs", arr)

    def __call__(self, l: int, m: int):
        s = self.signs[l - 1, m - 1]
        return int(s[0]) if self.kind is MetricKind.ABS1D else tuple(int(x) for x in s)

    def key(self) -> bytes:
        return self.signs.tobytes()

    def __eq__(self, other):
        return (
            isinstance(other, SignAssignment)
            and self.kind is other.kind
            and np.array_equal(self.signs, other.signs)
        )

    def __hash__(self):
        return hash((self.kind, self.key()))


def box_arrays(grid: BoxGrid, ii: np.ndarray, jj: np.ndarray, metric: Metric, dtype):
    """Distances, validity and signs for the boxes (ii[b]+1, jj[b]+1)."""
    Av, Bv = grid.values(dtype)
    diff = Av[ii][:, :, None, :] - Bv[jj][:, None, :, :]
    ad = np.abs(diff)
    D = ad.max(axis=-1) if metric.kind is MetricKind.LINF else ad.sum(axis=-1)
    valid = ~(grid.row_padded[ii][:, :, None] | grid.col_padded[jj][:, None, :])
    # padded cells carry the tie record, as if the difference were zero
    diff = np.where(valid[..., None], diff, 0)
    return D, valid, signs_from_diff(diff, metric.kind)


def sign_assignment(grid: BoxGrid, i: int, j: int, metric: Metric) -> SignAssignment:
    """The correct sign record of box (i, j); padded cells get the tie record."""
    dt = grid.working_dtype()
    _, _, sg = box_arrays(grid, np.array([i - 1]), np.array([j - 1]), metric, dt)
    return SignAssignment(metric.kind, sg[0])


@dataclass(frozen=True, eq=False)
class BoxSignature:
    """Shortest path word for every admissible pair (enumeration order) and
    the box's sign record."""

    g: int
    paths: tuple
    sigma: SignAssignment

    def path(self, pair_index: int) -> StaircasePath:
        return StaircasePath.from_word(self.g, self.paths[pair_index])

    def __eq__(self, other):
        return (
            isinstance(other, BoxSignature)
            and self.g == other.g
            and self.paths == other.paths
            and self.sigma == other.sigma
        )

    def __hash__(self):
        return hash((self.g, self.paths, self.sigma))


# -- vectorised in-box shortest paths -----------------------------------------


@numba.njit(cache=True)
def _shortest_paths_kernel(D, valid, g, is_ged, rho, wpos, vpos, group, smallest):
    """Compiled twin of the numpy engine below, for float64 boxes.

    ``wpos[t]`` is the R position of group t, whose pairs are
    ``group[t, 0..]`` (-1 padded) with L positions ``vpos[p]``.
    """
    nbox = D.shape[0]
    npairs = vpos.shape[0]
    slots = 2 * g - 1
    words = np.zeros((nbox, npairs), np.int64)
    costs = np.zeros((nbox, npairs), np.float64)
    finite = np.zeros((nbox, npairs), np.bool_)
    ctg = np.zeros((g, g), np.float64)
    ok = np.zeros((g, g), np.bool_)
    dls = (1, 0, 1)
    dms = (0, 1, 1)
    for b in range(nbox):
        for t in range(wpos.shape[0]):
            lw, mw = wpos[t, 0], wpos[t, 1]
            for l in range(lw, 0, -1):
                for m in range(mw, 0, -1):
                    if l == lw and m == mw:
                        ctg[l - 1, m - 1] = 0.0
                        ok[l - 1, m - 1] = True
                        continue
                    best = 0.0
                    bok = False
                    for mv in range(3):
                        tl, tm = l + dls[mv], m + dms[mv]
                        if tl > lw or tm > mw:
                            continue
                        if not (ok[tl - 1, tm - 1] and valid[b, tl - 1, tm - 1]):
                            continue
                        wt = rho if (is_ged and mv != 2) else D[b, tl - 1, tm - 1]
                        val = wt + ctg[tl - 1, tm - 1]
                        if not bok or val < best:
                            best = val
                            bok = True
                    ctg[l - 1, m - 1] = best
                    ok[l - 1, m - 1] = bok
            for q in range(group.shape[1]):
                p = group[t, q]
                if p < 0:
                    break
                vl, vm = vpos[p, 0], vpos[p, 1]
                if not ok[vl - 1, vm - 1]:
                    words[b, p] = smallest[p]
                    continue
                finite[b, p] = True
                costs[b, p] = ctg[vl - 1, vm - 1]
                steps = (lw - vl) + (mw - vm)
                l, m = vl, vm
                word = 0
                for _ in range(steps):
                    code = 0
                    if not (l == lw and m == mw):
                        here = ctg[l - 1, m - 1]
                        for mv in range(3):
                            tl, tm = l + dls[mv], m + dms[mv]
                            if tl > lw or tm > mw:
                                continue
                            if not (ok[tl - 1, tm - 1] and valid[b, tl - 1, tm - 1]):
                                continue
                            wt = rho if (is_ged and mv != 2) else D[b, tl - 1, tm - 1]
                            if wt + ctg[tl - 1, tm - 1] == here:
                                code = mv + 1
                                l, m = tl, tm
                                break
                    word = (word << 2) | code
                words[b, p] = (word << (2 * (slots - steps))) | (vpos[p, 2] << (2 * slots))
    return words, costs, finite


@functools.lru_cache(maxsize=None)
def _kernel_tables(g: int):
    pairs = admissible_pairs(g)
    wks = sorted({wk for _, wk in pairs})
    members = {wk: [p for p, (_, w) in enumerate(pairs) if w == wk] for wk in wks}
    width = max(len(v) for v in members.values())
    group = np.full((len(wks), width), -1, np.int64)
    wpos = np.zeros((len(wks), 2), np.int64)
    for t, wk in enumerate(wks):
        wpos[t] = R_position(g, wk)
        group[t, : len(members[wk])] = members[wk]
    vpos = np.array([(*L_position(g, vk), vk) for vk, _ in pairs], np.int64)
    smallest = np.array([smallest_path_word(g, vk, wk) for vk, wk in pairs], np.int64)
    return wpos, vpos, group, smallest


def shortest_paths_batch(D, valid, g: int, model: GridCostModel, *, compiled=None):
    """Shortest path of every admissible pair in a batch of boxes.

    ``D`` and ``valid`` have shape (nbox, g, g). For each R position a
    backward DP computes the cost-to-go of every cell; the path of each pair
    is then rebuilt greedily, taking at every step the first move in
    UP < RIGHT < UPRIGHT order that stays optimal, which yields the
    lexicographically smallest shortest path. Pairs with no path avoiding
    padded cells get the smallest path of the pair and infinite cost.

    Returns (words int64, costs, finite) each of shape (nbox, npairs).
    float64 batches run through a numba-compiled kernel with the same
    semantics unless ``compiled`` is False.
    """
    if compiled is None:
        compiled = D.dtype == np.float64
    if compiled:
        rho = float(model.rho) if model.is_ged else 0.0
        return _shortest_paths_kernel(
            np.ascontiguousarray(D, dtype=np.float64),
            np.ascontiguousarray(valid),
            g,
            model.is_ged,
            rho,
            *_kernel_tables(g),
        )
    nbox = D.shape[0]
    pairs = admissible_pairs(g)
    dtype = D.dtype
    slots = 2 * g - 1
    words = np.zeros((nbox, len(pairs)), dtype=np.int64)
    costs = np.zeros((nbox, len(pairs)), dtype=dtype)
    finite = np.zeros((nbox, len(pairs)), dtype=bool)
    rho = np.array(model.rho, dtype=dtype) if model.is_ged else None
    rows = np.arange(nbox)
    by_w: dict[int, list] = {}
    for p, (vk, wk) in enumerate(pairs):
        by_w.setdefault(wk, []).append((p, vk))

    def weight(mv, tl, tm):
        # weight of the edge entering local cell (tl, tm); tl/tm may be arrays
        if rho is not None and mv != UPRIGHT:
            return rho
        if np.ndim(tl):
            return D[rows, tl - 1, tm - 1]
        return D[:, tl - 1, tm - 1]

    for wk, plist in by_w.items():
        lw, mw = R_position(g, wk)
        ctg = np.zeros((nbox, lw, mw), dtype=dtype)
        ok = np.zeros((nbox, lw, mw), dtype=bool)
        ok[:, lw - 1, mw - 1] = True
        for l in range(lw, 0, -1):
            for m in range(mw, 0, -1):
                if (l, m) == (lw, mw):
                    continue
                best = bok = None
                for mv in MOVES:
                    dl, dm = DELTA[mv]
                    tl, tm = l + dl, m + dm
                    if tl > lw or tm > mw:
                        continue
                    c_ok = ok[:, tl - 1, tm - 1] & valid[:, tl - 1, tm - 1]
                    c_val = weight(mv, tl, tm) + ctg[:, tl - 1, tm - 1]
                    if best is None:
                        best, bok = c_val, c_ok
                    else:
                        take = c_ok & (~bok | (c_val < best))
                        best = np.where(take, c_val, best)
                        bok = bok | c_ok
                ctg[:, l - 1, m - 1] = best
                ok[:, l - 1, m - 1] = bok

        for p, vk in plist:
            vl, vm = L_position(g, vk)
            fin = ok[:, vl - 1, vm - 1].copy()
            finite[:, p] = fin
            costs[:, p] = ctg[:, vl - 1, vm - 1]
            steps = (lw - vl) + (mw - vm)
            cur_l = np.full(nbox, vl)
            cur_m = np.full(nbox, vm)
            word = np.zeros(nbox, dtype=np.int64)
            active = fin.copy()
            for _ in range(steps):
                here = ctg[rows, cur_l - 1, cur_m - 1]
                chosen = np.zeros(nbox, dtype=np.int64)
                for mv in MOVES:
                    dl, dm = DELTA[mv]
                    tl, tm = cur_l + dl, cur_m + dm
                    inside = (tl <= lw) & (tm <= mw)
                    tl, tm = np.minimum(tl, lw), np.minimum(tm, mw)
                    c_ok = inside & ok[rows, tl - 1, tm - 1] & valid[rows, tl - 1, tm - 1]
                    c_val = weight(mv, tl, tm) + ctg[rows, tl - 1, tm - 1]
                    pick = active & (chosen == 0) & c_ok & np.asarray(c_val == here, dtype=bool)
                    chosen[pick] = mv
                if np.any(active & (chosen == 0)):
                    raise InvariantError("greedy path reconstruction lost the optimum")
                cur_l = cur_l + (chosen != RIGHT) * (chosen != 0)
                cur_m = cur_m + (chosen != UP) * (chosen != 0)
                word = (word << 2) | chosen
                active &= ~((cur_l == lw) & (cur_m == mw))
            word = (word << (2 * (slots - steps))) | (vk << (2 * slots))
            words[:, p] = np.where(fin, word, smallest_path_word(g, vk, wk))
    return words, costs, finite


def shortest_paths_direct(grid: BoxGrid, i: int, j: int, model: GridCostModel) -> BoxSignature:
    """Shortest paths of box (i, j) for all admissible pairs, plus its signs.

    Ties go to the smallest path word.
    """
    dt = grid.working_dtype(model.rho)
    D, valid, sg = box_arrays(grid, np.array([i - 1]), np.array([j - 1]), model.metric, dt)
    words, _, _ = shortest_paths_batch(D, valid, grid.g, model)
    return BoxSignature(grid.g, tuple(int(w) for w in words[0]), SignAssignment(model.metric.kind, sg[0]))
