"""First stage of the boxed algorithm: per-box shortest paths and value tables.

For every box (i, j) the preprocessing produces a :class:`BoxSignature`, the
shortest staircase path for every admissible (L, R) pair together with the
box's sign record sigma*, and :class:`ValueTables` from which the cost of
any stored path in any box is read in O(1) as ``V_row[i] - V_col[j]``.

Two modes produce the same output:

* :func:`preprocess_direct` solves each box with a small dynamic program
  (vectorised over boxes) and is the practical mode.
* :func:`preprocess_faithful` follows the guess-and-verify construction: for
  each guess of a full path set and sign record it builds one point per
  A-group and one per B-group, reports the dominating (B, A) pairs, and every
  reported pair certifies the guess for that box. It is exponential in g and
  is restricted to g = 2.

Boxes are grouped into *classes* by the padding pattern of their row and
column groups (the first group of each sequence carries the DP border, the
last one may run past the end). Within a class every path either avoids
padding in all boxes or in none, so infinite costs are resolved per class
and never enter the arithmetic.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import (
    INF,
    Arith,
    ConfigError,
    GridCostModel,
    InputError,
    InvariantError,
    MetricKind,
    infer_arith,
)
from .dominance import ColoredPointSet, dominating_pairs_dnc
from .staircase import (
    UPRIGHT,
    BoxGrid,
    BoxSignature,
    SignAssignment,
    StaircasePath,
    admissible_pairs,
    box_arrays,
    path_info,
    paths_by_pair,
    shortest_paths_batch,
    signs_from_diff,
)

__all__ = [
    "Signatures",
    "ValueTables",
    "GuessPointBatch",
    "compare_paths_fredman",
    "build_guess_points",
    "preprocess_direct",
    "preprocess_faithful",
    "preprocess",
    "build_tables",
    "query_shortest_path",
    "query_path_cost",
    "save_signatures",
    "load_signatures",
    "to_scalar",
]

FAITHFUL_MAX_DIM = 3


def to_scalar(x, arith):
    """Convert a numpy/working-dtype value back to the caller's scalar type."""
    if isinstance(x, np.generic):
        x = x.item()
    if x == INF:
        return INF
    if arith is Arith.INT:
        return int(x)
    if arith is Arith.FLOAT:
        return float(x)
    return x


def unique_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows of a 2-D integer array and the inverse index.

    Rows are compared as raw bytes, which is much faster than
    ``np.unique(axis=0)``; the order of the distinct rows is deterministic
    but not numeric.
    """
    a = np.ascontiguousarray(a)
    if a.shape[0] == 0:
        return a, np.zeros(0, np.int64)
    width = a.dtype.itemsize * a.shape[1]
    if width <= 8:
        # short rows: pad to one machine word and sort integers
        raw = np.zeros((a.shape[0], 8), np.uint8)
        raw[:, :width] = a.view(np.uint8).reshape(a.shape[0], width)
        keys = raw.view(np.uint64).reshape(-1)
    else:
        keys = a.view(np.dtype((np.void, width))).reshape(-1)
    _, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    return a[first], inv.reshape(-1)


# -- signatures ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Signatures:
    """Deduplicated signatures of all s_rows x s_cols boxes.

    ``box[i-1, j-1]`` is the signature id of box (i, j); ``paths[sid]`` its
    path words in admissible-pair order; ``sigmas[sigma_of[sid]]`` its sign
    record, so ``sigma_of[sid]`` is the sign-record id used by the tables.
    """

    g: int
    kind: MetricKind
    box: np.ndarray
    paths: np.ndarray
    sigma_of: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        for arr in (self.box, self.paths, self.sigma_of, self.sigmas):
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple:
        return self.box.shape

    @property
    def n_unique(self) -> int:
        return len(self.paths)

    def signature_id(self, i: int, j: int) -> int:
        return int(self.box[i - 1, j - 1])

    def sigma_id(self, i: int, j: int) -> int:
        return int(self.sigma_of[self.box[i - 1, j - 1]])

    def __getitem__(self, ij) -> BoxSignature:
        sid = self.signature_id(*ij)
        sigma = SignAssignment(self.kind, self.sigmas[self.sigma_of[sid]])
        return BoxSignature(self.g, tuple(int(w) for w in self.paths[sid]), sigma)

    def box_words(self) -> np.ndarray:
        """(s_rows, s_cols, npairs) array of path words."""
        return self.paths[self.box]

    def box_signs(self) -> np.ndarray:
        return self.sigmas[self.sigma_of[self.box]]

    def same_as(self, other: "Signatures") -> bool:
        """Box-by-box equality of paths and sign records."""
        return (
            self.g == other.g
            and self.shape == other.shape
            and np.array_equal(self.box_words(), other.box_words())
            and np.array_equal(self.box_signs(), other.box_signs())
        )

    @classmethod
    def assemble(cls, g, kind, words: np.ndarray, signs: np.ndarray, shape) -> "Signatures":
        """Deduplicate per-box words (nbox, npairs) and signs (nbox, g, g, d)."""
        nbox, npairs = words.shape
        d = signs.shape[-1]
        wbytes = np.ascontiguousarray(words, dtype="<i8").view(np.uint8).reshape(nbox, -1)
        sbytes = np.ascontiguousarray(signs, dtype=np.int8).reshape(nbox, -1).view(np.uint8)
        uniq, inv = unique_rows(np.hstack([wbytes, sbytes]))
        nw = wbytes.shape[1]
        paths = np.ascontiguousarray(uniq[:, :nw]).view("<i8").astype(np.int64)
        sig_u, sig_inv = unique_rows(np.ascontiguousarray(uniq[:, nw:]))
        return cls(
            g,
            kind,
            inv.reshape(shape).astype(np.int32),
            paths,
            sig_inv.astype(np.int32),
            sig_u.view(np.int8).reshape(-1, g, g, d).copy(),
        )


def query_shortest_path(signatures: Signatures, i: int, j: int, pair_index: int) -> StaircasePath:
    """Stored shortest path of box (i, j) for the given admissible pair."""
    npairs = signatures.paths.shape[1]
    if not 0 <= pair_index < npairs:
        raise InputError(f"pair index {pair_index} out of range [0, {npairs})")
    s_rows, s_cols = signatures.shape
    if not (1 <= i <= s_rows and 1 <= j <= s_cols):
        raise InputError(f"box ({i}, {j}) out of range")
    return StaircasePath.from_word(signatures.g, int(signatures.paths[signatures.box[i - 1, j - 1], pair_index]))


# -- value tables -------------------------------------------------------------


def _incidence(g: int, word: int, ged: bool) -> np.ndarray:
    """0/1 matrix of the cells whose distance the path pays for."""
    info = path_info(g, word)
    inc = np.zeros((g, g), dtype=np.int64)
    for mv, (l, m) in zip(info.moves, info.cells):
        if not ged or mv == UPRIGHT:
            inc[l - 1, m - 1] = 1
    return inc


def _pad_bits(padded: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(padded.shape[1], dtype=np.int64)
    return (padded.astype(np.int64) * weights).sum(axis=1)


@dataclass(eq=False)
class ValueTables:
    """Rows- and columns-values of every (sign record, path) that occurs.

    ``V_row[r, i-1]`` is the rows-value in group A_i of the coefficient row
    ``r`` (GED gap charges included), ``V_col[c, j-1]`` the columns-value in
    B_j. ``rk[sid, p]`` / ``ck[sid, p]`` map signature ``sid`` and pair ``p``
    to those rows. A path entering a padded row or column has infinite cost;
    this is detected from bit masks rather than stored.
    """

    g: int
    signatures: Signatures
    V_row: np.ndarray
    V_col: np.ndarray
    rk: np.ndarray
    ck: np.ndarray
    rowmask: np.ndarray
    colmask: np.ndarray
    row_pad_bits: np.ndarray
    col_pad_bits: np.ndarray
    arith: Arith = Arith.INT
    reports: int = 0
    _index: dict = field(default=None, repr=False)

    def box_costs(self, sig_ids, ii, jj) -> np.ndarray:
        """Costs (nbox, npairs) of the stored paths of boxes (ii+1, jj+1)."""
        ii = np.asarray(ii)[:, None]
        jj = np.asarray(jj)[:, None]
        cost = self.V_row[self.rk[sig_ids], ii] - self.V_col[self.ck[sig_ids], jj]
        blocked = (self.rowmask[sig_ids] & self.row_pad_bits[ii]) | (
            self.colmask[sig_ids] & self.col_pad_bits[jj]
        )
        if not blocked.any():
            return cost
        if cost.dtype == object:
            cost = cost.copy()
            cost[blocked != 0] = INF
            return cost
        return np.where(blocked != 0, np.inf, cost)

    def lookup(self, sigma_id: int, word: int) -> tuple:
        if self._index is None:
            sigs = self.signatures
            index = {}
            for sid in range(sigs.n_unique):
                sg = int(sigs.sigma_of[sid])
                for p, w in enumerate(sigs.paths[sid]):
                    index.setdefault((sg, int(w)), (sid, p))
            self._index = index
        try:
            return self._index[(int(sigma_id), int(word))]
        except KeyError:
            raise KeyError(f"no table entry for sign record {sigma_id} and path {word:#x}") from None

    def cost(self, sigma_id: int, i: int, j: int, word: int):
        sid, p = self.lookup(sigma_id, word)
        if (self.rowmask[sid, p] & self.row_pad_bits[i - 1]) or (
            self.colmask[sid, p] & self.col_pad_bits[j - 1]
        ):
            return INF
        return self.V_row[self.rk[sid, p], i - 1] - self.V_col[self.ck[sid, p], j - 1]


def build_tables(grid: BoxGrid, model: GridCostModel, sigs: Signatures) -> ValueTables:
    """Rows/columns values for every (sign record, path) in the signatures."""
    g, d = grid.g, grid.dim
    dtype = grid.working_dtype(model.rho)
    uw, winv = np.unique(sigs.paths, return_inverse=True)
    winv = winv.reshape(sigs.paths.shape)
    infos = [path_info(g, int(w)) for w in uw]
    inc = np.stack([_incidence(g, int(w), model.is_ged) for w in uw]).astype(np.int8)
    nd = np.array([info.nondiag for info in infos], dtype=np.int64)
    rowmask = np.array([info.rowmask for info in infos], dtype=np.int64)[winv]
    colmask = np.array([info.colmask for info in infos], dtype=np.int64)[winv]

    inc_sp = inc[winv]  # (nsig, npairs, g, g)
    sg = sigs.sigmas[sigs.sigma_of]  # (nsig, g, g, d), int8; sums stay within +-g
    c = np.einsum("splm,slmk->splk", inc_sp, sg)
    e = np.einsum("splm,slmk->spmk", inc_sp, sg)
    nsig, npairs = sigs.paths.shape
    c = c.reshape(nsig * npairs, g * d)
    e = e.reshape(nsig * npairs, g * d)
    nd_sp = nd[winv].reshape(-1, 1).astype(np.int8)

    row_keys, rk = unique_rows(np.hstack([c, nd_sp]))
    col_keys, ck = unique_rows(e)
    A_vals, B_vals = grid.values(dtype)
    A_flat = A_vals.reshape(grid.s_rows, g * d)
    B_flat = B_vals.reshape(grid.s_cols, g * d)
    V_row = row_keys[:, :-1].astype(dtype) @ A_flat.T
    if model.is_ged:
        V_row = V_row + row_keys[:, -1:].astype(dtype) * np.array(model.rho, dtype=dtype)
    V_col = col_keys.astype(dtype) @ B_flat.T
    return ValueTables(
        g,
        sigs,
        V_row,
        V_col,
        rk.reshape(nsig, npairs),
        ck.reshape(nsig, npairs),
        rowmask,
        colmask,
        _pad_bits(grid.row_padded),
        _pad_bits(grid.col_padded),
        infer_arith(*grid.A.scalars(), *grid.B.scalars(), model.rho),
    )


def query_path_cost(tables: ValueTables, sigma_id: int, i: int, j: int, P):
    """``V_row[i] - V_col[j]`` for a stored (sign record, path) key.

    Raises KeyError if the key was never produced by the preprocessing.
    """
    word = P.word if isinstance(P, StaircasePath) else int(P)
    return to_scalar(tables.cost(sigma_id, i, j, word), tables.arith)


# -- Fredman comparison -------------------------------------------------------


def _sides(grid: BoxGrid, i: int, j: int, word: int, signs: np.ndarray, model: GridCostModel):
    g = grid.g
    inc = _incidence(g, word, model.is_ged)
    A = grid.group_A(i)
    B = grid.group_B(j)
    a_side = b_side = 0
    for l in range(g):
        for m in range(g):
            if not inc[l, m]:
                continue
            for k in range(grid.dim):
                s = int(signs[l, m, k])
                if s:
                    a_side += s * A[l][k]
                    b_side += s * B[m][k]
    if model.is_ged:
        a_side += model.rho * path_info(g, word).nondiag
    return a_side, b_side


def _touches_padding(grid: BoxGrid, i: int, j: int, word: int) -> bool:
    info = path_info(grid.g, word)
    return any(grid.cell_padded(i, j, l, m) for l, m in info.cells)


def compare_paths_fredman(
    grid: BoxGrid, i: int, j: int, P, P2, sigma, model: GridCostModel
) -> int:
    """Order cost(P) against cost(P2) in box (i, j) by one A-vs-B comparison.

    With the sign record sigma, ``cost(P) - cost(P2) = a_side - b_side``
    where ``a_side`` collects only A_i values (plus the GED gap charges) and
    ``b_side`` only B_j values. Returns -1, 0 or 1 like ``cmp(cost(P),
    cost(P2))``. This equals the true ordering when sigma is the box's
    correct sign record. Paths through padding have infinite cost and are
    ordered without arithmetic.
    """
    g = grid.g
    wP = P.word if isinstance(P, StaircasePath) else int(P)
    wQ = P2.word if isinstance(P2, StaircasePath) else int(P2)
    sP, sQ = StaircasePath.from_word(g, wP), StaircasePath.from_word(g, wQ)
    if sP.positions[0] != sQ.positions[0] or sP.end != sQ.end:
        raise InputError("paths do not share endpoints")
    tP, tQ = _touches_padding(grid, i, j, wP), _touches_padding(grid, i, j, wQ)
    if tP or tQ:
        return int(tP) - int(tQ)
    signs = sigma.signs if isinstance(sigma, SignAssignment) else np.asarray(sigma)
    aP, bP = _sides(grid, i, j, wP, signs, model)
    aQ, bQ = _sides(grid, i, j, wQ, signs, model)
    a_side, b_side = aP - aQ, bP - bQ
    return (a_side > b_side) - (a_side < b_side)


# -- guess points -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GuessPointBatch:
    """Blue points alpha (one per A-group in ``rows``) and red points beta
    (one per B-group in ``cols``); beta_j dominates alpha_i, with the
    coordinates flagged in ``strict`` compared strictly, exactly when the
    guessed paths and sign record are those of box (i, j)."""

    rows: np.ndarray
    cols: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    strict: np.ndarray
    d_g: int

    @property
    def dim(self) -> int:
        return self.alpha.shape[1]

    def point_set(self) -> ColoredPointSet:
        red = [(int(j), tuple(v)) for j, v in zip(self.cols, self.beta)]
        blue = [(int(i), tuple(v)) for i, v in zip(self.rows, self.alpha)]
        return ColoredPointSet(red, blue, self.dim, tuple(bool(s) for s in self.strict))


def _class_of(padded: np.ndarray, idx) -> np.ndarray:
    pats = padded[np.asarray(idx)]
    if len(pats) and not (pats == pats[0]).all():
        raise InputError("groups with different padding patterns cannot share one guess batch")
    return pats[0] if len(pats) else np.zeros(padded.shape[1], bool)


def _blocked(g: int, word: int, rbits: int, cbits: int) -> bool:
    info = path_info(g, word)
    return bool((info.rowmask & rbits) or (info.colmask & cbits))


def _validation_rows(g, d, kind, sigma, rp, cp):
    """Linear forms (cA, cB, strict) or fixed values for sigma's checks."""
    default = _default_signs(g, d, kind)
    out = []
    for l in range(g):
        for m in range(g):
            per_cell = 1 if kind is not MetricKind.LINF else 2 * (d - 1) + 1
            ncoord = d if kind is not MetricKind.LINF else per_cell
            if rp[l] or cp[m]:
                ok = np.array_equal(sigma[l, m], default[l, m])
                out.extend([("fixed", 0 if ok else 1, 0, False)] * ncoord)
                continue
            s = sigma[l, m]
            if kind is not MetricKind.LINF:
                for k in range(d):
                    cA = np.zeros((g, d), np.int64)
                    cB = np.zeros((g, d), np.int64)
                    cA[l, k] = -s[k]
                    cB[m, k] = -s[k]
                    out.append(("lin", cA, cB, s[k] < 0))
                continue
            kstar = int(np.flatnonzero(s)[0])
            sg = int(s[kstar])
            for k in range(d):
                if k == kstar:
                    continue
                for t in (-1, 1):
                    cA = np.zeros((g, d), np.int64)
                    cB = np.zeros((g, d), np.int64)
                    cA[l, kstar] -= sg
                    cA[l, k] -= t
                    cB[m, kstar] -= sg
                    cB[m, k] -= t
                    out.append(("lin", cA, cB, k < kstar))
            cA = np.zeros((g, d), np.int64)
            cB = np.zeros((g, d), np.int64)
            cA[l, kstar] = -sg
            cB[m, kstar] = -sg
            out.append(("lin", cA, cB, sg < 0))
    return out


def _default_signs(g, d, kind):
    return signs_from_diff(np.zeros((g, g, d)), kind)


def _path_coefs(g, word, sigma, ged):
    inc = _incidence(g, word, ged)
    c = np.einsum("lm,lmk->lk", inc, sigma.astype(np.int64))
    e = np.einsum("lm,lmk->mk", inc, sigma.astype(np.int64))
    return c, e, path_info(g, word).nondiag


def build_guess_points(
    guess, sigma, grid: BoxGrid, model: GridCostModel | None = None, *, rows=None, cols=None
) -> GuessPointBatch:
    """Points certifying a guess (one path word per admissible pair, in pair
    order, and a sign record) for the boxes rows x cols.

    For every pair and every other path P2 of that pair there is one
    coordinate comparing the guessed path P with P2: alpha holds the A-side
    sum of sigma-weighted values of P minus those of P2 (plus the GED gap
    difference), beta the matching B-side sum; beta >= alpha says P is no
    more expensive than P2. The coordinate is strict when P2 precedes P in
    the enumeration, so only the first shortest path passes. Then come the
    checks that sigma agrees with the signs of the box's differences.

    All groups in ``rows`` (0-based, default: all unpadded A-groups) must
    share one padding pattern, likewise ``cols``. Comparisons that involve a
    path through padding are decided up front and stored as constant
    coordinates.
    """
    model = model or GridCostModel.dtw()
    g, d = grid.g, grid.dim
    kind = model.metric.kind
    if rows is None:
        rows = np.flatnonzero(~grid.row_padded.any(axis=1))
    if cols is None:
        cols = np.flatnonzero(~grid.col_padded.any(axis=1))
    rows, cols = np.asarray(rows), np.asarray(cols)
    rp, cp = _class_of(grid.row_padded, rows), _class_of(grid.col_padded, cols)
    rbits = int((rp.astype(np.int64) << np.arange(g)).sum())
    cbits = int((cp.astype(np.int64) << np.arange(g)).sum())
    sigma = np.asarray(sigma.signs if isinstance(sigma, SignAssignment) else sigma, dtype=np.int8)
    by_pair = paths_by_pair(g)
    guess = [int(w.word if isinstance(w, StaircasePath) else w) for w in guess]
    if len(guess) != len(by_pair):
        raise InputError("a guess needs one path per admissible pair")

    specs = []
    for p, P in enumerate(guess):
        alternatives = by_pair[p]
        if P not in alternatives:
            raise InputError(f"guessed path {P:#x} does not connect pair {p}")
        any_open = any(not _blocked(g, w, rbits, cbits) for w in alternatives)
        tP = _blocked(g, P, rbits, cbits)
        cP = _path_coefs(g, P, sigma, model.is_ged) if not tP else None
        for Q in alternatives:
            if Q == P:
                continue
            strict = Q < P
            tQ = _blocked(g, Q, rbits, cbits)
            if not any_open:
                specs.append(("fixed", 0, 0, strict))
            elif tP:
                specs.append(("fixed", 1, 0, False))
            elif tQ:
                specs.append(("fixed", -1, 0, False))
            else:
                cQ = _path_coefs(g, Q, sigma, model.is_ged)
                specs.append(("lin", cP[0] - cQ[0], cP[1] - cQ[1], strict, cP[2] - cQ[2]))
    d_g = len(specs)
    specs.extend(_validation_rows(g, d, kind, sigma, rp, cp))

    dtype = grid.working_dtype(model.rho)
    A_vals, B_vals = grid.values(dtype)
    A_flat = A_vals[rows].reshape(len(rows), g * d)
    B_flat = B_vals[cols].reshape(len(cols), g * d)
    D = len(specs)
    CA = np.zeros((D, g * d), np.int64)
    CB = np.zeros((D, g * d), np.int64)
    const = np.zeros(D, np.int64)
    fixed = np.zeros(D, bool)
    fa = np.zeros(D, np.int64)
    fb = np.zeros(D, np.int64)
    strict = np.zeros(D, bool)
    for t, spec in enumerate(specs):
        if spec[0] == "fixed":
            fixed[t], fa[t], fb[t], strict[t] = True, spec[1], spec[2], spec[3]
        else:
            CA[t] = spec[1].reshape(-1)
            CB[t] = spec[2].reshape(-1)
            strict[t] = spec[3]
            if len(spec) > 4 and model.is_ged:
                const[t] = spec[4]
    alpha = A_flat @ CA.T.astype(dtype) + const.astype(dtype) * np.array(model.rho, dtype=dtype)
    beta = B_flat @ CB.T.astype(dtype)
    alpha[:, fixed] = fa[fixed].astype(dtype)
    beta[:, fixed] = fb[fixed].astype(dtype)
    return GuessPointBatch(rows, cols, alpha, beta, strict, d_g)


# -- drivers ------------------------------------------------------------------


def _direct_words(grid: BoxGrid, model: GridCostModel, chunk_boxes: int = 1 << 15):
    """Per-box shortest-path words and sign records, vectorised in chunks."""
    g, d = grid.g, grid.dim
    s_rows, s_cols = grid.s_rows, grid.s_cols
    dtype = grid.working_dtype(model.rho)
    npairs = len(admissible_pairs(g))
    words = np.zeros((s_rows, s_cols, npairs), np.int64)
    signs = np.zeros((s_rows, s_cols, g, g, d), np.int8)
    rows_per_chunk = max(1, chunk_boxes // max(1, s_cols))
    for r0 in range(0, s_rows, rows_per_chunk):
        r1 = min(s_rows, r0 + rows_per_chunk)
        ii, jj = np.meshgrid(np.arange(r0, r1), np.arange(s_cols), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        D, valid, sg = box_arrays(grid, ii, jj, model.metric, dtype)
        w, _, _ = shortest_paths_batch(D, valid, g, model)
        words[r0:r1] = w.reshape(r1 - r0, s_cols, npairs)
        signs[r0:r1] = sg.reshape(r1 - r0, s_cols, g, g, d)
    return words, signs


def _check_model(grid: BoxGrid, model: GridCostModel):
    if model.metric.dim != grid.dim:
        raise InputError(
            f"metric dimension {model.metric.dim} does not match sequence dimension {grid.dim}"
        )


def preprocess_direct(grid: BoxGrid, model: GridCostModel, *, stats=None):
    """Signatures by direct per-box computation, plus value tables."""
    _check_model(grid, model)
    words, signs = _direct_words(grid, model)
    npairs = words.shape[-1]
    sigs = Signatures.assemble(
        grid.g,
        model.metric.kind,
        words.reshape(-1, npairs),
        signs.reshape(-1, grid.g, grid.g, grid.dim),
        (grid.s_rows, grid.s_cols),
    )
    return sigs, build_tables(grid, model, sigs)


def _sigma_guesses(g, d, kind, rp, cp):
    """Every sign record that agrees with the tie record on padded cells."""
    default = _default_signs(g, d, kind)
    cells = [(l, m) for l in range(g) for m in range(g) if not (rp[l] or cp[m])]
    if kind is MetricKind.LINF:
        options = [(k, s) for k in range(d) for s in (1, -1)]
    else:
        options = list(itertools.product((1, -1), repeat=d))
    for choice in itertools.product(options, repeat=len(cells)):
        sigma = default.copy()
        for (l, m), opt in zip(cells, choice):
            if kind is MetricKind.LINF:
                sigma[l, m] = 0
                sigma[l, m, opt[0]] = opt[1]
            else:
                sigma[l, m] = opt
        yield sigma


def _groups_by_pattern(padded: np.ndarray):
    pats, inv = unique_rows(padded)
    inv = inv.reshape(-1)
    return [(pats[k], np.flatnonzero(inv == k)) for k in range(len(pats))]


def preprocess_faithful(
    grid: BoxGrid,
    model: GridCostModel,
    *,
    prune: bool = True,
    stats=None,
    engine=dominating_pairs_dnc,
):
    """Signatures by guess enumeration and dominance reporting (g = 2 only).

    For each padding class, each path-set guess and each sign-record guess,
    the dominating pairs of :func:`build_guess_points` are reported; each
    report assigns the guess to that box. With ``prune`` the candidate paths
    of a pair are restricted to those that are shortest in at least one box
    of the class (taken from the direct computation); otherwise every path of
    the pair is tried. Ties cannot produce two reports for one box because
    of the strict coordinates, so every box is reported exactly once.
    """
    _check_model(grid, model)
    g, d = grid.g, grid.dim
    if g != 2:
        raise ConfigError("faithful preprocessing is only supported for g = 2")
    if d > FAITHFUL_MAX_DIM:
        raise ConfigError(f"faithful preprocessing supports dimension <= {FAITHFUL_MAX_DIM}")
    kind = model.metric.kind
    by_pair = paths_by_pair(g)
    npairs = len(by_pair)
    s_rows, s_cols = grid.s_rows, grid.s_cols
    direct_words = _direct_words(grid, model)[0] if prune else None

    words = np.full((s_rows, s_cols, npairs), -1, np.int64)
    signs = np.zeros((s_rows, s_cols, g, g, d), np.int8)
    reports = 0
    for rp, rows in _groups_by_pattern(grid.row_padded):
        rbits = int((rp.astype(np.int64) << np.arange(g)).sum())
        for cp, cols in _groups_by_pattern(grid.col_padded):
            cbits = int((cp.astype(np.int64) << np.arange(g)).sum())
            candidates = []
            for p, alternatives in enumerate(by_pair):
                open_paths = [w for w in alternatives if not _blocked(g, w, rbits, cbits)]
                if not open_paths:
                    candidates.append([alternatives[0]])
                elif prune:
                    seen = np.unique(direct_words[np.ix_(rows, cols)][..., p])
                    candidates.append([int(w) for w in seen])
                else:
                    candidates.append(list(alternatives))
            sigma_list = list(_sigma_guesses(g, d, kind, rp, cp))
            for guess in itertools.product(*candidates):
                for sigma in sigma_list:
                    batch = build_guess_points(guess, sigma, grid, model, rows=rows, cols=cols)
                    found = engine(batch.point_set())
                    reports += len(found)
                    for j, i in found:
                        if words[i, j, 0] >= 0:
                            # a second certificate for one box; keep the first
                            continue
                        words[i, j] = guess
                        signs[i, j] = sigma
    if stats is not None:
        stats.dominance_pairs_reported += reports
    missing = np.argwhere(words[..., 0] < 0)
    if len(missing):
        i, j = missing[0] + 1
        raise InvariantError(f"no guess was certified for box ({i}, {j})")
    sigs = Signatures.assemble(
        g, kind, words.reshape(-1, npairs), signs.reshape(-1, g, g, d), (s_rows, s_cols)
    )
    tables = build_tables(grid, model, sigs)
    tables.reports = reports
    return sigs, tables


def preprocess(grid: BoxGrid, model: GridCostModel, mode: str = "direct", *, stats=None):
    if mode == "direct":
        return preprocess_direct(grid, model, stats=stats)
    if mode == "faithful":
        return preprocess_faithful(grid, model, stats=stats)
    raise ConfigError(f"unknown preprocessing mode {mode!r}")


# -- cache file ---------------------------------------------------------------

# Layout (all little-endian):
#   header  "<4sHBBBIIIII16s": magic b"BXSG", format version, g, d, metric
#           code, s_rows, s_cols, npairs, nsig, nsigma, input fingerprint
#   box       int32[s_rows * s_cols]
#   paths     int64[nsig * npairs]
#   sigma_of  int32[nsig]
#   sigmas    int8[nsigma * g * g * d]
# Value tables are not stored; they are rebuilt from the signatures in O(n).

_MAGIC = b"BXSG"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBBIIIII16s")
_KIND_CODES = {MetricKind.ABS1D: 0, MetricKind.L1: 1, MetricKind.LINF: 2}


def fingerprint(grid: BoxGrid, model: GridCostModel) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(repr((grid.g, model.variant, model.metric, model.rho)).encode())
    h.update(repr(grid.A.points).encode())
    h.update(b"|")
    h.update(repr(grid.B.points).encode())
    return h.digest()


def save_signatures(path, sigs: Signatures, grid: BoxGrid, model: GridCostModel) -> None:
    s_rows, s_cols = sigs.shape
    nsig, npairs = sigs.paths.shape
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        sigs.g,
        sigs.sigmas.shape[-1],
        _KIND_CODES[sigs.kind],
        s_rows,
        s_cols,
        npairs,
        nsig,
        len(sigs.sigmas),
        fingerprint(grid, model),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(sigs.box.astype("<i4").tobytes())
        fh.write(sigs.paths.astype("<i8").tobytes())
        fh.write(sigs.sigma_of.astype("<i4").tobytes())
        fh.write(sigs.sigmas.astype("i1").tobytes())


def load_signatures(path, grid: BoxGrid, model: GridCostModel) -> tuple:
    """Read a cache file; raises InputError if it belongs to other inputs."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise InputError("signature cache is truncated")
    magic, version, g, d, kcode, s_rows, s_cols, npairs, nsig, nsigma, fp = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != _VERSION:
        raise InputError("not a signature cache file of a supported version")
    if fp != fingerprint(grid, model):
        raise InputError("signature cache was built for different inputs")
    kind = {v: k for k, v in _KIND_CODES.items()}[kcode]
    off = _HEADER.size
    parts = []
    for dt, count in (("<i4", s_rows * s_cols), ("<i8", nsig * npairs), ("<i4", nsig), ("i1", nsigma * g * g * d)):
        size = np.dtype(dt).itemsize * count
        if off + size > len(blob):
            raise InputError("signature cache is truncated")
        parts.append(np.frombuffer(blob, dtype=dt, count=count, offset=off).copy())
        off += size
    box, paths, sigma_of, sigmas = parts
    sigs = Signatures(
        g,
        kind,
        box.reshape(s_rows, s_cols).astype(np.int32),
        paths.reshape(nsig, npairs).astype(np.int64),
        sigma_of.astype(np.int32),
        sigmas.reshape(nsigma, g, g, d).astype(np.int8),
    )
    return sigs, build_tables(grid, model, sigs)
