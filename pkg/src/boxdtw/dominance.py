"""Bichromatic dominating-pairs reporting.

Given red and blue points in R^d, report every pair (r, b) with r >= b in
each coordinate. The divide-and-conquer engine splits at the median of the
last coordinate, solves both halves, and handles the pairs that straddle the
split (red high, blue low) in one dimension less, since those already satisfy
the last coordinate. One-dimensional instances are solved by sorting.

Coordinates may be flagged *strict*, in which case ``r_k > b_k`` is required
there. The preprocessing stage uses this to encode tie-breaking rules; with
no flags the contract is plain non-strict dominance.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .core import InputError

__all__ = ["ColoredPointSet", "dominating_pairs_naive", "dominating_pairs_dnc"]

# below this many candidate pairs the recursion compares points directly
_LEAF_PAIRS = 32


@dataclass(frozen=True, eq=False)
class ColoredPointSet:
    """Red and blue points as ``(id, vector)`` lists of a common dimension d."""

    red: list
    blue: list
    d: int
    strict: tuple = None

    def __post_init__(self):
        if self.d < 1:
            raise InputError("dimension must be >= 1")
        for colour in (self.red, self.blue):
            for pid, vec in colour:
                if len(vec) != self.d:
                    raise InputError(f"point {pid!r} has dimension {len(vec)}, expected {self.d}")
        strict = (False,) * self.d if self.strict is None else tuple(bool(s) for s in self.strict)
        if len(strict) != self.d:
            raise InputError("strictness mask has the wrong length")
        object.__setattr__(self, "strict", strict)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        def stack(pts):
            if not pts:
                return np.zeros((0, self.d))
            return np.array([tuple(v) for _, v in pts], dtype=_common_dtype(pts))

        return stack(self.red), stack(self.blue)


def _common_dtype(pts):
    for _, vec in pts:
        for x in vec:
            if not isinstance(x, (float, int, np.floating, np.integer)) or isinstance(x, bool):
                return object
    return np.float64 if all(abs(x) < 2**53 for _, v in pts for x in v) else object


def _dominates(r, b, strict) -> bool:
    return all((x > y) if s else (x >= y) for x, y, s in zip(r, b, strict))


def dominating_pairs_naive(pset: ColoredPointSet) -> list:
    """All (red_id, blue_id) with red >= blue coordinatewise, sorted."""
    out = [
        (rid, bid)
        for rid, r in pset.red
        for bid, b in pset.blue
        if _dominates(r, b, pset.strict)
    ]
    out.sort()
    return out


def dominating_pairs_dnc(pset: ColoredPointSet) -> list:
    """Same output set as :func:`dominating_pairs_naive` (sorted), by
    divide and conquer on the coordinates."""
    if not pset.red or not pset.blue:
        return []
    R, B = pset.coords()
    strict = np.array(pset.strict, dtype=bool)
    pairs: list = []
    _solve(R, B, np.arange(len(R)), np.arange(len(B)), list(range(pset.d)), strict, pairs)
    rid = [pid for pid, _ in pset.red]
    bid = [pid for pid, _ in pset.blue]
    out = [(rid[r], bid[b]) for r, b in pairs]
    out.sort()
    return out


def _brute(R, B, ri, bi, dims, strict, out):
    if not dims:
        out.extend((r, b) for r in ri for b in bi)
        return
    cols = np.array(dims)
    rv = R[np.ix_(ri, cols)]
    bv = B[np.ix_(bi, cols)]
    ge = rv[:, None, :] >= bv[None, :, :]
    gt = rv[:, None, :] > bv[None, :, :]
    ok = np.where(strict[cols], gt, ge).all(axis=-1)
    for a, b in zip(*np.nonzero(ok)):
        out.append((ri[a], bi[b]))


def _sweep(R, B, ri, bi, k, strict_k, out):
    """One remaining coordinate: sort the blue values and bisect per red."""
    order = sorted(bi, key=lambda b: B[b, k])
    keys = [B[b, k] for b in order]
    for r in ri:
        x = R[r, k]
        hi = bisect.bisect_left(keys, x) if strict_k else bisect.bisect_right(keys, x)
        out.extend((r, order[t]) for t in range(hi))


def _solve(R, B, ri, bi, dims, strict, out):
    if len(ri) == 0 or len(bi) == 0:
        return
    if not dims or len(ri) * len(bi) <= _LEAF_PAIRS:
        _brute(R, B, ri, bi, dims, strict, out)
        return
    k = dims[-1]
    if len(dims) == 1:
        _sweep(R, B, ri, bi, k, strict[k], out)
        return
    rv, bv = R[ri, k], B[bi, k]
    vals = np.sort(np.concatenate([rv, bv]))
    lo_val, hi_val = vals[0], vals[-1]
    if lo_val == hi_val:
        # constant coordinate: satisfied by every pair, or by none if strict
        if not strict[k]:
            _solve(R, B, ri, bi, dims[:-1], strict, out)
        return
    med = vals[(len(vals) - 1) // 2]
    if med == hi_val:
        # equal values stay on the low side; split off the maxima instead
        r_hi, b_hi = rv == hi_val, bv == hi_val
    else:
        r_hi, b_hi = rv > med, bv > med
    r_lo, b_lo = ri[~r_hi], bi[~b_hi]
    r_up, b_up = ri[r_hi], bi[b_hi]
    _solve(R, B, r_lo, b_lo, dims, strict, out)
    _solve(R, B, r_up, b_up, dims, strict, out)
    # high red vs low blue: coordinate k holds strictly, drop it
    _solve(R, B, r_up, b_lo, dims[:-1], strict, out)
