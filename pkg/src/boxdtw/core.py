"""Shared domain types: point sequences, metrics, grid cost models, alignments.

Scalars are plain Python numbers. Three arithmetic modes are supported and
selected by the type of the input values:

* ``int`` -- exact integers (the default for tests),
* ``Fraction`` -- exact rationals,
* ``float`` -- binary floating point, compared with a relative tolerance.

Infinity is :data:`INF` (``math.inf``). It is a true IEEE infinity, so
``INF + x == INF`` and ``INF > x`` hold for every finite ``x`` of any of the
three types, and no finite sentinel is ever used in its place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

__all__ = [
    "INF",
    "Arith",
    "InputError",
    "ValidationError",
    "ConfigError",
    "InvariantError",
    "MetricKind",
    "Metric",
    "ABS",
    "PointSequence",
    "as_sequence",
    "GridCostModel",
    "Coupling",
    "MonotoneMatching",
    "dist",
    "coupling_cost",
    "matching_cost",
    "infer_arith",
    "parse_scalar",
    "scalars_close",
]

INF = math.inf


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class ValidationError(InputError):
    """A coupling or matching that violates its structural invariants."""


class ConfigError(ValueError):
    """Unsupported parameter combination (box side, mode, metric)."""


class InvariantError(RuntimeError):
    """An internal invariant was violated; indicates a bug, not bad input."""


class Arith(enum.Enum):
    INT = "int"
    RATIONAL = "rational"
    FLOAT = "float"


def parse_scalar(text: str, arith: Arith = Arith.INT):
    """Parse a decimal literal under the given arithmetic mode."""
    text = text.strip()
    if arith is Arith.INT:
        try:
            return int(text)
        except ValueError:
            raise InputError(f"expected an integer literal, got {text!r}") from None
    if arith is Arith.RATIONAL:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"expected a rational literal, got {text!r}") from None
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"expected a decimal literal, got {text!r}") from None
    if not math.isfinite(value):
        raise InputError(f"non-finite coordinate {text!r}")
    return value


def infer_arith(*values) -> Arith:
    """Arithmetic mode implied by a collection of scalars (floats win)."""
    mode = Arith.INT
    for v in values:
        if isinstance(v, bool):
            raise InputError("booleans are not scalars")
        if isinstance(v, int):
            continue
        if isinstance(v, Rational):
            mode = Arith.RATIONAL if mode is Arith.INT else mode
        elif isinstance(v, float):
            return Arith.FLOAT
        else:
            raise InputError(f"unsupported scalar type {type(v).__name__}")
    return mode


def scalars_close(a, b, *, rel_tol: float = 1e-9, abs_tol: float = 1e-9) -> bool:
    """Equality in exact modes, tolerance comparison once a float is involved."""
    if isinstance(a, float) or isinstance(b, float):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return math.isclose(a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    return a == b


class MetricKind(enum.Enum):
    ABS1D = "abs1d"
    L1 = "l1"
    LINF = "linf"


@dataclass(frozen=True)
class Metric:
    """A polyhedral distance on R^d: |x - y| (d = 1), L1 or L-infinity."""

    kind: MetricKind
    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("metric dimension must be >= 1")
        if self.kind is MetricKind.ABS1D and self.dim != 1:
            raise ConfigError("abs1d metric requires dimension 1")

    @classmethod
    def abs1d(cls) -> "Metric":
        return cls(MetricKind.ABS1D, 1)

    @classmethod
    def l1(cls, dim: int) -> "Metric":
        return cls(MetricKind.L1, dim)

    @classmethod
    def linf(cls, dim: int) -> "Metric":
        return cls(MetricKind.LINF, dim)

    @classmethod
    def parse(cls, name: str, dim: int) -> "Metric":
        try:
            kind = MetricKind(name.lower())
        except ValueError:
            raise ConfigError(f"unknown metric {name!r}") from None
        return cls(kind, dim)

    def __call__(self, p: Sequence, q: Sequence):
        if len(p) != self.dim or len(q) != self.dim:
            raise InputError(
                f"point dimension {len(p)}/{len(q)} does not match metric dimension {self.dim}"
            )
        if self.kind is MetricKind.LINF:
            return max(abs(a - b) for a, b in zip(p, q))
        if self.dim == 1:
            return abs(p[0] - q[0])
        return sum(abs(a - b) for a, b in zip(p, q))


ABS = Metric.abs1d()


def dist(metric: Metric, p: Sequence, q: Sequence):
    """Distance between two points; scalars are accepted for d = 1."""
    if not isinstance(p, (tuple, list)):
        p = (p,)
    if not isinstance(q, (tuple, list)):
        q = (q,)
    return metric(p, q)


@dataclass(frozen=True)
class PointSequence:
    """Nonempty ordered sequence of points sharing one dimension.

    Points are stored as tuples, also in one dimension, so ``seq[k]`` is
    always a tuple of ``seq.dim`` scalars (zero-based indexing).
    """

    points: tuple
    label: str = ""

    def __post_init__(self):
        pts = tuple(tuple(p) for p in self.points)
        if not pts:
            raise InputError(f"sequence {self.label or '?'} is empty")
        d = len(pts[0])
        if d < 1:
            raise InputError("points must have at least one coordinate")
        for k, p in enumerate(pts):
            if len(p) != d:
                raise InputError(
                    f"sequence {self.label or '?'}: point {k + 1} has dimension {len(p)}, expected {d}"
                )
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]

    def __iter__(self):
        return iter(self.points)

    def scalars(self) -> list:
        return [c for p in self.points for c in p]


def as_sequence(values, label: str = "") -> PointSequence:
    """Accept a PointSequence, a list of numbers (d = 1) or a list of tuples."""
    if isinstance(values, PointSequence):
        return values
    pts = []
    for v in values:
        if isinstance(v, (tuple, list)):
            pts.append(tuple(v))
        elif hasattr(v, "__len__") and hasattr(v, "tolist"):
            pts.append(tuple(v.tolist()))
        else:
            pts.append((v.item() if hasattr(v, "item") else v,))
    return PointSequence(tuple(pts), label)


@dataclass(frozen=True)
class GridCostModel:
    """Edge weights of the alignment grid graph.

    DTW: every edge entering cell (l, m) weighs dist(p_l, q_m).
    GED: horizontal and vertical edges weigh ``rho``; the diagonal edge
    entering (l, m) weighs dist(p_l, q_m).
    """

    variant: str
    metric: Metric = ABS
    rho: object = 0

    def __post_init__(self):
        if self.variant not in ("dtw", "ged"):
            raise ConfigError(f"unknown cost model {self.variant!r}")
        if self.variant == "ged":
            infer_arith(self.rho)
            if self.rho < 0:
                raise ConfigError("gap penalty rho must be >= 0")

    @classmethod
    def dtw(cls, metric: Metric = ABS) -> "GridCostModel":
        return cls("dtw", metric, 0)

    @classmethod
    def ged(cls, rho, metric: Metric = ABS) -> "GridCostModel":
        return cls("ged", metric, rho)

    @property
    def is_ged(self) -> bool:
        return self.variant == "ged"


def _check_dims(A: PointSequence, B: PointSequence, metric: Metric):
    if A.dim != metric.dim or B.dim != metric.dim:
        raise InputError(
            f"sequence dimensions ({A.dim}, {B.dim}) do not match metric dimension {metric.dim}"
        )


@dataclass(frozen=True)
class Coupling:
    """Warping path as 1-based index pairs (i, j)."""

    pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    def validate(self, n: int, m: int) -> None:
        pairs = self.pairs
        if not pairs:
            raise ValidationError("empty coupling")
        if pairs[0] != (1, 1):
            raise ValidationError(f"coupling must start at (1, 1), got {pairs[0]}")
        for a, b in zip(pairs, pairs[1:]):
            step = (b[0] - a[0], b[1] - a[1])
            if step not in ((0, 1), (1, 0), (1, 1)):
                raise ValidationError(f"invalid coupling step {a} -> {b}")
        if pairs[-1] != (n, m):
            raise ValidationError(f"coupling must end at ({n}, {m}), got {pairs[-1]}")

    def transposed(self) -> "Coupling":
        return Coupling(tuple((j, i) for i, j in self.pairs))

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class MonotoneMatching:
    """Order-preserving partial matching as 1-based index pairs, sorted by i."""

    pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple(sorted((int(i), int(j)) for i, j in self.pairs))
        )

    def validate(self, n: int, m: int) -> None:
        for i, j in self.pairs:
            if not (1 <= i <= n and 1 <= j <= m):
                raise ValidationError(f"matched pair {(i, j)} out of range")
        for a, b in zip(self.pairs, self.pairs[1:]):
            if not (a[0] < b[0] and a[1] < b[1]):
                raise ValidationError(f"matching not monotone or reuses an index at {a}, {b}")

    def transposed(self) -> "MonotoneMatching":
        return MonotoneMatching(tuple((j, i) for i, j in self.pairs))

    def __len__(self):
        return len(self.pairs)


def coupling_cost(A, B, C: Coupling, metric: Metric = ABS):
    """Sum of dist(p_i, q_j) over the coupling pairs."""
    A, B = as_sequence(A), as_sequence(B)
    _check_dims(A, B, metric)
    C.validate(len(A), len(B))
    return sum(metric(A[i - 1], B[j - 1]) for i, j in C.pairs)


def matching_cost(A, B, M: MonotoneMatching, rho, metric: Metric = ABS):
    """Matched distances plus rho for every unmatched point of A and B."""
    A, B = as_sequence(A), as_sequence(B)
    _check_dims(A, B, metric)
    M.validate(len(A), len(B))
    total = sum(metric(A[i - 1], B[j - 1]) for i, j in M.pairs)
    return total + rho * (len(A) + len(B) - 2 * len(M))


def sequence_arith(A: PointSequence, B: PointSequence, *extra) -> Arith:
    return infer_arith(*A.scalars(), *B.scalars(), *extra)


def check_inputs(A, B, metric: Metric) -> tuple[PointSequence, PointSequence]:
    A, B = as_sequence(A, "A"), as_sequence(B, "B")
    _check_dims(A, B, metric)
    sequence_arith(A, B)
    return A, B
