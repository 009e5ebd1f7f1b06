"""Command-line front end.

::

    boxdtw dtw INPUT [--algorithm subquadratic --g 3 --traceback]
    boxdtw ged INPUT --rho 1 [--mode faithful --g 2]
    boxdtw bench [INPUT] [--n 256 --seed 0 --g 3]
    boxdtw selftest [--instances 50 --seed 0 --threads 2]

Input files are UTF-8 text: a header line ``dim=<d>``, then one point per
line (d whitespace-separated decimal scalars), with a single blank line
between sequence A and sequence B.

Exit codes: 0 success, 1 bad input or configuration, 2 internal invariant
violation (including a failed self-test).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .compactdp import WorkStats, dtw_subquadratic, ged_subquadratic
from .core import (
    Arith,
    ConfigError,
    InputError,
    InvariantError,
    Metric,
    PointSequence,
    coupling_cost,
    matching_cost,
    parse_scalar,
)
from .oracle import dtw_quadratic, ged_quadratic

__all__ = ["RunConfig", "parse_input", "parse_text", "run", "main", "REPORT_SCHEMA", "BENCH_SCHEMA"]

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2

_WORK_UNITS = {
    "type": "object",
    "properties": {
        "cell_updates": {"type": "integer", "minimum": 0},
        "candidate_evaluations": {"type": "integer", "minimum": 0},
        "dominance_pairs_reported": {"type": "integer", "minimum": 0},
    },
    "required": ["cell_updates", "candidate_evaluations", "dominance_pairs_reported"],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "boxdtw run report",
    "type": "object",
    "properties": {
        "command": {"enum": ["dtw", "ged"]},
        "distance": {"type": ["number", "string"]},
        "coupling_or_matching": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "algorithm": {"enum": ["quadratic", "subquadratic"]},
        "mode": {"enum": ["direct", "faithful", None]},
        "g": {"type": ["integer", "null"], "minimum": 2, "maximum": 13},
        "work_units": _WORK_UNITS,
        "wall_time_ms": {"type": "number", "minimum": 0},
    },
    "required": ["distance", "algorithm", "g", "work_units", "wall_time_ms"],
    "additionalProperties": False,
}

BENCH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "boxdtw bench report",
    "type": "object",
    "properties": {
        "command": {"const": "bench"},
        "n": {"type": "integer"},
        "m": {"type": "integer"},
        "quadratic": REPORT_SCHEMA,
        "subquadratic": REPORT_SCHEMA,
        "evaluations_below_cell_updates": {"type": "boolean"},
    },
    "required": ["command", "quadratic", "subquadratic", "evaluations_below_cell_updates"],
}


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    algorithm: str = "subquadratic"
    mode: str = "direct"
    g: int = 3
    rho: object = None
    metric: str = "abs1d"
    arith: Arith = Arith.INT
    traceback: bool = False
    output: str = "json"
    seed: int = 0
    threads: int = 1
    cache: str | None = None
    n: int = 256
    instances: int = 50
    max_n: int = 48

    def __post_init__(self):
        if self.mode == "faithful" and self.g != 2:
            raise ConfigError("faithful mode requires --g 2")
        if self.command == "ged" and self.rho is None:
            raise ConfigError("ged requires --rho")
        if not 2 <= self.g <= 13:
            raise ConfigError("--g must be in [2, 13]")


# -- input --------------------------------------------------------------------


def parse_text(text: str, arith: Arith = Arith.INT, source: str = "<input>"):
    """Parse the two-sequence text format into (A, B)."""
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("dim="):
        raise InputError(f"{source}:1: expected header 'dim=<d>'")
    try:
        d = int(lines[0].strip()[4:])
    except ValueError:
        raise InputError(f"{source}:1: malformed dimension in header") from None
    if d < 1:
        raise InputError(f"{source}:1: dimension must be >= 1")
    seqs = [[], []]
    current = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            if current == 0:
                if not seqs[0]:
                    raise InputError(f"{source}:{lineno}: blank line before any point of A")
                current = 1
            elif seqs[1]:
                # trailing blank lines are fine, anything after them is not
                current = 2
            continue
        if current == 2:
            raise InputError(f"{source}:{lineno}: unexpected data after sequence B")
        fields = line.split()
        if len(fields) != d:
            raise InputError(f"{source}:{lineno}: expected {d} coordinate(s), got {len(fields)}")
        try:
            point = tuple(parse_scalar(f, arith) for f in fields)
        except InputError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from None
        seqs[current].append(point)
    if current == 0:
        raise InputError(
            f"{source}:{len(lines)}: missing blank line separating sequence A from sequence B"
        )
    if not seqs[1]:
        raise InputError(f"{source}:{len(lines)}: sequence B is empty")
    return PointSequence(tuple(seqs[0]), "A"), PointSequence(tuple(seqs[1]), "B")


def parse_input(path, arith: Arith = Arith.INT):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not valid UTF-8") from None
    return parse_text(text, arith, str(path))


# -- running ------------------------------------------------------------------


def _json_scalar(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


def _metric(cfg: RunConfig, dim: int) -> Metric:
    return Metric.parse(cfg.metric, dim)


def _solve(cfg: RunConfig, A, B, algorithm: str) -> dict:
    metric = _metric(cfg, A.dim)
    stats = WorkStats()
    t0 = time.perf_counter()
    prepared = None
    if algorithm == "quadratic":
        if cfg.command == "dtw":
            value, alignment = dtw_quadratic(A, B, metric, stats=stats)
        else:
            value, alignment = ged_quadratic(A, B, cfg.rho, metric, stats=stats)
    else:
        if cfg.cache:
            prepared = _cached_preprocessing(cfg, A, B, metric, stats)
        common = dict(metric=metric, mode=cfg.mode, traceback=cfg.traceback, stats=stats, prepared=prepared)
        if cfg.command == "dtw":
            value, alignment = dtw_subquadratic(A, B, cfg.g, **common)
        else:
            value, alignment = ged_subquadratic(A, B, cfg.rho, cfg.g, **common)
    elapsed = (time.perf_counter() - t0) * 1000
    report = {
        "command": cfg.command,
        "distance": _json_scalar(value),
        "algorithm": algorithm,
        "mode": cfg.mode if algorithm == "subquadratic" else None,
        "g": cfg.g if algorithm == "subquadratic" else None,
        "work_units": stats.work_units(),
        "wall_time_ms": round(elapsed, 3),
    }
    if cfg.traceback and alignment is not None:
        report["coupling_or_matching"] = [list(p) for p in alignment.pairs]
    return report


def _cached_preprocessing(cfg, A, B, metric, stats):
    import os

    from .core import GridCostModel
    from .preprocess import load_signatures, preprocess, save_signatures
    from .staircase import decompose

    model = GridCostModel.dtw(metric) if cfg.command == "dtw" else GridCostModel.ged(cfg.rho, metric)
    grid = decompose(A, B, cfg.g)
    if os.path.exists(cfg.cache):
        try:
            return load_signatures(cfg.cache, grid, model)
        except InputError:
            pass  # stale or foreign cache: rebuild and overwrite
    sigs, tables = preprocess(grid, model, cfg.mode, stats=stats)
    save_signatures(cfg.cache, sigs, grid, model)
    return sigs, tables


def _random_instance(rng: random.Random, n: int, m: int, lo=-10**6, hi=10**6):
    A = PointSequence(tuple((rng.randint(lo, hi),) for _ in range(n)), "A")
    B = PointSequence(tuple((rng.randint(lo, hi),) for _ in range(m)), "B")
    return A, B


def _bench(cfg: RunConfig, A=None, B=None) -> dict:
    if A is None:
        rng = random.Random(cfg.seed)
        A, B = _random_instance(rng, cfg.n, cfg.n)
    sub_cfg = RunConfig(**{**cfg.__dict__, "command": "ged" if cfg.rho is not None else "dtw"})
    quad = _solve(sub_cfg, A, B, "quadratic")
    sub = _solve(sub_cfg, A, B, "subquadratic")
    if quad["distance"] != sub["distance"]:
        raise InvariantError(f"distances differ: {quad['distance']} vs {sub['distance']}")
    return {
        "command": "bench",
        "n": len(A),
        "m": len(B),
        "quadratic": quad,
        "subquadratic": sub,
        "evaluations_below_cell_updates": sub["work_units"]["candidate_evaluations"]
        < quad["work_units"]["cell_updates"],
    }


def _selftest_case(args) -> list:
    """Check one generated instance; returns a list of failure messages."""
    seed, max_n = args
    from .dominance import ColoredPointSet, dominating_pairs_dnc, dominating_pairs_naive

    rng = random.Random(seed)
    failures = []
    n, m = rng.randint(1, max_n), rng.randint(1, max_n)
    g = rng.choice((2, 3, 4))
    A, B = _random_instance(rng, n, m, -50, 50)
    rho = rng.choice((0, 1, 17))
    try:
        value, C = dtw_subquadratic(A, B, g)
        if value != dtw_quadratic(A, B)[0] or coupling_cost(A, B, C) != value:
            failures.append(f"seed {seed}: dtw mismatch at g={g}")
        value, M = ged_subquadratic(A, B, rho, g)
        if value != ged_quadratic(A, B, rho)[0] or matching_cost(A, B, M, rho) != value:
            failures.append(f"seed {seed}: ged mismatch at g={g}, rho={rho}")
        if n <= 24 and m <= 24:
            fv, _ = dtw_subquadratic(A, B, 2, mode="faithful")
            if fv != dtw_quadratic(A, B)[0]:
                failures.append(f"seed {seed}: faithful mode mismatch")
    except InvariantError as exc:
        failures.append(f"seed {seed}: invariant violated: {exc}")
    d = rng.randint(1, 4)
    pts = [tuple(rng.randint(0, 3) for _ in range(d)) for _ in range(rng.randint(0, 60))]
    red = [(k, p) for k, p in enumerate(pts) if k % 2 == 0]
    blue = [(k, p) for k, p in enumerate(pts) if k % 2 == 1]
    pset = ColoredPointSet(red, blue, d)
    if dominating_pairs_dnc(pset) != dominating_pairs_naive(pset):
        failures.append(f"seed {seed}: dominance engines disagree")
    return failures


def _selftest(cfg: RunConfig) -> dict:
    from .staircase import verify_codec

    seeds = [(cfg.seed * 100003 + k, cfg.max_n) for k in range(cfg.instances)]
    t0 = time.perf_counter()
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_selftest_case, seeds))
    else:
        results = [_selftest_case(s) for s in seeds]
    failures = [msg for r in results for msg in r]
    for g in range(2, 7):
        res = verify_codec(g, jit=False)
        if res["mismatches"] or res["order_violations"]:
            failures.append(f"codec round trip failed at g={g}")
    return {
        "command": "selftest",
        "instances": cfg.instances,
        "failures": failures,
        "passed": not failures,
        "wall_time_ms": round((time.perf_counter() - t0) * 1000, 3),
    }


def run(cfg: RunConfig) -> dict:
    if cfg.command in ("dtw", "ged"):
        if cfg.input is None:
            raise InputError(f"{cfg.command} needs an input file")
        A, B = parse_input(cfg.input, cfg.arith)
        return _solve(cfg, A, B, cfg.algorithm)
    if cfg.command == "bench":
        if cfg.input is not None:
            A, B = parse_input(cfg.input, cfg.arith)
            return _bench(cfg, A, B)
        return _bench(cfg)
    if cfg.command == "selftest":
        return _selftest(cfg)
    raise ConfigError(f"unknown command {cfg.command!r}")


# -- argument handling --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boxdtw", description="DTW and geometric edit distance, quadratic and boxed.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_input=True, optional_input=False):
        if with_input:
            p.add_argument("input", nargs="?" if optional_input else None, help="sequence file")
        p.add_argument("--algorithm", choices=("quadratic", "subquadratic"), default="subquadratic")
        p.add_argument("--mode", choices=("direct", "faithful"), default="direct",
                       help="preprocessing mode; faithful needs --g 2")
        p.add_argument("--g", type=int, default=3, help="box side, 2..13")
        p.add_argument("--rho", default=None, help="gap penalty (ged)")
        p.add_argument("--metric", choices=("abs1d", "l1", "linf"), default="abs1d")
        p.add_argument("--arith", choices=[a.value for a in Arith], default="int")
        p.add_argument("--traceback", action="store_true", help="report the coupling/matching")
        p.add_argument("--output", choices=("json", "tsv"), default="json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes (selftest fans out over instances)")
        p.add_argument("--cache", default=None, help="signature cache file")

    common(sub.add_parser("dtw", help="dynamic time warping distance"))
    common(sub.add_parser("ged", help="geometric edit distance"))
    bench = sub.add_parser("bench", help="run both algorithms and compare work units")
    common(bench, optional_input=True)
    bench.add_argument("--n", type=int, default=256, help="length of generated sequences")
    st = sub.add_parser("selftest", help="oracle-equivalence checks on generated instances")
    common(st, with_input=False)
    st.add_argument("--instances", type=int, default=50)
    st.add_argument("--max-n", type=int, default=48)
    return parser


def _config(ns) -> RunConfig:
    arith = Arith(ns.arith)
    rho = parse_scalar(ns.rho, arith) if ns.rho is not None else None
    return RunConfig(
        command=ns.command,
        input=getattr(ns, "input", None),
        algorithm=ns.algorithm,
        mode=ns.mode,
        g=ns.g,
        rho=rho,
        metric=ns.metric,
        arith=arith,
        traceback=ns.traceback,
        output=ns.output,
        seed=ns.seed,
        threads=ns.threads,
        cache=ns.cache,
        n=getattr(ns, "n", 256),
        instances=getattr(ns, "instances", 50),
        max_n=getattr(ns, "max_n", 48),
    )


def _tsv(report: dict, prefix: str = "") -> list:
    out = []
    for key, value in report.items():
        if isinstance(value, dict):
            out.extend(_tsv(value, f"{prefix}{key}."))
        elif key == "coupling_or_matching":
            out.extend(f"pair\t{i}\t{j}" for i, j in value)
        elif isinstance(value, list):
            out.extend(f"{prefix}{key}\t{v}" for v in value)
        else:
            out.append(f"{prefix}{key}\t{'' if value is None else value}")
    return out


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config(ns)
        report = run(cfg)
    except (InputError, ConfigError) as exc:
        print(json.dumps({"error": "input", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(json.dumps({"error": "invariant", "message": str(exc)}), file=sys.stderr)
        return EXIT_INVARIANT
    if cfg.output == "json":
        print(json.dumps(report, indent=2))
    else:
        print("\n".join(_tsv(report)))
    if report.get("command") == "selftest" and not report["passed"]:
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
