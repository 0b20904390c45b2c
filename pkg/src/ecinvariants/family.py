"""Family sweeps over all curves modulo each prime.

Enumerates one representative per twist orbit (su^4, tu^6), computes
the torsion census S_d(p) and the per-prime contributions to the main
term, moment sums, and the prime-order census, and runs the
Monte-Carlo box experiments. Per-prime work items are pure and
independent; parallel runs merge per-prime aggregates in ascending-p
order, so totals do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arithfn import ArithmeticFunction, builtin
from .constants import c0_series
from .ec import Curve, GroupStructure, PrimeField, group_structure
from .numtheory import is_prime, kahan_sum, log_integral, mult_fn, sieve_primes

SCHEMA_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitRep:
    """One isomorphism class of curves over F_p: the orbit of (s, t) under
    (s, t) -> (s u^4, t u^6)."""

    s: int
    t: int
    orbit_size: int
    aut: int

    @property
    def is_unit(self) -> bool:
        return self.s != 0 and self.t != 0


@dataclass(frozen=True)
class BoxSpec:
    A: int
    B: int

    def __post_init__(self):
        if self.A < 1 or self.B < 1:
            raise ValueError("box sides must be >= 1")


@dataclass(frozen=True)
class SampleReport:
    estimate: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class PrimeAggregate:
    """Mergeable per-prime unit of every sweep."""

    p: int
    main_term_contrib: float
    census: dict[int, int]
    howe_max_dev: float


def _coset_reps(p: int, power: int) -> list[int]:
    """Coset representatives of the subgroup of `power`-th powers in F_p^x."""
    members = sorted({pow(z, power, p) for z in range(1, p)})
    count = math.gcd(power, p - 1)
    reps: list[int] = []
    covered = np.zeros(p, dtype=bool)
    for z in range(1, p):
        if not covered[z]:
            reps.append(z)
            for m in members:
                covered[m * z % p] = True
            if len(reps) == count:
                break
    return reps


def orbit_representatives(p: int) -> list[OrbitRep]:
    """Exactly one representative per isomorphism class of nonsingular curves.

    Classes with s = 0 are indexed by t modulo sixth powers, classes with
    t = 0 by s modulo fourth powers. For s t != 0 the s component runs over
    fourth-power cosets and the residual stabilizer action identifies
    t with -t exactly when p = 1 mod 4. Orbit sizes total p^2 - p.
    """
    PrimeField(p)  # validates p >= 5 prime
    c4 = math.gcd(4, p - 1)
    c6 = math.gcd(6, p - 1)
    reps: list[OrbitRep] = []

    aut6 = 6 if p % 6 == 1 else 2
    for t in _coset_reps(p, 6):
        reps.append(OrbitRep(0, t, (p - 1) // c6, aut6))
    aut4 = 4 if p % 4 == 1 else 2
    for s in _coset_reps(p, 4):
        reps.append(OrbitRep(s, 0, (p - 1) // c4, aut4))

    t_range = range(1, (p - 1) // 2 + 1) if p % 4 == 1 else range(1, p)
    for s in _coset_reps(p, 4):
        s3 = 4 * s * s * s % p
        for t in t_range:
            if (s3 + 27 * t * t) % p == 0:
                continue  # the singular locus (-3r^2, 2r^3)
            reps.append(OrbitRep(s, t, (p - 1) // 2, 2))
    return reps


@lru_cache(maxsize=128)
def _class_stats(p: int) -> tuple[tuple[bool, int, int, int, int], ...]:
    """(is_unit, orbit_size, N, i, e) for every isomorphism class mod p."""
    field = PrimeField(p)
    out = []
    for rep in orbit_representatives(p):
        gs = group_structure(Curve(field, rep.s, rep.t))
        out.append((rep.is_unit, rep.orbit_size, gs.N, gs.i, gs.e))
    return tuple(out)


def class_structures(p: int) -> list[tuple[OrbitRep, GroupStructure]]:
    """Orbit representatives with their group structures."""
    field = PrimeField(p)
    return [
        (rep, group_structure(Curve(field, rep.s, rep.t)))
        for rep in orbit_representatives(p)
    ]


def _census_divisors(p: int) -> list[int]:
    bound = math.isqrt(p) + 1
    return [d for d in range(1, bound + 1) if (p - 1) % d == 0]


def howe_count(p: int, d: int, variant: str = "all") -> int:
    """Exact number of pairs (s, t) whose curve has full rational d-torsion.

    variant "all" counts nonsingular pairs in F_p x F_p; "units" restricts
    to s, t both nonzero. Zero immediately when d does not divide p - 1 or
    d > sqrt(p) + 1. Full d-torsion is equivalent to d dividing the index,
    which is constant on isomorphism classes, so classes are weighted by
    their orbit sizes.
    """
    if variant not in ("all", "units"):
        raise ValueError(f"unknown variant {variant!r}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if (p - 1) % d or d > math.isqrt(p) + 1:
        return 0
    units_only = variant == "units"
    return sum(
        size
        for is_unit, size, _, i, _ in _class_stats(p)
        if (is_unit or not units_only) and i % d == 0
    )


def _howe_max_dev(p: int, stats) -> float:
    dev = 0.0
    p32 = p**1.5
    for d in _census_divisors(p):
        s_d = sum(size for _, size, _, i, _ in stats if i % d == 0)
        main = p * (p - 1) / (d * mult_fn("psi", d) * mult_fn("phi", d))
        dev = max(dev, abs(s_d - main) / p32)
    return dev


def _unit_census(p: int, stats) -> dict[int, int]:
    return {
        d: sum(size for is_unit, size, _, i, _ in stats if is_unit and i % d == 0)
        for d in _census_divisors(p)
    }


def prime_aggregate(p: int, kind: str, param: str | int | None) -> PrimeAggregate:
    """One prime's census and reduced contribution.

    kind "function" (param: builtin spec) contributes
    sum_{s,t units} f(i) / (p (p-1)); "moment" (param: k) uses e^k; and
    "prime_order" uses the indicator that the group order is prime.
    """
    stats = _class_stats(p)
    denom = p * (p - 1)
    if kind == "function":
        af = builtin(param)
        by_i: dict[int, int] = {}
        for is_unit, size, _, i, _ in stats:
            if is_unit:
                by_i[i] = by_i.get(i, 0) + size
        acc = sum(size * af.f(i) for i, size in sorted(by_i.items()))
        if isinstance(acc, Fraction):
            contrib = float(acc / denom)
        else:
            contrib = acc / denom
    elif kind == "moment":
        k = int(param)
        acc = sum(size * e**k for is_unit, size, _, _, e in stats if is_unit)
        contrib = acc / denom
    elif kind == "prime_order":
        acc = sum(size for is_unit, size, N, _, _ in stats if is_unit and is_prime(N))
        contrib = acc / denom
    else:
        raise ValueError(f"unknown aggregate kind {kind!r}")
    return PrimeAggregate(p, contrib, _unit_census(p, stats), _howe_max_dev(p, stats))


def _aggregate_task(args: tuple[int, str, str | int | None]) -> PrimeAggregate:
    return prime_aggregate(*args)


def reducer_label(kind: str, param: str | int | None) -> str:
    if kind == "function":
        return str(param)
    if kind == "moment":
        return f"moment:{param}"
    return "prime_order"


def prime_sweep(
    x: float,
    kind: str,
    param: str | int | None = None,
    threads: int = 1,
    checkpoint: str | None = None,
) -> list[PrimeAggregate]:
    """PrimeAggregates for all primes in [5, x], ascending.

    With threads > 1 the per-prime tasks run in a process pool; results
    are merged in ascending-p order so output does not depend on the
    worker count. A checkpoint file, when given, is appended one row per
    prime and previously completed primes are skipped on resume.
    """
    primes = [p for p in sieve_primes(int(x)) if p >= 5]
    label = reducer_label(kind, param)
    done: dict[int, PrimeAggregate] = {}
    writer = None
    if checkpoint is not None:
        done = read_checkpoint(checkpoint, label) if os.path.exists(checkpoint) else {}
        writer = _CheckpointWriter(checkpoint, label, x, [p for p in primes if p not in done])
    todo = [p for p in primes if p not in done]

    fresh: dict[int, PrimeAggregate] = {}
    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunk = max(1, len(todo) // (threads * 8))
            for agg in pool.map(
                _aggregate_task, [(p, kind, param) for p in todo], chunksize=chunk
            ):
                fresh[agg.p] = agg
                if writer:
                    writer.offer(agg)
    else:
        for p in todo:
            agg = prime_aggregate(p, kind, param)
            fresh[agg.p] = agg
            if writer:
                writer.offer(agg)
    if writer:
        writer.close()
    merged = {**done, **fresh}
    return [merged[p] for p in primes]


class _CheckpointWriter:
    """Appends aggregates in ascending-p order, holding back early arrivals."""

    def __init__(self, path: str, label: str, x: float, expected: list[int]):
        self.path = path
        self.pending: dict[int, PrimeAggregate] = {}
        self.queue = sorted(expected)
        self.idx = 0
        if not os.path.exists(path):
            with open(path, "w") as fh:
                fh.write("p,main_term_contrib,howe_max_dev,census_json\n")
        meta_path = path + ".meta.json"
        if not os.path.exists(meta_path):
            with open(meta_path, "w") as fh:
                json.dump(
                    {"function": label, "x_max": float(x), "schema_version": SCHEMA_VERSION},
                    fh,
                    sort_keys=True,
                )

    def offer(self, agg: PrimeAggregate) -> None:
        self.pending[agg.p] = agg
        with open(self.path, "a", newline="") as fh:
            writer = csv.writer(fh)
            while self.idx < len(self.queue) and self.queue[self.idx] in self.pending:
                writer.writerow(_serialize_row(self.pending.pop(self.queue[self.idx])))
                self.idx += 1

    def close(self) -> None:
        if self.pending:
            raise CheckpointError(f"{len(self.pending)} aggregates never flushed")


def _serialize_row(agg: PrimeAggregate) -> list[str]:
    census = json.dumps({str(d): v for d, v in agg.census.items()}, sort_keys=True)
    return [str(agg.p), repr(agg.main_term_contrib), repr(agg.howe_max_dev), census]


def write_checkpoint(path: str, label: str, x: float, aggregates: list[PrimeAggregate]) -> None:
    """Write a complete checkpoint file plus its metadata sidecar."""
    writer = _CheckpointWriter(path, label, x, [a.p for a in aggregates])
    for agg in sorted(aggregates, key=lambda a: a.p):
        writer.offer(agg)
    writer.close()


def read_checkpoint(path: str, label: str) -> dict[int, PrimeAggregate]:
    """Parse a checkpoint; refuses on schema or function mismatch."""
    meta_path = path + ".meta.json"
    if not os.path.exists(meta_path):
        raise CheckpointError(f"missing metadata sidecar {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise CheckpointError(
            f"schema version {meta.get('schema_version')} != {SCHEMA_VERSION}; refusing to resume"
        )
    if meta.get("function") != label:
        raise CheckpointError(f"checkpoint is for {meta.get('function')!r}, not {label!r}")
    out: dict[int, PrimeAggregate] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if row != ["p", "main_term_contrib", "howe_max_dev", "census_json"]:
                    raise CheckpointError(f"line 1: unexpected header {row}")
                continue
            if not row:
                continue
            try:
                p = int(row[0])
                contrib = float(row[1])
                dev = float(row[2])
                census = {int(k): int(v) for k, v in json.loads(row[3]).items()}
            except (ValueError, IndexError, json.JSONDecodeError) as exc:
                raise CheckpointError(f"line {lineno}: corrupted row ({exc})") from None
            out[p] = PrimeAggregate(p, contrib, census, dev)
    return out


def main_term_sum(
    x: float,
    af: ArithmeticFunction | str,
    threads: int = 1,
    checkpoint: str | None = None,
) -> tuple[float, list[PrimeAggregate]]:
    """M(x) = sum over primes 5 <= p <= x of the mean of f(index) over the
    unit-pair family, weighted 1 / (p (p-1)); classes with s t = 0 are
    excluded. Also returns the per-prime aggregate stream."""
    spec = af if isinstance(af, str) else af.name
    aggs = prime_sweep(x, "function", spec, threads=threads, checkpoint=checkpoint)
    return kahan_sum(a.main_term_contrib for a in aggs), aggs


def compare_main_term(
    x_grid: list[float],
    af: ArithmeticFunction | str,
    threads: int = 1,
    checkpoint: str | None = None,
    trunc_d: int | None = None,
) -> list[tuple[float, float, float, float]]:
    """Rows (x, M(x), c0(f) li(x), |M - c0 li| / li(x)) from one sweep."""
    if not x_grid:
        return []
    if sorted(x_grid) != list(x_grid):
        raise ValueError("x grid must be ascending")
    af_obj = builtin(af) if isinstance(af, str) else af
    c0 = c0_series(af_obj, trunc_d) if trunc_d else c0_series(af_obj)
    aggs = prime_sweep(x_grid[-1], "function", af_obj.name, threads=threads, checkpoint=checkpoint)
    rows = []
    total = 0.0
    comp = 0.0
    idx = 0
    for x in x_grid:
        while idx < len(aggs) and aggs[idx].p <= x:
            y = aggs[idx].main_term_contrib - comp
            t = total + y
            comp = (t - total) - y
            total = t
            idx += 1
        li = log_integral(x)
        rows.append((x, total, c0.value * li, abs(total - c0.value * li) / li))
    return rows


def moment_sum(x: float, k: int, threads: int = 1, checkpoint: str | None = None) -> float:
    """sum over primes of the family mean of e^k, weighted 1 / (p (p-1)).

    The comparator at scale x is moment_constant(k) * li(x^(k+1)).
    """
    if not 0 <= k <= 4:
        raise ValueError("k must be in [0, 4] (e^k stays exactly summable)")
    aggs = prime_sweep(x, "moment", k, threads=threads, checkpoint=checkpoint)
    return kahan_sum(a.main_term_contrib for a in aggs)


def prime_order_census(x: float, threads: int = 1, checkpoint: str | None = None) -> float:
    """Family-average count of primes with prime group order, cumulative in x."""
    aggs = prime_sweep(x, "prime_order", None, threads=threads, checkpoint=checkpoint)
    return kahan_sum(a.main_term_contrib for a in aggs)


def _curve_sum(a: int, b: int, x: float, spec: str, unit_weighted: bool) -> float:
    """Per-curve prime sum of f(index) over good-reduction primes in [5, x].

    Raw mode is the plain sum, the second-moment experiment's statistic.
    Unit-weighted mode estimates the main term instead: primes where the
    reduction lands on the s t = 0 fiber are skipped (those classes are
    excluded from the main term) and each retained prime is weighted
    p/(p-1), which cancels the 1/p^2 residue-sampling density against
    the main term's 1/(p (p-1)) class weight.
    """
    af = builtin(spec)
    disc = 4 * a**3 + 27 * b**2
    total = 0.0
    for p in sieve_primes(int(x)):
        if p < 5 or disc % p == 0:
            continue
        ar, br = a % p, b % p
        if unit_weighted and (ar == 0 or br == 0):
            continue
        gs = group_structure(Curve(PrimeField(p), ar, br))
        term = float(af.f(gs.i))
        if unit_weighted:
            term *= p / (p - 1)
        total += term
    return total


def _draw_pair(box: BoxSpec, seed: int, j: int) -> tuple[int, int]:
    mask64 = (1 << 64) - 1
    rng = np.random.Generator(np.random.Philox(key=((seed & mask64) << 64) | j))
    while True:
        a = int(rng.integers(-box.A, box.A + 1))
        b = int(rng.integers(-box.B, box.B + 1))
        if (a, b) != (0, 0):
            return a, b


def _sample_task(args: tuple[int, int, int, int, float, str, bool]) -> float:
    A, B, seed, j, x, spec, unit_weighted = args
    a, b = _draw_pair(BoxSpec(A, B), seed, j)
    return _curve_sum(a, b, x, spec, unit_weighted)


def _box_sums(
    box: BoxSpec, x: float, n: int, seed: int, spec: str, threads: int, unit_weighted: bool
) -> list[float]:
    tasks = [(box.A, box.B, seed, j, x, spec, unit_weighted) for j in range(n)]
    if threads > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_sample_task, tasks, chunksize=max(1, n // (threads * 8))))
    return [_sample_task(t) for t in tasks]


def sample_box_average(
    box: BoxSpec,
    x: float,
    n: int,
    seed: int,
    af: ArithmeticFunction | str,
    threads: int = 1,
) -> SampleReport:
    """Monte-Carlo box-family estimate of the main term M(x).

    Sample j draws (a, b) from its own RNG stream keyed by (seed, j),
    uniformly over the box minus (0, 0); primes dividing 4a^3 + 27b^2
    (and 2, 3) are skipped as bad reduction. Reductions landing on the
    s t = 0 fiber are skipped with a p/(p-1) reweighting of the rest,
    so the estimator is consistent with main_term_sum, which excludes
    those classes. Deterministic in (seed, n): thread count never
    changes the report.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = af if isinstance(af, str) else af.name
    sums = _box_sums(box, x, n, seed, spec, threads, unit_weighted=True)
    mean = kahan_sum(sums) / n
    if n > 1:
        var = kahan_sum((s - mean) ** 2 for s in sums) / (n - 1)
        std_error = math.sqrt(var / n)
    else:
        std_error = 0.0
    return SampleReport(mean, std_error, n, seed)


def variance_experiment(
    box: BoxSpec,
    x: float,
    m: int,
    af: ArithmeticFunction | str,
    seed: int,
    threads: int = 1,
    trunc_d: int | None = None,
) -> tuple[float, float]:
    """Mean of (sum_p f(i_E(p)) - c0(f) li(x))^2 over m sampled curves.

    Returns (sample_variance, normalized_ratio) where the ratio divides
    by x^2 / (log x)^2, the scale of the second-moment bound.
    """
    if m < 2:
        raise ValueError("variance needs m >= 2 curves")
    af_obj = builtin(af) if isinstance(af, str) else af
    c0 = c0_series(af_obj, trunc_d) if trunc_d else c0_series(af_obj)
    center = c0.value * log_integral(x)
    sums = _box_sums(box, x, m, seed, af_obj.name, threads, unit_weighted=False)
    sample_variance = kahan_sum((s - center) ** 2 for s in sums) / m
    normalized = sample_variance * math.log(x) ** 2 / x**2
    return sample_variance, normalized
