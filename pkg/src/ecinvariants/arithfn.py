"""Arithmetic-function pairs f(n) = sum_{d|n} g(d).

Carries the function families used in the family averages together
with their Moebius pair g and a declared growth bound on the partial
sums of |g|. Values are exact (int or Fraction) whenever f is
rational-valued, floating point otherwise, so census identities can
be checked in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .numtheory import factorize_with_spf, sieve_primes, spf_table

DEFAULT_D = 100_000

_LOG2_INV = 1.0 / math.log(2)

Value = int | float | Fraction


@dataclass(frozen=True)
class GrowthBound:
    """Declared bound sum_{d <= x} |g(d)| <= const * x^(1+beta) * (log x)^gamma."""

    beta: float
    gamma: float
    const: float


class GrowthViolation(ValueError):
    def __init__(self, name: str, witness_x: int, ratio: float, declared: float):
        super().__init__(
            f"{name}: declared growth constant {declared} violated at x = {witness_x} "
            f"(needs {ratio:.6g})"
        )
        self.witness_x = witness_x
        self.ratio = ratio


class ArithmeticFunction:
    """A pair (f, g) with f(n) = sum_{d|n} g(d), tabulated on [1, D]."""

    def __init__(
        self,
        name: str,
        f_table: Sequence[Value],
        g_table: Sequence[Value],
        multiplicative: bool,
        exact: bool,
        growth: GrowthBound,
        f_prime_power: Callable[[int, int], Value] | None = None,
    ):
        self.name = name
        self._f = f_table
        self._g = g_table
        self.multiplicative = multiplicative
        self.exact = exact
        self.growth = growth
        self._f_pp = f_prime_power

    @property
    def D(self) -> int:
        return len(self._f) - 1

    def f(self, n: int) -> Value:
        if not 1 <= n <= self.D:
            raise ValueError(f"f({n}) outside the tabulated range [1, {self.D}]")
        return self._f[n]

    def g(self, n: int) -> Value:
        if not 1 <= n <= self.D:
            raise ValueError(f"g({n}) outside the tabulated range [1, {self.D}]")
        return self._g[n]

    def g_prime_power(self, q: int, j: int) -> Value:
        """g(q^j) for prime q, from the closed form of f; multiplicative only."""
        if not self.multiplicative or self._f_pp is None:
            raise ValueError(f"{self.name} has no prime-power closed form")
        if j < 1:
            raise ValueError("j must be >= 1")
        return self._f_pp(q, j) - self._f_pp(q, j - 1)

    def __repr__(self) -> str:
        return f"ArithmeticFunction({self.name!r}, D={self.D})"


def moebius_invert(f: Callable[[int], Value], D: int) -> list[Value]:
    """The table g on [1, D] with f(n) = sum_{d|n} g(d); index 0 unused.

    Sieve-style in-place inversion, exact for int/Fraction-valued f.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    g: list[Value] = [0] + [f(n) for n in range(1, D + 1)]
    for d in range(1, D + 1):
        gd = g[d]
        if gd:
            for m in range(2 * d, D + 1, d):
                g[m] -= gd
    return g


def _tables_from_prime_power(
    f_pp: Callable[[int, int], Value], D: int, one: Value
) -> tuple[list[Value], list[Value]]:
    """f and g tables for a multiplicative f given by its prime-power values."""
    spf = spf_table(D)
    f_t: list[Value] = [0, one]
    g_t: list[Value] = [0, one]
    cache_f: dict[tuple[int, int], Value] = {}
    cache_g: dict[tuple[int, int], Value] = {}
    for n in range(2, D + 1):
        fv = one
        gv = one
        for q, e in factorize_with_spf(n, spf):
            key = (q, e)
            if key not in cache_f:
                cache_f[key] = f_pp(q, e)
                cache_g[key] = f_pp(q, e) - f_pp(q, e - 1)
            fv = fv * cache_f[key]
            gv = gv * cache_g[key]
        f_t.append(fv)
        g_t.append(gv)
    return f_t, g_t


def _invert_numeric(f_t: Sequence[float]) -> np.ndarray:
    g = np.array(f_t, dtype=np.float64)
    for d in range(1, len(f_t) - 1):
        if g[d]:
            g[2 * d :: d] -= g[d]
    return g


def _invert_int(f_t: Sequence[int]) -> list[int]:
    g = list(f_t)
    for d in range(1, len(f_t) - 1):
        gd = g[d]
        if gd:
            for m in range(2 * d, len(f_t), d):
                g[m] -= gd
    return g


@lru_cache(maxsize=8)
def _omega_tables(D: int) -> tuple[np.ndarray, np.ndarray]:
    omega = np.zeros(D + 1, dtype=np.int64)
    big = np.zeros(D + 1, dtype=np.int64)
    for p in sieve_primes(D):
        omega[p::p] += 1
        pk = p
        while pk <= D:
            big[pk::pk] += 1
            pk *= p
    return omega, big


def _parse_spec(spec: str) -> tuple[str, list[str]]:
    if ":" in spec:
        base, _, rest = spec.partition(":")
        return base, [s for s in rest.split(",") if s]
    return spec, []


def _int_param(params: list[str], idx: int, what: str) -> int:
    try:
        return int(params[idx])
    except (IndexError, ValueError):
        raise ValueError(f"builtin needs integer parameter {what}") from None


def _float_param(params: list[str], idx: int, what: str) -> float:
    try:
        return float(params[idx])
    except (IndexError, ValueError):
        raise ValueError(f"builtin needs numeric parameter {what}") from None


@lru_cache(maxsize=64)
def builtin(spec: str, D: int = DEFAULT_D) -> ArithmeticFunction:
    """A named ArithmeticFunction, parameters encoded as `name:p1,p2`.

    Names: cyclicity, tau, power_neg:k, power:beta, sigma:beta,
    log_pow:alpha, omega_pow:k, bigomega_pow:k, two_pow_k_omega:k,
    tau_k_pow:k,r. Growth constants were fixed by scanning the partial
    sums of |g| to 10^5 and keeping a margin; validate_growth rechecks
    any of them on demand.
    """
    name, params = _parse_spec(spec)

    if name == "cyclicity":
        # f = characteristic function of {1}; g is the Moebius function
        f_pp = lambda q, j: 1 if j == 0 else 0
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1)
        return ArithmeticFunction(spec, f_t, g_t, True, True, GrowthBound(0, 0, 1.0), f_pp)

    if name == "tau":
        f_pp = lambda q, j: j + 1
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1)
        return ArithmeticFunction(spec, f_t, g_t, True, True, GrowthBound(0, 0, 1.0), f_pp)

    if name == "power_neg":
        k = _int_param(params, 0, "k")
        if k < 1:
            raise ValueError("power_neg requires k >= 1")
        f_pp = lambda q, j: Fraction(1, q ** (j * k))
        f_t, g_t = _tables_from_prime_power(f_pp, D, Fraction(1))
        return ArithmeticFunction(spec, f_t, g_t, True, True, GrowthBound(0, 1, 1.5), f_pp)

    if name == "power":
        beta = _float_param(params, 0, "beta")
        if not 0 <= beta < 1:
            raise ValueError("power requires 0 <= beta < 1")
        f_pp = lambda q, j: float(q) ** (j * beta)
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1.0)
        return ArithmeticFunction(spec, f_t, g_t, True, False, GrowthBound(beta, 1, 1.5), f_pp)

    if name == "sigma":
        beta = _float_param(params, 0, "beta")
        if not 0 <= beta < 1:
            raise ValueError("sigma requires 0 <= beta < 1")
        # f(n) = sum_{m|n} m^beta, so g(d) = d^beta directly
        f_pp = lambda q, j: sum(float(q) ** (i * beta) for i in range(j + 1))
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1.0)
        return ArithmeticFunction(spec, f_t, g_t, True, False, GrowthBound(beta, 0, 1.0), f_pp)

    if name == "log_pow":
        alpha = _float_param(params, 0, "alpha")
        if alpha <= 0:
            raise ValueError("log_pow requires alpha > 0")
        f_t = np.zeros(D + 1, dtype=np.float64)
        f_t[1:] = np.log(np.arange(1, D + 1, dtype=np.float64)) ** alpha
        g_t = _invert_numeric(f_t)
        return ArithmeticFunction(
            spec, f_t.tolist(), g_t.tolist(), False, False, GrowthBound(0, alpha + 1, 1.5)
        )

    if name in ("omega_pow", "bigomega_pow"):
        k = _int_param(params, 0, "k")
        if k < 0:
            raise ValueError(f"{name} requires k >= 0")
        omega, big = _omega_tables(D)
        base = omega if name == "omega_pow" else big
        f_t = [0] + [int(v) ** k for v in base[1:]]
        g_t = _invert_int(f_t)
        # the ratio peaks near x = 2 where (log x)^gamma dips; margin 2
        const = 2.0 * _LOG2_INV ** (k + 1)
        return ArithmeticFunction(spec, f_t, g_t, False, True, GrowthBound(0, k + 1, const))

    if name == "two_pow_k_omega":
        k = _int_param(params, 0, "k")
        if k < 0:
            raise ValueError("two_pow_k_omega requires k >= 0")
        f_pp = lambda q, j: 2**k if j >= 1 else 1
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1)
        gamma = max(2**k - 2, 0)
        # sum_{d<=2} |g| = 2^k, so the x = 2 ratio is 2^(k-1) / (log 2)^gamma
        const = 1.5 * 2**k * _LOG2_INV**gamma
        return ArithmeticFunction(spec, f_t, g_t, True, True, GrowthBound(0, gamma, const), f_pp)

    if name == "tau_k_pow":
        k = _int_param(params, 0, "k")
        r = _int_param(params, 1, "r")
        if k < 1 or r < 0:
            raise ValueError("tau_k_pow requires k >= 1 and r >= 0")
        f_pp = lambda q, j: math.comb(j + k - 1, k - 1) ** r
        f_t, g_t = _tables_from_prime_power(f_pp, D, 1)
        gamma = max(k**r - 2, 0)
        const = 1.5 * k**r * _LOG2_INV**gamma
        return ArithmeticFunction(spec, f_t, g_t, True, True, GrowthBound(0, gamma, const), f_pp)

    raise ValueError(f"unknown builtin arithmetic function {spec!r}")


def validate_growth(af: ArithmeticFunction, X: int) -> float:
    """Minimal c* with sum_{d<=x} |g(d)| <= c* x^(1+beta) (log x)^gamma on [2, X].

    x = 1 is skipped when gamma > 0 (the bound is vacuous at log x = 0).
    Raises GrowthViolation when c* exceeds the declared constant.
    """
    if X < 2:
        raise ValueError("X must be >= 2")
    if X > af.D:
        raise ValueError(f"X exceeds the tabulated range {af.D}")
    beta, gamma = af.growth.beta, af.growth.gamma
    partial = 0.0
    c_star = 0.0
    witness = 2
    start = 1 if gamma == 0 else 2
    partial = sum(float(abs(af.g(n))) for n in range(1, start))
    for x in range(start, X + 1):
        partial += float(abs(af.g(x)))
        ratio = partial / (x ** (1 + beta) * (math.log(x) ** gamma if gamma else 1.0))
        if ratio > c_star:
            c_star = ratio
            witness = x
    if c_star > af.growth.const:
        raise GrowthViolation(af.name, witness, c_star, af.growth.const)
    return c_star
