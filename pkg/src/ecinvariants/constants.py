"""Limiting constants with rigorous truncation-error intervals.

Evaluates the density constant of the family average for a Moebius
pair (f, g), its Euler-product form for multiplicative g, the moment
constants, and the prime-order (Koblitz-type) product. Every value
carries a tail_bound computed in closed form from the declared growth
triple, never guessed.

All accumulation is 64-bit floating point with Kahan compensation in
a fixed ascending order, so results are reproducible across platforms
and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .arithfn import DEFAULT_D, ArithmeticFunction, GrowthBound
from .numtheory import (
    factorize_with_spf,
    kahan_sum,
    phi_table,
    psi_table,
    sieve_primes,
    spf_table,
)

DEFAULT_P = 100_000

EPSILON = 0.125

# phi(d) >= PHI_FLOOR * d^(1 - EPSILON/2) for every d >= 1: the ratio is
# minimized at d = 210 (about 0.319, scanned through 2e6), and beyond that
# phi(d) > d / (e^gamma_E log log d + 3 / log log d) pushes it above 0.4.
PHI_FLOOR = 0.3
# hence 1 / (d psi(d) phi(d)^2) <= K_DENOM * d^(-4 + EPSILON)
K_DENOM = 1.0 / PHI_FLOOR**2

# pi(x) < PI_BOUND * x / log x for all x > 1
PI_BOUND = 1.26


@dataclass(frozen=True)
class ConstantValue:
    value: float
    tail_bound: float
    truncation: int
    method: str


def _poly_log_integral(D: float, u: float, gamma: float) -> float:
    """Upper bound for the integral of t^(-u-1) (log t)^gamma over [D, inf).

    Substituting log t = log D + w and splitting (log D + w)^gamma gives
    D^(-u) 2^max(gamma-1,0) ((log D)^gamma / u + Gamma(gamma+1) / u^(gamma+1)).
    Requires u > 0 and D >= 2.
    """
    if u <= 0:
        raise ValueError("tail integral diverges")
    logd = math.log(D)
    return (
        D**-u
        * 2.0 ** max(gamma - 1.0, 0.0)
        * (logd**gamma / u + math.gamma(gamma + 1.0) / u ** (gamma + 1.0))
    )


def _weighted_tail(growth: GrowthBound, D: int, s: float) -> float:
    """Upper bound for sum_{d > D} |g(d)| d^(-s) by partial summation.

    Uses sum_{d <= t} |g(d)| <= const t^(1+beta) (log t)^gamma, valid for
    t >= 2. For D = 1 the d = 2 term is bounded separately.
    """
    beta, gamma, c = growth.beta, growth.gamma, growth.const
    if s <= 1 + beta:
        raise ValueError("tail exponent too small for the declared growth")
    extra = 0.0
    if D < 2:
        extra = c * 2.0 ** (1 + beta) * math.log(2.0) ** gamma * 2.0**-s
        D = 2
    u = s - 1 - beta
    return extra + s * c * _poly_log_integral(float(D), u, gamma)


def c0_series(af: ArithmeticFunction, D: int = DEFAULT_D) -> ConstantValue:
    """sum_{d <= D} g(d) / (d psi(d) phi(d)^2) with a rigorous tail bound."""
    if af.growth.beta >= 2:
        raise ValueError("series requires declared beta < 2")
    if D < 1:
        raise ValueError("D must be >= 1")
    if D > af.D:
        raise ValueError(f"D exceeds the tabulated range {af.D}")
    phi = phi_table(D)
    psi = psi_table(D)
    terms = (
        float(af.g(d)) / (float(d) * float(psi[d]) * float(phi[d]) ** 2)
        for d in range(1, D + 1)
    )
    value = kahan_sum(terms)
    tail = K_DENOM * _weighted_tail(af.growth, D, 4.0 - EPSILON)
    return ConstantValue(value, tail, D, "series")


def _local_factor(af: ArithmeticFunction, q: int) -> float:
    """1 + sum_{j>=1} g(q^j) / (q^j psi(q^j) phi(q^j)^2), truncated when negligible."""
    total = 1.0
    qj = q
    qjm1 = 1
    for j in range(1, 64):
        denom = qj * (qjm1 * (q + 1)) * (qjm1 * (q - 1)) ** 2
        term = float(af.g_prime_power(q, j)) / float(denom)
        total += term
        if abs(term) < 1e-25 * max(1.0, abs(total)):
            break
        qjm1 = qj
        qj *= q
    return total


def _dyadic_prime_sum(start: float, term, peak: float = 0.0) -> float:
    """Rigorous upper bound on sum over primes p > start of term(p).

    term must be nonincreasing beyond max(start, peak); the band
    (start, start'] containing an interior maximum is bounded at the peak.
    Uses pi(x) < PI_BOUND x / log x per dyadic band.
    """
    lo = max(start, 2.0)
    total = 0.0
    if peak > lo:
        total += term(peak) * PI_BOUND * peak / math.log(peak)
        lo = peak
    for _ in range(600):
        hi = 2.0 * lo
        band = term(lo) * PI_BOUND * hi / math.log(hi)
        total += band
        if band < 1e-30 * max(total, 1e-300):
            break
        lo = hi
    return total


def c0_euler(af: ArithmeticFunction, P: int = DEFAULT_P) -> ConstantValue:
    """Euler-product form over primes <= P; multiplicative g only."""
    if not af.multiplicative:
        raise ValueError(f"{af.name} is not multiplicative")
    if P < 2:
        raise ValueError("P must be >= 2")
    beta, gamma, c = af.growth.beta, af.growth.gamma, af.growth.const
    if beta >= 1.5:
        raise ValueError("Euler tail bound requires declared beta < 1.5")
    value = 1.0
    for q in sieve_primes(P):
        value *= _local_factor(af, q)

    # |g(q^j)| <= c q^(j(1+beta)) (j log q)^gamma pointwise, so the omitted
    # local factor at q differs from 1 by at most sum_j of
    # K_DENOM c (j log q)^gamma q^(-j w) with w = 3 - EPSILON - beta > 1.
    w = 3.0 - EPSILON - beta

    def factor_bound(t: float) -> float:
        logt = math.log(t)
        s = 0.0
        for j in range(1, 200):
            inc = (j * logt) ** gamma * t ** (-j * w)
            s += inc
            if inc < 1e-32 * max(s, 1e-300):
                break
        return K_DENOM * c * s

    peak = math.exp(gamma / w) if gamma > 0 else 0.0
    delta_sum = _dyadic_prime_sum(float(P), factor_bound, peak=peak)
    if delta_sum > 0.5:
        raise ArithmeticError("prime cutoff too small for a meaningful tail bound")
    tail = abs(value) * math.expm1(2.0 * delta_sum)
    return ConstantValue(value, tail, P, "euler_product")


def cyclicity_constant(D: int = DEFAULT_D) -> ConstantValue:
    """The density of cyclic reductions: sum of mu(d) / (d psi(d) phi(d)^2)."""
    from .arithfn import builtin

    return c0_series(builtin("cyclicity", max(D, 1)), D)


@lru_cache(maxsize=64)
def moment_constant(k: int, D: int = DEFAULT_D) -> ConstantValue:
    """sum_{d <= D} (sum_{delta | d} mu(delta) delta^k) / (d^(k+1) psi(d) phi(d)^2).

    The numerator is multiplicative with value 1 - q^k at every prime
    power q^j, so it is computed exactly from the smallest-prime-factor
    table; |numerator| <= tau(d) d^k gives the tail.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if D < 1:
        raise ValueError("D must be >= 1")
    phi = phi_table(D)
    psi = psi_table(D)
    spf = spf_table(D)

    def term(d: int) -> float:
        h = 1
        for q, _ in factorize_with_spf(d, spf):
            h *= 1 - q**k
        return float(h) / (float(d) ** (k + 1) * float(psi[d]) * float(phi[d]) ** 2)

    value = kahan_sum(term(d) for d in range(1, D + 1))
    # summand bounded by K_DENOM tau(d) d^(-4+EPSILON); partial summation
    # against sum_{d <= t} tau(d) <= 2 t log t (t >= 3)
    tail_from = max(D, 3)
    tail = K_DENOM * (4.0 - EPSILON) * 2.0 * _poly_log_integral(
        float(tail_from), 3.0 - EPSILON, 1.0
    )
    for d in range(D + 1, tail_from + 1):
        tail += K_DENOM * 2.0 * d ** (-4.0 + EPSILON)  # tau(2), tau(3) = 2
    return ConstantValue(value, tail, D, "series")


@lru_cache(maxsize=64)
def koblitz_constant(P: int = DEFAULT_P) -> ConstantValue:
    """prod over primes l <= P of (1 - (l^2 - l - 1) / ((l-1)^3 (l+1)))."""
    if P < 2:
        raise ValueError("P must be >= 2")
    value = 1.0
    for q in sieve_primes(P):
        num = q * q - q - 1
        den = (q - 1) ** 3 * (q + 1)
        value *= 1.0 - num / den
    # each omitted factor is 1 - r with r <= 1.41 / l^2 (l >= 3) and
    # |log(1 - r)| <= r / (1 - r) <= 1.6 / l^2
    delta_sum = _dyadic_prime_sum(float(max(P, 2)), lambda t: 1.6 / (t * t))
    tail = abs(value) * math.expm1(delta_sum)
    return ConstantValue(value, tail, P, "euler_product")
