"""Elementary number-theoretic kernels.

Primes, exact 62-bit factorization, the classical multiplicative
functions, divisor enumeration, smooth-number counting, and the
logarithmic integral. Everything here is a pure function; cached
tables are immutable after construction.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.integrate import quad

FACTOR_LIMIT = 1 << 62

# Strong-probable-prime witnesses proven complete for n < 3.3 * 10^24,
# which covers every 64-bit input.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_TRIAL_LIMIT = 1 << 16

Factorization = tuple[tuple[int, int], ...]


def sieve_primes(limit: int) -> list[int]:
    """All primes <= limit, ascending. Empty for limit < 2."""
    if limit < 0:
        raise ValueError("limit must be nonnegative")
    if limit < 2:
        return []
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return [int(p) for p in np.flatnonzero(mask)]


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 2^64."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1


def factorize(n: int) -> Factorization:
    """Prime factorization of n as ((p1, e1), (p2, e2), ...), p ascending.

    Exact for 1 <= n < 2^62: trial division below 2^16, then
    deterministic Miller-Rabin plus Pollard rho for what remains.
    """
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    if n >= FACTOR_LIMIT:
        raise ValueError(f"{n} exceeds the 62-bit factorization bound")
    factors: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    # wheel over 6k +- 1
    p = 7
    while p * p <= n and p < _TRIAL_LIMIT:
        for q in (p - 2, p):
            while n % q == 0:
                factors[q] = factors.get(q, 0) + 1
                n //= q
        p += 6
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            factors[m] = factors.get(m, 0) + 1
            continue
        d = _pollard_rho(m)
        stack.append(d)
        stack.append(m // d)
    return tuple(sorted(factors.items()))


def divisors(n: int) -> list[int]:
    """All divisors of n, ascending."""
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def _tau_k(fact: Factorization, k: int) -> int:
    # number of ordered k-tuples with product n: multiplicative,
    # value C(e + k - 1, k - 1) at p^e
    out = 1
    for _, e in fact:
        out *= math.comb(e + k - 1, k - 1)
    return out


def mult_fn(name: str, n: int, k: int | None = None) -> int:
    """Evaluate a classical multiplicative function at n >= 1.

    Supported names: phi, psi (Dedekind: n * prod_{p|n} (1 + 1/p)),
    mu, tau, omega, big_omega, tau_k (requires k >= 1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fact = factorize(n)
    if name == "phi":
        out = 1
        for p, e in fact:
            out *= p ** (e - 1) * (p - 1)
        return out
    if name == "psi":
        out = 1
        for p, e in fact:
            out *= p ** (e - 1) * (p + 1)
        return out
    if name == "mu":
        if any(e > 1 for _, e in fact):
            return 0
        return -1 if len(fact) % 2 else 1
    if name == "tau":
        out = 1
        for _, e in fact:
            out *= e + 1
        return out
    if name == "omega":
        return len(fact)
    if name == "big_omega":
        return sum(e for _, e in fact)
    if name == "tau_k":
        if k is None or k < 1:
            raise ValueError("tau_k requires k >= 1")
        return _tau_k(fact, k)
    raise ValueError(f"unknown multiplicative function {name!r}")


def phi(n: int) -> int:
    return mult_fn("phi", n)


def psi(n: int) -> int:
    return mult_fn("psi", n)


def mu(n: int) -> int:
    return mult_fn("mu", n)


def tau(n: int) -> int:
    return mult_fn("tau", n)


@lru_cache(maxsize=32)
def mu_table(limit: int) -> np.ndarray:
    """mu(n) for n in [0, limit] via a linear sieve (mu_table(x)[0] = 0)."""
    mu_arr = np.zeros(limit + 1, dtype=np.int8)
    if limit >= 1:
        mu_arr[1] = 1
    primes: list[int] = []
    is_comp = np.zeros(limit + 1, dtype=bool)
    for i in range(2, limit + 1):
        if not is_comp[i]:
            primes.append(i)
            mu_arr[i] = -1
        for p in primes:
            if i * p > limit:
                break
            is_comp[i * p] = True
            if i % p == 0:
                mu_arr[i * p] = 0
                break
            mu_arr[i * p] = -mu_arr[i]
    return mu_arr


@lru_cache(maxsize=32)
def spf_table(limit: int) -> np.ndarray:
    """Smallest prime factor for n in [0, limit]; spf[p] = p for primes."""
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == p:
            sl = spf[p * p :: p]
            untouched = sl == np.arange(p * p, limit + 1, p)
            sl[untouched] = p
    return spf


def factorize_with_spf(n: int, spf: np.ndarray) -> Factorization:
    """Factorization of n <= len(spf) - 1 by repeated spf division."""
    out: list[tuple[int, int]] = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return tuple(out)


@lru_cache(maxsize=16)
def phi_table(limit: int) -> np.ndarray:
    """Euler phi(n) for n in [0, limit]."""
    arr = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if arr[p] == p:  # p prime: untouched so far
            arr[p::p] -= arr[p::p] // p
    return arr


@lru_cache(maxsize=16)
def psi_table(limit: int) -> np.ndarray:
    """Dedekind psi(n) = n * prod_{p|n} (1 + 1/p) for n in [0, limit]."""
    arr = np.arange(limit + 1, dtype=np.int64)
    is_comp = np.zeros(limit + 1, dtype=bool)
    for p in range(2, limit + 1):
        if not is_comp[p]:
            is_comp[p * p :: p] = True
            arr[p::p] += arr[p::p] // p
    return arr


def smooth_count(x: int, y: float) -> int:
    """Count 2 <= n <= x whose largest prime factor is <= y.

    n = 1 is excluded: its largest prime factor is taken as infinite,
    so it is never y-smooth.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if y <= 0:
        raise ValueError("y must be positive")
    if x < 2:
        return 0
    primes = sieve_primes(min(int(y), x))
    if not primes:
        return 0

    def count(bound: int, idx: int) -> int:
        # number of primes[idx:]-smooth integers in [1, bound], n = 1 included
        total = 1
        for j in range(idx, len(primes)):
            p = primes[j]
            if p > bound:
                break
            total += count(bound // p, j)
        return total

    return count(x, 0) - 1  # drop n = 1


def log_integral(x: float) -> float:
    """li(x) = integral of dt/log(t) from 2 to x by adaptive quadrature.

    Truncation error at most 1e-10; once li(x) itself exceeds ~1e6 the
    unavoidable float64 rounding of the result (a few ulps) dominates
    that target, so the enforced bound is max(1e-10, |li| * 1e-13).
    Integrates e^u / u over [log 2, log x] in panels of width 2.
    """
    if x < 2:
        raise ValueError("log_integral requires x >= 2")
    if x == 2:
        return 0.0
    lo, hi = math.log(2.0), math.log(x)
    total = 0.0
    est = 0.0
    a = lo
    while a < hi:
        b = min(a + 2.0, hi)
        v, e = quad(lambda u: math.exp(u) / u, a, b, epsabs=1e-13, epsrel=1e-13)
        total += v
        est += e
        a = b
    if est > max(1e-10, abs(total) * 1e-13):
        raise ArithmeticError(f"quadrature error estimate {est:.2e} above target")
    return total


def kahan_sum(values: Iterable[float]) -> float:
    """Compensated summation in a fixed input order."""
    total = 0.0
    comp = 0.0
    for v in values:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
