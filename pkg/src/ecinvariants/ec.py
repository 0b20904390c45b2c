"""Elliptic curves over prime fields.

Weierstrass curves y^2 = x^3 + a x + b over F_p with p >= 5, affine
chord-tangent arithmetic, O(p) character-sum point counting, and
certified computation of the group structure Z/i x Z/e with i | e.

Points are plain ``(x, y)`` tuples; ``None`` is the point at infinity.
Per-prime quadratic-residue and square-root tables are built once and
shared read-only across curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numtheory import Factorization, factorize, is_prime

ENUM_LIMIT = 10_000          # deterministic enumeration bound for structure work
TABLE_LIMIT = 1 << 20        # residue tables are dense arrays below this
COUNT_LIMIT = 1 << 31        # hard cap for the O(p) counting sweep
FIELD_LIMIT = 1 << 61

SAMPLE_BUDGET = 4096         # random points before giving up certification
STABLE_SAMPLES = 40          # consecutive stable lcm draws; failure <= 2^-40

Point = tuple[int, int] | None
INFINITY: Point = None


class BadReduction(ValueError):
    """Pair (a, b) does not define an elliptic curve over F_p.

    ``reason`` is "singular" when 4a^3 + 27b^2 = 0 with (a, b) != (0, 0),
    and "excluded" for the pair (0, 0).
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class Uncertified(RuntimeError):
    """Group-structure certification did not converge within budget."""


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not 5 <= self.p < FIELD_LIMIT:
            raise ValueError(f"field size must be in [5, 2^61), got {self.p}")
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")


@dataclass(frozen=True)
class Curve:
    field: PrimeField
    a: int
    b: int

    def __post_init__(self):
        p = self.field.p
        if not (0 <= self.a < p and 0 <= self.b < p):
            raise ValueError("coefficients must be reduced mod p")
        if self.a == 0 and self.b == 0:
            raise BadReduction("excluded", "the pair (0, 0) is excluded")
        if (4 * self.a**3 + 27 * self.b**2) % p == 0:
            raise BadReduction("singular", f"singular curve ({self.a}, {self.b}) mod {p}")

    @property
    def p(self) -> int:
        return self.field.p


@dataclass(frozen=True)
class GroupStructure:
    """E(F_p) isomorphic to Z/i x Z/e with i | e, i * e = N."""

    N: int
    i: int
    e: int
    trace: int

    def __post_init__(self):
        if self.i * self.e != self.N or self.e % self.i:
            raise ValueError(f"inconsistent structure ({self.N}, {self.i}, {self.e})")


def make_curve(field: PrimeField, a: int, b: int) -> Curve:
    """Validated curve construction; raises BadReduction when (a, b) is bad."""
    p = field.p
    return Curve(field, a % p, b % p)


def on_curve(c: Curve, P: Point) -> bool:
    if P is None:
        return True
    x, y = P
    p = c.p
    if not (0 <= x < p and 0 <= y < p):
        return False
    return (y * y - (x * x + c.a) * x - c.b) % p == 0


def _require_on_curve(c: Curve, P: Point) -> None:
    if not on_curve(c, P):
        raise ValueError(f"point {P} is not on the curve")


def _add(P: Point, Q: Point, a: int, p: int) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def _neg(P: Point, p: int) -> Point:
    if P is None:
        return None
    return (P[0], (-P[1]) % p)


def _mul(k: int, P: Point, a: int, p: int) -> Point:
    if k == 0 or P is None:
        return None
    R: Point = None
    Q = P
    while k:
        if k & 1:
            R = _add(R, Q, a, p)
        k >>= 1
        if k:
            Q = _add(Q, Q, a, p)
    return R


def point_add(c: Curve, P: Point, Q: Point) -> Point:
    """Chord-tangent sum P + Q; infinity is the identity."""
    _require_on_curve(c, P)
    _require_on_curve(c, Q)
    return _add(P, Q, c.a, c.p)


def point_neg(c: Curve, P: Point) -> Point:
    _require_on_curve(c, P)
    return _neg(P, c.p)


def scalar_mul(c: Curve, k: int, P: Point) -> Point:
    """kP by double-and-add; 0P is infinity."""
    if k < 0:
        raise ValueError("scalar must be nonnegative")
    _require_on_curve(c, P)
    return _mul(k, P, c.a, c.p)


def legendre(z: int, p: int) -> int:
    """Legendre symbol (z/p) in {-1, 0, 1}."""
    z %= p
    if z == 0:
        return 0
    t = pow(z, (p - 1) >> 1, p)
    return 1 if t == 1 else -1


def sqrt_mod(z: int, p: int) -> int | None:
    """A square root of z mod p (Tonelli-Shanks), or None for non-residues."""
    z %= p
    if z == 0:
        return 0
    if legendre(z, p) != 1:
        return None
    if p % 4 == 3:
        return pow(z, (p + 1) >> 2, p)
    # p = 1 mod 4: full Tonelli-Shanks
    q = p - 1
    s = 0
    while q % 2 == 0:
        q >>= 1
        s += 1
    n = 2
    while legendre(n, p) != -1:
        n += 1
    g = pow(n, q, p)
    x = pow(z, (q + 1) >> 1, p)
    t = pow(z, q, p)
    r = s
    while t != 1:
        t2 = t
        m = 0
        while t2 != 1:
            t2 = t2 * t2 % p
            m += 1
        w = pow(g, 1 << (r - m - 1), p)
        g = w * w % p
        x = x * w % p
        t = t * g % p
        r = m
    return x


def smallest_nonresidue(p: int) -> int:
    v = 2
    while legendre(v, p) != -1:
        v += 1
    return v


def quadratic_twist(c: Curve, v: int | None = None) -> Curve:
    """The twist (a, b) -> (a v^2, b v^3) by a non-residue v."""
    p = c.p
    if v is None:
        v = smallest_nonresidue(p)
    elif legendre(v, p) != -1:
        raise ValueError(f"{v} is a quadratic residue mod {p}")
    return Curve(c.field, c.a * v * v % p, c.b * v * v % p * v % p)


@lru_cache(maxsize=2048)
def _tables(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shared per-prime tables: (xs, x^3 mod p, #solutions of y^2=z, a sqrt of z)."""
    xs = np.arange(p, dtype=np.int64)
    sq = xs * xs % p
    x3 = sq * xs % p
    nsol = np.zeros(p, dtype=np.int8)
    np.add.at(nsol, sq, 1)
    sqrt_t = np.zeros(p, dtype=np.int64)
    sqrt_t[sq] = xs
    return xs, x3, nsol, sqrt_t


def _vec_modpow(base: np.ndarray, exp: int, p: int) -> np.ndarray:
    out = np.ones_like(base)
    b = base % p
    while exp:
        if exp & 1:
            out = out * b % p
        exp >>= 1
        if exp:
            b = b * b % p
    return out


def _count_chunked(p: int, a: int, b: int) -> int:
    half = (p - 1) >> 1
    total = 0
    chunk = 1 << 18
    for start in range(0, p, chunk):
        x = np.arange(start, min(start + chunk, p), dtype=np.int64)
        t = x * x % p
        t = t * x % p
        z = (t + a * x % p + b) % p
        leg = _vec_modpow(z, half, p)
        total += 2 * int((leg == 1).sum()) + int((z == 0).sum())
    return 1 + total


def count_points(c: Curve) -> int:
    """#E(F_p) including infinity, via the quadratic-character sweep.

    O(p) work; rejected above 2^31 (no sub-linear counting here).
    """
    p = c.p
    if p > COUNT_LIMIT:
        raise ValueError(f"p = {p} exceeds the counting sweep bound 2^31")
    if p > TABLE_LIMIT:
        return _count_chunked(p, c.a, c.b)
    xs, x3, nsol, _ = _tables(p)
    vals = (x3 + c.a * xs + c.b) % p
    return 1 + int(nsol[vals].sum())


def enumerate_points(c: Curve) -> list[Point]:
    """All points of E(F_p), infinity first; oracle scale p <= 10^4."""
    p = c.p
    if p > ENUM_LIMIT:
        raise ValueError(f"enumeration limited to p <= {ENUM_LIMIT}")
    xs, x3, nsol, sqrt_t = _tables(p)
    vals = (x3 + c.a * xs + c.b) % p
    pts: list[Point] = [None]
    for x in np.flatnonzero(nsol[vals]):
        x = int(x)
        y = int(sqrt_t[vals[x]])
        if y == 0:
            pts.append((x, 0))
        else:
            y1, y2 = sorted((y, p - y))
            pts.append((x, y1))
            pts.append((x, y2))
    return pts


def point_order(c: Curve, P: Point, n_fact: Factorization) -> int:
    """Exact order of P given the factorization of a multiple of it."""
    _require_on_curve(c, P)
    m = 1
    for q, e in n_fact:
        m *= q**e
    a, p = c.a, c.p
    if _mul(m, P, a, p) is not None:
        raise ValueError("claimed multiple does not annihilate the point")
    order = m
    for q, _ in n_fact:
        while order % q == 0 and _mul(order // q, P, a, p) is None:
            order //= q
    return order


def _valuation(n: int, q: int) -> int:
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v


def _ilog(n: int, q: int) -> int:
    # largest j with q^j <= n
    j = 0
    m = q
    while m <= n:
        j += 1
        m *= q
    return j


def _index_candidates(N: int, fact_n: Factorization, p: int) -> dict[int, tuple[int, int]]:
    """Primes q where the index part is undetermined: q -> (v_q(N), cap).

    The index i satisfies i | e, i | p - 1 and i <= sqrt(p) + 1, so its
    q-part is capped by min(v_q(N) // 2, v_q(p - 1), log_q(sqrt(p) + 1)).
    """
    sqcap = math.isqrt(p) + 1
    need: dict[int, tuple[int, int]] = {}
    for q, v in fact_n:
        if v < 2:
            continue
        cap = min(v // 2, _valuation(p - 1, q), _ilog(sqcap, q))
        if cap >= 1:
            need[q] = (v, cap)
    return need


class _ScanState:
    """Per-prime-q bounds on the index valuation, tightened during a scan."""

    __slots__ = ("q", "v", "lo", "hi", "maxj", "cof", "xseen")

    def __init__(self, q: int, v: int, cap: int, lo: int, N: int):
        self.q = q
        self.v = v
        self.lo = lo
        self.hi = cap
        self.maxj = 0
        self.cof = N // q**v
        self.xseen: set[int] = set()

    @property
    def resolved(self) -> bool:
        return self.lo == self.hi

    def absorb(self, P: Point, a: int, p: int) -> None:
        """Update bounds from one curve point."""
        Q = _mul(self.cof, P, a, p)
        chain = [Q]
        while chain[-1] is not None:
            chain.append(_mul(self.q, chain[-1], a, p))
        j = len(chain) - 1  # q-adic order of P's q-part
        if j > self.maxj:
            self.maxj = j
            self.hi = min(self.hi, self.v - j)
            if self.hi < self.lo:
                raise AssertionError("torsion scan bounds crossed")
        k = self.lo + 1
        if 1 <= k <= j:
            # chain[j - k] has order exactly q^k; count distinct x-coordinates.
            # More than q^(k-1) * phi(q^k) / 2 of them forces (Z/q^k)^2 torsion.
            self.xseen.add(chain[j - k][0])
            threshold = self.q ** (k - 1) * (self.q ** (k - 1) * (self.q - 1)) // 2
            if len(self.xseen) > threshold:
                self.lo = k
                self.xseen = set()


def _torsion_scan(
    c: Curve,
    N: int,
    need: dict[int, tuple[int, int]],
    prior_lo: dict[int, int],
    vals: np.ndarray,
    nsol_vals: np.ndarray,
    sqrt_t: np.ndarray,
) -> dict[int, int]:
    """Exact index valuations by a deterministic sweep over curve points.

    Iterates one representative per +-pair of affine points. For each
    undetermined prime q the scan maintains certified lower and upper
    bounds on v_q(i); it stops early once they meet, and after a full
    sweep v_q(e) = max_P v_q(ord P) makes the answer exact.
    """
    a, p = c.a, c.p
    states = [_ScanState(q, v, cap, prior_lo.get(q, 0), N) for q, (v, cap) in need.items()]
    for x in np.flatnonzero(nsol_vals):
        x = int(x)
        P = (x, int(sqrt_t[vals[x]]))
        live = False
        for st in states:
            if not st.resolved:
                st.absorb(P, a, p)
                live = live or not st.resolved
        if not live:
            break
    out = {}
    for st in states:
        out[st.q] = st.lo if st.resolved else st.v - st.maxj
    return out


def _exact_structure(c: Curve) -> GroupStructure:
    """Deterministic structure for table-scale p: counting plus torsion scan."""
    p = c.p
    xs, x3, nsol, sqrt_t = _tables(p)
    vals = (x3 + c.a * xs + c.b) % p
    nsol_vals = nsol[vals]
    N = 1 + int(nsol_vals.sum())
    fact_n = factorize(N)
    need = _index_candidates(N, fact_n, p)

    prior_lo: dict[int, int] = {}
    alphas: dict[int, int] = {}
    if 2 in need:
        # E[2] is full exactly when the cubic splits: 0, 1, or 3 roots.
        n_roots = int((vals == 0).sum())
        if n_roots < 3:
            alphas[2] = 0
            del need[2]
        elif need[2][1] == 1:
            alphas[2] = 1
            del need[2]
        else:
            prior_lo[2] = 1
    if need:
        alphas.update(_torsion_scan(c, N, need, prior_lo, vals, nsol_vals, sqrt_t))
    i = 1
    for q, alpha in alphas.items():
        i *= q**alpha
    return GroupStructure(N, i, N // i, p + 1 - N)


def _random_point(c: Curve, rng: np.random.Generator) -> Point:
    """Uniform draw over affine points up to the two-to-one y-fold."""
    p, a, b = c.p, c.a, c.b
    while True:
        x = int(rng.integers(0, p))
        z = ((x * x + a) * x + b) % p
        if z == 0:
            return (x, 0)
        if legendre(z, p) == 1:
            y = sqrt_mod(z, p)
            if int(rng.integers(0, 2)):
                y = p - y
            return (x, y)


def _sampled_structure(c: Curve, seed: int) -> GroupStructure:
    """Monte-Carlo structure with certification for p beyond table scale.

    Draws random points, accumulates the lcm L of their orders, and
    accepts once N/L divides gcd(L, p-1) and L has been stable for 40
    consecutive draws; a uniform point misses the q-part of the exponent
    with probability <= 1/2, so acceptance is wrong with probability
    <= 2^-40. Raises Uncertified when the budget runs out.
    """
    p = c.p
    N = count_points(c)
    fact_n = factorize(N)
    if not _index_candidates(N, fact_n, p):
        return GroupStructure(N, 1, N, p + 1 - N)
    mask64 = (1 << 64) - 1
    stream = (c.a * p + c.b) & mask64
    rng = np.random.Generator(np.random.Philox(key=((seed & mask64) << 64) | stream))
    L = 1
    stable = 0
    for _ in range(SAMPLE_BUDGET):
        P = _random_point(c, rng)
        o = point_order(c, P, fact_n)
        L2 = math.lcm(L, o)
        if L2 != L:
            L = L2
            stable = 0
        else:
            stable += 1
        i_cand = N // L
        if stable >= STABLE_SAMPLES and math.gcd(L, p - 1) % i_cand == 0:
            return GroupStructure(N, i_cand, L, p + 1 - N)
    raise Uncertified(f"no stable structure for ({c.a}, {c.b}) mod {p} after {SAMPLE_BUDGET} samples")


def group_structure(c: Curve, seed: int = 0) -> GroupStructure:
    """(N, i, e) with E(F_p) isomorphic to Z/i x Z/e and i | e | N.

    Deterministic for p <= 10^4; certified random sampling above that
    (failure probability <= 2^-40, explicit Uncertified error otherwise).
    The seed keys the sampling stream and has no effect at small p.
    """
    if c.p <= ENUM_LIMIT:
        return _exact_structure(c)
    return _sampled_structure(c, seed)


def has_full_torsion(c: Curve, d: int) -> bool:
    """Whether E[d](F_p) is all of (Z/d)^2, i.e. d divides the index."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return True
    p = c.p
    if (p - 1) % d or d > math.isqrt(p) + 1:
        return False
    return group_structure(c).i % d == 0
