"""Per-prime arithmetic tables.

Everything downstream (characters, Gauss sums, Kloosterman rows) reads from a
single immutable :class:`PrimeContext`, so a context is built once per prime
and shared.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NotPrime, TooSmall, ZeroResidue

logger = logging.getLogger(__name__)

# Deterministic Miller-Rabin witnesses, valid for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic primality test for n < 2**64."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization; fine for desk-scale n."""
    factors: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError(f"mobius needs n >= 1, got {n}")
    sign = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            sign = -sign
        d += 1 if d == 2 else 2
    if n > 1:
        sign = -sign
    return sign


@lru_cache(maxsize=None)
def mobius_table(limit: int) -> np.ndarray:
    """mu(m) for 0 <= m < limit (entry 0 is unused and set to 0)."""
    out = np.zeros(max(limit, 1), dtype=np.int64)
    for m in range(1, limit):
        out[m] = mobius(m)
    out.flags.writeable = False
    return out


def primitive_root(p: int) -> int:
    """Smallest generator of (Z/pZ)^*."""
    if p == 2:
        return 1
    prime_factors = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in prime_factors):
            return g
    raise NotPrime(f"{p} has no primitive root")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PrimeContext:
    """Precomputed tables for an odd prime p.

    ``ind[u]`` is the discrete log of u to base ``g`` (ind[0] = -1 marks the
    zero residue), ``inv[u]`` the inverse (inv[0] = 0), ``e_p[a] = e(a/p)``
    and ``e_pm1[k] = e(k/(p-1))``.
    """

    p: int
    g: int
    ind: np.ndarray
    inv: np.ndarray
    pow_g: np.ndarray
    e_p: np.ndarray
    e_pm1: np.ndarray
    small: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.p - 1

    def cached(self, key, factory):
        """Memoize a derived table on the context (thread-safe insert)."""
        try:
            return self._cache[key]
        except KeyError:
            pass
        value = factory()
        with self._lock:
            return self._cache.setdefault(key, value)

    def __repr__(self) -> str:
        return f"PrimeContext(p={self.p}, g={self.g})"


def _roots_of_unity(n: int) -> np.ndarray:
    """e(a/n) from the exact angle per entry, with e((n-a)/n) = conj e(a/n) bit for bit."""
    half = n // 2
    a = np.arange(half + 1, dtype=np.float64)
    out = np.empty(n, dtype=np.complex128)
    out[: half + 1] = np.exp(2j * np.pi * a / n)
    if n % 2 == 0:
        out[half] = -1.0
    out[half + 1 :] = np.conj(out[1 : n - half][::-1])
    return out


def build_prime_context(p: int) -> PrimeContext:
    p = int(p)
    if p < 3:
        raise TooSmall(f"p={p}: need an odd prime >= 3")
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    small = p < 5
    if small:
        logger.warning("p=%d has no even primitive characters", p)

    g = primitive_root(p)
    n = p - 1
    pow_g = np.empty(n, dtype=np.int64)
    x = 1
    for k in range(n):
        pow_g[k] = x
        x = x * g % p
    ind = np.full(p, -1, dtype=np.int64)
    ind[pow_g] = np.arange(n, dtype=np.int64)
    # g^k * g^(n-k) = 1
    inv = np.zeros(p, dtype=np.int64)
    inv[pow_g] = pow_g[(-np.arange(n)) % n]

    e_p = _roots_of_unity(p)
    e_pm1 = _roots_of_unity(n)

    return PrimeContext(
        p=p,
        g=g,
        ind=_frozen(ind),
        inv=_frozen(inv),
        pow_g=_frozen(pow_g),
        e_p=_frozen(e_p),
        e_pm1=_frozen(e_pm1),
        small=small,
    )


def discrete_log(ctx: PrimeContext, u: int) -> int:
    r = int(u) % ctx.p
    if r == 0:
        raise ZeroResidue(f"{u} is 0 mod {ctx.p}")
    return int(ctx.ind[r])


def inverse(ctx: PrimeContext, u: int) -> int:
    r = int(u) % ctx.p
    if r == 0:
        raise ZeroResidue(f"{u} is 0 mod {ctx.p}")
    return int(ctx.inv[r])
