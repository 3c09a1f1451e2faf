"""Dirichlet characters mod p, Gauss sums and family averages.

A character is identified by its exponent j: chi_j(g^k) = e(jk/(p-1)).
Values are always read from the shared root-of-unity table on the context,
never stored per character.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import PrimeContext
from .errors import NotCoprime


@dataclass(frozen=True)
class DirichletCharacter:
    p: int
    j: int

    def __post_init__(self):
        object.__setattr__(self, "j", self.j % (self.p - 1))

    @property
    def even(self) -> bool:
        return self.j % 2 == 0

    @property
    def principal(self) -> bool:
        return self.j == 0

    @property
    def primitive(self) -> bool:
        return self.j != 0

    def conj(self) -> DirichletCharacter:
        return DirichletCharacter(self.p, -self.j)


def enumerate_characters(ctx: PrimeContext) -> list[DirichletCharacter]:
    return [DirichletCharacter(ctx.p, j) for j in range(ctx.p - 1)]


def enumerate_even_primitive(ctx: PrimeContext) -> list[DirichletCharacter]:
    return [DirichletCharacter(ctx.p, j) for j in range(2, ctx.p - 1, 2)]


def even_primitive_indices(ctx: PrimeContext) -> np.ndarray:
    return np.arange(2, ctx.p - 1, 2)


def char_eval(ctx: PrimeContext, chi: DirichletCharacter, n: int) -> complex:
    r = int(n) % ctx.p
    if r == 0:
        return 0j
    return complex(ctx.e_pm1[(chi.j * int(ctx.ind[r])) % (ctx.p - 1)])


def char_values(ctx: PrimeContext, chi: DirichletCharacter, n) -> np.ndarray:
    """Vectorized chi(n) for an integer array n."""
    r = np.asarray(n, dtype=np.int64) % ctx.p
    k = ctx.ind[r]
    out = ctx.e_pm1[(chi.j * k) % (ctx.p - 1)]
    return np.where(r == 0, 0j, out)


def fold_by_index(ctx: PrimeContext, n, coeffs) -> np.ndarray:
    """Accumulate coefficients a_n into classes k = ind[n mod p].

    Terms with p | n are dropped since every character vanishes there.
    """
    n = np.asarray(n, dtype=np.int64)
    coeffs = np.asarray(coeffs)
    r = n % ctx.p
    keep = r != 0
    k = ctx.ind[r[keep]]
    c = coeffs[keep]
    size = ctx.p - 1
    if np.iscomplexobj(c):
        return np.bincount(k, weights=c.real, minlength=size) + 1j * np.bincount(
            k, weights=c.imag, minlength=size
        )
    return np.bincount(k, weights=c, minlength=size).astype(np.complex128)


def character_transform(ctx: PrimeContext, folded: np.ndarray) -> np.ndarray:
    """Given classes b_k, return (sum_k b_k e(jk/(p-1)))_j for every j."""
    size = ctx.p - 1
    return np.fft.ifft(folded) * size


def character_sums(ctx: PrimeContext, n, coeffs) -> np.ndarray:
    """sum_n a_n chi_j(n) for all j at once (one length p-1 FFT)."""
    return character_transform(ctx, fold_by_index(ctx, n, coeffs))


def gauss_sum(ctx: PrimeContext, chi: DirichletCharacter) -> complex:
    """tau_chi by direct summation over a = 1..p-1."""
    a = np.arange(1, ctx.p)
    return complex(np.sum(char_values(ctx, chi, a) * ctx.e_p[a]))


def gauss_sums(ctx: PrimeContext) -> np.ndarray:
    """tau_{chi_j} for every j, cached on the context.

    tau_j = sum_k e(jk/(p-1)) e(g^k/p), a single transform of e(g^k/p).
    """

    def build():
        out = character_transform(ctx, ctx.e_p[ctx.pow_g])
        out.flags.writeable = False
        return out

    return ctx.cached("gauss_sums", build)


def _check_units(ctx: PrimeContext, *ns: int) -> None:
    for n in ns:
        if int(n) % ctx.p == 0:
            raise NotCoprime(f"{n} is divisible by p={ctx.p}")


def even_pair_average(ctx: PrimeContext, n1: int, n2: int) -> complex:
    """(2/p) * sum over even primitive chi of chi(n1) conj(chi(n2)), by enumeration."""
    _check_units(ctx, n1, n2)
    js = even_primitive_indices(ctx)
    k = int(ctx.ind[int(n1) % ctx.p]) - int(ctx.ind[int(n2) % ctx.p])
    vals = ctx.e_pm1[(js * k) % (ctx.p - 1)]
    return complex(2.0 / ctx.p * np.sum(vals))


def even_pair_average_closed(p: int, n1, n2):
    """Closed form ((p-1)[n1 = +-n2 mod p] - 2)/p; vectorized over n1, n2."""
    n1 = np.asarray(n1) % p
    n2 = np.asarray(n2) % p
    hit = (n1 == n2) | ((n1 + n2) % p == 0)
    return ((p - 1) * hit - 2) / p


def gauss_twisted_average(ctx: PrimeContext, n1: int) -> complex:
    """(1/p) * sum over even primitive chi of tau_chi chi(n1), by enumeration."""
    _check_units(ctx, n1)
    js = even_primitive_indices(ctx)
    a = np.arange(1, ctx.p)
    k = ctx.ind[(a * (int(n1) % ctx.p)) % ctx.p]
    total = 0j
    for j in js:
        total += np.sum(ctx.e_pm1[(j * k) % (ctx.p - 1)] * ctx.e_p[a])
    return complex(total / ctx.p)


def gauss_twisted_average_closed(ctx: PrimeContext, n1):
    """Closed form ((p-1) cos(2 pi inv(n1)/p) + 1)/p; vectorized over n1."""
    r = np.asarray(n1) % ctx.p
    return ((ctx.p - 1) * np.cos(2 * np.pi * ctx.inv[r] / ctx.p) + 1) / ctx.p
