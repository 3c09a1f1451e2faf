"""Central values L(1/2, chi) for even primitive chi via approximate functional equations.

Two independent routes:

* ``central_value``: L = D + tau/sqrt(p) * conj(D), D = sum chi(n) n^-1/2 W(n/sqrt p)
* ``central_value_squared``: |L|^2 = 2 sum chi(n1) conj chi(n2) (n1 n2)^-1/2 V(n1 n2/p)

Each has a per-character naive form and an all-characters transform form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..arith import PrimeContext
from ..characters import (
    DirichletCharacter,
    char_values,
    character_sums,
    character_transform,
    even_primitive_indices,
    gauss_sum,
    gauss_sums,
)
from ..errors import NonvanishingError, OddCharacter
from ..specfun import DEFAULT_CONFIG, KernelConfig, kernel_cutoff, weight_V, weight_W


@dataclass(frozen=True)
class Truncation:
    length: int
    tail_bound: float


def _check_even_primitive(chi: DirichletCharacter) -> None:
    if not chi.even:
        raise OddCharacter(f"chi_{chi.j} mod {chi.p} is odd")
    if chi.principal:
        raise NonvanishingError("principal character is not primitive")


def _tail_bound(kernel, x0: float, scale: float, weight_exp: float) -> float:
    """Bound sum_{n > x0*scale} n^-weight_exp K(n/scale) <= scale * int_{x0 - 1/scale}^inf K."""
    lo = max(x0 - 1.0 / scale, 1e-12)
    xs = np.linspace(lo, lo + 20.0, 4001)
    vals = np.abs(kernel(xs))
    return float(scale * np.trapezoid(vals, xs) * max(lo * scale, 1.0) ** (-weight_exp))


def first_afe_terms(ctx: PrimeContext, cfg: KernelConfig = DEFAULT_CONFIG):
    """(n, n^-1/2 W(n/sqrt p)) for n = 1..N, with N from the kernel floor."""

    def build():
        scale = math.sqrt(ctx.p)
        x0 = kernel_cutoff(lambda t: weight_W(t, cfg), cfg.floor)
        N = int(math.ceil(x0 * scale))
        n = np.arange(1, N + 1)
        a = weight_W(n / scale, cfg) / np.sqrt(n)
        tail = _tail_bound(lambda t: weight_W(t, cfg), x0, scale, 0.5)
        return n, a, Truncation(N, tail)

    return ctx.cached(("afe1", cfg), build)


def second_afe_terms(ctx: PrimeContext, cfg: KernelConfig = DEFAULT_CONFIG):
    """All pairs (n1, n2) with n1 n2 <= X and weight (n1 n2)^-1/2 V(n1 n2/p)."""

    def build():
        x0 = kernel_cutoff(lambda t: weight_V(t, cfg), cfg.floor)
        X = int(math.ceil(x0 * ctx.p))
        N = np.arange(1, X + 1)
        wN = weight_V(N / ctx.p, cfg) / np.sqrt(N)
        counts = X // N
        n1 = np.repeat(N, counts)
        starts = np.cumsum(counts) - counts
        n2 = np.arange(n1.size) - np.repeat(starts, counts) + 1
        w = wN[n1 * n2 - 1]
        tail = _tail_bound(lambda t: weight_V(t, cfg), x0, ctx.p, 0.5) * math.log(X + 1)
        return n1, n2, w, Truncation(X, tail)

    return ctx.cached(("afe2", cfg), build)


def central_value(
    ctx: PrimeContext, chi: DirichletCharacter, cfg: KernelConfig = DEFAULT_CONFIG
) -> complex:
    """L(1/2, chi) for a single even primitive chi (direct summation)."""
    _check_even_primitive(chi)
    n, a, _ = first_afe_terms(ctx, cfg)
    D = complex(np.sum(char_values(ctx, chi, n) * a))
    tau = gauss_sum(ctx, chi)
    return D + tau / math.sqrt(ctx.p) * D.conjugate()


def central_values(ctx: PrimeContext, cfg: KernelConfig = DEFAULT_CONFIG) -> np.ndarray:
    """L(1/2, chi_j) for all even primitive chi, ordered by j = 2, 4, ..., p-3."""
    n, a, _ = first_afe_terms(ctx, cfg)
    js = even_primitive_indices(ctx)
    D = character_sums(ctx, n, a)[js]
    tau = gauss_sums(ctx)[js]
    return D + tau / math.sqrt(ctx.p) * np.conj(D)


def central_value_squared(
    ctx: PrimeContext, chi: DirichletCharacter, cfg: KernelConfig = DEFAULT_CONFIG
) -> float:
    """|L(1/2, chi)|^2 via the V-weighted double sum (direct summation)."""
    _check_even_primitive(chi)
    n1, n2, w, _ = second_afe_terms(ctx, cfg)
    total = 2 * np.sum(char_values(ctx, chi, n1) * np.conj(char_values(ctx, chi, n2)) * w)
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"|L|^2 has imaginary residue {total.imag:.3e}")
    return float(total.real)


def central_values_squared(
    ctx: PrimeContext, cfg: KernelConfig = DEFAULT_CONFIG
) -> np.ndarray:
    """|L(1/2, chi_j)|^2 via the V-form for all even primitive chi (one transform)."""
    n1, n2, w, _ = second_afe_terms(ctx, cfg)
    r1, r2 = n1 % ctx.p, n2 % ctx.p
    keep = (r1 != 0) & (r2 != 0)
    k = (ctx.ind[r1[keep]] - ctx.ind[r2[keep]]) % (ctx.p - 1)
    folded = np.bincount(k, weights=w[keep], minlength=ctx.p - 1).astype(np.complex128)
    vals = 2 * character_transform(ctx, folded)[even_primitive_indices(ctx)]
    return vals.real
