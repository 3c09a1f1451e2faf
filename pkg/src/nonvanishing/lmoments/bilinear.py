"""The dyadic bilinear form B(M1, M2, N1, N2) and its Poisson-dual evaluation.

B = (p M1 M2 N1 N2)^-1/2 sum y(m1) y(m2) f(n1, n2) e(n2 inv(n1 m1 m2)/p)

with f(n1, n2) = V(n1 n2/p) f1(n1/N1) f2(n2/N2). Summing n1 by residue
classes mod p turns the phase into Kloosterman sums:

sum_n1 f(n1, n2) e(n2 inv(n1 c)/p) = (1/p) sum_{k mod p} F(-k, n2) S(k n2, inv(c); p),
F(k, n2) = sum_n1 f(n1, n2) e(k n1/p),

an identity at every finite p. Terms with p | n1 n2 m1 m2 are excluded on
both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..arith import PrimeContext
from ..errors import RangeViolation
from ..expsums import row_cache
from ..specfun import DEFAULT_CONFIG, KernelConfig, weight_V

BUMP_LO, BUMP_HI = 1.25, 1.75


def bump(x):
    """exp(1 - 1/(1 - (4x - 6)^2)) on (5/4, 7/4), zero outside; peak 1 at x = 3/2."""
    x = np.asarray(x, dtype=np.float64)
    u = 4 * x - 6
    inside = np.abs(u) < 1
    out = np.zeros_like(x)
    out[inside] = np.exp(1 - 1 / (1 - u[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class BilinearSpec:
    """Dyadic block parameters plus the mollifier data the ranges refer to.

    ``long_len``/``short_len`` are the mollifier piece lengths (MR and M);
    ``y1`` is indexed by m1 (long piece), ``y2`` by m2 (short piece).
    ``delta`` stands in for epsilon in N1 N2 <= p^(1+delta).
    """

    M1: int
    M2: int
    N1: float
    N2: float
    y1: np.ndarray = field(repr=False)
    y2: np.ndarray = field(repr=False)
    long_len: int
    short_len: int
    delta: float = 0.1

    def validate(self, p: int) -> None:
        if self.M1 < 1 or self.M2 < 1:
            raise RangeViolation("M1, M2 >= 1", f"M1={self.M1}, M2={self.M2}")
        if self.N1 < 0.5 or self.N2 < 0.5:
            raise RangeViolation("N1, N2 >= 1/2", f"N1={self.N1}, N2={self.N2}")
        if self.N1 * self.N2 > p ** (1 + self.delta):
            raise RangeViolation("N1*N2 <= p^(1+eps)", f"{self.N1 * self.N2:.4g} > {p ** (1 + self.delta):.4g}")
        if self.M1 > (self.long_len + 1) / 2:
            raise RangeViolation("M1 <= (MR+1)/2", f"M1={self.M1}, MR={self.long_len}")
        if self.M2 > (self.short_len + 1) / 2:
            raise RangeViolation("M2 <= (M+1)/2", f"M2={self.M2}, M={self.short_len}")
        if self.M1 * self.M2 * self.N1 < 1:
            raise RangeViolation("M1*M2*N1 >= 1", f"{self.M1 * self.M2 * self.N1:.4g}")

    def to_dict(self) -> dict:
        return {
            "M1": self.M1, "M2": self.M2, "N1": self.N1, "N2": self.N2,
            "long_len": self.long_len, "short_len": self.short_len, "delta": self.delta,
        }


def _window(N: float) -> np.ndarray:
    """Integers n in [N, 2N] where the bump f(n/N) can be nonzero."""
    lo = max(math.ceil(N), math.floor(BUMP_LO * N) + 1)
    hi = min(math.floor(2 * N), math.ceil(BUMP_HI * N) - 1)
    return np.arange(lo, hi + 1)


def _coef(y: np.ndarray, m: np.ndarray) -> np.ndarray:
    out = np.zeros(m.size)
    inside = m < y.size
    out[inside] = y[m[inside]]
    return out


@dataclass
class _Blocks:
    n1: np.ndarray
    n2: np.ndarray
    f: np.ndarray
    residues: np.ndarray
    weights: np.ndarray
    norm: float


def _blocks(ctx: PrimeContext, spec: BilinearSpec, cfg: KernelConfig) -> _Blocks:
    p = ctx.p
    spec.validate(p)
    n1 = _window(spec.N1)
    n2 = _window(spec.N2)
    n1 = n1[n1 % p != 0]
    n2 = n2[n2 % p != 0]
    m1 = np.arange(spec.M1, 2 * spec.M1)
    m2 = np.arange(spec.M2, 2 * spec.M2)
    mm1, mm2 = np.meshgrid(m1, m2, indexing="ij")
    w = np.outer(_coef(spec.y1, m1), _coef(spec.y2, m2))
    c = (mm1 * mm2) % p
    keep = (c != 0) & (w != 0)
    # fold coefficients by the residue of m1 m2
    residues, pos = np.unique(c[keep], return_inverse=True)
    weights = np.bincount(pos, weights=w[keep], minlength=residues.size)
    if n1.size and n2.size:
        prod = np.outer(n1, n2).astype(np.float64)
        f = weight_V(prod / p, cfg) * np.outer(bump(n1 / spec.N1), bump(n2 / spec.N2))
    else:
        f = np.zeros((n1.size, n2.size))
    norm = 1.0 / math.sqrt(p * spec.M1 * spec.M2 * spec.N1 * spec.N2)
    return _Blocks(n1, n2, f, residues, weights, norm)


def bilinear_form(
    ctx: PrimeContext, spec: BilinearSpec, cfg: KernelConfig = DEFAULT_CONFIG
) -> complex:
    p = ctx.p
    b = _blocks(ctx, spec, cfg)
    total = 0j
    for c, wc in zip(b.residues, b.weights):
        # inv(n1 c) for each n1
        r = ctx.inv[(b.n1 * int(c)) % p]
        phase = ctx.e_p[(np.outer(r, b.n2)) % p]
        total += wc * np.sum(b.f * phase)
    return complex(b.norm * total)


@dataclass
class PoissonDual:
    value: complex
    k_spectrum: np.ndarray = field(repr=False)

    @property
    def centered_k(self) -> np.ndarray:
        p = self.k_spectrum.size
        k = np.arange(p)
        return np.where(k <= p // 2, k, k - p)

    @property
    def k0(self) -> complex:
        return complex(self.k_spectrum[0])

    def spectrum_table(self) -> list[dict]:
        """Contribution per dual frequency, k in centered form (-k stored at p - k)."""
        order = np.argsort(self.centered_k, kind="stable")
        return [
            {"k": int(self.centered_k[i]), "re": float(self.k_spectrum[i].real), "im": float(self.k_spectrum[i].imag)}
            for i in order
        ]


def bilinear_poisson_dual(
    ctx: PrimeContext, spec: BilinearSpec, cfg: KernelConfig = DEFAULT_CONFIG
) -> PoissonDual:
    p = ctx.p
    b = _blocks(ctx, spec, cfg)
    spectrum = np.zeros(p, dtype=np.complex128)
    if b.n1.size and b.n2.size:
        k = np.arange(p)
        # F(-k, n2) = sum_n1 f(n1, n2) e(-k n1/p), shape (p, #n2)
        Fneg = np.conj(ctx.e_p[np.outer(k, b.n1) % p]) @ b.f
        rows = row_cache(ctx)
        for c, wc in zip(b.residues, b.weights):
            row = rows(int(ctx.inv[int(c)]))
            S = row[np.outer(k, b.n2) % p]
            spectrum += wc * np.sum(Fneg * S, axis=1)
    spectrum *= b.norm / p
    return PoissonDual(complex(np.sum(spectrum)), spectrum)


def envelopes(p: int, spec: BilinearSpec) -> dict:
    """The two analytic majorants with epsilon realized as p^delta."""
    d = spec.delta
    M, MR = spec.short_len, spec.long_len
    R = MR / M
    poisson = p ** d * math.sqrt(spec.M1 * spec.M2 * spec.N1 / (p * spec.N2)) + p ** (-d)
    bilinear = (
        (p ** d * spec.N2 * MR / spec.N1) ** 0.25
        + (p ** d * spec.N2 ** 2 * M ** 6 * R ** 2 / (spec.N1 ** 2 * p)) ** 0.125
        + p ** (-d)
    )
    return {"poisson": poisson, "bilinear": bilinear}


def random_spec(rng: np.random.Generator, p: int, long_len: int, short_len: int, y1, y2, delta: float = 0.1) -> BilinearSpec:
    """A random admissible BilinearSpec with nonempty n-windows."""
    while True:
        M1 = int(rng.integers(1, max(1, (long_len + 1) // 2) + 1))
        M2 = int(rng.integers(1, max(1, (short_len + 1) // 2) + 1))
        N1 = float(np.exp(rng.uniform(0, math.log(p))))
        cap = p ** (1 + delta) / N1
        N2 = float(np.exp(rng.uniform(math.log(0.5), math.log(max(cap, 0.6)))))
        spec = BilinearSpec(M1, M2, N1, N2, y1, y2, long_len, short_len, delta)
        try:
            spec.validate(p)
        except RangeViolation:
            continue
        if _window(N1).size and _window(N2).size:
            return spec
