"""Kloosterman sums mod p and the exponential-sum estimates built on them.

S(x, y; p) = sum_{u mod p, u invertible} e((x u + y inv(u))/p)

A whole row h -> S(h, y; p) is one length-p transform of u -> e(y inv(u)/p),
which is what makes the fourth-moment and Hoelder checks cheap.
"""

from __future__ import annotations

import math
import threading
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .arith import PrimeContext
from .errors import NonInvertible, ScaleExceeded, WindowEmpty

REALITY_TOL = 1e-9


def _real(z, what: str):
    imag = np.max(np.abs(np.imag(z))) if np.size(z) else 0.0
    if imag > REALITY_TOL * max(1.0, float(np.max(np.abs(z))) if np.size(z) else 1.0):
        raise ArithmeticError(f"{what}: imaginary part {imag:.3e} is not negligible")
    return np.real(z)


def kloosterman(ctx: PrimeContext, x: int, y: int) -> float:
    """S(x, y; p) by direct summation over the p-1 units."""
    p = ctx.p
    u = np.arange(1, p)
    z = np.sum(ctx.e_p[(int(x) * u + int(y) * ctx.inv[u]) % p])
    return float(_real(z, "kloosterman"))


@dataclass(frozen=True)
class KloostermanRow:
    y: int
    values: np.ndarray


class RowCache:
    """LRU cache of Kloosterman rows keyed by y; concurrent reads, locked inserts."""

    def __init__(self, ctx: PrimeContext, capacity: int = 256):
        self.ctx = ctx
        self.capacity = capacity
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()

    def __call__(self, y: int) -> np.ndarray:
        y = int(y) % self.ctx.p
        row = self._rows.get(y)
        if row is not None:
            return row
        row = _compute_row(self.ctx, y)
        with self._lock:
            self._rows[y] = row
            self._rows.move_to_end(y)
            while len(self._rows) > self.capacity:
                self._rows.popitem(last=False)
        return row

    def __len__(self) -> int:
        return len(self._rows)


def _compute_row(ctx: PrimeContext, y: int) -> np.ndarray:
    p = ctx.p
    v = ctx.e_p[(y * ctx.inv) % p].copy()
    v[0] = 0.0
    # sum_u v[u] e(hu/p) = p * ifft(v)[h]
    row = _real(np.fft.ifft(v) * p, "kloosterman_row")
    row.flags.writeable = False
    return row


def row_cache(ctx: PrimeContext, capacity: int = 256) -> RowCache:
    return ctx.cached(("kloosterman_rows", capacity), lambda: RowCache(ctx, capacity))


def kloosterman_row(ctx: PrimeContext, y: int) -> KloostermanRow:
    y = int(y) % ctx.p
    return KloostermanRow(y, row_cache(ctx)(y))


def kloosterman_table(ctx: PrimeContext) -> np.ndarray:
    """Full p x p table K[x, y] = S(x, y; p), built row by row."""
    p = ctx.p
    return np.stack([_compute_row(ctx, y) for y in range(p)], axis=1)


def _inverses(ctx: PrimeContext, ms) -> list[int]:
    out = []
    for m in ms:
        r = int(m) % ctx.p
        if r == 0:
            raise NonInvertible(f"{m} is not invertible mod {ctx.p}")
        out.append(int(ctx.inv[r]))
    return out


def four_product_sum(ctx: PrimeContext, m1: int, m2: int, m3: int, m4: int) -> float:
    """sum_h prod_i S(h, inv(m_i); p) from cached rows."""
    rows = row_cache(ctx)
    ys = _inverses(ctx, (m1, m2, m3, m4))
    prod_ = rows(ys[0]) * rows(ys[1]) * rows(ys[2]) * rows(ys[3])
    return float(np.sum(prod_))


def four_product_identity(ctx: PrimeContext, m1: int, m2: int, m3: int, m4: int) -> float:
    """The same sum via p * sum_{u1+u2+u3+u4 = 0} e(sum_i inv(m_i) inv(u_i)/p).

    Enumerates (u1, u2, u3) over units; O(p^3), meant for small p only.
    """
    p = ctx.p
    y1, y2, y3, y4 = _inverses(ctx, (m1, m2, m3, m4))
    u = np.arange(1, p)
    u2, u3 = np.meshgrid(u, u, indexing="ij")
    base = (y2 * ctx.inv[u2] + y3 * ctx.inv[u3]) % p
    total = 0j
    for u1 in range(1, p):
        u4 = (-(u1 + u2 + u3)) % p
        phase = (y1 * int(ctx.inv[u1]) + base + y4 * ctx.inv[u4]) % p
        total += np.sum(np.where(u4 != 0, ctx.e_p[phase], 0.0))
    return float(_real(p * total, "four_product_identity"))


def is_degenerate_tuple(ms) -> bool:
    """True when no entry occurs exactly once (every value is repeated)."""
    return all(c >= 2 for c in Counter(ms).values())


@dataclass
class FourProductSweep:
    p: int
    m_max: int
    tuples: int
    max_ratio: float
    argmax: tuple
    degenerate_max_ratio: float
    weil_max_ratio: float


def four_product_sweep(ctx: PrimeContext, m_max: int = 12) -> FourProductSweep:
    """All tuples in [1, m_max]^4; records max |sum_h prod S| / p^(5/2) over tuples
    with an entry occurring exactly once, and, for the rest, the ratio to p^3."""
    p = ctx.p
    ms = list(range(1, m_max + 1))
    rows = row_cache(ctx, capacity=max(256, m_max))
    R = np.stack([rows(y) for y in _inverses(ctx, ms)])
    pair = (R[:, None, :] * R[None, :, :]).reshape(m_max * m_max, p)
    sums = (pair @ pair.T).reshape(m_max, m_max, m_max, m_max)
    best, arg, deg_best, count = 0.0, None, 0.0, 0
    scale = p ** 2.5
    for idx in product(range(m_max), repeat=4):
        tup = tuple(ms[i] for i in idx)
        val = abs(sums[idx])
        if is_degenerate_tuple(tup):
            deg_best = max(deg_best, val / p ** 3)
            continue
        count += 1
        if val / scale > best:
            best, arg = val / scale, tup
    return FourProductSweep(p, m_max, count, best, arg, deg_best, float(np.max(np.abs(R)) / (2 * math.sqrt(p))))


# ---------------------------------------------------------------------------
# nu(h): representation counts of h = n k inv(m1) mod p


@dataclass(frozen=True)
class NuWindows:
    """Inclusive integer windows; ``k_symmetric`` adds the negatives of the k window."""

    n: tuple[int, int]
    k: tuple[int, int]
    m1: tuple[int, int]
    k_symmetric: bool = False

    def values(self):
        for name in ("n", "k", "m1"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise WindowEmpty(f"window {name}=[{lo},{hi}] is empty")
        n = np.arange(self.n[0], self.n[1] + 1)
        k = np.arange(self.k[0], self.k[1] + 1)
        if self.k_symmetric:
            k = np.concatenate([-k[::-1], k])
        m1 = np.arange(self.m1[0], self.m1[1] + 1)
        return n, k, m1

    def size(self) -> int:
        n, k, m1 = self.values()
        return n.size * k.size * m1.size


@dataclass
class NuStats:
    windows: NuWindows
    nu: np.ndarray = field(repr=False)
    sum_nu: int
    sum_nu_sq: int
    sum_nu_43: float
    divisor_count: int | None = None
    products_below_p: bool = False

    def to_dict(self) -> dict:
        return {
            "windows": {"n": self.windows.n, "k": self.windows.k, "m1": self.windows.m1,
                        "k_symmetric": self.windows.k_symmetric},
            "sum_nu": self.sum_nu,
            "sum_nu_sq": self.sum_nu_sq,
            "sum_nu_43": self.sum_nu_43,
            "divisor_count": self.divisor_count,
            "products_below_p": self.products_below_p,
            "support": int(np.count_nonzero(self.nu)),
        }


def nu_histogram(ctx: PrimeContext, n, k, m1) -> np.ndarray:
    """nu[h] = #{(n, k, m1) : n k inv(m1) = h mod p} over the given value arrays.

    Values divisible by p are skipped (they have no place in h = n k inv(m1)).
    """
    p = ctx.p
    n = np.asarray(n) % p
    k = np.asarray(k) % p
    m1 = np.asarray(m1) % p
    n, k, m1 = n[n != 0], k[k != 0], m1[m1 != 0]
    nk = np.bincount((n[:, None] * k[None, :] % p).ravel(), minlength=p)
    nu = np.zeros(p, dtype=np.int64)
    # nu[h] = sum_{m} nk[h * m mod p]
    h = np.arange(p)
    for m in m1:
        nu += nk[(h * int(m)) % p]
    return nu


def divisor_equation_count(n, k, m1) -> int:
    """#{n k m1' = n' k' m1 in integers} = sum_v A(v)^2, A(v) = #{n k m1 = v}.

    Pure integer enumeration; independent of any modular arithmetic.
    """
    counts = Counter(int(a) * int(b) * int(c) for a in n for b in k for c in m1)
    return sum(c * c for c in counts.values())


def nu_statistics(ctx: PrimeContext, windows: NuWindows) -> NuStats:
    n, k, m1 = windows.values()
    nu = nu_histogram(ctx, n, k, m1)
    positive = n.min() > 0 and k.min() > 0 and m1.min() > 0
    below = bool(positive and int(n.max()) * int(k.max()) * int(m1.max()) < ctx.p)
    div = divisor_equation_count(n, k, m1) if positive and windows.size() <= 2_000_000 else None
    return NuStats(
        windows=windows,
        nu=nu,
        sum_nu=int(nu.sum()),
        sum_nu_sq=int(np.sum(nu * nu)),
        sum_nu_43=float(np.sum(nu.astype(float) ** (4.0 / 3.0))),
        divisor_count=div,
        products_below_p=below,
    )


# ---------------------------------------------------------------------------
# Hoelder pipeline for the glued trilinear sum


@dataclass(frozen=True)
class HolderSpec:
    """Dyadic blocks for sum_{k, n2, m1, m2} y1(m1) y2(m2) w(n2, k) S(k n2 inv(m1), inv(m2); p).

    k runs over 1 <= |k| <= min(p^(1+delta)/N1, (p-1)/2), n2 over [N2, 2N2],
    m1 over [M1, 2M1), m2 over [M2, 2M2). ``y1``/``y2`` are indexed by m and
    must satisfy |y| <= 1, as must the weight ``w``.
    """

    N1: float
    N2: float
    M1: int
    M2: int
    y1: np.ndarray
    y2: np.ndarray
    delta: float = 0.1
    weight: object = None

    def blocks(self, p: int):
        K = min(int(math.floor(p ** (1 + self.delta) / self.N1)), (p - 1) // 2)
        k = np.arange(1, K + 1)
        k = np.concatenate([-k[::-1], k])
        n2 = np.arange(math.ceil(self.N2), math.floor(2 * self.N2) + 1)
        m1 = np.arange(self.M1, 2 * self.M1)
        m2 = np.arange(self.M2, 2 * self.M2)
        return k, n2, m1, m2


def _coef(y: np.ndarray, m: np.ndarray) -> np.ndarray:
    out = np.zeros(m.size)
    inside = m < y.size
    out[inside] = y[m[inside]]
    return out


@dataclass
class HolderReport:
    p: int
    stage_a: float
    stage_nu_weighted: float
    stage_b: float
    envelope_c: float
    fourth_moment: float
    four_product_bound: float
    sum_nu: int
    sum_nu_sq: int
    sum_nu_43: float
    tuples: int

    @property
    def holds(self) -> bool:
        return self.stage_a <= self.stage_b * (1 + 1e-6)

    @property
    def ratio_b_over_c(self) -> float:
        return self.stage_b / self.envelope_c

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["holds"] = self.holds
        out["ratio_b_over_c"] = self.ratio_b_over_c
        out["ratio_a_over_b"] = self.stage_a / self.stage_b if self.stage_b else float("nan")
        return out


MAX_TUPLES = 10 ** 9


def holder_pipeline(ctx: PrimeContext, spec: HolderSpec) -> HolderReport:
    """Exact glued sum (a), its Hoelder majorant (b) and the analytic envelope (c).

    (a) <= sum_h nu(h) |F(h)| <= (sum nu^(4/3))^(3/4) (sum_h |F(h)|^4)^(1/4) = (b),
    with F(h) = sum_{m2} y2(m2) S(h, inv(m2); p).
    """
    p = ctx.p
    k, n2, m1, m2 = spec.blocks(p)
    k, n2, m1, m2 = (v[v % p != 0] for v in (k, n2, m1, m2))
    tuples = k.size * n2.size * m1.size * m2.size
    if tuples > MAX_TUPLES:
        raise ScaleExceeded(f"{tuples} tuples exceeds {MAX_TUPLES}")
    if tuples == 0:
        raise WindowEmpty("a block is empty")
    y1 = _coef(spec.y1, m1)
    y2 = _coef(spec.y2, m2)
    if np.any(np.abs(y1) > 1 + 1e-12) or np.any(np.abs(y2) > 1 + 1e-12):
        raise ValueError("coefficients must be bounded by 1")

    rows = row_cache(ctx)
    R2 = np.stack([rows(int(ctx.inv[m % p])) for m in m2])
    F = y2 @ R2

    kk, nn = np.meshgrid(k, n2, indexing="ij")
    if spec.weight is None:
        w = np.ones(kk.shape)
    else:
        w = np.asarray(spec.weight(nn, kk), dtype=np.complex128)
        if np.any(np.abs(w) > 1 + 1e-12):
            raise ValueError("weight must be bounded by 1")
    kn = (kk * nn) % p
    total = 0j
    for m, c in zip(m1, y1):
        h = (kn * int(ctx.inv[m % p])) % p
        total += c * np.sum(w * F[h])
    stage_a = abs(total)

    nu = nu_histogram(ctx, n2, k, m1)
    nu_weighted = float(np.sum(nu * np.abs(F)))
    s43 = float(np.sum(nu.astype(float) ** (4.0 / 3.0)))
    fourth = float(np.sum(F ** 4))
    stage_b = s43 ** 0.75 * fourth ** 0.25

    pair = (R2[:, None, :] * R2[None, :, :]).reshape(m2.size ** 2, p)
    yy = np.outer(np.abs(y2), np.abs(y2)).ravel()
    four_bound = float(yy @ np.abs(pair @ pair.T) @ yy)

    env = (
        p ** spec.delta
        * (p * spec.N2 * spec.M1 / spec.N1) ** 0.75
        * (spec.M2 * p ** 0.625 + spec.M2 ** 0.5 * p ** 0.75)
    )
    return HolderReport(
        p=p,
        stage_a=stage_a,
        stage_nu_weighted=nu_weighted,
        stage_b=stage_b,
        envelope_c=env,
        fourth_moment=fourth,
        four_product_bound=four_bound,
        sum_nu=int(nu.sum()),
        sum_nu_sq=int(np.sum(nu * nu)),
        sum_nu_43=s43,
        tuples=int(tuples),
    )
