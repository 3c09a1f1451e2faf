"""Mollified first and second moments over the even primitive characters mod p.

S1 = (2/p) sum+ L(1/2,chi) M(chi),  S2 = (2/p) sum+ |L(1/2,chi) M(chi)|^2.

``method="dft"`` obtains every per-character quantity for the whole family
from length p-1 transforms; ``method="naive"`` loops over characters with
direct summation and serves as the oracle for it.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..arith import PrimeContext
from ..characters import (
    DirichletCharacter,
    char_values,
    character_sums,
    enumerate_even_primitive,
    even_pair_average_closed,
    even_primitive_indices,
    gauss_sum,
    gauss_sums,
    gauss_twisted_average_closed,
)
from ..specfun import DEFAULT_CONFIG, KernelConfig
from .afe import first_afe_terms
from .mollifier import MollifierParams, _weighted

logger = logging.getLogger(__name__)

NONVANISHING_FACTOR = 1e-8


@dataclass
class FamilyValues:
    """Per-character data for the even primitive family, aligned with ``js``.

    ``A`` and ``B`` are the long and short piece sums sum y_m chi(m) m^-1/2.
    """

    js: np.ndarray
    L: np.ndarray
    A: np.ndarray
    B: np.ndarray
    tau: np.ndarray

    def mollifier(self, params: MollifierParams, p: int) -> np.ndarray:
        return params.c1 * self.A + params.c2 * np.conj(self.tau) / math.sqrt(p) * np.conj(self.B)


def _naive_one(ctx: PrimeContext, chi: DirichletCharacter, params: MollifierParams, cfg):
    n, a, _ = first_afe_terms(ctx, cfg)
    tau = gauss_sum(ctx, chi)
    D = complex(np.sum(char_values(ctx, chi, n) * a))
    L = D + tau / math.sqrt(ctx.p) * D.conjugate()
    mL, wL = _weighted(params.y_long)
    mS, wS = _weighted(params.y_short)
    A = complex(np.sum(char_values(ctx, chi, mL) * wL))
    B = complex(np.sum(char_values(ctx, chi, mS) * wS))
    return L, A, B, tau


def family_values(
    ctx: PrimeContext,
    params: MollifierParams,
    cfg: KernelConfig = DEFAULT_CONFIG,
    method: str = "dft",
    workers: int = 1,
) -> FamilyValues:
    js = even_primitive_indices(ctx)
    if method == "dft":
        n, a, _ = first_afe_terms(ctx, cfg)
        tau = gauss_sums(ctx)[js]
        D = character_sums(ctx, n, a)[js]
        L = D + tau / math.sqrt(ctx.p) * np.conj(D)
        A = character_sums(ctx, *_weighted(params.y_long))[js]
        B = character_sums(ctx, *_weighted(params.y_short))[js]
        return FamilyValues(js, L, A, B, np.array(tau))
    if method == "naive":
        chars = enumerate_even_primitive(ctx)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                rows = list(pool.map(lambda c: _naive_one(ctx, c, params, cfg), chars))
        else:
            rows = [_naive_one(ctx, c, params, cfg) for c in chars]
        arr = np.array(rows, dtype=np.complex128).reshape(-1, 4)
        return FamilyValues(js, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
    raise ValueError(f"unknown method {method!r}")


def first_moment(
    ctx: PrimeContext,
    params: MollifierParams,
    cfg: KernelConfig = DEFAULT_CONFIG,
    method: str = "dft",
    fam: FamilyValues | None = None,
) -> complex:
    if params.exceeds_half:
        logger.warning("mollifier piece length >= sqrt(p) at p=%d", ctx.p)
    if fam is None:
        fam = family_values(ctx, params, cfg, method)
    return complex(2.0 / ctx.p * np.sum(fam.L * fam.mollifier(params, ctx.p)))


@dataclass
class SecondMoment:
    """S2 together with its cross term and the two square terms."""

    S2: float
    cross: float
    square_long: float
    square_short: float
    cross_imag: float

    @property
    def decomposition_sum(self) -> float:
        return self.cross + self.square_long + self.square_short


def second_moment(
    ctx: PrimeContext,
    params: MollifierParams,
    cfg: KernelConfig = DEFAULT_CONFIG,
    method: str = "dft",
    fam: FamilyValues | None = None,
) -> SecondMoment:
    if fam is None:
        fam = family_values(ctx, params, cfg, method)
    p = ctx.p
    L2 = np.abs(fam.L) ** 2
    M = fam.mollifier(params, p)
    S2 = float(2.0 / p * np.sum(L2 * np.abs(M) ** 2))
    cross = 2 * params.c1 * params.c2 * 2.0 / p * np.sum(L2 * fam.tau * fam.A * fam.B) / math.sqrt(p)
    sq_long = params.c1 ** 2 * 2.0 / p * np.sum(L2 * np.abs(fam.A) ** 2)
    sq_short = params.c2 ** 2 * 2.0 / p * np.sum(L2 * np.abs(fam.B) ** 2)
    return SecondMoment(S2, float(cross.real), float(sq_long), float(sq_short), float(cross.imag))


def first_moment_orthogonality(
    ctx: PrimeContext, params: MollifierParams, cfg: KernelConfig = DEFAULT_CONFIG
) -> dict:
    """S1 from the four-term expansion using the exact family averages.

    Each term replaces the character sum by the closed forms for
    (2/p) sum+ chi(n1) conj chi(n2) and (1/p) sum+ tau_chi chi(n1); no
    character is enumerated.
    """
    p = ctx.p
    n, a, _ = first_afe_terms(ctx, cfg)
    sqp = math.sqrt(p)

    def grid(y):
        m, w = _weighted(y)
        nn, mm = np.meshgrid(n, m, indexing="ij")
        ww = np.outer(a, w)
        keep = (nn % p != 0) & (mm % p != 0)
        return nn[keep], mm[keep], ww[keep]

    nL, mL, wL = grid(params.y_long)
    nS, mS, wS = grid(params.y_short)

    def twisted(nn, mm):
        # (2/p) sum+ tau_chi chi(m) conj chi(n) = 2 * closed(m * inv(n))
        return 2 * gauss_twisted_average_closed(ctx, (mm % p) * ctx.inv[nn % p] % p)

    direct_long = params.c1 * np.sum(wL * even_pair_average_closed(p, nL * mL % p, 1))
    direct_short = params.c2 * np.sum(wS * even_pair_average_closed(p, 1, nS * mS % p))
    dual_short = params.c2 / sqp * np.sum(wS * twisted(nS, mS))
    dual_long = params.c1 / sqp * np.sum(wL * twisted(nL, mL))
    total = direct_long + direct_short + dual_short + dual_long
    return {
        "S1": float(total),
        "direct_long": float(direct_long),
        "direct_short": float(direct_short),
        "dual_short": float(dual_short),
        "dual_long": float(dual_long),
    }


def proportion_from_main_terms(params: MollifierParams) -> float:
    return params.s1_predicted() ** 2 / params.s2_predicted()


@dataclass
class MomentReport:
    p: int
    params: dict
    method: str
    S1: complex
    S2: float
    S1_predicted: float
    S2_predicted: float
    ratio: float
    proportion_predicted: float
    min_abs_L: float
    nonvanishing_count: int
    family_size: int
    nonvanishing_threshold: float
    decomposition: dict
    S1_naive: complex | None = None
    path_gap_S1: float | None = None
    path_gap_S2: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def S1_deviation(self) -> float:
        return abs(self.S1 - self.S1_predicted)

    @property
    def S2_ratio(self) -> float:
        return self.S2 / self.S2_predicted

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("S1", "S1_naive"):
            z = out[key]
            out[key] = None if z is None else {"re": z.real, "im": z.imag}
        out["S1_deviation"] = self.S1_deviation
        out["S2_ratio"] = self.S2_ratio
        out["empirical_proportion"] = self.nonvanishing_count / max(self.family_size, 1)
        return out


def _relgap(a, b) -> float:
    return float(abs(a - b) / max(abs(a), abs(b), 1e-300))


def moment_report(
    ctx: PrimeContext,
    params: MollifierParams,
    cfg: KernelConfig = DEFAULT_CONFIG,
    method: str = "dft",
    check_naive: bool = False,
    workers: int = 1,
) -> MomentReport:
    fam = family_values(ctx, params, cfg, method, workers)
    S1 = first_moment(ctx, params, cfg, fam=fam)
    sm = second_moment(ctx, params, cfg, fam=fam)
    absL = np.abs(fam.L)
    threshold = NONVANISHING_FACTOR * ctx.p ** 0.25
    warnings = []
    if params.exceeds_half:
        warnings.append("mollifier piece length >= sqrt(p)")
    report = MomentReport(
        p=ctx.p,
        params=params.to_dict(),
        method=method,
        S1=S1,
        S2=sm.S2,
        S1_predicted=params.s1_predicted(),
        S2_predicted=params.s2_predicted(),
        ratio=abs(S1) ** 2 / sm.S2 if sm.S2 > 0 else float("nan"),
        proportion_predicted=proportion_from_main_terms(params),
        min_abs_L=float(absL.min()) if absL.size else float("nan"),
        nonvanishing_count=int(np.sum(absL > threshold)),
        family_size=int(absL.size),
        nonvanishing_threshold=threshold,
        decomposition={
            "cross": sm.cross,
            "square_long": sm.square_long,
            "square_short": sm.square_short,
            "cross_imag": sm.cross_imag,
            "sum": sm.decomposition_sum,
            "gap": _relgap(sm.decomposition_sum, sm.S2),
            "cross_predicted": 2 * params.c1 * params.c2,
            "square_long_predicted": params.c1 ** 2 * (1 / (params.theta + params.alpha) + 1),
            "square_short_predicted": params.c2 ** 2 * (1 / params.theta + 1),
        },
        warnings=warnings,
    )
    if check_naive:
        other = "naive" if method == "dft" else "dft"
        fam2 = family_values(ctx, params, cfg, other, workers)
        S1b = first_moment(ctx, params, cfg, fam=fam2)
        S2b = second_moment(ctx, params, cfg, fam=fam2).S2
        report.S1_naive = S1b if other == "naive" else S1
        report.path_gap_S1 = _relgap(S1, S1b)
        report.path_gap_S2 = _relgap(sm.S2, S2b)
    return report
