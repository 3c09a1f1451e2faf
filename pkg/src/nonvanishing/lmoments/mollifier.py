"""The two-piece mollifier and its coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..arith import PrimeContext, mobius_table
from ..characters import DirichletCharacter, char_values, gauss_sum
from ..errors import LengthTooSmall, NonpositiveTheta


def mollifier_coeffs(L: int) -> np.ndarray:
    """y_m = mu(m) log(L/m)/log L for 1 <= m < L, as an array indexed by m (y[0] = 0)."""
    L = int(L)
    if L < 2:
        raise LengthTooSmall(f"mollifier length must be >= 2, got {L}")
    m = np.arange(L)
    y = np.zeros(L)
    y[1:] = mobius_table(L)[1:] * np.log(L / m[1:]) / math.log(L)
    return y


def piece_coeffs(L: int) -> np.ndarray:
    """Like mollifier_coeffs, but a length below 2 degenerates to the constant 1."""
    if L < 2:
        return np.array([0.0, 1.0])
    return mollifier_coeffs(L)


def piece_length(p: int, exponent: float) -> int:
    """floor(p^exponent), robust to p^exponent landing a hair below an integer."""
    val = math.exp(exponent * math.log(p))
    L = math.floor(val)
    if L + 1 <= val * (1 + 1e-12):
        L += 1
    return max(L, 1)


@dataclass(frozen=True, eq=False)
class MollifierParams:
    """Mollifier exponents and weights, bound to a modulus p.

    ``long_len`` = floor(p^(theta+alpha)) carries weight c1 and the direct
    characters; ``short_len`` = floor(p^theta) carries c2 and the Gauss-sum
    twisted dual characters.
    """

    p: int
    theta: float
    alpha: float
    c1: float
    c2: float
    long_len: int = field(init=False)
    short_len: int = field(init=False)
    y_long: np.ndarray = field(init=False, repr=False)
    y_short: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.theta > 0:
            raise NonpositiveTheta(f"theta must be > 0, got {self.theta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("weights must be nonnegative")
        long_len = piece_length(self.p, self.theta + self.alpha)
        short_len = piece_length(self.p, self.theta)
        object.__setattr__(self, "long_len", long_len)
        object.__setattr__(self, "short_len", short_len)
        object.__setattr__(self, "y_long", piece_coeffs(long_len))
        object.__setattr__(self, "y_short", piece_coeffs(short_len))

    @property
    def exceeds_half(self) -> bool:
        """True when a piece is at least p^(1/2) long (outside the asymptotic regime)."""
        return self.long_len ** 2 >= self.p or self.short_len ** 2 >= self.p

    def s1_predicted(self) -> float:
        return self.c1 + self.c2

    def s2_predicted(self) -> float:
        return (
            self.c1 ** 2 / (self.theta + self.alpha)
            + self.c2 ** 2 / self.theta
            + (self.c1 + self.c2) ** 2
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "theta": self.theta,
            "alpha": self.alpha,
            "c1": self.c1,
            "c2": self.c2,
            "long_len": self.long_len,
            "short_len": self.short_len,
        }


def balanced_params(p: int, theta: float) -> MollifierParams:
    """The symmetric two-piece mollifier: equal lengths, unit weights."""
    return MollifierParams(p, theta, 0.0, 1.0, 1.0)


def _weighted(y: np.ndarray):
    m = np.nonzero(y)[0]
    return m, y[m] / np.sqrt(m)


def piece_sums(ctx: PrimeContext, chi: DirichletCharacter, params: MollifierParams):
    """(A, B) = (sum y_m chi(m)/sqrt m over the long piece, same over the short piece)."""
    mL, wL = _weighted(params.y_long)
    mS, wS = _weighted(params.y_short)
    A = complex(np.sum(char_values(ctx, chi, mL) * wL))
    B = complex(np.sum(char_values(ctx, chi, mS) * wS))
    return A, B


def mollifier_value(
    ctx: PrimeContext, chi: DirichletCharacter, params: MollifierParams, tau: complex | None = None
) -> complex:
    A, B = piece_sums(ctx, chi, params)
    if tau is None:
        tau = gauss_sum(ctx, chi)
    return params.c1 * A + params.c2 * tau.conjugate() / math.sqrt(ctx.p) * B.conjugate()


def mollifier0_value(ctx: PrimeContext, chi: DirichletCharacter, theta: float) -> complex:
    """The balanced mollifier M_0 with both pieces of length floor(p^theta)."""
    return mollifier_value(ctx, chi, balanced_params(ctx.p, theta))
