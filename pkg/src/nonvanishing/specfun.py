"""Smoothing kernels W and V of the approximate functional equations.

Both are inverse Mellin integrals along a vertical line Re s = sigma::

    W(x) = 1/(2 pi i) int G(s/2 + 1/4)   / G(1/4)   (sqrt(pi) x)^(-s) ds/s
    V(x) = 1/(2 pi i) int G(s/2 + 1/4)^2 / G(1/4)^2 (pi x)^(-s)      ds/s

The integrals are evaluated with the trapezoid rule in t = Im s, which
converges geometrically for these analytic, exponentially decaying integrands.
W also has the closed form Gamma(1/4, pi x^2)/Gamma(1/4) (upper regularized
incomplete gamma), used as the fast path once validated against quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaincc

from .errors import NonPositiveArgument

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def lanczos_loggamma(z):
    """log Gamma(z) for complex z with Re z > 0.5 (principal branch up to 2 pi i)."""
    z = np.asarray(z, dtype=np.complex128) - 1.0
    acc = np.full(z.shape, _LANCZOS_COEF[0], dtype=np.complex128)
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


@dataclass(frozen=True)
class KernelConfig:
    """Contour quadrature parameters.

    ``height`` is the initial truncation |Im s| <= T; it is raised
    automatically until the estimated discarded tail is below ``tail_tol``.
    ``floor`` is the kernel value below which sum terms are dropped.

    For y < 1 the integrand is of size y^-sigma while the result is O(1), so
    rounding is amplified by y^-sigma. There the line is moved to
    ``min(sigma, near_sigma)``; no pole lies in Re s > 0 so the value is
    unchanged. ``near_sigma=None`` keeps the literal contour everywhere.
    """

    sigma: float = 2.0
    height: float = 60.0
    step: float = 0.05
    tail_tol: float = 1e-13
    floor: float = 1e-16
    max_height: float = 400.0
    near_sigma: float | None = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"contour abscissa must be positive, got {self.sigma}")
        if self.near_sigma is not None and not self.near_sigma > 0:
            raise ValueError(f"near_sigma must be positive, got {self.near_sigma}")
        if not (self.step > 0 and self.height > 0):
            raise ValueError("step and height must be positive")


DEFAULT_CONFIG = KernelConfig()

_LOG_GAMMA_QUARTER = math.lgamma(0.25)


def _check_positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise NonPositiveArgument("kernel argument must be > 0")
    return x


def _log_integrand_gamma(s: np.ndarray, power: int) -> np.ndarray:
    return power * (lanczos_loggamma(s / 2 + 0.25) - _LOG_GAMMA_QUARTER)


def _tail_estimate(t: float, sigma: float, power: int, log_y_min: float) -> float:
    s = complex(sigma, t)
    mag = math.exp(
        float(np.real(_log_integrand_gamma(np.array([s]), power))[0]) - sigma * log_y_min
    )
    # |Gamma(s/2 + 1/4)|^power decays like exp(-power*pi*t/4)
    return mag / abs(s) * 4.0 / (power * math.pi)


def _height_for(cfg: KernelConfig, sigma: float, power: int, log_y_min: float) -> float:
    T = cfg.height
    while _tail_estimate(T, sigma, power, log_y_min) > cfg.tail_tol and T < cfg.max_height:
        T *= 1.25
    return T


@lru_cache(maxsize=64)
def _nodes(sigma: float, height: float, step: float, power: int):
    n = int(math.ceil(height / step))
    t = np.arange(n + 1) * step
    s = sigma + 1j * t
    w = np.full(n + 1, step)
    w[0] = step / 2
    coef = w * np.exp(_log_integrand_gamma(s, power)) / s
    return s, coef


def _line_quadrature(log_y: np.ndarray, sigma: float, power: int, cfg: KernelConfig) -> np.ndarray:
    T = _height_for(cfg, sigma, power, float(log_y.min()))
    s, coef = _nodes(sigma, T, cfg.step, power)
    out = np.empty(log_y.size, dtype=np.float64)
    chunk = max(1, 2_000_000 // len(s))
    for lo in range(0, log_y.size, chunk):
        phase = np.exp(-np.outer(log_y[lo : lo + chunk], s))
        out[lo : lo + chunk] = (phase @ coef).real / math.pi
    return out


def mellin_kernel(x, power: int, log_scale: float, cfg: KernelConfig = DEFAULT_CONFIG):
    """Trapezoid quadrature of 1/(2 pi i) int (G(s/2+1/4)/G(1/4))^power y^(-s) ds/s
    with log y = log_scale + log x, vectorized over x."""
    x = _check_positive(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    log_y = log_scale + np.log(x)
    out = np.empty(x.shape, dtype=np.float64)
    near = np.zeros(x.shape, dtype=bool)
    if cfg.near_sigma is not None and cfg.near_sigma < cfg.sigma:
        near = log_y < 0
    for mask, sigma in ((~near, cfg.sigma), (near, cfg.near_sigma)):
        if mask.any():
            out[mask] = _line_quadrature(log_y[mask], sigma, power, cfg)
    return float(out[0]) if scalar else out


def weight_W_quadrature(x, cfg: KernelConfig = DEFAULT_CONFIG):
    # power 1 with y = sqrt(pi) x  ->  log y = 0.5 log pi + log x
    return mellin_kernel(x, 1, 0.5 * math.log(math.pi), cfg)


def weight_W(x, cfg: KernelConfig = DEFAULT_CONFIG):
    """W(x) = Gamma(1/4, pi x^2) / Gamma(1/4)."""
    x = _check_positive(x)
    out = gammaincc(0.25, math.pi * x * x)
    return float(out) if np.ndim(out) == 0 else out


def weight_V(x, cfg: KernelConfig = DEFAULT_CONFIG):
    """V(x) by direct contour quadrature."""
    # power 2 with y = pi x  ->  log y = log pi + log x
    return mellin_kernel(x, 2, math.log(math.pi), cfg)


def convergence_check(fn, x, cfg: KernelConfig = DEFAULT_CONFIG) -> float:
    """Largest change of fn(x) when the step is halved or the height doubled."""
    base = np.asarray(fn(x, cfg))
    finer = np.asarray(fn(x, replace(cfg, step=cfg.step / 2)))
    taller = np.asarray(fn(x, replace(cfg, height=2 * cfg.height)))
    return float(max(np.max(np.abs(base - finer)), np.max(np.abs(base - taller))))


def kernel_cutoff(kernel, floor: float = 1e-16, start: float = 1.0) -> float:
    """Smallest x (to 1e-6 relative) with kernel(x) < floor, kernel decreasing."""
    lo, hi = 0.0, start
    while kernel(hi) >= floor:
        lo, hi = hi, hi * 2
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if kernel(mid) >= floor:
            lo = mid
        else:
            hi = mid
    return hi


class VCache:
    """V on a geometric grid (64 points per decade) with monotone cubic
    interpolation of log V. Built once, then read-only."""

    def __init__(
        self,
        x_min: float = 1e-8,
        x_max: float | None = None,
        per_decade: int = 64,
        cfg: KernelConfig = DEFAULT_CONFIG,
    ):
        if x_max is None:
            x_max = kernel_cutoff(lambda t: weight_V(t, cfg), cfg.floor)
        n = int(math.ceil(per_decade * math.log10(x_max / x_min))) + 1
        self.grid = np.geomspace(x_min, x_max, n)
        self.values = weight_V(self.grid, cfg)
        self.x_min, self.x_max = x_min, x_max
        self._interp = PchipInterpolator(np.log(self.grid), np.log(self.values))

    def __call__(self, x):
        x = _check_positive(x)
        out = np.exp(self._interp(np.log(np.clip(x, self.x_min, self.x_max))))
        out = np.where(x > self.x_max, 0.0, out)
        return float(out) if np.ndim(out) == 0 else out
