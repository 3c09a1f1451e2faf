"""Nonvanishing proportion and the maximization of the combined mollifier length.

All arithmetic is in exact rationals (fractions.Fraction).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import floor

import numpy as np

from .errors import DegenerateWeights, EmptyRegion, NonpositiveTheta

Rational = Fraction


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def proportion(theta, alpha, c1, c2) -> Fraction:
    """(  (c1/(c1+c2))^2/(theta+alpha) + (c2/(c1+c2))^2/theta + 1 )^-1.

    A zero weight drops its term (the numerator vanishes identically).
    """
    theta, alpha, c1, c2 = map(_q, (theta, alpha, c1, c2))
    if theta <= 0 or theta + alpha <= 0:
        raise NonpositiveTheta(f"need theta > 0 and theta + alpha > 0, got {theta}, {alpha}")
    if c1 < 0 or c2 < 0:
        raise DegenerateWeights("weights must be nonnegative")
    total = c1 + c2
    if total == 0:
        raise DegenerateWeights("c1 + c2 = 0")
    acc = Fraction(1)
    if c1:
        acc += (c1 / total) ** 2 / (theta + alpha)
    if c2:
        acc += (c2 / total) ** 2 / theta
    return 1 / acc


def optimal_weights(theta, alpha) -> tuple[Fraction, Fraction]:
    """c1 : c2 = (theta + alpha) : theta, normalized so c1 + c2 = 1."""
    theta, alpha = _q(theta), _q(alpha)
    if theta <= 0:
        raise NonpositiveTheta(f"theta must be > 0, got {theta}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    s = 2 * theta + alpha
    return (theta + alpha) / s, theta / s


def combined_proportion(combined) -> Fraction:
    """Proportion at optimal weights: (1 + 1/(2 theta + alpha))^-1."""
    combined = _q(combined)
    return combined / (1 + combined)


# Each constraint: (name, a_theta, a_alpha, bound, strict). Reads a.x < bound
# (strict) or a.x <= bound. theta > 0 and alpha >= 0 are written as -theta < 0
# and -alpha <= 0.
CONSTRAINTS = (
    ("theta < 1/2", 1, 0, Fraction(1, 2), True),
    ("theta + alpha < 1/2", 1, 1, Fraction(1, 2), True),
    ("3 theta + 2 alpha < 1", 3, 2, Fraction(1), True),
    ("10 theta + 4 alpha < 3", 10, 4, Fraction(3), True),
    ("theta > 0", -1, 0, Fraction(0), True),
    ("alpha >= 0", 0, -1, Fraction(0), False),
)


@dataclass(frozen=True)
class FeasibilityRegion:
    delta: Fraction = Fraction(0)
    alpha_zero: bool = False

    def check(self, theta, alpha) -> list[str]:
        """Names of violated constraints; strict ones need slack > 0 and >= delta."""
        theta, alpha = _q(theta), _q(alpha)
        bad = []
        for name, a, b, bound, strict in CONSTRAINTS:
            slack = bound - (a * theta + b * alpha)
            if strict:
                ok = slack > 0 and slack >= self.delta
            else:
                ok = slack >= 0
            if not ok:
                bad.append(name)
        if self.alpha_zero and alpha != 0:
            bad.append("alpha = 0")
        return bad

    def halfplanes(self) -> list[tuple[int, int, Fraction]]:
        """Closed delta-shrunken region as a.x <= b rows."""
        rows = []
        for _, a, b, bound, strict in CONSTRAINTS:
            rows.append((a, b, bound - self.delta if strict else bound))
        if self.alpha_zero:
            rows.append((0, 1, Fraction(0)))
        return rows


def feasible(theta, alpha, delta=0) -> tuple[bool, list[str]]:
    bad = FeasibilityRegion(_q(delta)).check(theta, alpha)
    return (not bad, bad)


@dataclass
class OptimizationResult:
    theta: Fraction
    alpha: Fraction
    c1: Fraction
    c2: Fraction
    combined: Fraction
    proportion: Fraction
    delta: Fraction
    grid_combined: float
    grid_theta: float
    grid_alpha: float
    vertices: list

    def to_dict(self) -> dict:
        return {
            "theta": str(self.theta),
            "alpha": str(self.alpha),
            "c1": str(self.c1),
            "c2": str(self.c2),
            "combined_length": str(self.combined),
            "combined_length_bound": "5/8",
            "proportion": str(self.proportion),
            "proportion_float": float(self.proportion),
            "delta": str(self.delta),
            "grid": {
                "theta": self.grid_theta,
                "alpha": self.grid_alpha,
                "combined_length": self.grid_combined,
                "gap": abs(float(self.combined) - self.grid_combined),
            },
            "interior_feasible": feasible(self.theta, self.alpha, self.delta)[0],
            "vertices": [[str(t), str(a)] for t, a in self.vertices],
        }


def _solve2(r1, r2):
    (a1, b1, c1), (a2, b2, c2) = r1, r2
    det = a1 * b2 - a2 * b1
    if det == 0:
        return None
    det = Fraction(det)
    return (c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det


def vertices(region: FeasibilityRegion) -> list[tuple[Fraction, Fraction]]:
    rows = region.halfplanes()
    out = set()
    for r1, r2 in combinations(rows, 2):
        pt = _solve2(r1, r2)
        if pt is None:
            continue
        if all(a * pt[0] + b * pt[1] <= c for a, b, c in rows):
            out.add(pt)
    return sorted(out)


def lp_maximize(region: FeasibilityRegion) -> tuple[Fraction, Fraction]:
    """argmax of 2 theta + alpha over the vertices; ties go to the smallest (theta, alpha)."""
    verts = vertices(region)
    if not verts:
        raise EmptyRegion(f"no feasible point for delta={region.delta}")
    best = max(2 * t + a for t, a in verts)
    return min(v for v in verts if 2 * v[0] + v[1] == best)


def grid_maximize(region: FeasibilityRegion, resolution: int = 10_000):
    """Grid search on theta = i/res, alpha = j/res.

    For each theta row the largest admissible j follows from the integer
    bounds, so the whole grid is scanned without materializing it.
    """
    res = resolution
    i = np.arange(0, res // 2 + 1, dtype=np.int64)
    jmax = np.full(i.shape, res, dtype=np.int64)
    jmin = np.zeros(i.shape, dtype=np.int64)
    ok = np.ones(i.shape, dtype=bool)
    for a, b, c in region.halfplanes():
        # a i + b j <= c * res
        cap = floor(c * res)
        if b > 0:
            jmax = np.minimum(jmax, np.floor_divide(cap - a * i, b))
        elif b < 0:
            # j >= ceil((a i - cap) / -b)
            jmin = np.maximum(jmin, -np.floor_divide(cap - a * i, -b))
        else:
            ok &= a * i <= cap
    ok &= jmax >= jmin
    if not ok.any():
        raise EmptyRegion(f"grid has no feasible point for delta={region.delta}")
    score = np.where(ok, 2 * i + jmax, -1)
    best = int(score.max())
    row = int(np.nonzero(score == best)[0][0])
    return int(i[row]) / res, int(jmax[row]) / res, best / res


def maximize_combined_length(delta=0, alpha_zero: bool = False, resolution: int = 10_000) -> OptimizationResult:
    """Maximize 2 theta + alpha over the closed delta-shrunken region.

    Solved twice (exact vertex enumeration and a grid scan) and the two must
    agree to within the grid resolution.
    """
    delta = _q(delta)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta >= Fraction(1, 8):
        raise EmptyRegion(f"delta={delta} must be < 1/8")
    region = FeasibilityRegion(delta, alpha_zero)
    theta, alpha = lp_maximize(region)
    g_theta, g_alpha, g_comb = grid_maximize(region, resolution)
    combined = 2 * theta + alpha
    tol = 1.0 / resolution
    if abs(float(combined) - g_comb) > tol:
        raise ArithmeticError(f"LP {combined} and grid {g_comb} disagree")
    c1, c2 = optimal_weights(theta, alpha)
    return OptimizationResult(
        theta=theta,
        alpha=alpha,
        c1=c1,
        c2=c2,
        combined=combined,
        proportion=proportion(theta, alpha, c1, c2),
        delta=delta,
        grid_combined=g_comb,
        grid_theta=g_theta,
        grid_alpha=g_alpha,
        vertices=vertices(region),
    )


def decomposition_identity(theta, alpha) -> bool:
    """2 theta + alpha == (3 theta + 2 alpha)/4 + (10 theta + 4 alpha)/8, exactly."""
    theta, alpha = _q(theta), _q(alpha)
    return 2 * theta + alpha == Fraction(1, 4) * (3 * theta + 2 * alpha) + Fraction(1, 8) * (10 * theta + 4 * alpha)
