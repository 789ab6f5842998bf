"""Discrete value distributions on a finite price grid.

Every price in this package is a grid value.  The quantile of a price is its
sale probability ``Pr[v >= p]``.  Arithmetic is generic over ``int``,
``Fraction`` and ``float`` so that exact inputs yield exact outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantError

PMF_TOL = 1e-12
# Revenue differences below this are treated as ties when picking a price.
TIE_TOL = 1e-9


def parse_number(x):
    """Coerce JSON-ish input to int/Fraction (exact) or float."""
    if isinstance(x, bool):
        raise TypeError(f"not a number: {x!r}")
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return float(x)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def exact_div(a, b):
    """``a / b`` that stays a Fraction when both operands are exact."""
    return Fraction(a) / b if _is_exact(a) and _is_exact(b) else a / b


@dataclass(frozen=True)
class ValueGrid:
    """Strictly increasing positive support values.

    ``scaled=True`` marks the grid ``{1/V, 2/V, ..., 1}``.
    """

    values: tuple
    scaled: bool = False

    def __post_init__(self):
        vals = tuple(parse_number(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise DomainError("empty value grid")
        if vals[0] <= 0:
            raise DomainError("grid values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("grid values must be strictly increasing")
        if self.scaled:
            V = len(vals)
            if any(v != Fraction(i + 1, V) for i, v in enumerate(vals)):
                raise DomainError("scaled grid must be {1/V, ..., 1}")

    @classmethod
    def scaled_grid(cls, V: int) -> ValueGrid:
        if V < 1:
            raise DomainError("V must be positive")
        return cls(tuple(Fraction(i, V) for i in range(1, V + 1)), scaled=True)

    @property
    def V(self) -> int:
        return len(self.values)

    @property
    def unit_bounded(self) -> bool:
        """All values lie in (0, 1]."""
        return self.values[-1] <= 1

    @cached_property
    def _lookup(self) -> dict:
        return {v: i for i, v in enumerate(self.values)}

    def index(self, price) -> int:
        i = self._lookup.get(price)
        if i is not None:
            return i
        for j, v in enumerate(self.values):
            if math.isclose(float(v), float(price), rel_tol=0, abs_tol=1e-12):
                return j
        raise DomainError(f"price {price!r} is not on the grid")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DiscreteDistribution:
    grid: ValueGrid
    pmf: tuple

    def __post_init__(self):
        pmf = tuple(parse_number(p) for p in self.pmf)
        object.__setattr__(self, "pmf", pmf)
        if len(pmf) != self.grid.V:
            raise DomainError(f"pmf has {len(pmf)} entries for a grid of {self.grid.V}")
        if any(p < 0 for p in pmf):
            raise DomainError("pmf entries must be nonnegative")
        total = sum(pmf)
        if abs(total - 1) > PMF_TOL:
            raise DomainError(f"pmf sums to {float(total)!r}, not 1")

    @classmethod
    def pointmass(cls, grid: ValueGrid, value) -> DiscreteDistribution:
        k = grid.index(value)
        return cls(grid, tuple(1 if i == k else 0 for i in range(grid.V)))

    @classmethod
    def uniform(cls, grid: ValueGrid) -> DiscreteDistribution:
        return cls(grid, tuple(Fraction(1, grid.V) for _ in range(grid.V)))

    @classmethod
    def from_quantiles(cls, grid: ValueGrid, quantiles: Sequence) -> DiscreteDistribution:
        """Rebuild a pmf from a quantile vector by consecutive differences.

        The first quantile is forced to 1 (all mass is at or above the lowest
        value).  Negative differences below ``-PMF_TOL`` are an error; smaller
        ones are clamped to zero and the pmf renormalized.
        """
        q = list(quantiles) + [0]
        q[0] = 1
        pmf = []
        for a, b in zip(q, q[1:]):
            d = a - b
            if d < -PMF_TOL:
                raise InvariantError(f"quantiles increase by {float(-d)!r}")
            pmf.append(d if d > 0 else 0 * d)
        total = sum(pmf)
        if total != 1:
            pmf = [exact_div(p, total) for p in pmf]
        return cls(grid, tuple(pmf))

    @property
    def values(self) -> tuple:
        return self.grid.values

    @cached_property
    def quantiles(self) -> tuple:
        out = []
        acc = 0
        for p in reversed(self.pmf):
            acc = acc + p
            out.append(acc)
        out.reverse()
        return tuple(out)

    @cached_property
    def revenues(self) -> tuple:
        return tuple(v * q for v, q in zip(self.values, self.quantiles))

    @cached_property
    def tail_values(self) -> tuple:
        """``sum_{v' >= v} pmf(v') * v'`` per grid value (welfare of each price)."""
        out = []
        acc = 0
        for v, p in zip(reversed(self.values), reversed(self.pmf)):
            acc = acc + p * v
            out.append(acc)
        out.reverse()
        return tuple(out)

    @cached_property
    def surpluses(self) -> tuple:
        return tuple(w - r for w, r in zip(self.tail_values, self.revenues))

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(p) for p in self.pmf) and all(_is_exact(v) for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.pmf])

    def __repr__(self):
        pm = ", ".join(str(p) for p in self.pmf)
        return f"DiscreteDistribution(V={self.grid.V}, pmf=({pm}))"


def quantile(dist: DiscreteDistribution, price):
    return dist.quantiles[dist.grid.index(price)]


def revenue(dist: DiscreteDistribution, price):
    return dist.revenues[dist.grid.index(price)]


def consumer_surplus(dist: DiscreteDistribution, price):
    return dist.surpluses[dist.grid.index(price)]


def social_welfare(dist: DiscreteDistribution, price):
    return dist.tail_values[dist.grid.index(price)]


def expected_value(dist: DiscreteDistribution):
    return dist.tail_values[0]


def best_price_index(revenues: Sequence, tie_break: str = "low", tol: float = TIE_TOL) -> int:
    """Index of the revenue-maximizing price among ``revenues``."""
    best = max(revenues)
    tied = [i for i, r in enumerate(revenues) if r >= best - tol]
    if tie_break == "low":
        return tied[0]
    if tie_break == "high":
        return tied[-1]
    raise DomainError(f"unknown tie_break {tie_break!r}")


def monopoly_price(dist: DiscreteDistribution, tie_break: str = "low"):
    """Revenue-maximizing grid price; revenue ties within ``TIE_TOL`` use ``tie_break``."""
    return dist.values[best_price_index(dist.revenues, tie_break)]


def monopoly_revenue(dist: DiscreteDistribution):
    return max(dist.revenues)


def eps_optimal_prices(dist: DiscreteDistribution, eps) -> list:
    """Indices of prices whose revenue is within ``eps`` of the monopoly revenue."""
    best = max(dist.revenues)
    return [i for i, r in enumerate(dist.revenues) if r >= best - eps - PMF_TOL]


def mixture(weights: Sequence, dists: Sequence[DiscreteDistribution]) -> DiscreteDistribution:
    if len(weights) != len(dists):
        raise DomainError("one weight per distribution required")
    if not dists:
        raise DomainError("empty mixture")
    grid = dists[0].grid
    if any(d.grid != grid for d in dists[1:]):
        raise DomainError("mixture components must share a grid")
    w = [parse_number(x) for x in weights]
    if any(x < -PMF_TOL for x in w) or abs(sum(w) - 1) > 1e-9:
        raise DomainError("mixture weights must lie on the simplex")
    w = [x if x > 0 else 0 * x for x in w]
    total = sum(w)
    pmf = [sum(x * d.pmf[i] for x, d in zip(w, dists)) for i in range(grid.V)]
    if total != 1:
        pmf = [exact_div(p, total) for p in pmf]
    return DiscreteDistribution(grid, tuple(pmf))


def ks_distance(d1: DiscreteDistribution, d2: DiscreteDistribution):
    """Largest quantile gap over the (shared) grid."""
    if d1.grid != d2.grid:
        raise DomainError("distributions live on different grids")
    return max(abs(a - b) for a, b in zip(d1.quantiles, d2.quantiles))


# --- revenue curves -------------------------------------------------------


@dataclass(frozen=True)
class RevenueCurve:
    """Points ``(q(p), p*q(p))`` sorted by increasing quantile.

    ``prices`` is aligned with ``points``.  The origin is implicit.
    """

    points: tuple
    prices: tuple

    @property
    def quantiles(self) -> tuple:
        return tuple(q for q, _ in self.points)

    def hull(self) -> list:
        return upper_hull([(0 * self.points[0][0], 0 * self.points[0][1])] + list(self.points))


def revenue_curve(dist: DiscreteDistribution) -> RevenueCurve:
    order = range(dist.grid.V - 1, -1, -1)
    pts = tuple((dist.quantiles[i], dist.revenues[i]) for i in order)
    prices = tuple(dist.values[i] for i in order)
    return RevenueCurve(pts, prices)


def upper_hull(points: Sequence) -> list:
    """Upper concave hull (monotone chain), vertices sorted by x."""
    pts = sorted(set(points), key=lambda p: (p[0], p[1]))
    hull: list = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or below the chord hull[-2] -> p
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    # vertical stacks: keep only the top point per x
    out: list = []
    for p in hull:
        if out and out[-1][0] == p[0]:
            out[-1] = p if p[1] > out[-1][1] else out[-1]
        else:
            out.append(p)
    return out


def hull_value(hull: Sequence, x):
    """Evaluate the piecewise-linear hull at ``x`` (clamped to its range)."""
    if x <= hull[0][0]:
        return hull[0][1]
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x <= x2:
            return y1 + exact_div((y2 - y1) * (x - x1), x2 - x1)
    return hull[-1][1]


# --- MHR-like check -------------------------------------------------------


@dataclass(frozen=True)
class MhrReport:
    concave: bool
    strong_concave: bool
    monopoly_sale_prob_ok: bool
    revenue_welfare_ok: bool
    worst_margins: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.concave and self.strong_concave and self.monopoly_sale_prob_ok and self.revenue_welfare_ok


def concavity_margin(dist: DiscreteDistribution) -> float:
    """Worst signed gap between a revenue-curve point and the hull (0 = concave).

    Points already at quantile 1 cannot be ironed further and are exempt, so
    point masses count as concave.
    """
    hull = revenue_curve(dist).hull()
    worst = 0.0
    for q, r in zip(dist.quantiles, dist.revenues):
        if q >= 1 - PMF_TOL:
            continue
        worst = min(worst, float(r - hull_value(hull, q)))
    return worst


def check_mhr_like(
    dist: DiscreteDistribution,
    strong_concavity: float = 0.25,
    sale_prob: float = 1 / math.e,
    revenue_share: float = 1 / math.e,
    tol: float = PMF_TOL,
) -> MhrReport:
    """Test the four MHR-like conditions; constants default to 1/4, 1/e, 1/e."""
    if not dist.grid.unit_bounded:
        raise DomainError("MHR-like check needs values scaled into (0, 1]")
    k = best_price_index(dist.revenues, "low")
    q_star = dist.quantiles[k]
    r_star = dist.revenues[k]

    conc = concavity_margin(dist)
    strong = min(
        (float((1 - strong_concavity * (q_star - q) ** 2) * r_star - r)
         for i, (q, r) in enumerate(zip(dist.quantiles, dist.revenues)) if i != k),
        default=0.0,
    )
    prob = float(q_star) - sale_prob
    share = float(r_star) - revenue_share * float(expected_value(dist))
    margins = {
        "concave": conc,
        "strong_concave": strong,
        "monopoly_sale_prob": prob,
        "revenue_welfare": share,
    }
    return MhrReport(
        concave=conc >= -tol,
        strong_concave=strong >= -tol,
        monopoly_sale_prob_ok=prob >= -tol,
        revenue_welfare_ok=share >= -tol,
        worst_margins=margins,
    )
