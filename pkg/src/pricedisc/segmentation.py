"""Markets, segmentations and the simplex view over buyer types.

A segmentation is a finite weighted point set on the type simplex whose
weighted centroid is the type prior.  Segment maps (per-type signal
distributions) convert to and from that measure view.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .distributions import (
    PMF_TOL,
    TIE_TOL,
    DiscreteDistribution,
    ValueGrid,
    best_price_index,
    mixture,
    parse_number,
)
from .errors import DomainError

SIMPLEX_TOL = 1e-9
# Segments lighter than this are dropped when consolidating.
MIN_WEIGHT = 1e-12


def _zero_like(x):
    return 0 * x


@dataclass(frozen=True)
class Market:
    grid: ValueGrid
    type_dists: tuple
    type_prior: tuple

    def __post_init__(self):
        dists = tuple(self.type_dists)
        prior = tuple(parse_number(p) for p in self.type_prior)
        object.__setattr__(self, "type_dists", dists)
        object.__setattr__(self, "type_prior", prior)
        if not dists:
            raise DomainError("market needs at least one type")
        if len(prior) != len(dists):
            raise DomainError("type prior length differs from the number of types")
        if any(d.grid != self.grid for d in dists):
            raise DomainError("all type distributions must share the market grid")
        if any(p < 0 for p in prior) or abs(sum(prior) - 1) > PMF_TOL:
            raise DomainError("type prior must lie on the simplex")

    @classmethod
    def uniform_prior(cls, grid: ValueGrid, type_dists: Sequence[DiscreteDistribution]) -> Market:
        T = len(type_dists)
        return cls(grid, tuple(type_dists), tuple(Fraction(1, T) for _ in range(T)))

    @property
    def T(self) -> int:
        return len(self.type_dists)

    @property
    def V(self) -> int:
        return self.grid.V

    @property
    def prices(self) -> tuple:
        return self.grid.values

    @property
    def has_uniform_prior(self) -> bool:
        return all(abs(p - Fraction(1, self.T)) <= PMF_TOL for p in self.type_prior)

    def prior_distribution(self) -> DiscreteDistribution:
        return mixture(self.type_prior, self.type_dists)

    @cached_property
    def revenue_matrix(self) -> np.ndarray:
        """``[t, p]`` revenue of price index p on type t (floats)."""
        return np.array([[float(r) for r in d.revenues] for d in self.type_dists])

    @cached_property
    def surplus_matrix(self) -> np.ndarray:
        return np.array([[float(c) for c in d.surpluses] for d in self.type_dists])

    @cached_property
    def quantile_matrix(self) -> np.ndarray:
        return np.array([[float(q) for q in d.quantiles] for d in self.type_dists])


@dataclass(frozen=True)
class Segment:
    x: tuple
    w: object

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(parse_number(v) for v in self.x))
        object.__setattr__(self, "w", parse_number(self.w))


@dataclass(frozen=True)
class Segmentation:
    """Weighted points on the type simplex (the measure view)."""

    segments: tuple

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        for s in segs:
            if s.w < -SIMPLEX_TOL:
                raise DomainError("segment weights must be nonnegative")
            if any(v < -SIMPLEX_TOL for v in s.x) or abs(sum(s.x) - 1) > SIMPLEX_TOL:
                raise DomainError(f"segment point {s.x} is not on the simplex")
        if segs and abs(sum(s.w for s in segs) - 1) > SIMPLEX_TOL:
            raise DomainError("segment weights must sum to 1")

    @classmethod
    def trivial(cls, market: Market) -> Segmentation:
        return cls((Segment(market.type_prior, 1),))

    @classmethod
    def full_reveal(cls, market: Market) -> Segmentation:
        T = market.T
        segs = []
        for t, tau in enumerate(market.type_prior):
            if tau > 0:
                segs.append(Segment(tuple(1 if s == t else 0 for s in range(T)), tau))
        return cls(tuple(segs))

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def weights(self) -> tuple:
        return tuple(s.w for s in self.segments)

    @property
    def points(self) -> np.ndarray:
        return np.array([[float(v) for v in s.x] for s in self.segments])

    def centroid(self) -> tuple:
        T = len(self.segments[0].x)
        return tuple(sum(s.w * s.x[t] for s in self.segments) for t in range(T))


def check_centroid(market: Market, seg: Segmentation, tol: float = SIMPLEX_TOL) -> float:
    """Return the largest centroid error; raise if it exceeds ``tol``."""
    c = seg.centroid()
    if len(c) != market.T:
        raise DomainError("segment points have the wrong dimension")
    err = max(abs(float(a - b)) for a, b in zip(c, market.type_prior))
    if err > tol:
        raise DomainError(f"segmentation centroid misses the prior by {err:.3g}")
    return err


@dataclass(frozen=True)
class SegmentMap:
    """``G[t][s]``: probability that type t is sent to segment s."""

    G: tuple
    labels: tuple = ()

    def __post_init__(self):
        G = tuple(tuple(parse_number(v) for v in row) for row in self.G)
        object.__setattr__(self, "G", G)
        if not G:
            raise DomainError("segment map needs at least one row")
        n = len(G[0])
        if any(len(row) != n for row in G):
            raise DomainError("segment map rows differ in length")
        for row in G:
            if any(v < -SIMPLEX_TOL for v in row) or abs(sum(row) - 1) > SIMPLEX_TOL:
                raise DomainError(f"segment map row {row} is not a distribution")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"s{i}" for i in range(n)))
        elif len(self.labels) != n:
            raise DomainError("one label per segment required")


def segmap_to_measure(market: Market, segmap: SegmentMap) -> Segmentation:
    if len(segmap.G) != market.T:
        raise DomainError("segment map needs one row per type")
    tau = market.type_prior
    segs = []
    for s in range(len(segmap.G[0])):
        w = sum(tau[t] * segmap.G[t][s] for t in range(market.T))
        if w <= 0:
            continue
        x = tuple(tau[t] * segmap.G[t][s] / w for t in range(market.T))
        segs.append(Segment(x, w))
    return Segmentation(tuple(segs))


def measure_to_segmap(market: Market, seg: Segmentation) -> SegmentMap:
    tau = market.type_prior
    if any(p == 0 for p in tau):
        raise DomainError("every type needs positive prior mass to build a segment map")
    G = []
    for t in range(market.T):
        row = [s.x[t] * s.w / tau[t] for s in seg.segments]
        total = sum(row)
        # absorb centroid round-off so each row is an exact distribution
        if total > 0 and total != 1:
            row = [v / total for v in row]
        G.append(tuple(row))
    return SegmentMap(tuple(G))


def posterior(market: Market, x: Sequence) -> DiscreteDistribution:
    return mixture(x, market.type_dists)


def region_of(market: Market, x: Sequence, tie_break: str = "low"):
    """Monopoly price of the posterior at ``x``; identifies the region X_p."""
    d = posterior(market, x)
    return d.values[best_price_index(d.revenues, tie_break)]


def consolidate(market: Market, seg: Segmentation, tie_break: str = "low") -> Segmentation:
    """Merge segments sharing a region into their weighted barycenter."""
    groups: dict = {}
    for s in seg.segments:
        if s.w < MIN_WEIGHT:
            continue
        groups.setdefault(region_of(market, s.x, tie_break), []).append(s)
    out = []
    for price in sorted(groups):
        members = groups[price]
        w = sum(s.w for s in members)
        x = tuple(sum(s.w * s.x[t] for s in members) / w for t in range(market.T))
        out.append(Segment(x, w))
    return Segmentation(tuple(out))


# --- pricing rules and evaluation -----------------------------------------


@dataclass(frozen=True)
class TrueMonopoly:
    """Seller knows the type distributions and posts the monopoly price."""

    tie_break: str = "low"

    def price_index(self, market: Market, k: int, seg: Segment) -> int:
        d = posterior(market, seg.x)
        return best_price_index(d.revenues, self.tie_break)


@dataclass(frozen=True)
class FixedPrices:
    """One predetermined price per segment (e.g. the LP's intended prices)."""

    prices: tuple

    def price_index(self, market: Market, k: int, seg: Segment) -> int:
        return market.grid.index(self.prices[k])


@dataclass(frozen=True)
class BeliefMonopoly:
    """Seller posts the monopoly price of the mixture of her beliefs."""

    beliefs: tuple
    tie_break: str = "low"

    def price_index(self, market: Market, k: int, seg: Segment) -> int:
        d = mixture(seg.x, self.beliefs)
        return best_price_index(d.revenues, self.tie_break)


@dataclass(frozen=True)
class Evaluation:
    revenue: object
    cs: object
    sw: object
    objective: object
    prices: tuple = ()


def evaluate(market: Market, seg: Segmentation, pricing, lam) -> Evaluation:
    """Weighted revenue, consumer surplus and welfare under a pricing rule."""
    lam = parse_number(lam)
    if not 0 <= lam <= 1:
        raise DomainError("lambda must lie in [0, 1]")
    rev = cs = 0
    prices = []
    for k, s in enumerate(seg.segments):
        i = pricing.price_index(market, k, s)
        d = posterior(market, s.x)
        rev = rev + s.w * d.revenues[i]
        cs = cs + s.w * d.surpluses[i]
        prices.append(market.prices[i])
    return Evaluation(rev, cs, rev + cs, lam * rev + (1 - lam) * cs, tuple(prices))


def tie_sensitivity(market: Market, seg: Segmentation, lam, tol: float = TIE_TOL) -> tuple:
    """Objective when every revenue tie is broken for / against the intermediary."""
    lam = parse_number(lam)
    best = worst = 0
    for s in seg.segments:
        d = posterior(market, s.x)
        top = max(d.revenues)
        vals = [lam * d.revenues[i] + (1 - lam) * d.surpluses[i]
                for i in range(market.V) if d.revenues[i] >= top - tol]
        best = best + s.w * max(vals)
        worst = worst + s.w * min(vals)
    return best, worst
