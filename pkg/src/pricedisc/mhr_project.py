"""Approximate projection of an empirical distribution onto MHR-like ones.

For each guessed monopoly price the empirical quantiles are shifted down,
the guessed price is strengthened, and the revenue curve is ironed up to
its concave hull.  Candidates that pass the MHR-like check compete on
KS distance to the empirical distribution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    PMF_TOL,
    DiscreteDistribution,
    MhrReport,
    check_mhr_like,
    exact_div,
    expected_value,
    ks_distance,
    revenue_curve,
    upper_hull,
)
from .errors import DomainError, ProjectionFailed

log = logging.getLogger(__name__)

# Slack for the MHR-like check on float-valued candidates.
CHECK_TOL = 1e-9


def dominated_shift(emp: DiscreteDistribution, eps_S) -> DiscreteDistribution:
    """Lower every quantile by ``eps_S`` (floored at 0); the lowest value keeps quantile 1."""
    if eps_S < 0:
        raise DomainError("eps_S must be nonnegative")
    if eps_S == 0:
        return emp
    q = [max(v - eps_S, 0 * v) for v in emp.quantiles]
    return DiscreteDistribution.from_quantiles(emp.grid, q)


def _raise_quantile(q: list, k: int, target) -> list:
    """Set ``q[k]`` to ``target`` if higher, lifting lower prices to stay monotone."""
    q = list(q)
    if target > q[k]:
        for i in range(k + 1):
            if q[i] < target:
                q[i] = target
    return q


def strengthen_price(dist: DiscreteDistribution, emp: DiscreteDistribution, p_star, eps_S) -> DiscreteDistribution:
    """Raise the quantile of ``p_star`` to ``min(q_emp(p_star) + eps_S, 1)``."""
    k = dist.grid.index(p_star)
    target = min(emp.quantiles[k] + eps_S, 1)
    if target <= dist.quantiles[k]:
        return dist
    return DiscreteDistribution.from_quantiles(dist.grid, _raise_quantile(dist.quantiles, k, target))


def _ray_hull_intersection(hull: Sequence, p) -> object:
    """Largest ``q`` with ``hull(q) >= p * q`` on a concave hull starting at the origin."""
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if y2 < p * x2 - PMF_TOL * max(1, abs(p)):
            slope = exact_div(y2 - y1, x2 - x1)
            return exact_div(y1 - slope * x1, p - slope)
    return hull[-1][0]


def ironed_quantiles(quantiles: Sequence, values: Sequence) -> list:
    """Quantiles lifted to where each price's revenue ray meets the hull."""
    pts = [(0 * quantiles[0], 0 * quantiles[0])] + [(q, v * q) for v, q in zip(values, quantiles)]
    hull = upper_hull(pts)
    out = []
    for v, q in zip(values, quantiles):
        if q >= 1:
            out.append(q)
            continue
        new = _ray_hull_intersection(hull, v)
        out.append(min(max(new, q), 1))
    # guard against round-off breaking monotonicity
    for i in range(1, len(out)):
        if out[i] > out[i - 1]:
            out[i] = out[i - 1]
    return out


def iron(dist: DiscreteDistribution) -> DiscreteDistribution:
    """Raise each quantile until its revenue point sits on the concave hull."""
    q = ironed_quantiles(dist.quantiles, dist.values)
    if list(q) == list(dist.quantiles):
        return dist
    return DiscreteDistribution.from_quantiles(dist.grid, q)


@dataclass(frozen=True)
class Candidate:
    """Outcome of one guessed monopoly price."""

    guess: object
    dist: DiscreteDistribution
    report: MhrReport
    ks_to_emp: float

    @property
    def passed(self) -> bool:
        return self.report.ok


def candidate_for_guess(emp: DiscreteDistribution, eps_S, p_star, tol: float = CHECK_TOL) -> Candidate:
    d = dominated_shift(emp, eps_S)
    d = strengthen_price(d, emp, p_star, eps_S)
    d = iron(d)
    return Candidate(p_star, d, check_mhr_like(d, tol=tol), float(ks_distance(d, emp)))


def projection_candidates(emp: DiscreteDistribution, eps_S, tol: float = CHECK_TOL) -> list:
    if not emp.grid.unit_bounded:
        raise DomainError("projection needs values scaled into (0, 1]")
    return [candidate_for_guess(emp, eps_S, p, tol) for p in emp.values]


def select_candidate(cands: Sequence[Candidate]) -> Candidate:
    """Closest passing candidate to the empirical distribution (lowest guess on ties)."""
    ok = [c for c in cands if c.passed]
    if not ok:
        raise ProjectionFailed("no guessed monopoly price yields an MHR-like candidate")
    return min(ok, key=lambda c: c.ks_to_emp)


def project_mhr_like(emp: DiscreteDistribution, eps_S, tol: float = CHECK_TOL) -> DiscreteDistribution:
    return select_candidate(projection_candidates(emp, eps_S, tol)).dist


# --- band-constrained variant ---------------------------------------------


def band_candidates(lower: Sequence[float], upper: Sequence[float], anchor: Sequence[float], grid,
                    tol: float = CHECK_TOL) -> list:
    """MHR-like distributions with quantiles inside ``[lower, upper]``.

    For each guessed monopoly price start at the lower band, lift the guess
    to the anchor quantile, iron, and clip to the upper band.  Only
    candidates that stay in the band and pass the check are returned.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    an = np.clip(np.asarray(anchor, dtype=float), lo, hi)
    vals = [float(v) for v in grid.values]
    out = []
    for k in range(grid.V):
        q = _raise_quantile(list(lo), k, an[k])
        q[0] = 1.0
        q = ironed_quantiles(q, vals)
        q = np.minimum(q, hi)
        q[0] = 1.0
        q = np.minimum.accumulate(q)
        if np.any(q < lo - 1e-12):
            continue
        d = DiscreteDistribution.from_quantiles(grid, q.tolist())
        if check_mhr_like(d, tol=tol).ok:
            out.append(d)
    return out


def project_into_band(lower: Sequence[float], upper: Sequence[float], anchor: Sequence[float], grid,
                      tol: float = CHECK_TOL) -> Optional[DiscreteDistribution]:
    """Highest-welfare band candidate, or ``None`` if the band has none."""
    cands = band_candidates(lower, upper, anchor, grid, tol)
    if not cands:
        return None
    return max(cands, key=lambda d: float(expected_value(d)))


def clamped_midpoint(lower: Sequence[float], upper: Sequence[float], grid) -> DiscreteDistribution:
    """Fallback when the band has no MHR-like member: iron the midpoint and clip to the band."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    mid = (lo + hi) / 2
    mid[0] = 1.0
    mid = np.minimum.accumulate(mid)
    q = np.clip(ironed_quantiles(mid.tolist(), [float(v) for v in grid.values]), lo, hi)
    q[0] = 1.0
    q = np.minimum.accumulate(q)
    log.warning("band admits no MHR-like distribution; using the clipped ironed midpoint")
    return DiscreteDistribution.from_quantiles(grid, q.tolist())


def revenue_points(dist: DiscreteDistribution) -> list:
    """``(quantile, revenue)`` pairs as floats, for diagnostics."""
    return [(float(q), float(r)) for q, r in revenue_curve(dist).points]
