"""Robustifying segmentations against slightly wrong seller beliefs.

A robustified segmentation nudges every significant segment toward one
type vertex so that no nearly-optimal seller price lands far below the
intended price, then adds vertex segments that restore the type prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import best_price_index, eps_optimal_prices, expected_value
from .errors import DomainError, InvariantError, NoRobustType, ScheduleError
from .segmentation import SIMPLEX_TOL, Market, Segment, Segmentation, posterior

# Factor between the sampling error and the belief error the pipeline guards against.
BELIEF_SLACK = 6
# Vertex weights more negative than this indicate a broken precondition.
NEGATIVE_WEIGHT_TOL = 1e-10
AUDIT_TOL = 1e-12


@dataclass(frozen=True)
class EpsilonSchedule:
    """Seller error ``eps_S``, intermediary loss ``eps_I`` and revenue gap ``eps_R``."""

    eps_S: float
    eps_I: float
    eps_R: float

    def __post_init__(self):
        if self.eps_S < 0 or self.eps_I < 0 or self.eps_R < 0:
            raise DomainError("epsilons must be nonnegative")
        if self.eps_I >= 1:
            raise ScheduleError(f"eps_I = {self.eps_I:.4g} >= 1; instance too small to robustify")


def schedule_bound(eps_S: float, T: int, V: int, log_v: Optional[float] = None) -> float:
    """``eps_S^(1/6) * T^(2/3) * (ln V)^(1/6)``, the smallest admissible ``eps_I``."""
    lv = math.log(V) if log_v is None else log_v
    return eps_S ** (1 / 6) * T ** (2 / 3) * lv ** (1 / 6)


def epsilon_schedule(eps_S: float, T: int, V: int, log_v: Optional[float] = None) -> EpsilonSchedule:
    """Tightest schedule for a seller error ``eps_S``.

    ``eps_I`` equals the bound, raised to ``eps_S`` if the bound is smaller
    (possible only for V <= 2).  ``log_v`` overrides ``ln V``.
    """
    if not eps_S > 0:
        raise DomainError("eps_S must be positive")
    if T < 1 or V < 1:
        raise DomainError("T and V must be positive")
    eps_I = max(schedule_bound(eps_S, T, V, log_v), eps_S)
    if eps_I >= 1:
        raise ScheduleError(f"eps_I = {eps_I:.4g} >= 1 for eps_S={eps_S:.4g}, T={T}, V={V}")
    return EpsilonSchedule(eps_S, eps_I, eps_S * T / eps_I)


def _floats(x) -> np.ndarray:
    return np.array([float(v) for v in x])


def find_robust_type(market: Market, x: Sequence, p_star, schedule: EpsilonSchedule) -> int:
    """First type whose revenue at ``p_star`` beats every far-lower-quantile price by ``eps_R``.

    "Far" prices are those whose quantile under the segment posterior is at
    least ``eps_I`` below the quantile of ``p_star``.
    """
    k = market.grid.index(p_star)
    q = _floats(x) @ market.quantile_matrix
    far = np.flatnonzero(q <= q[k] - schedule.eps_I + AUDIT_TOL)
    R = market.revenue_matrix
    for t in range(market.T):
        if np.all(R[t, far] < R[t, k] - schedule.eps_R):
            return t
    raise NoRobustType(
        f"no type separates price {p_star} from {len(far)} low-quantile prices by eps_R={schedule.eps_R:.3g}"
    )


def robustify_segment(market: Market, x: Sequence, p_star, schedule: EpsilonSchedule) -> tuple:
    """Return ``(x_r, t)``: the segment moved ``eps_I / T`` toward vertex ``t``."""
    t = find_robust_type(market, x, p_star, schedule)
    a = schedule.eps_I / market.T
    x_r = tuple((1 - a) * float(v) + (a if s == t else 0.0) for s, v in enumerate(x))
    return x_r, t


@dataclass(frozen=True)
class RobustifiedSegmentation:
    """``robust`` lists the moved base segments first, then one vertex segment per type."""

    base: Segmentation
    robust: Segmentation
    intended_prices: tuple
    insignificant: tuple
    robust_types: tuple
    schedule: EpsilonSchedule

    @property
    def n_base(self) -> int:
        return len(self.base)

    def vertex_prices(self, market: Market) -> tuple:
        """Low-tie monopoly price of each type (the natural price of its vertex segment)."""
        return tuple(market.prices[best_price_index(d.revenues)] for d in market.type_dists)

    def robust_prices(self, market: Market) -> tuple:
        return tuple(self.intended_prices) + self.vertex_prices(market)


def robustify_segmentation(market: Market, seg: Segmentation, intended_prices: Sequence,
                           schedule: EpsilonSchedule) -> RobustifiedSegmentation:
    if not market.has_uniform_prior:
        raise DomainError("robustification assumes a uniform type prior")
    if len(intended_prices) != len(seg):
        raise DomainError("one intended price per segment required")
    T = market.T
    eps_I = schedule.eps_I
    moved, flags, types = [], [], []
    for s, p in zip(seg.segments, intended_prices):
        small = float(expected_value(posterior(market, s.x))) < eps_I
        if small:
            x_r, t = tuple(float(v) for v in s.x), None
        else:
            x_r, t = robustify_segment(market, s.x, p, schedule)
        moved.append(Segment(x_r, (1 - eps_I) * float(s.w)))
        flags.append(small)
        types.append(t)
    used = np.zeros(T)
    for s in moved:
        used += s.w * _floats(s.x)
    vertex = []
    for t in range(T):
        w = 1 / T - used[t]
        if w < -NEGATIVE_WEIGHT_TOL:
            raise InvariantError(f"vertex segment {t} would get negative weight {w:.3g}")
        vertex.append(Segment(tuple(1.0 if s == t else 0.0 for s in range(T)), max(w, 0.0)))
    robust = Segmentation(tuple(moved + vertex))
    return RobustifiedSegmentation(seg, robust, tuple(intended_prices), tuple(flags), tuple(types), schedule)


# --- audit ----------------------------------------------------------------


@dataclass(frozen=True)
class SegmentAudit:
    index: int
    significant: bool
    weight_ok: bool
    mixture_ok: bool
    robust_ok: bool
    robust_ok_moved: bool
    mixture_distance: float
    worst_quantile_drop: float


@dataclass(frozen=True)
class RobustnessAudit:
    segments: tuple
    centroid_error: float
    sw_base: float
    sw_worst: float
    rev_base: float
    rev_low: float
    rev_high: float
    eps_I: float
    reference: str

    @property
    def weight_ok(self) -> bool:
        return all(a.weight_ok for a in self.segments)

    @property
    def mixture_ok(self) -> bool:
        return all(a.mixture_ok for a in self.segments)

    @property
    def robust_ok(self) -> bool:
        if self.reference == "moved":
            return all(a.robust_ok_moved for a in self.segments)
        return all(a.robust_ok for a in self.segments)

    @property
    def ok(self) -> bool:
        return self.weight_ok and self.mixture_ok and self.robust_ok and self.centroid_error <= SIMPLEX_TOL

    @property
    def sw_constant(self) -> float:
        """Measured welfare loss per unit of ``eps_I`` (0 if nothing is lost)."""
        return max(self.sw_base - self.sw_worst, 0.0) / self.eps_I if self.eps_I > 0 else 0.0

    @property
    def rev_constant(self) -> float:
        gap = max(abs(self.rev_low - self.rev_base), abs(self.rev_high - self.rev_base))
        return gap / self.eps_I if self.eps_I > 0 else 0.0


def audit_robustness(market: Market, rob: RobustifiedSegmentation, schedule: Optional[EpsilonSchedule] = None,
                     multiplier: float = 1.0, reference: str = "base") -> RobustnessAudit:
    """Check the three robustness conditions exactly on the grid.

    Condition 3 compares quantiles of nearly-optimal prices with that of the
    intended price.  ``reference="base"`` measures quantiles under the base
    segment posterior (the quantity the construction controls);
    ``reference="moved"`` measures them under the moved posterior.  Both are
    always computed.  ``multiplier`` scales ``eps_S`` when listing nearly-
    optimal prices.
    """
    if reference not in ("base", "moved"):
        raise DomainError("reference must be 'base' or 'moved'")
    sch = schedule or rob.schedule
    eps_opt = multiplier * sch.eps_S
    audits = []
    for i, (sb, sr) in enumerate(zip(rob.base.segments, rob.robust.segments)):
        d_base = posterior(market, sb.x)
        significant = float(expected_value(d_base)) >= sch.eps_I
        xb, xr = _floats(sb.x), _floats(sr.x)
        dist = float(np.abs(xb - xr).sum())
        d_r = posterior(market, sr.x)
        k = market.grid.index(rob.intended_prices[i])
        opt = eps_optimal_prices(d_r, eps_opt)
        qb = [float(v) for v in d_base.quantiles]
        qr = [float(v) for v in d_r.quantiles]
        drop_b = max(qb[k] - qb[j] for j in opt)
        drop_r = max(qr[k] - qr[j] for j in opt)
        if significant:
            audits.append(SegmentAudit(
                i, True,
                float(sr.w) >= (1 - sch.eps_I) * float(sb.w) - AUDIT_TOL,
                dist <= sch.eps_I + AUDIT_TOL,
                drop_b < sch.eps_I + AUDIT_TOL,
                drop_r < sch.eps_I + AUDIT_TOL,
                dist, drop_b if reference == "base" else drop_r,
            ))
        else:
            audits.append(SegmentAudit(i, False, True, True, True, True, dist,
                                       drop_b if reference == "base" else drop_r))

    cent = np.zeros(market.T)
    for s in rob.robust.segments:
        cent += float(s.w) * _floats(s.x)
    cent_err = float(np.abs(cent - _floats(market.type_prior)).max())

    sw_base = rev_base = 0.0
    for s, p in zip(rob.base.segments, rob.intended_prices):
        d = posterior(market, s.x)
        k = market.grid.index(p)
        sw_base += float(s.w) * float(d.tail_values[k])
        rev_base += float(s.w) * float(d.revenues[k])
    sw_worst = rev_low = rev_high = 0.0
    for s in rob.robust.segments:
        d = posterior(market, s.x)
        opt = eps_optimal_prices(d, eps_opt)
        w = float(s.w)
        sw_worst += w * min(float(d.tail_values[j]) for j in opt)
        rev_low += w * min(float(d.revenues[j]) for j in opt)
        rev_high += w * max(float(d.revenues[j]) for j in opt)
    return RobustnessAudit(tuple(audits), cent_err, sw_base, sw_worst, rev_base, rev_low, rev_high,
                           sch.eps_I, reference)
