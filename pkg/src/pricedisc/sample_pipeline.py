"""Learning a robust segmentation from samples, plus belief adversaries.

The pipeline turns per-type samples into empirical distributions, projects
them onto MHR-like distributions, solves the segmentation LP on the
projected market, and robustifies the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .distributions import DiscreteDistribution, ValueGrid, ks_distance
from .errors import DomainError, StageError
from .lp import OptimalSegmentation, optimal_segmentation
from .mhr_project import project_mhr_like
from .robustify import (
    BELIEF_SLACK,
    EpsilonSchedule,
    RobustifiedSegmentation,
    epsilon_schedule,
    robustify_segmentation,
)
from .segmentation import BeliefMonopoly, Market, Segmentation, evaluate


@dataclass(frozen=True)
class SampleSet:
    """Per-type samples stored as grid indices."""

    grid: ValueGrid
    indices: tuple

    @property
    def T(self) -> int:
        return len(self.indices)

    @property
    def m(self) -> int:
        return len(self.indices[0]) if self.indices else 0

    def values(self, t: int) -> list:
        return [self.grid.values[i] for i in self.indices[t]]


def draw_samples(market: Market, m: int, seed) -> SampleSet:
    if m < 0:
        raise DomainError("sample count must be nonnegative")
    rng = np.random.default_rng(seed)
    out = []
    for d in market.type_dists:
        p = d.as_array()
        out.append(rng.choice(market.V, size=m, p=p / p.sum()) if m else np.zeros(0, dtype=int))
    return SampleSet(market.grid, tuple(out))


def empirical(indices: Sequence[int], grid: ValueGrid) -> DiscreteDistribution:
    """Uniform distribution over the samples, with exact frequencies."""
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        raise DomainError("cannot build an empirical distribution from zero samples")
    counts = np.bincount(idx, minlength=grid.V)
    n = int(idx.size)
    return DiscreteDistribution(grid, tuple(Fraction(int(c), n) for c in counts))


def seller_eps(m: int, V: int) -> float:
    """Belief error of a seller who learned from ``m`` samples per type: ``ln(mV) / sqrt(m)``."""
    if m < 1:
        raise DomainError("need at least one sample")
    return math.log(m * V) / math.sqrt(m)


@dataclass(frozen=True)
class PipelineResult:
    empiricals: tuple
    projections: tuple
    projected_market: Market
    optimum: OptimalSegmentation
    schedule: Optional[EpsilonSchedule]
    robust: Optional[RobustifiedSegmentation]
    eps_S: float

    @property
    def segmentation(self) -> Segmentation:
        """The robustified segmentation, or the raw optimum if robustification was skipped."""
        return self.robust.robust if self.robust is not None else self.optimum.segmentation


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def learn_segmentation(samples: SampleSet, lam, belief_slack: float = BELIEF_SLACK,
                       eps_S: Optional[float] = None, skip_infeasible_robustify: bool = False) -> PipelineResult:
    """Samples to robustified segmentation.

    The projection radius is ``seller_eps(m, V)`` unless ``eps_S`` is given;
    the robustification schedule uses ``belief_slack`` times that radius.
    Failures are re-raised as ``StageError`` naming the stage.  With
    ``skip_infeasible_robustify`` an infeasible schedule returns the raw
    optimum instead of raising.
    """
    grid = samples.grid
    T, V, m = samples.T, grid.V, samples.m
    emps = tuple(_stage("empirical", empirical, samples.indices[t], grid) for t in range(T))
    eps = _stage("seller_eps", seller_eps, m, V) if eps_S is None else float(eps_S)
    schedule = None
    try:
        schedule = _stage("epsilon_schedule", epsilon_schedule, eps * belief_slack, T, V)
    except StageError:
        if not skip_infeasible_robustify:
            raise
    projs = tuple(_stage("project_mhr_like", project_mhr_like, e, eps) for e in emps)
    pm = Market.uniform_prior(grid, projs)
    opt = _stage("optimal_segmentation", optimal_segmentation, pm, lam)
    rob = None
    if schedule is not None:
        rob = _stage("robustify_segmentation", robustify_segmentation, pm, opt.segmentation, opt.prices, schedule)
    return PipelineResult(emps, projs, pm, opt, schedule, rob, eps)


# --- belief adversary -----------------------------------------------------


@dataclass(frozen=True)
class SellerBelief:
    dists: tuple

    def max_ks(self, market: Market) -> float:
        return max(float(ks_distance(b, d)) for b, d in zip(self.dists, market.type_dists))


def belief_objective(market: Market, seg: Segmentation, belief: SellerBelief, lam) -> float:
    """Intermediary objective when the seller prices each segment by her beliefs."""
    return float(evaluate(market, seg, BeliefMonopoly(belief.dists), lam).objective)


def _belief_from_offsets(market: Market, base_q: np.ndarray, offsets: np.ndarray) -> tuple:
    dists = []
    for t in range(market.T):
        q = np.clip(base_q[t] + offsets[t], 0.0, 1.0)
        q[0] = 1.0
        q = np.minimum.accumulate(q)
        dists.append(DiscreteDistribution.from_quantiles(market.grid, q.tolist()))
    return tuple(dists)


@dataclass(frozen=True)
class AdversaryResult:
    belief: SellerBelief
    objective: float
    truthful_objective: float

    @property
    def drop(self) -> float:
        return self.truthful_objective - self.objective


def _descend(market: Market, seg: Segmentation, lam, offsets: np.ndarray, levels: np.ndarray, sweeps: int):
    base_q = market.quantile_matrix

    def value(off):
        return belief_objective(market, seg, SellerBelief(_belief_from_offsets(market, base_q, off)), lam)

    best = value(offsets)
    for _ in range(sweeps):
        improved = False
        for t in range(market.T):
            for i in range(1, market.V):
                keep = offsets[t, i]
                for lv in levels:
                    if lv == keep:
                        continue
                    offsets[t, i] = lv
                    val = value(offsets)
                    if val < best - 1e-15:
                        best, keep, improved = val, lv, True
                offsets[t, i] = keep
        if not improved:
            break
    return best, offsets


def adversarial_belief(market: Market, eps_S: float, seg: Segmentation, lam, sweeps: int = 3,
                       seed=None) -> AdversaryResult:
    """Coordinate descent over per-quantile belief offsets in ``[-eps_S, eps_S]``.

    Offsets move on a grid of step ``eps_S / 4``; monotone repair by running
    minimum keeps every belief inside the KS ball.  The search starts at the
    truth and, when ``seed`` is given, also from a random offset; the
    lower objective wins.
    """
    if eps_S < 0:
        raise DomainError("eps_S must be nonnegative")
    truth = SellerBelief(tuple(market.type_dists))
    base = belief_objective(market, seg, truth, lam)
    if eps_S == 0:
        return AdversaryResult(truth, base, base)
    levels = np.arange(-4, 5) * (eps_S / 4)
    shape = market.quantile_matrix.shape
    starts = [np.zeros(shape)]
    if seed is not None:
        starts.append(np.random.default_rng(seed).choice(levels, size=shape))
    best_val, best_off = np.inf, None
    for off in starts:
        off[:, 0] = 0.0
        val, off = _descend(market, seg, lam, off, levels, sweeps)
        if val < best_val:
            best_val, best_off = val, off.copy()
    belief = SellerBelief(_belief_from_offsets(market, market.quantile_matrix, best_off))
    return AdversaryResult(belief, best_val, base)


# --- unbounded sample complexity ------------------------------------------


def impossibility_demo(delta: float, m: int) -> float:
    """Chance that ``m`` samples make the seller post the high price.

    Values are 1/2 and 1 with ``Pr[1] = 1/2 - delta``.  The empirical
    monopoly price is 1 exactly when high values are a strict majority
    (ties go to the low price).  Computed as an exact binomial tail in log
    space.
    """
    if not 0 <= delta <= 0.5:
        raise DomainError("delta must lie in [0, 1/2]")
    if m < 1:
        raise DomainError("need at least one sample")
    p = 0.5 - delta
    if p == 0:
        return 0.0
    k = np.arange(m // 2 + 1, m + 1)
    if k.size == 0:
        return 0.0
    logc = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
    logp = logc + k * math.log(p) + (m - k) * math.log1p(-p)
    return float(np.exp(logsumexp(logp)))


def impossibility_sweep(ms: Sequence[int] = (100, 10_000, 1_000_000), scale: float = 0.1) -> list:
    """``(m, delta, probability)`` with ``delta = scale / m``."""
    return [(m, scale / m, impossibility_demo(scale / m, m)) for m in ms]
