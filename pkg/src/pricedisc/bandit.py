"""Repeated intermediary-seller-buyer interaction with learning sellers.

Both parties share per (type, price) purchase counts.  The seller prices
from confidence bounds on quantiles; the intermediary segments optimistically
with respect to the same bounds and robustifies the result.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import TIE_TOL, DiscreteDistribution, ValueGrid, best_price_index
from .errors import DomainError, ScheduleError
from .lp import optimal_segmentation
from .mhr_project import clamped_midpoint, project_into_band
from .robustify import EpsilonSchedule, RobustifiedSegmentation, robustify_segmentation, schedule_bound
from .segmentation import Market, Segmentation, measure_to_segmap

log = logging.getLogger(__name__)

DEFAULT_C = 2.0
DEFAULT_RECOMPUTE = 100
EXPLOIT_TOL = 1e-12


class ConfidenceState:
    """Trial and purchase counts per (type, price index) with derived bounds."""

    def __init__(self, T: int, V: int, C: float = DEFAULT_C):
        if C <= 0:
            raise DomainError("confidence constant C must be positive")
        self.T, self.V, self.C = T, V, C
        self.trials = np.zeros((T, V), dtype=np.int64)
        self.sales = np.zeros((T, V), dtype=np.int64)
        self._cache = None

    def update(self, t: int, price_index: int, bought: bool) -> None:
        self.trials[t, price_index] += 1
        self.sales[t, price_index] += int(bought)
        self._cache = None

    def raw_bounds(self) -> tuple:
        """``(U~, L~)`` as ``[t, v]`` arrays; untried pairs get ``(1, 0)``."""
        m = self.trials
        seen = m > 0
        safe = np.where(seen, m, 1)
        mean = self.sales / safe
        rad = np.sqrt(self.C / safe)
        return np.where(seen, mean + rad, 1.0), np.where(seen, mean - rad, 0.0)

    def bounds(self) -> tuple:
        """Monotone ``(U, L)`` as ``[t, v]`` arrays, clipped to [0, 1] with ``L <= U``."""
        if self._cache is None:
            ut, lt = self.raw_bounds()
            U = np.clip(np.minimum.accumulate(ut, axis=1), 0.0, 1.0)
            L = np.clip(np.maximum.accumulate(lt[:, ::-1], axis=1)[:, ::-1], 0.0, 1.0)
            self._cache = (U, np.minimum(L, U))
        return self._cache

    def copy(self) -> ConfidenceState:
        out = ConfidenceState(self.T, self.V, self.C)
        out.trials = self.trials.copy()
        out.sales = self.sales.copy()
        return out


def confidence_bounds(state: ConfidenceState, v: int, t: int) -> tuple:
    """``(U~, L~, U, L)`` for price index ``v`` and type ``t``."""
    ut, lt = state.raw_bounds()
    U, L = state.bounds()
    return float(ut[t, v]), float(lt[t, v]), float(U[t, v]), float(L[t, v])


def segment_bounds(state: ConfidenceState, p: int, x: Sequence[float]) -> tuple:
    """Quantile bounds of price index ``p`` for the type mixture ``x``."""
    U, L = state.bounds()
    x = np.asarray(x, dtype=float)
    return float(x @ U[:, p]), float(x @ L[:, p])


def _segment_surfaces(state: ConfidenceState, x) -> tuple:
    U, L = state.bounds()
    x = np.asarray(x, dtype=float)
    return x @ U, x @ L


def is_exploit(state: ConfidenceState, x, p: int, eps_S: float, prices: Sequence[float],
               on: str = "revenue") -> bool:
    """Whether posting price index ``p`` on segment ``x`` counts as exploiting.

    ``on="revenue"`` compares upper revenue bounds ``p * U(p, x)``;
    ``on="quantile"`` compares the quantile bounds ``U(p, x)`` directly.
    """
    Ux, _ = _segment_surfaces(state, x)
    if on == "revenue":
        score = np.asarray(prices, dtype=float) * Ux
    elif on == "quantile":
        score = Ux
    else:
        raise DomainError(f"unknown exploit reading {on!r}")
    return bool(score[p] >= score.max() - eps_S - EXPLOIT_TOL)


def is_major(state: ConfidenceState, x, p: int, eps_M: float) -> bool:
    """Quantile band of the posted price is at least ``eps_M`` wide."""
    u, l = segment_bounds(state, p, x)
    return u - l >= eps_M


def seller_ucb(state: ConfidenceState, x, prices: Sequence[float]) -> int:
    """Price index maximizing ``p * U(p, x)``; ties go to the lowest price."""
    Ux, _ = _segment_surfaces(state, x)
    return best_price_index(list(np.asarray(prices, dtype=float) * Ux), "low", TIE_TOL)


def etc_eps(m: int, T: int, V: int) -> float:
    """Exploration share of the explore-then-commit seller, ``min(1, m^(-1/3) T V)``."""
    if m < 1:
        return 1.0
    return min(1.0, m ** (-1 / 3) * T * V)


def seller_etc(state: ConfidenceState, x, round_index: int, m: int, prices: Sequence[float],
               rng: np.random.Generator, eps_S: Optional[float] = None) -> int:
    """Random prices for the first ``ceil(eps_S * m)`` rounds, then the best lower-bound revenue.

    In the commit phase every price whose upper revenue bound reaches the
    best lower revenue bound survives; the survivor with the highest lower
    bound is posted.
    """
    V = len(prices)
    eps = etc_eps(m, state.T, V) if eps_S is None else eps_S
    if round_index < math.ceil(eps * m):
        return int(rng.integers(V))
    Ux, Lx = _segment_surfaces(state, x)
    p = np.asarray(prices, dtype=float)
    up, lo = p * Ux, p * Lx
    survivors = [i for i in range(V) if up[i] >= lo.max() - EXPLOIT_TOL]
    return max(survivors, key=lambda i: (lo[i], -i))


def epsilon_m(m: int, T: int, V: int) -> tuple:
    """``(eps_M, eps_I)`` balancing the robustification loss against exploration.

    ``eps_M = (T^(1/3) V / (m (ln V)^(1/6)))^(6/19)`` and ``eps_I`` is the
    smallest admissible loss for ``eps_M``, so that ``eps_I * m = T V eps_M^-3``.
    """
    if m < 1 or T < 1 or V < 2:
        raise DomainError("need m >= 1, T >= 1 and V >= 2")
    lv = math.log(V)
    eps_M = (T ** (1 / 3) * V / (m * lv ** (1 / 6))) ** (6 / 19)
    eps_I = schedule_bound(eps_M, T, V)
    resid = abs(eps_I * m - T * V * eps_M ** -3) / (T * V * eps_M ** -3)
    if resid > 1e-9:
        raise AssertionError(f"eps_M identity off by {resid:.3g}")
    return eps_M, eps_I


# --- intermediary ---------------------------------------------------------


ANCHORS = ("upper", "mid", "lower")


@dataclass(frozen=True)
class OptimisticChoice:
    dists: tuple
    anchor: str
    opt: float
    fallbacks: int


def optimistic_distributions(state: ConfidenceState, grid: ValueGrid, T: int, lam=0,
                             anchors: Sequence[str] = ANCHORS) -> OptimisticChoice:
    """Heuristic optimistic MHR-like distributions inside the confidence band.

    Each anchor (upper bounds, midpoint, lower bounds) yields one band-
    constrained projection per type; the anchor whose market has the highest
    optimal objective wins.
    """
    U, L = state.bounds()
    best = None
    for name in anchors:
        dists, fallbacks = [], 0
        for t in range(T):
            anchor = {"upper": U[t], "mid": (U[t] + L[t]) / 2, "lower": L[t]}[name]
            d = project_into_band(L[t], U[t], anchor, grid)
            if d is None:
                d = clamped_midpoint(L[t], U[t], grid)
                fallbacks += 1
            dists.append(d)
        opt = optimal_segmentation(Market.uniform_prior(grid, dists), lam).objective
        if best is None or opt > best.opt + 1e-12:
            best = OptimisticChoice(tuple(dists), name, opt, fallbacks)
    return best


@dataclass(frozen=True)
class IntermediaryPlan:
    segmentation: Segmentation
    choice: OptimisticChoice
    robust: Optional[RobustifiedSegmentation]

    @property
    def robustified(self) -> bool:
        return self.robust is not None


def intermediary_round(state: ConfidenceState, grid: ValueGrid, T: int, lam, m: int,
                       fallback: str = "raw") -> IntermediaryPlan:
    """Optimistic distributions, optimal segmentation, robustification with ``eps_M``.

    When the ``eps_M`` schedule gives ``eps_I >= 1`` the robustification is
    undefined; ``fallback="raw"`` then plays the unrobustified optimum and
    ``fallback="raise"`` raises ``ScheduleError``.
    """
    choice = optimistic_distributions(state, grid, T, lam)
    belief_market = Market.uniform_prior(grid, choice.dists)
    opt = optimal_segmentation(belief_market, lam)
    eps_M, eps_I = epsilon_m(max(m, 1), T, grid.V)
    if eps_I >= 1:
        if fallback == "raise":
            raise ScheduleError(f"eps_I = {eps_I:.3g} >= 1 at m={m}")
        return IntermediaryPlan(opt.segmentation, choice, None)
    schedule = EpsilonSchedule(eps_M, eps_I, eps_M * T / eps_I)
    rob = robustify_segmentation(belief_market, opt.segmentation, opt.prices, schedule)
    return IntermediaryPlan(rob.robust, choice, rob)


# --- simulation -----------------------------------------------------------


@dataclass(frozen=True)
class RoundLog:
    round: int
    type: int
    segment: tuple
    price: float
    bought: bool
    exploit: bool
    major: bool
    objective: float


@dataclass
class SimulationReport:
    seller: str
    lam: float
    m: int
    seed: object
    opt: float
    cumulative: float
    eps_M: float
    eps_I: float
    eps_S: float
    major_explorations: int
    non_exploit: int
    robustified_plans: int
    raw_plans: int
    rounds: list = field(default_factory=list)

    @property
    def average(self) -> float:
        return self.cumulative / self.m if self.m else 0.0

    @property
    def regret(self) -> float:
        return self.opt - self.average if self.m else 0.0

    @property
    def non_exploit_fraction(self) -> float:
        return self.non_exploit / self.m if self.m else 0.0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "type", "price", "bought", "exploit", "major", "objective_cum"])
            cum = 0.0
            for r in self.rounds:
                cum += r.objective
                w.writerow([r.round, r.type, r.price, int(r.bought), int(r.exploit), int(r.major), repr(cum)])

    def summary(self) -> dict:
        return {
            "seller": self.seller, "lambda": self.lam, "m": self.m, "seed": self.seed,
            "opt": self.opt, "average": self.average, "regret": self.regret,
            "eps_M": self.eps_M, "eps_I": self.eps_I, "eps_S": self.eps_S,
            "major_explorations": self.major_explorations, "non_exploit": self.non_exploit,
            "robustified_plans": self.robustified_plans, "raw_plans": self.raw_plans,
        }


def simulate(market: Market, seller: str, lam, m: int, seed, recompute_every: int = DEFAULT_RECOMPUTE,
             C: float = DEFAULT_C, fallback: str = "raw", keep_rounds: bool = True) -> SimulationReport:
    """Run ``m`` rounds; each round's objective is the expected one given segment and price."""
    if seller not in ("ucb", "etc"):
        raise DomainError(f"unknown seller model {seller!r}")
    if not market.has_uniform_prior:
        raise DomainError("the bandit simulation assumes a uniform type prior")
    if recompute_every < 1:
        raise DomainError("recompute_every must be positive")
    lam = float(lam)
    T, V = market.T, market.V
    prices = [float(p) for p in market.prices]
    opt = optimal_segmentation(market, lam).objective
    if m == 0:
        return SimulationReport(seller, lam, 0, seed, opt, 0.0, float("nan"), float("nan"), 0.0, 0, 0, 0, 0)
    rng = np.random.default_rng(seed)
    state = ConfidenceState(T, V, C)
    eps_M, eps_I = epsilon_m(m, T, V)
    eps_S = 0.0 if seller == "ucb" else etc_eps(m, T, V)
    R, CS = market.revenue_matrix, market.surplus_matrix
    pmfs = np.array([d.as_array() for d in market.type_dists])
    tau = np.array([float(p) for p in market.type_prior])

    rep = SimulationReport(seller, lam, m, seed, opt, 0.0, eps_M, eps_I, eps_S, 0, 0, 0, 0)
    for r in range(m):
        if r % recompute_every == 0:
            plan = intermediary_round(state, market.grid, T, lam, m, fallback)
            G = np.array([[float(g) for g in row] for row in measure_to_segmap(market, plan.segmentation).G])
            G = G / G.sum(axis=1, keepdims=True)
            points = plan.segmentation.points
            if plan.robustified:
                rep.robustified_plans += 1
            else:
                rep.raw_plans += 1
        t = int(rng.choice(T, p=tau))
        v = int(rng.choice(V, p=pmfs[t]))
        s = int(rng.choice(G.shape[1], p=G[t]))
        x = points[s]
        if seller == "ucb":
            p = seller_ucb(state, x, prices)
        else:
            p = seller_etc(state, x, r, m, prices, rng, eps_S)
        exploit = is_exploit(state, x, p, eps_S, prices)
        major = (not exploit) and is_major(state, x, p, eps_M)
        bought = v >= p
        obj = float(x @ (lam * R[:, p] + (1 - lam) * CS[:, p]))
        state.update(t, p, bought)
        rep.cumulative += obj
        rep.non_exploit += int(not exploit)
        rep.major_explorations += int(major)
        if keep_rounds:
            rep.rounds.append(RoundLog(r, t, tuple(float(c) for c in x), prices[p], bought, exploit, major, obj))
    return rep
