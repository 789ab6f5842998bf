"""Brute-force segmentation oracle on a discretized type simplex.

Independent of the cone LP: every simplex point at a fixed resolution is
valued by pricing its posterior directly, then the best mixture of points
with centroid ``tau`` is found with scipy's HiGHS solver.
"""
from __future__ import annotations

from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .distributions import TIE_TOL
from .errors import DomainError, LpError
from .segmentation import Market

DEFAULT_RESOLUTION = 60


class OracleResult(NamedTuple):
    objective: float
    points: np.ndarray
    weights: np.ndarray


def simplex_grid(T: int, resolution: int) -> np.ndarray:
    """All points of the simplex whose coordinates are multiples of 1/resolution."""
    pts = []
    # stars and bars: choose T-1 bar positions among resolution+T-1 slots
    for bars in combinations(range(resolution + T - 1), T - 1):
        prev = -1
        counts = []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(resolution + T - 2 - prev)
        pts.append(counts)
    return np.array(pts, dtype=float) / resolution


def point_values(market: Market, points: np.ndarray, lam: float) -> np.ndarray:
    """Objective of each point with revenue ties broken for the intermediary."""
    R = points @ market.revenue_matrix
    C = points @ market.surplus_matrix
    obj = lam * R + (1 - lam) * C
    top = R.max(axis=1, keepdims=True)
    return np.where(R >= top - TIE_TOL, obj, -np.inf).max(axis=1)


def brute_force_optimum(market: Market, lam: float, resolution: int = DEFAULT_RESOLUTION) -> OracleResult:
    if market.T > 4:
        raise DomainError("brute-force oracle is meant for T <= 4")
    pts = simplex_grid(market.T, resolution)
    vals = point_values(market, pts, float(lam))
    tau = np.array([float(p) for p in market.type_prior])
    res = linprog(-vals, A_eq=pts.T, b_eq=tau, bounds=(0, None), method="highs")
    if res.status != 0:
        raise LpError(f"oracle weight LP failed: {res.message}")
    keep = res.x > 1e-12
    return OracleResult(float(vals @ res.x), pts[keep], res.x[keep])
