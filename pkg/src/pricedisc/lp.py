"""Dense two-phase simplex solver and the optimal-segmentation LP."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .distributions import parse_number
from .errors import DomainError, LpError
from .segmentation import Market, Segment, Segmentation

LP_TOL = 1e-9
# z_p vectors with smaller l1 norm are treated as absent segments.
MIN_SEGMENT_MASS = 1e-10


@dataclass
class LinearProgram:
    """``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``."""

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub, self.b_ub = self._block(self.A_ub, self.b_ub, n, "ub")
        self.A_eq, self.b_eq = self._block(self.A_eq, self.b_eq, n, "eq")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise DomainError("LP coefficients must be finite")

    @staticmethod
    def _block(A, b, n, name):
        if A is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[1] != n or A.shape[0] != b.size:
            raise DomainError(f"{name} block has shape {A.shape} with rhs of size {b.size}; expected (*, {n})")
        return A, b

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])


def _run_simplex(tab, basis, cost, allowed, tol, max_iter):
    """Maximize ``cost`` over the tableau in place with Bland's rule."""
    m = tab.shape[0]
    it = 0
    while True:
        if it >= max_iter:
            raise LpError("simplex iteration limit reached")
        cb = cost[basis]
        reduced = cost - cb @ tab[:, :-1]
        entering = -1
        for j in allowed:
            if reduced[j] > tol:
                entering = j
                break
        if entering < 0:
            return "optimal", it
        column = tab[:, entering]
        leave, best_ratio = -1, np.inf
        for i in range(m):
            if column[i] > tol:
                ratio = tab[i, -1] / column[i]
                if ratio < best_ratio - tol or (abs(ratio - best_ratio) <= tol and basis[i] < basis[leave]):
                    leave, best_ratio = i, ratio
        if leave < 0:
            return "unbounded", it
        _pivot(tab, leave, entering)
        basis[leave] = entering
        # clear round-off on degenerate rows
        rhs = tab[:, -1]
        rhs[(rhs < 0) & (rhs > -tol)] = 0.0
        it += 1


def solve_lp(lp: LinearProgram, tol: float = LP_TOL, max_iter: int = 50_000) -> LpSolution:
    """Two-phase primal simplex with Bland's anti-cycling rule (deterministic)."""
    n = lp.n
    m_ub, m_eq = lp.A_ub.shape[0], lp.A_eq.shape[0]
    m = m_ub + m_eq
    if m == 0:
        if np.any(lp.c > tol):
            return LpSolution("unbounded")
        return LpSolution("optimal", np.zeros(n), 0.0)

    A = np.vstack([lp.A_ub, lp.A_eq])
    b = np.concatenate([lp.b_ub, lp.b_eq])
    slack = np.zeros((m, m_ub))
    slack[np.arange(m_ub), np.arange(m_ub)] = 1.0
    neg = b < 0
    A[neg] *= -1
    slack[neg] *= -1
    b = np.abs(b)

    art_rows = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(art_rows)
    art = np.zeros((m, n_art))
    for k, i in enumerate(art_rows):
        art[i, k] = 1.0
    tab = np.hstack([A, slack, art, b[:, None]])
    n_total = n + m_ub + n_art
    basis = []
    k_art = 0
    for i in range(m):
        if i in art_rows:
            basis.append(n + m_ub + k_art)
            k_art += 1
        else:
            basis.append(n + i)

    iterations = 0
    if n_art:
        cost1 = np.zeros(n_total)
        cost1[n + m_ub:] = -1.0
        status, it = _run_simplex(tab, basis, cost1, range(n_total), tol, max_iter)
        iterations += it
        infeas = tab[:, -1] @ (-cost1[basis])
        if infeas > max(tol, 1e-7):
            return LpSolution("infeasible", iterations=iterations)
        # drive artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n + m_ub:
                cols = [j for j in range(n + m_ub) if abs(tab[i, j]) > tol]
                if cols:
                    _pivot(tab, i, cols[0])
                    basis[i] = cols[0]
                    keep.append(i)
            else:
                keep.append(i)
        tab = tab[keep]
        basis = [basis[i] for i in keep]
        tab = np.hstack([tab[:, : n + m_ub], tab[:, -1:]])
        n_total = n + m_ub

    cost2 = np.zeros(n_total)
    cost2[:n] = lp.c
    status, it = _run_simplex(tab, basis, cost2, range(n_total), tol, max_iter)
    iterations += it
    if status == "unbounded":
        return LpSolution("unbounded", iterations=iterations)
    x_full = np.zeros(n_total)
    for i, j in enumerate(basis):
        x_full[j] = tab[i, -1]
    x = np.clip(x_full[:n], 0.0, None)
    return LpSolution("optimal", x, float(lp.c @ x), iterations)


# --- optimal segmentation -------------------------------------------------


class OptimalSegmentation(NamedTuple):
    segmentation: Segmentation
    prices: tuple
    objective: float


def segmentation_lp(market: Market, lam, allowed_prices: Optional[Sequence] = None) -> LinearProgram:
    """LP over cone variables ``z[p, t]`` (flattened as ``p * T + t``)."""
    lam = float(parse_number(lam))
    if not 0 <= lam <= 1:
        raise DomainError("lambda must lie in [0, 1]")
    R = market.revenue_matrix          # [t, p]
    C = market.surplus_matrix
    T, V = R.shape
    price_ids = range(V) if allowed_prices is None else [market.grid.index(p) for p in allowed_prices]
    price_ids = sorted(set(price_ids))
    c = np.zeros(V * T)
    for p in price_ids:
        c[p * T:(p + 1) * T] = lam * R[:, p] + (1 - lam) * C[:, p]
    rows = []
    for p in price_ids:
        for q in range(V):
            if q == p:
                continue
            row = np.zeros(V * T)
            row[p * T:(p + 1) * T] = -(R[:, p] - R[:, q])
            rows.append(row)
    A_eq = np.zeros((T, V * T))
    for p in price_ids:
        for t in range(T):
            A_eq[t, p * T + t] = 1.0
    b_eq = np.array([float(v) for v in market.type_prior])
    A_ub = np.array(rows) if rows else None
    b_ub = np.zeros(len(rows)) if rows else None
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq)


def optimal_segmentation(market: Market, lam, allowed_prices: Optional[Sequence] = None) -> OptimalSegmentation:
    """Optimal segmentation with intended prices and LP objective.

    ``allowed_prices`` restricts which regions may carry a segment (e.g. only
    prices up to the prior monopoly price).  Boundary ties are resolved in the
    intermediary's favor: the intended price is the cone the mass sits in.
    """
    lp = segmentation_lp(market, lam, allowed_prices)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise LpError(f"segmentation LP reported {sol.status}")
    T, V = market.T, market.V
    z = sol.x.reshape(V, T)
    segs, prices = [], []
    for p in range(V):
        mass = z[p].sum()
        if mass < MIN_SEGMENT_MASS:
            continue
        segs.append((z[p] / mass, mass))
        prices.append(market.prices[p])
    total = sum(w for _, w in segs)
    segmentation = Segmentation(tuple(Segment(tuple(x), w / total) for x, w in segs))
    return OptimalSegmentation(segmentation, tuple(prices), sol.objective)


def rationalize(market: Market, seg: Segmentation, max_denominator: int = 10**6) -> Optional[Segmentation]:
    """Snap a float segmentation to nearby fractions if the centroid then equals the prior exactly.

    Returns ``None`` when the prior is not exact or snapping breaks the
    centroid, in which case callers keep the float result.
    """
    tau = market.type_prior
    if not all(isinstance(p, (int, Fraction)) for p in tau):
        return None
    segs = []
    for s in seg.segments:
        x = [Fraction(float(v)).limit_denominator(max_denominator) for v in s.x]
        x[-1] = 1 - sum(x[:-1])
        if x[-1] < 0:
            return None
        segs.append(Segment(tuple(x), Fraction(float(s.w)).limit_denominator(max_denominator)))
    total = sum(s.w for s in segs)
    if total != 1:
        return None
    out = Segmentation(tuple(segs))
    if tuple(out.centroid()) != tuple(Fraction(p) for p in tau):
        return None
    return out
