"""Named example markets and seeded random MHR-like distributions."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .distributions import DiscreteDistribution, ValueGrid, check_mhr_like
from .errors import DomainError
from .segmentation import Market


def pointmass_market(scaled: bool = False) -> Market:
    """Three types, type t is a point mass on the t-th value; uniform prior."""
    grid = ValueGrid.scaled_grid(3) if scaled else ValueGrid((1, 2, 3))
    dists = [DiscreteDistribution.pointmass(grid, v) for v in grid.values]
    return Market.uniform_prior(grid, dists)


def noisy_types_market(z) -> Market:
    """Type t puts mass z on value t and splits the rest over the other two."""
    z = Fraction(z) if not isinstance(z, float) else Fraction(str(z))
    if not 0 <= z <= 1:
        raise DomainError("noise parameter z must lie in [0, 1]")
    grid = ValueGrid((1, 2, 3))
    rest = (1 - z) / 2
    dists = [DiscreteDistribution(grid, tuple(z if v == t else rest for v in range(3))) for t in range(3)]
    return Market.uniform_prior(grid, dists)


def two_type_market() -> Market:
    """Equal-revenue type on {1, 2} and a point mass on 3."""
    grid = ValueGrid((1, 2, 3))
    dists = [
        DiscreteDistribution(grid, (Fraction(1, 2), Fraction(1, 2), 0)),
        DiscreteDistribution.pointmass(grid, 3),
    ]
    return Market.uniform_prior(grid, dists)


def plateau_market() -> Market:
    """Two point-mass types whose uniform mixture has a flat revenue curve.

    The prior puts half its mass on 1/2 and half on 1, so both prices earn
    1/2.  Any small belief error tips the seller between a low price (every
    buyer served) and a high one (half the buyers priced out).
    """
    grid = ValueGrid.scaled_grid(4)
    dists = [DiscreteDistribution.pointmass(grid, Fraction(1, 2)), DiscreteDistribution.pointmass(grid, 1)]
    return Market.uniform_prior(grid, dists)


PLATEAU_EPS_S = 1e-4


# --- random MHR-like distributions ----------------------------------------


def _hazard_candidate(rng: np.random.Generator, V: int) -> DiscreteDistribution:
    """Quantiles ``exp(-H(i))`` with a convex, increasing cumulative hazard."""
    i = np.arange(V, dtype=float)
    scale = rng.uniform(0.2, 3.0) / V
    curv = rng.uniform(0.0, 2.0) / V**2
    shift = rng.integers(0, V)
    H = scale * i + curv * np.maximum(i - shift, 0.0) ** 2
    q = np.exp(-H)
    return DiscreteDistribution.from_quantiles(ValueGrid.scaled_grid(V), q.tolist())


def random_mhr_like(rng: np.random.Generator, V: int, pointmass_prob: float = 0.1,
                    max_tries: int = 1000) -> DiscreteDistribution:
    """Rejection-sample a distribution on the scaled grid passing the MHR-like check."""
    grid = ValueGrid.scaled_grid(V)
    if rng.random() < pointmass_prob:
        return DiscreteDistribution.pointmass(grid, grid.values[rng.integers(0, V)])
    for _ in range(max_tries):
        d = _hazard_candidate(rng, V)
        if check_mhr_like(d).ok:
            return d
    raise RuntimeError("could not sample an MHR-like distribution")


def random_mhr_market(rng: np.random.Generator, T: int, V: int, **kw) -> Market:
    dists = [random_mhr_like(rng, V, **kw) for _ in range(T)]
    return Market.uniform_prior(ValueGrid.scaled_grid(V), dists)


def random_market(rng: np.random.Generator, T: int, V: int) -> Market:
    """Arbitrary Dirichlet type distributions on an integer grid (no MHR condition)."""
    grid = ValueGrid(tuple(range(1, V + 1)))
    dists = []
    for _ in range(T):
        pmf = rng.dirichlet(np.ones(V))
        dists.append(DiscreteDistribution(grid, tuple(float(p) for p in pmf / pmf.sum())))
    prior = rng.dirichlet(np.ones(T))
    prior = prior / prior.sum()
    return Market(grid, tuple(dists), tuple(float(p) for p in prior))


def perturb_quantiles(rng: np.random.Generator, dist: DiscreteDistribution, eps: float) -> DiscreteDistribution:
    """Move every quantile by at most ``eps``; a running minimum restores monotonicity.

    The running minimum never leaves the ``eps`` band because quantiles are
    nonincreasing, so the output is within KS distance ``eps`` of ``dist``.
    """
    q = np.array([float(v) for v in dist.quantiles])
    q = np.clip(q + rng.uniform(-eps, eps, size=q.size), 0.0, 1.0)
    q[0] = 1.0
    q = np.minimum.accumulate(q)
    return DiscreteDistribution.from_quantiles(dist.grid, q.tolist())
