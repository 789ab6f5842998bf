import csv

import numpy as np
import pytest

from pricedisc.bandit import (
    ConfidenceState,
    confidence_bounds,
    epsilon_m,
    etc_eps,
    intermediary_round,
    is_exploit,
    is_major,
    optimistic_distributions,
    seller_etc,
    seller_ucb,
    simulate,
)
from pricedisc.distributions import ValueGrid
from pricedisc.errors import DomainError, ScheduleError
from pricedisc.generators import pointmass_market, random_mhr_like

PRICES = [1 / 3, 2 / 3, 1.0]


def _state_with(trials, sales, C=1.0):
    st = ConfidenceState(1, len(trials), C)
    st.trials[0] = trials
    st.sales[0] = sales
    return st


def test_bounds_small_counts():
    ut, lt, _, _ = confidence_bounds(_state_with([4], [2]), 0, 0)
    assert (ut, lt) == (1.0, 0.0)


def test_bounds_large_counts():
    ut, lt, _, _ = confidence_bounds(_state_with([10**6], [5 * 10**5]), 0, 0)
    assert ut - lt == pytest.approx(0.002)


def test_upper_bound_running_min():
    st = _state_with([100, 100], [0, 0])
    st.sales[0] = [30, 60]
    # raw upper bounds 0.4 and 0.7 with C = 1
    ut, _ = st.raw_bounds()
    assert ut[0] == pytest.approx([0.4, 0.7])
    U, L = st.bounds()
    assert U[0, 1] == pytest.approx(0.4)
    assert np.all(L <= U)


def test_untried_pairs_are_uninformative():
    U, L = ConfidenceState(2, 3).bounds()
    assert np.all(U == 1.0) and np.all(L == 0.0)


def test_bad_confidence_constant():
    with pytest.raises(DomainError):
        ConfidenceState(1, 2, C=0)


def test_fresh_state_exploit_readings():
    st = ConfidenceState(3, 3)
    x = [1 / 3] * 3
    assert all(is_exploit(st, x, p, 0.0, PRICES, on="quantile") for p in range(3))
    assert [is_exploit(st, x, p, 0.0, PRICES) for p in range(3)] == [False, False, True]


def test_fresh_state_majors():
    st = ConfidenceState(3, 3)
    assert is_major(st, [1, 0, 0], 0, 0.5)


def test_ucb_picks_top_upper_revenue():
    st = ConfidenceState(3, 3)
    assert seller_ucb(st, [1, 0, 0], PRICES) == 2
    for _ in range(200):
        st.update(0, 2, False)
        st.update(0, 1, False)
        st.update(0, 0, True)
    assert seller_ucb(st, [1, 0, 0], PRICES) == 0


@pytest.mark.parametrize("m,expected", [(1, 1.0), (1000, 0.9), (10**6, 0.09)])
def test_etc_eps(m, expected):
    assert etc_eps(m, 3, 3) == pytest.approx(expected)


def test_etc_explores_then_commits():
    st = ConfidenceState(1, 3)
    rng = np.random.default_rng(0)
    for _ in range(3000):
        for p in range(3):
            st.update(0, p, p == 0)
    picks = {seller_etc(st, [1.0], r, 100, PRICES, rng, eps_S=0.5) for r in range(50)}
    assert len(picks) > 1
    assert seller_etc(st, [1.0], 60, 100, PRICES, rng, eps_S=0.5) == 0


def test_epsilon_m_identity():
    for m, T, V in [(20_000, 3, 3), (10**6, 2, 4), (500, 4, 6)]:
        eps_M, eps_I = epsilon_m(m, T, V)
        assert eps_I * m == pytest.approx(T * V * eps_M ** -3, rel=1e-9)


def test_epsilon_m_frozen_value():
    eps_M, _ = epsilon_m(10**6, 2, 4)
    assert eps_M == pytest.approx((2 ** (1 / 3) * 4 / (10**6 * np.log(4) ** (1 / 6))) ** (6 / 19))
    assert eps_M == pytest.approx(0.020874, abs=1e-6)


def test_epsilon_m_decreasing():
    vals = [epsilon_m(m, 3, 3)[0] for m in (10, 10**3, 10**5, 10**7)]
    assert vals == sorted(vals, reverse=True)


def _converged_state(dists, n=10**12):
    st = ConfidenceState(len(dists), dists[0].grid.V)
    for t, d in enumerate(dists):
        q = np.array([float(v) for v in d.quantiles])
        st.trials[t] = n
        st.sales[t] = np.round(q * n).astype(np.int64)
    return st


def test_optimistic_converged_is_truth():
    rng = np.random.default_rng(1)
    dists = [random_mhr_like(rng, 4, pointmass_prob=0) for _ in range(2)]
    choice = optimistic_distributions(_converged_state(dists), dists[0].grid, 2)
    for got, want in zip(choice.dists, dists):
        assert np.allclose(got.as_array(), want.as_array(), atol=1e-5)


def test_optimistic_fresh_state():
    grid = ValueGrid.scaled_grid(3)
    choice = optimistic_distributions(ConfidenceState(2, 3), grid, 2)
    assert choice.fallbacks == 0
    # with an empty band the welfare-maximal candidate puts everything on the top value
    assert all(float(d.quantiles[-1]) == pytest.approx(1.0) for d in choice.dists)


def test_intermediary_round_fallbacks():
    grid = ValueGrid.scaled_grid(3)
    plan = intermediary_round(ConfidenceState(3, 3), grid, 3, 0, 1000)
    assert not plan.robustified
    with pytest.raises(ScheduleError):
        intermediary_round(ConfidenceState(3, 3), grid, 3, 0, 1000, fallback="raise")


def test_simulate_zero_rounds():
    rep = simulate(pointmass_market(scaled=True), "ucb", 0, 0, seed=1)
    assert rep.m == 0 and rep.rounds == [] and rep.regret == 0


def test_simulate_rejects_unknown_seller():
    with pytest.raises(DomainError):
        simulate(pointmass_market(scaled=True), "greedy", 0, 10, seed=1)


def test_simulate_is_deterministic(tmp_path):
    m = pointmass_market(scaled=True)
    a = simulate(m, "ucb", 0, 150, seed=4)
    b = simulate(m, "ucb", 0, 150, seed=4)
    assert a.cumulative == b.cumulative and a.summary() == b.summary()
    path = tmp_path / "rounds.csv"
    a.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["round", "type", "price", "bought", "exploit", "major", "objective_cum"]
    assert len(rows) == 151
    assert float(rows[-1][-1]) == pytest.approx(a.cumulative)


@pytest.mark.parametrize("seller", ["ucb", "etc"])
def test_simulate_accounting(seller):
    rep = simulate(pointmass_market(scaled=True), seller, 0, 300, seed=2)
    assert 0 <= rep.average <= rep.opt + 1e-12
    assert rep.major_explorations <= rep.non_exploit <= rep.m
    if seller == "ucb":
        assert rep.non_exploit == 0
    else:
        assert rep.non_exploit_fraction <= rep.eps_S + 1e-12
