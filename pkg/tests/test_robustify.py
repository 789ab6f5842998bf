from fractions import Fraction as F

import numpy as np
import pytest

from pricedisc.distributions import DiscreteDistribution, ValueGrid
from pricedisc.errors import NoRobustType, ScheduleError
from pricedisc.generators import PLATEAU_EPS_S, plateau_market, pointmass_market, random_mhr_market
from pricedisc.lp import optimal_segmentation
from pricedisc.robustify import (
    EpsilonSchedule,
    RobustifiedSegmentation,
    audit_robustness,
    epsilon_schedule,
    find_robust_type,
    robustify_segment,
    robustify_segmentation,
    schedule_bound,
)
from pricedisc.segmentation import Market, Segment, Segmentation, check_centroid

PM_X = (F(1, 2), F(1, 6), F(1, 3))


def test_schedule_formula():
    assert epsilon_schedule(1e-6, 3, 8).eps_I == pytest.approx(0.2350, abs=1e-4)


def test_schedule_with_forced_log():
    assert epsilon_schedule(1e-6, 1, 3, log_v=1.0).eps_I == pytest.approx(0.1)


def test_schedule_infeasible():
    with pytest.raises(ScheduleError):
        epsilon_schedule(0.5, 3, 8)


@pytest.mark.parametrize("eps", [1e-9, 1e-6, 1e-3])
def test_schedule_relations(eps):
    s = epsilon_schedule(eps, 3, 8)
    assert s.eps_I >= schedule_bound(eps, 3, 8) - 1e-15
    assert s.eps_R == pytest.approx(eps * 3 / s.eps_I)


def test_schedule_bound_grows_with_eps():
    vals = [schedule_bound(e, 3, 8) for e in (1e-9, 1e-6, 1e-3)]
    assert vals == sorted(vals)


def test_find_robust_type_pointmass():
    sch = EpsilonSchedule(1e-6, 0.3, 0.01)
    assert find_robust_type(pointmass_market(), PM_X, 1, sch) == 0


def test_find_robust_type_vacuous():
    # price 3 has the lowest quantile, so nothing lies far below it
    sch = EpsilonSchedule(1e-6, 0.3, 0.01)
    assert find_robust_type(pointmass_market(), PM_X, 3, sch) == 0


def test_find_robust_type_plateau_picks_low_component():
    m = plateau_market()
    sch = epsilon_schedule(PLATEAU_EPS_S, m.T, m.V)
    assert find_robust_type(m, (F(1, 2), F(1, 2)), F(1, 2), sch) == 0


def test_no_robust_type():
    # both types earn more at the far price 3 than at the intended price 1
    g = ValueGrid((1, 2, 3))
    d = DiscreteDistribution(g, (F(1, 2), 0, F(1, 2)))
    m = Market.uniform_prior(g, (d, d))
    with pytest.raises(NoRobustType):
        find_robust_type(m, (F(1, 2), F(1, 2)), 1, EpsilonSchedule(1e-6, 0.3, 0.01))


def test_robustify_segment_example():
    x_r, t = robustify_segment(pointmass_market(), PM_X, 1, EpsilonSchedule(1e-6, 0.3, 0.01))
    assert t == 0
    assert np.allclose(x_r, (0.55, 0.15, 0.3))
    assert np.abs(np.array(x_r) - np.array([float(v) for v in PM_X])).sum() == pytest.approx(0.1)


def test_robustify_segment_identity_in_the_limit():
    x_r, _ = robustify_segment(pointmass_market(), PM_X, 1, EpsilonSchedule(0.0, 1e-9, 1e-12))
    assert np.allclose(x_r, [float(v) for v in PM_X], atol=1e-9)


def test_insignificant_segments_only_rescaled():
    m = plateau_market()
    seg = Segmentation.trivial(m)
    # eps_I above the mean value makes the only segment insignificant
    sch = EpsilonSchedule(1e-6, 0.8, 1e-5)
    rob = robustify_segmentation(m, seg, (F(1, 2),), sch)
    assert rob.insignificant == (True,)
    assert rob.robust.segments[0].w == pytest.approx(0.2)
    assert np.allclose(rob.robust.segments[0].x, (0.5, 0.5))
    assert [s.w for s in rob.robust.segments[1:]] == pytest.approx([0.4, 0.4])
    check_centroid(m, rob.robust, 1e-9)


def test_pointmass_optimum_passes_audit():
    m = pointmass_market()
    opt = optimal_segmentation(m, 0)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, epsilon_schedule(1e-6, 3, 3))
    audit = audit_robustness(m, rob)
    assert audit.ok and audit.centroid_error < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_random_mhr_markets_pass_audit(seed):
    m = random_mhr_market(np.random.default_rng(seed), 3, 8)
    opt = optimal_segmentation(m, 0.5)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, epsilon_schedule(1e-6, 3, 8))
    for ref in ("base", "moved"):
        audit = audit_robustness(m, rob, reference=ref)
        assert audit.ok, ref
    assert audit.centroid_error <= 1e-9


def test_planted_mixture_violation_is_flagged():
    m = pointmass_market()
    opt = optimal_segmentation(m, 0)
    sch = epsilon_schedule(1e-6, 3, 3)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, sch)
    s0 = rob.robust.segments[0]
    t = int(np.argmin(s0.x))
    # move the first segment by 2 eps_I in l1 toward a vertex it barely uses
    a = sch.eps_I / (1 - float(s0.x[t]))
    x_bad = tuple((1 - a) * float(v) + (a if i == t else 0.0) for i, v in enumerate(s0.x))
    bad = Segmentation((Segment(x_bad, s0.w),) + rob.robust.segments[1:])
    planted = RobustifiedSegmentation(rob.base, bad, rob.intended_prices, rob.insignificant,
                                      rob.robust_types, sch)
    audit = audit_robustness(m, planted)
    assert not audit.mixture_ok


def test_raw_plateau_fails_condition_three():
    m = plateau_market()
    sch = epsilon_schedule(PLATEAU_EPS_S, m.T, m.V)
    opt = optimal_segmentation(m, 0)
    # the raw segmentation, audited as if it were robust
    raw = Segmentation(tuple(opt.segmentation.segments)
                       + tuple(Segment(tuple(1 if s == t else 0 for s in range(m.T)), 0) for t in range(m.T)))
    rob = RobustifiedSegmentation(opt.segmentation, raw, opt.prices, (False,) * len(opt.prices),
                                  (None,) * len(opt.prices), sch)
    audit = audit_robustness(m, rob)
    assert not audit.robust_ok


def test_robustified_plateau_passes():
    m = plateau_market()
    sch = epsilon_schedule(PLATEAU_EPS_S, m.T, m.V)
    opt = optimal_segmentation(m, 0)
    audit = audit_robustness(m, robustify_segmentation(m, opt.segmentation, opt.prices, sch))
    assert audit.ok
    assert audit.sw_worst == pytest.approx(audit.sw_base)
