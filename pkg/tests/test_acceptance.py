"""End-to-end acceptance criteria; each test records one pass/fail line in the terminal summary."""
import json
import time
from fractions import Fraction as F

import numpy as np
import pytest

from pricedisc.bandit import simulate
from pricedisc.cli import main
from pricedisc.distributions import check_mhr_like, ks_distance
from pricedisc.errors import StageError
from pricedisc.generators import (
    PLATEAU_EPS_S,
    noisy_types_market,
    perturb_quantiles,
    plateau_market,
    pointmass_market,
    random_market,
    random_mhr_like,
    random_mhr_market,
)
from pricedisc.lp import optimal_segmentation
from pricedisc.mhr_project import project_mhr_like
from pricedisc.oracle import brute_force_optimum
from pricedisc.robustify import audit_robustness, epsilon_schedule, robustify_segmentation
from pricedisc.sample_pipeline import adversarial_belief, draw_samples, impossibility_demo, learn_segmentation
from pricedisc.segmentation import Segmentation, TrueMonopoly, evaluate

TOL = 1e-9


@pytest.mark.criterion(1)
def test_golden_pointmass(criterion, capsys):
    t0 = time.perf_counter()
    code = main(["solve", "--fixture", "pointmass", "--lambda", "0", "--exact", "--json"])
    elapsed = time.perf_counter() - t0
    data = json.loads(capsys.readouterr().out)
    obj, rev = F(data["objective"]), F(data["revenue"])
    ok = code == 0 and data["exact"] and obj == F(2, 3) and rev == F(4, 3) and elapsed < 1
    criterion.check(ok, f"objective {obj}, revenue {rev}, exact={data['exact']}, {elapsed:.3f}s")


@pytest.mark.criterion(2)
def test_golden_noise_sweep(criterion):
    m49 = noisy_types_market(F(49, 100))
    gaps = []
    for lam in (0, F(1, 2), 1):
        base = lam * F(4, 3) + (1 - lam) * F(1, 3)
        gaps.append(abs(optimal_segmentation(m49, lam).objective - float(base)))
    m8 = noisy_types_market(F(4, 5))
    lp = optimal_segmentation(m8, 1).objective
    ev = evaluate(m8, Segmentation.full_reveal(m8), TrueMonopoly(), 1)
    ok = max(gaps) <= TOL and lp >= 26 / 15 - TOL and ev.revenue == F(26, 15) and ev.cs == F(2, 15)
    criterion.check(ok, f"z=0.49 max gap {max(gaps):.2e}; z=0.8 LP {lp:.6f}, full reveal {ev.revenue}/{ev.cs}")


@pytest.mark.criterion(3)
def test_oracle_equivalence(criterion):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        T, V = int(rng.integers(2, 4)), int(rng.integers(2, 5))
        m = random_market(rng, T, V)
        lam = float(rng.uniform())
        worst = max(worst, abs(optimal_segmentation(m, lam).objective - brute_force_optimum(m, lam).objective))
    elapsed = time.perf_counter() - t0
    criterion.check(worst <= 1e-6 + 0.02 and elapsed < 60, f"worst gap {worst:.2e} over 20 markets, {elapsed:.2f}s")


@pytest.mark.criterion(4)
def test_mhr_projection(criterion):
    rng = np.random.default_rng(7)
    eps = 0.02
    t0 = time.perf_counter()
    passed = close = 0
    worst = 0.0
    for _ in range(100):
        F0 = random_mhr_like(rng, 8)
        out = project_mhr_like(perturb_quantiles(rng, F0, eps), eps)
        passed += check_mhr_like(out).ok
        ks = float(ks_distance(out, F0))
        worst = max(worst, ks)
        close += ks <= 6 * eps
    elapsed = time.perf_counter() - t0
    ok = passed == 100 and close == 100 and elapsed < 10
    criterion.check(ok, f"MHR-like {passed}/100, KS<=6eps {close}/100 (worst {worst / eps:.2f} eps), {elapsed:.2f}s")


@pytest.mark.criterion(5)
def test_robustification_audit(criterion):
    rng = np.random.default_rng(11)
    sch = epsilon_schedule(1e-6, 3, 8)
    t0 = time.perf_counter()
    good, worst_centroid = 0, 0.0
    for _ in range(100):
        m = random_mhr_market(rng, 3, 8)
        opt = optimal_segmentation(m, 0)
        audit = audit_robustness(m, robustify_segmentation(m, opt.segmentation, opt.prices, sch))
        good += audit.weight_ok and audit.mixture_ok and audit.robust_ok and audit.centroid_error <= 1e-9
        worst_centroid = max(worst_centroid, audit.centroid_error)
    elapsed = time.perf_counter() - t0
    criterion.check(good == 100 and elapsed < 60,
                    f"{good}/100 markets pass all three conditions, centroid error {worst_centroid:.1e}, {elapsed:.2f}s")


@pytest.mark.criterion(6)
def test_plateau_robustness(criterion):
    m = plateau_market()
    opt = optimal_segmentation(m, 0)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, epsilon_schedule(PLATEAU_EPS_S, m.T, m.V))
    raw_drops, rob_drops = [], []
    for seed in range(10):
        raw_drops.append(adversarial_belief(m, PLATEAU_EPS_S, opt.segmentation, 0, seed=seed).drop)
        rob_drops.append(adversarial_belief(m, PLATEAU_EPS_S, rob.robust, 0, seed=seed).drop)
    cond3 = audit_robustness(m, rob).robust_ok
    paired = all(r <= w for r, w in zip(rob_drops, raw_drops))
    ok = min(raw_drops) >= 0.1 and paired and cond3
    criterion.check(ok, f"raw drop >= {min(raw_drops):.3f}, robust drop <= {max(rob_drops):.3g}, "
                        f"paired {paired}, condition 3 {cond3}")


@pytest.mark.criterion(7)
def test_impossibility(criterion):
    t0 = time.perf_counter()
    p0 = impossibility_demo(0.001, 100)
    sweep = [impossibility_demo(0.1 / m, m) for m in (100, 10**4, 10**6)]
    elapsed = time.perf_counter() - t0
    ok = p0 >= 0.3 and min(sweep) >= 0.25 and elapsed < 1
    criterion.check(ok, f"Pr={p0:.4f} at m=100; sweep {', '.join(f'{p:.4f}' for p in sweep)}; {elapsed:.3f}s")


BANDIT_MS = (200, 2_000, 20_000)
BANDIT_SEEDS = (1, 2, 3)


@pytest.fixture(scope="module")
def bandit_runs():
    t0 = time.perf_counter()
    m = pointmass_market(scaled=True)
    runs = {(s, n, seed): simulate(m, s, 0, n, seed, keep_rounds=False)
            for s in ("ucb", "etc") for n in BANDIT_MS for seed in BANDIT_SEEDS}
    return runs, time.perf_counter() - t0


@pytest.mark.criterion(8)
def test_bandit_regret_trend(criterion, bandit_runs):
    runs, elapsed = bandit_runs
    trend = [runs["ucb", BANDIT_MS[2], s].regret < runs["ucb", BANDIT_MS[1], s].regret
             < runs["ucb", BANDIT_MS[0], s].regret for s in BANDIT_SEEDS]
    ucb_zero = all(r.non_exploit == 0 for k, r in runs.items() if k[0] == "ucb")
    etc_ok = all(r.non_exploit_fraction <= r.eps_S for k, r in runs.items() if k[0] == "etc")
    regrets = "; ".join("/".join(f"{runs['ucb', n, s].regret:.3f}" for n in BANDIT_MS) for s in BANDIT_SEEDS)
    ok = sum(trend) >= 2 and ucb_zero and etc_ok and elapsed < 300
    criterion.check(ok, f"UCB regret by m per seed [{regrets}], decreasing for {sum(trend)}/3 seeds; "
                        f"UCB non-exploit 0: {ucb_zero}; ETC within eps_S: {etc_ok}; {elapsed:.1f}s")


@pytest.mark.criterion(9)
def test_exploration_accounting(criterion, bandit_runs):
    runs, _ = bandit_runs
    T = V = 3
    ratios = [r.major_explorations / (10 * T * V * r.eps_M ** -3) for r in runs.values()]
    worst = max(runs.values(), key=lambda r: r.major_explorations)
    criterion.check(max(ratios) <= 1, f"max majors {worst.major_explorations}, worst ratio to bound {max(ratios):.3g}")


@pytest.mark.criterion(10)
def test_sample_pipeline(criterion):
    m = pointmass_market(scaled=True)
    bayes = optimal_segmentation(m, 0).objective
    t0 = time.perf_counter()
    gaps, errors = [], []
    for seed in (1, 2, 3):
        try:
            res = learn_segmentation(draw_samples(m, 10**5, seed), 0)
        except StageError as exc:
            errors.append(f"seed {seed}: stage {exc.stage} ({exc.cause})")
            continue
        obj = float(evaluate(m, res.segmentation, TrueMonopoly(), 0).objective)
        gaps.append(bayes - obj)
    elapsed = time.perf_counter() - t0
    ok = not errors and len(gaps) == 3 and max(gaps) <= 0.05 and elapsed < 120
    detail = f"gaps {', '.join(f'{g:.4f}' for g in gaps)}" if gaps else "no seed completed"
    if errors:
        detail += "; " + "; ".join(errors)
    criterion.check(ok, f"{detail}; {elapsed:.1f}s")
