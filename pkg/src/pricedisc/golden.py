"""Golden-value checks for the bundled example scenarios."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .distributions import expected_value, parse_number
from .io import load_fixture
from .lp import optimal_segmentation, rationalize
from .robustify import audit_robustness, epsilon_schedule, robustify_segmentation
from .sample_pipeline import adversarial_belief, impossibility_demo
from .segmentation import (
    FixedPrices,
    Segmentation,
    TrueMonopoly,
    evaluate,
    segmap_to_measure,
    tie_sensitivity,
)

GOLDEN_TOL = 1e-9


@dataclass(frozen=True)
class Check:
    scenario: str
    quantity: str
    value: object
    expected: object
    relation: str = "=="
    ok: bool = False

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.scenario}: {self.quantity} = {_fmt(self.value)} (expected {self.relation} {_fmt(self.expected)})"


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x} ({float(x):.6g})"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _check(scenario, quantity, value, expected, relation="==") -> Check:
    expected = parse_number(expected) if isinstance(expected, str) else expected
    if relation == "==":
        exact = isinstance(value, (int, Fraction)) and isinstance(expected, (int, Fraction))
        ok = value == expected if exact else abs(float(value) - float(expected)) <= GOLDEN_TOL
    elif relation == ">=":
        ok = float(value) >= float(expected) - GOLDEN_TOL
    else:
        raise ValueError(relation)
    return Check(scenario, quantity, value, expected, relation, bool(ok))


def pointmass_checks() -> list:
    sc = load_fixture("pointmass")
    m, exp = sc.market, sc.expected
    opt = optimal_segmentation(m, sc.lam)
    seg = rationalize(m, opt.segmentation) or opt.segmentation
    ev = evaluate(m, seg, FixedPrices(opt.prices), sc.lam)
    base = evaluate(m, Segmentation.trivial(m), TrueMonopoly(), sc.lam)
    deadweight = expected_value(m.prior_distribution()) - ev.sw
    weights = segmap_to_measure(m, sc.segmap).weights
    return [
        _check(sc.name, "objective (CS)", ev.objective, exp["objective"]),
        _check(sc.name, "revenue", ev.revenue, exp["revenue"]),
        _check(sc.name, "cs", ev.cs, exp["cs"]),
        _check(sc.name, "deadweight", deadweight, exp["deadweight"]),
        _check(sc.name, "unsegmented revenue", base.revenue, exp["baseline_revenue"]),
        _check(sc.name, "unsegmented cs", base.cs, exp["baseline_cs"]),
    ] + [
        _check(sc.name, f"segment map weight {i}", w, e)
        for i, (w, e) in enumerate(zip(weights, exp["segmap_weights"]))
    ]


def noisy_useless_checks() -> list:
    sc = load_fixture("noisy_z049")
    out = []
    for lam in (0, Fraction(1, 2), 1):
        baseline = lam * Fraction(4, 3) + (1 - lam) * Fraction(1, 3)
        obj = optimal_segmentation(sc.market, lam).objective
        out.append(_check(sc.name, f"LP objective at lambda={lam} vs unsegmented", obj, baseline))
    return out


def noisy_full_reveal_checks() -> list:
    sc = load_fixture("noisy_z08")
    m, exp = sc.market, sc.expected
    ev = evaluate(m, Segmentation.full_reveal(m), TrueMonopoly(), 1)
    lp = optimal_segmentation(m, 1).objective
    return [
        _check(sc.name, "full-reveal revenue", ev.revenue, exp["full_reveal_revenue"]),
        _check(sc.name, "full-reveal cs", ev.cs, exp["full_reveal_cs"]),
        _check(sc.name, "LP objective at lambda=1", lp, exp["lp_revenue_at_least"], ">="),
    ]


def two_type_checks() -> list:
    sc = load_fixture("two_type")
    opt = optimal_segmentation(sc.market, sc.lam)
    _, worst = tie_sensitivity(sc.market, opt.segmentation, sc.lam)
    return [
        _check(sc.name, "LP objective (CS)", opt.objective, sc.expected["objective"]),
        _check(sc.name, "objective with ties against the intermediary", worst, sc.expected["adversarial_objective"]),
    ]


def plateau_checks() -> list:
    sc = load_fixture("plateau")
    m, eps = sc.market, sc.model.eps_S
    opt = optimal_segmentation(m, sc.lam)
    adv = adversarial_belief(m, eps, opt.segmentation, sc.lam)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, epsilon_schedule(eps, m.T, m.V))
    audit = audit_robustness(m, rob)
    return [
        _check(sc.name, "LP objective (CS)", opt.objective, sc.expected["objective"]),
        _check(sc.name, "raw objective drop under adversarial beliefs", adv.drop, sc.expected["raw_drop_at_least"], ">="),
        _check(sc.name, "robustified audit passes", audit.ok, True),
    ]


def impossibility_checks() -> list:
    sc = load_fixture("impossibility")
    delta = parse_number(sc.expected["delta"])
    prob = impossibility_demo(float(delta), sc.model.m)
    return [_check(sc.name, f"Pr[high price] at delta={delta}, m={sc.model.m}", prob,
                   sc.expected["high_price_probability_at_least"], ">=")]


def run_examples() -> list:
    checks = []
    for fn in (pointmass_checks, noisy_useless_checks, noisy_full_reveal_checks, two_type_checks,
               plateau_checks, impossibility_checks):
        checks.extend(fn())
    return checks
