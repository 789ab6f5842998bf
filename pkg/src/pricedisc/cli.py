"""Command-line front end.

Exit codes:
    0  success
    1  a golden or oracle comparison failed
    2  invalid scenario or arguments (message names the field)
    3  infeasible robustification schedule or a failed pipeline stage (message names the stage)
    4  other computation error (LP failure, projection failure, ...)

Data goes to stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import golden
from .bandit import simulate
from .distributions import check_mhr_like, parse_number
from .errors import PriceDiscError, ScheduleError, StageError
from .generators import random_market
from .io import (
    FIXTURES,
    ScenarioError,
    distribution_from_json,
    distribution_to_json,
    dumps,
    load_fixture,
    load_scenario,
    number_to_json,
    segmap_to_json,
    segmentation_to_json,
)
from .lp import optimal_segmentation, rationalize
from .mhr_project import projection_candidates, select_candidate
from .oracle import DEFAULT_RESOLUTION, brute_force_optimum
from .robustify import (
    BELIEF_SLACK,
    audit_robustness,
    epsilon_schedule,
    robustify_segmentation,
)
from .sample_pipeline import adversarial_belief, draw_samples, learn_segmentation
from .segmentation import (
    FixedPrices,
    Segmentation,
    TrueMonopoly,
    evaluate,
    measure_to_segmap,
    tie_sensitivity,
)

EXIT_OK, EXIT_GOLDEN, EXIT_SCENARIO, EXIT_STAGE, EXIT_COMPUTE = 0, 1, 2, 3, 4
USELESS_TOL = 1e-9
# oracle grid error allowance on top of the 1e-6 agreement tolerance
ORACLE_ALLOWANCE = 0.02
ORACLE_MAX_T, ORACLE_MAX_V = 3, 4


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _out(args, payload: dict, text_lines) -> None:
    if args.json:
        print(dumps(payload))
    else:
        for line in text_lines:
            print(line)


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator == 1 else f"{x} ({float(x):.10g})"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


# --- scenario loading -----------------------------------------------------


def _load(args, need_market: bool = True):
    sources = [s for s in (args.scenario, args.market, args.fixture) if s]
    if len(sources) != 1:
        raise ScenarioError("$", "give exactly one of --scenario, --market, --fixture")
    sc = load_fixture(args.fixture) if args.fixture else load_scenario(args.scenario or args.market)
    if need_market and sc.market is None:
        raise ScenarioError("market", "missing field")
    if getattr(args, "lam", None) is not None:
        lam = parse_number(args.lam)
        if not 0 <= lam <= 1:
            raise ScenarioError("--lambda", "must lie in [0, 1]")
        sc.lam = lam
    return sc


def _eps(args, sc, required=True):
    if args.eps_S is not None:
        if args.eps_S < 0:
            raise ScenarioError("--eps-S", "must be nonnegative")
        return args.eps_S
    if sc.model.eps_S is not None:
        return sc.model.eps_S
    if required:
        raise ScenarioError("model.eps_S", "missing field (or pass --eps-S)")
    return None


def _seed(args):
    if args.seed is None:
        raise ScenarioError("--seed", "required for stochastic commands")
    return args.seed


def _baseline(market, lam):
    return evaluate(market, Segmentation.trivial(market), TrueMonopoly(), lam).objective


def _eval_json(ev) -> dict:
    return {k: number_to_json(getattr(ev, k)) for k in ("revenue", "cs", "sw", "objective")}


# --- commands -------------------------------------------------------------


def cmd_solve(args) -> int:
    sc = _load(args)
    m, lam = sc.market, sc.lam
    t0 = time.perf_counter()
    opt = optimal_segmentation(m, lam)
    seg = opt.segmentation
    exact = False
    if args.exact:
        snapped = rationalize(m, seg)
        if snapped is None:
            _err("warning: rational reconstruction failed; reporting float results")
        else:
            seg, exact = snapped, True
    ev = evaluate(m, seg, FixedPrices(opt.prices), lam)
    base = _baseline(m, lam)
    useless = abs(float(ev.objective) - float(base)) <= USELESS_TOL
    elapsed = time.perf_counter() - t0
    payload = {
        "lambda": number_to_json(lam), "exact": exact, **_eval_json(ev),
        "lp_objective": opt.objective, "baseline": number_to_json(base), "useless": useless,
        "intended_prices": [number_to_json(p) for p in opt.prices],
        "segmentation": segmentation_to_json(seg), "segmap": segmap_to_json(measure_to_segmap(m, seg)),
        "seconds": elapsed,
    }
    lines = [
        f"objective: {_num(ev.objective)}",
        f"revenue: {_num(ev.revenue)}",
        f"consumer surplus: {_num(ev.cs)}",
        f"welfare: {_num(ev.sw)}",
        f"unsegmented baseline: {_num(base)}",
    ]
    if useless:
        lines.append("segmentation useless: optimal objective equals the unsegmented baseline")
    for s, p in zip(seg, opt.prices):
        lines.append(f"  segment w={_num(s.w)} price={_num(p)} x=[{', '.join(_num(v) for v in s.x)}]")
    _out(args, payload, lines)
    return EXIT_OK


def _robust_json(market, rob) -> dict:
    return {
        "base": segmentation_to_json(rob.base),
        "robust": segmentation_to_json(rob.robust),
        "intended_prices": [number_to_json(p) for p in rob.intended_prices],
        "robust_prices": [number_to_json(p) for p in rob.robust_prices(market)],
        "insignificant": list(rob.insignificant),
        "robust_types": list(rob.robust_types),
        "schedule": {"eps_S": rob.schedule.eps_S, "eps_I": rob.schedule.eps_I, "eps_R": rob.schedule.eps_R},
    }


def _audit_json(audit) -> dict:
    return {
        "ok": audit.ok, "weight_ok": audit.weight_ok, "mixture_ok": audit.mixture_ok,
        "robust_ok": audit.robust_ok, "centroid_error": audit.centroid_error,
        "sw_base": audit.sw_base, "sw_worst": audit.sw_worst, "sw_constant": audit.sw_constant,
        "rev_base": audit.rev_base, "rev_low": audit.rev_low, "rev_high": audit.rev_high,
        "rev_constant": audit.rev_constant, "reference": audit.reference,
        "segments": [vars(a) for a in audit.segments],
    }


def _audit_lines(audit) -> list:
    return [
        f"audit: {'ok' if audit.ok else 'FAILED'} (weights {audit.weight_ok}, mixture {audit.mixture_ok}, "
        f"robust prices {audit.robust_ok}, centroid error {audit.centroid_error:.3g})",
        f"welfare: base {audit.sw_base:.6g}, worst {audit.sw_worst:.6g} (constant {audit.sw_constant:.4g})",
        f"revenue: base {audit.rev_base:.6g}, range [{audit.rev_low:.6g}, {audit.rev_high:.6g}] "
        f"(constant {audit.rev_constant:.4g})",
    ]


def _base_segmentation(sc):
    if sc.segmentation is not None:
        if sc.intended_prices is None:
            raise ScenarioError("intended_prices", "missing field (required with a segmentation)")
        return sc.segmentation, sc.intended_prices
    opt = optimal_segmentation(sc.market, sc.lam)
    return opt.segmentation, opt.prices


def _robustify(args, sc):
    eps = _eps(args, sc)
    base, prices = _base_segmentation(sc)
    try:
        schedule = epsilon_schedule(eps, sc.market.T, sc.market.V)
    except ScheduleError as exc:
        raise StageError("epsilon_schedule", exc) from exc
    rob = _stage_call("robustify_segmentation", robustify_segmentation, sc.market, base, prices, schedule)
    return rob, audit_robustness(sc.market, rob, reference=args.reference)


def _stage_call(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ScenarioError, StageError):
        raise
    except PriceDiscError as exc:
        raise StageError(name, exc) from exc


def cmd_robustify(args) -> int:
    sc = _load(args)
    rob, audit = _robustify(args, sc)
    payload = {"robustified": _robust_json(sc.market, rob), "audit": _audit_json(audit)}
    s = rob.schedule
    lines = [f"schedule: eps_S={s.eps_S:.6g} eps_I={s.eps_I:.6g} eps_R={s.eps_R:.6g}"]
    for seg, p in zip(rob.robust, rob.robust_prices(sc.market)):
        lines.append(f"  segment w={seg.w:.6g} price={_num(p)} x=[{', '.join(f'{v:.6g}' for v in map(float, seg.x))}]")
    lines += _audit_lines(audit)
    _out(args, payload, lines)
    if args.output:
        Path(args.output).write_text(dumps(_robust_json(sc.market, rob)))
    return EXIT_OK


def cmd_audit(args) -> int:
    sc = _load(args)
    m = sc.market
    # the MHR-like conditions are stated for values scaled into (0, 1]
    mhr = [check_mhr_like(d).ok if m.grid.unit_bounded else None for d in m.type_dists]
    base, _ = _base_segmentation(sc)
    best, worst = tie_sensitivity(m, base, sc.lam)
    payload = {
        "types_mhr_like": mhr,
        "tie_sensitivity": {"favorable": number_to_json(best), "adversarial": number_to_json(worst)},
    }
    lines = [f"type {t}: MHR-like {'n/a (unscaled grid)' if ok is None else ok}" for t, ok in enumerate(mhr)]
    lines.append(f"ties for the intermediary: {_num(best)}; against: {_num(worst)}")
    if _eps(args, sc, required=False) is not None:
        rob, audit = _robustify(args, sc)
        payload["audit"] = _audit_json(audit)
        lines += _audit_lines(audit)
        _out(args, payload, lines)
        return EXIT_OK if audit.ok else EXIT_GOLDEN
    _out(args, payload, lines)
    return EXIT_OK


def cmd_project(args) -> int:
    sc = _load(args, need_market=False)
    if sc.distribution is None:
        if "pmf" in sc.raw:
            sc.distribution = distribution_from_json(sc.raw, "$")
        else:
            raise ScenarioError("distribution", "missing field")
    eps = _eps(args, sc)
    cands = projection_candidates(sc.distribution, eps)
    payload = {"candidates": [
        {"guess": number_to_json(c.guess), "passed": c.passed, "ks_to_empirical": c.ks_to_emp,
         "concave": c.report.concave, "strong_concave": c.report.strong_concave,
         "sale_prob_ok": c.report.monopoly_sale_prob_ok, "revenue_share_ok": c.report.revenue_welfare_ok,
         "pmf": [float(p) for p in c.dist.pmf]}
        for c in cands
    ]}
    lines = [f"guess {_num(c.guess)}: {'pass' if c.passed else 'fail'} ks={c.ks_to_emp:.6g}" for c in cands]
    chosen = _stage_call("project_mhr_like", select_candidate, cands)
    payload["projected"] = distribution_to_json(chosen.dist)
    lines.append(f"projected (guess {_num(chosen.guess)}): [{', '.join(f'{float(p):.6g}' for p in chosen.dist.pmf)}]")
    _out(args, payload, lines)
    return EXIT_OK


def cmd_sample_learn(args) -> int:
    sc = _load(args)
    seed = _seed(args)
    sweep = args.sweep or [args.samples or sc.model.m]
    if sweep[0] is None:
        raise ScenarioError("--samples", "missing (or set model.m)")
    rows, last = [], None
    for m in sweep:
        samples = draw_samples(sc.market, m, seed)
        res = learn_segmentation(samples, sc.lam, belief_slack=args.belief_slack, eps_S=args.eps_S,
                                 skip_infeasible_robustify=args.skip_robustify)
        if res.robust is None:
            _err(f"m={m}: schedule infeasible at eps_S={res.eps_S:.4g}; using the raw optimum")
        seg = res.segmentation
        prices = res.robust.robust_prices(res.projected_market) if res.robust else res.optimum.prices
        obj = float(evaluate(sc.market, seg, FixedPrices(prices), sc.lam).objective)
        adv = adversarial_belief(sc.market, res.eps_S, seg, sc.lam, seed=seed)
        rows.append((m, obj, adv.objective))
        last = res
    bayes = optimal_segmentation(sc.market, sc.lam).objective
    payload = {
        "bayesian_optimum": bayes,
        "sweep": [{"m": m, "objective": o, "adversarial_objective": a} for m, o, a in rows],
        "eps_S": last.eps_S,
        "schedule": None if last.schedule is None else vars(last.schedule),
        "projections": [distribution_to_json(d) for d in last.projections],
        "pre_robust": segmentation_to_json(last.optimum.segmentation),
        "segmentation": segmentation_to_json(last.segmentation),
    }
    lines = [f"bayesian optimum: {bayes:.6g}"]
    lines += [f"m={m}: objective {o:.6g}, adversarial {a:.6g}" for m, o, a in rows]
    _out(args, payload, lines)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "objective", "adversarial_objective"])
            w.writerows(rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load(args)
    seed = _seed(args)
    m = args.rounds if args.rounds is not None else sc.model.m
    if m is None:
        raise ScenarioError("--rounds", "missing (or set model.m)")
    seller = args.seller or sc.model.seller
    rep = simulate(sc.market, seller, sc.lam, m, seed,
                   recompute_every=args.recompute_every or sc.model.recompute_every,
                   C=sc.model.C, keep_rounds=bool(args.csv))
    if args.csv:
        rep.write_csv(args.csv)
    summary = rep.summary()
    _out(args, summary, [f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}" for k, v in summary.items()])
    return EXIT_OK


def _oracle_row(market, lam, resolution):
    lp = optimal_segmentation(market, lam).objective
    orc = brute_force_optimum(market, lam, resolution).objective
    return lp, orc, abs(lp - orc) <= 1e-6 + ORACLE_ALLOWANCE


def cmd_oracle(args) -> int:
    rows = []
    if args.random:
        rng = np.random.default_rng(_seed(args))
        lam = float(parse_number(args.lam or 0))
        for i in range(args.random):
            T, V = int(rng.integers(2, ORACLE_MAX_T + 1)), int(rng.integers(2, ORACLE_MAX_V + 1))
            rows.append((f"random[{i}] T={T} V={V}",) + _oracle_row(random_market(rng, T, V), lam, args.resolution))
    else:
        sc = _load(args)
        if sc.market.T > ORACLE_MAX_T or sc.market.V > ORACLE_MAX_V:
            raise ScenarioError("market", f"oracle supports T <= {ORACLE_MAX_T} and V <= {ORACLE_MAX_V}")
        rows.append((sc.name or "scenario",) + _oracle_row(sc.market, sc.lam, args.resolution))
    payload = {"instances": [{"name": n, "lp": lp, "oracle": o, "agree": ok} for n, lp, o, ok in rows]}
    _out(args, payload, [f"{n}: lp {lp:.9g} oracle {o:.9g} {'agree' if ok else 'DISAGREE'}" for n, lp, o, ok in rows])
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_GOLDEN


def cmd_examples(args) -> int:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name in FIXTURES:
            (out / f"{name}.json").write_text(json.dumps(load_fixture(name).raw, indent=2) + "\n")
        _err(f"wrote {len(FIXTURES)} fixtures to {out}")
    checks = golden.run_examples()
    payload = {"checks": [{"scenario": c.scenario, "quantity": c.quantity, "value": number_to_json(c.value),
                           "expected": number_to_json(c.expected), "relation": c.relation, "ok": c.ok}
                          for c in checks]}
    _out(args, payload, [c.line() for c in checks])
    return EXIT_OK if all(c.ok for c in checks) else EXIT_GOLDEN


# --- parser ---------------------------------------------------------------


def _add_source(p, lam=True):
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", help="scenario JSON file")
    g.add_argument("--market", help="market JSON file (a bare market or a full scenario)")
    g.add_argument("--fixture", choices=FIXTURES, help="bundled example scenario")
    if lam:
        g.add_argument("--lambda", dest="lam", help="objective weight on revenue in [0, 1]; accepts p/q")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    parser = argparse.ArgumentParser(prog="pricedisc", description=__doc__.split("\n")[0],
                                     epilog="exit codes: 0 ok, 1 golden/oracle mismatch, 2 invalid scenario, "
                                            "3 infeasible schedule or stage failure, 4 computation error")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="optimal segmentation")
    _add_source(p)
    p.add_argument("--exact", action="store_true", help="snap to fractions and evaluate exactly")
    p.set_defaults(func=cmd_solve)

    for name, func, hlp in (("robustify", cmd_robustify, "robustify a segmentation and audit it"),
                            ("audit", cmd_audit, "MHR-like, tie and robustness checks")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        _add_source(p)
        p.add_argument("--eps-S", dest="eps_S", type=float, help="seller belief error")
        p.add_argument("--reference", choices=("base", "moved"), default="base",
                       help="posterior used for the quantile-drop condition")
        if name == "robustify":
            p.add_argument("--output", help="also write the robustified segmentation JSON here")
        p.set_defaults(func=func)

    p = sub.add_parser("project", parents=[common], help="project a distribution onto MHR-like ones")
    _add_source(p, lam=False)
    p.add_argument("--eps-S", dest="eps_S", type=float)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("sample-learn", parents=[common], help="learn a segmentation from samples")
    _add_source(p)
    p.add_argument("--samples", type=int, help="samples per type")
    p.add_argument("--sweep", type=int, nargs="+", help="several sample counts")
    p.add_argument("--seed", type=int)
    p.add_argument("--eps-S", dest="eps_S", type=float, help="override the sample-based belief error")
    p.add_argument("--belief-slack", type=float, default=BELIEF_SLACK)
    p.add_argument("--skip-robustify", action="store_true", help="fall back to the raw optimum if infeasible")
    p.add_argument("--csv", help="write (m, objective, adversarial_objective) rows")
    p.set_defaults(func=cmd_sample_learn)

    p = sub.add_parser("simulate", parents=[common], help="repeated interaction with a learning seller")
    _add_source(p)
    p.add_argument("--seller", choices=("ucb", "etc"))
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--recompute-every", type=int)
    p.add_argument("--csv", help="per-round log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common], help="compare the LP with the brute-force oracle")
    _add_source(p)
    p.add_argument("--random", type=int, help="number of seeded random markets instead of a scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("examples", parents=[common], help="check golden values of the bundled examples")
    p.add_argument("--out", help="also write the fixture files into this directory")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        _err(f"invalid scenario: {exc}")
        return EXIT_SCENARIO
    except StageError as exc:
        _err(f"stage {exc.stage} failed: {exc.cause}")
        return EXIT_STAGE
    except ScheduleError as exc:
        _err(f"stage epsilon_schedule failed: {exc}")
        return EXIT_STAGE
    except PriceDiscError as exc:
        _err(f"error: {exc}")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
