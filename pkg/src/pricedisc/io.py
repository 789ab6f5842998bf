"""JSON scenario parsing and artifact serialization.

Rational numbers travel as ``"p/q"`` strings so golden values stay exact.
Parsing errors carry the JSON path of the offending field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any, Optional

from .distributions import DiscreteDistribution, ValueGrid, parse_number
from .errors import PriceDiscError
from .segmentation import Market, Segment, Segmentation, SegmentMap

MODES = ("bayesian", "sample", "bandit")


class ScenarioError(PriceDiscError, ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def number_to_json(x):
    if isinstance(x, bool):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return x
    return float(x)


def _num(value, path: str):
    try:
        return parse_number(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(path, f"not a number ({exc})") from None


def _get(obj: dict, key: str, path: str, default=...):
    if not isinstance(obj, dict):
        raise ScenarioError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise ScenarioError(f"{path}.{key}", "missing field")
        return default
    return obj[key]


def _list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ScenarioError(path, "expected a list")
    return value


# --- grids and distributions ----------------------------------------------


def grid_from_json(obj, path: str = "grid") -> ValueGrid:
    try:
        if isinstance(obj, dict) and obj.get("scaled"):
            V = _get(obj, "V", path)
            if not isinstance(V, int) or V < 1:
                raise ScenarioError(f"{path}.V", "must be a positive integer")
            return ValueGrid.scaled_grid(V)
        vals = _list(_get(obj, "values", path), f"{path}.values")
        return ValueGrid(tuple(_num(v, f"{path}.values[{i}]") for i, v in enumerate(vals)))
    except ScenarioError:
        raise
    except PriceDiscError as exc:
        raise ScenarioError(path, str(exc)) from None


def grid_to_json(grid: ValueGrid) -> dict:
    if grid.scaled:
        return {"scaled": True, "V": grid.V}
    return {"values": [number_to_json(v) for v in grid.values]}


def distribution_from_json(obj, path: str = "distribution", grid: Optional[ValueGrid] = None) -> DiscreteDistribution:
    if isinstance(obj, list):
        pmf_raw = obj
    else:
        pmf_raw = _list(_get(obj, "pmf", path), f"{path}.pmf")
        if "grid" in obj:
            grid = grid_from_json(obj["grid"], f"{path}.grid")
    if grid is None:
        raise ScenarioError(f"{path}.grid", "missing field")
    pmf = tuple(_num(p, f"{path}.pmf[{i}]") for i, p in enumerate(pmf_raw))
    try:
        return DiscreteDistribution(grid, pmf)
    except PriceDiscError as exc:
        raise ScenarioError(f"{path}.pmf", str(exc)) from None


def distribution_to_json(d: DiscreteDistribution) -> dict:
    return {"grid": grid_to_json(d.grid), "pmf": [number_to_json(p) for p in d.pmf]}


# --- markets and segmentations --------------------------------------------


def market_from_json(obj, path: str = "market") -> Market:
    grid = grid_from_json(_get(obj, "grid", path), f"{path}.grid")
    types = _list(_get(obj, "types", path), f"{path}.types")
    if not types:
        raise ScenarioError(f"{path}.types", "need at least one type")
    dists = tuple(distribution_from_json(t, f"{path}.types[{i}]", grid) for i, t in enumerate(types))
    prior_raw = _get(obj, "prior", path, None)
    try:
        if prior_raw is None:
            return Market.uniform_prior(grid, dists)
        prior = tuple(_num(p, f"{path}.prior[{i}]") for i, p in enumerate(_list(prior_raw, f"{path}.prior")))
        return Market(grid, dists, prior)
    except ScenarioError:
        raise
    except PriceDiscError as exc:
        raise ScenarioError(f"{path}.prior", str(exc)) from None


def market_to_json(market: Market) -> dict:
    return {
        "grid": grid_to_json(market.grid),
        "types": [[number_to_json(p) for p in d.pmf] for d in market.type_dists],
        "prior": [number_to_json(p) for p in market.type_prior],
    }


def segmentation_from_json(obj, path: str = "segmentation") -> Segmentation:
    segs = _list(_get(obj, "segments", path), f"{path}.segments")
    out = []
    for i, s in enumerate(segs):
        p = f"{path}.segments[{i}]"
        x = tuple(_num(v, f"{p}.x[{j}]") for j, v in enumerate(_list(_get(s, "x", p), f"{p}.x")))
        out.append(Segment(x, _num(_get(s, "w", p), f"{p}.w")))
    try:
        return Segmentation(tuple(out))
    except PriceDiscError as exc:
        raise ScenarioError(path, str(exc)) from None


def segmentation_to_json(seg: Segmentation) -> dict:
    return {"segments": [{"x": [number_to_json(v) for v in s.x], "w": number_to_json(s.w)} for s in seg]}


def segmap_to_json(segmap: SegmentMap) -> dict:
    return {"G": [[number_to_json(v) for v in row] for row in segmap.G], "labels": list(segmap.labels)}


def segmap_from_json(obj, path: str = "segmap") -> SegmentMap:
    rows = _list(_get(obj, "G", path), f"{path}.G")
    G = tuple(tuple(_num(v, f"{path}.G[{i}][{j}]") for j, v in enumerate(_list(r, f"{path}.G[{i}]")))
              for i, r in enumerate(rows))
    try:
        return SegmentMap(G, tuple(obj.get("labels", ())))
    except PriceDiscError as exc:
        raise ScenarioError(f"{path}.G", str(exc)) from None


# --- scenarios ------------------------------------------------------------


@dataclass
class ModelConfig:
    mode: str = "bayesian"
    m: Optional[int] = None
    seed: Optional[int] = None
    eps_S: Optional[float] = None
    seller: str = "ucb"
    tie_break: str = "low"
    C: float = 2.0
    recompute_every: int = 100


@dataclass
class Scenario:
    market: Optional[Market]
    lam: Any = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    segmentation: Optional[Segmentation] = None
    segmap: Optional[SegmentMap] = None
    intended_prices: Optional[tuple] = None
    distribution: Optional[DiscreteDistribution] = None
    expected: dict = field(default_factory=dict)
    name: str = ""
    raw: dict = field(default_factory=dict)


def _model_from_json(obj, path: str = "model") -> ModelConfig:
    if obj is None:
        return ModelConfig()
    if not isinstance(obj, dict):
        raise ScenarioError(path, "expected an object")
    cfg = ModelConfig()
    mode = obj.get("mode", cfg.mode)
    if mode not in MODES:
        raise ScenarioError(f"{path}.mode", f"must be one of {', '.join(MODES)}")
    cfg.mode = mode
    for key in ("m", "seed", "recompute_every"):
        if key in obj and obj[key] is not None:
            if not isinstance(obj[key], int) or isinstance(obj[key], bool) or obj[key] < 0:
                raise ScenarioError(f"{path}.{key}", "must be a nonnegative integer")
            setattr(cfg, key, obj[key])
    for key in ("eps_S", "C"):
        if key in obj and obj[key] is not None:
            val = float(_num(obj[key], f"{path}.{key}"))
            if val < 0:
                raise ScenarioError(f"{path}.{key}", "must be nonnegative")
            setattr(cfg, key, val)
    if "seller" in obj:
        if obj["seller"] not in ("ucb", "etc"):
            raise ScenarioError(f"{path}.seller", "must be 'ucb' or 'etc'")
        cfg.seller = obj["seller"]
    if "tie_break" in obj:
        if obj["tie_break"] not in ("low", "high"):
            raise ScenarioError(f"{path}.tie_break", "must be 'low' or 'high'")
        cfg.tie_break = obj["tie_break"]
    return cfg


def scenario_from_json(obj) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    # a bare market object is accepted as a scenario
    if "grid" in obj and "types" in obj:
        obj = {"market": obj}
    market = market_from_json(obj["market"], "market") if "market" in obj else None
    lam = _num(obj.get("lambda", 0), "lambda")
    if not 0 <= lam <= 1:
        raise ScenarioError("lambda", "must lie in [0, 1]")
    sc = Scenario(market, lam, _model_from_json(obj.get("model"), "model"), name=str(obj.get("name", "")), raw=obj)
    if "segmentation" in obj:
        sc.segmentation = segmentation_from_json(obj["segmentation"], "segmentation")
    if "segmap" in obj:
        sc.segmap = segmap_from_json(obj["segmap"], "segmap")
    if "intended_prices" in obj:
        vals = _list(obj["intended_prices"], "intended_prices")
        sc.intended_prices = tuple(_num(v, f"intended_prices[{i}]") for i, v in enumerate(vals))
    if "distribution" in obj:
        sc.distribution = distribution_from_json(obj["distribution"], "distribution")
    sc.expected = obj.get("expected", {})
    return sc


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON ({exc})") from None
    except OSError as exc:
        raise ScenarioError("$", f"cannot read {path} ({exc.strerror})") from None
    return scenario_from_json(data)


FIXTURES = ("pointmass", "pointmass_scaled", "noisy_z049", "noisy_z08", "two_type", "plateau", "impossibility")


def load_fixture(name: str) -> Scenario:
    if name not in FIXTURES:
        raise ScenarioError("fixture", f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("pricedisc").joinpath("fixtures", f"{name}.json").read_text()
    sc = scenario_from_json(json.loads(text))
    sc.name = sc.name or name
    return sc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=number_to_json)
