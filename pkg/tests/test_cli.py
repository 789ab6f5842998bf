import json

import pytest

from pricedisc import io
from pricedisc.cli import main
from pricedisc.generators import noisy_types_market, pointmass_market
from pricedisc.lp import optimal_segmentation
from pricedisc.segmentation import measure_to_segmap


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", io.FIXTURES)
def test_fixtures_parse(name):
    sc = io.load_fixture(name)
    assert sc.name == name and sc.expected


def test_market_round_trip():
    m = noisy_types_market("4/5")
    assert io.market_from_json(json.loads(io.dumps(io.market_to_json(m)))) == m


def test_segmentation_round_trip():
    m = pointmass_market()
    seg = optimal_segmentation(m, 0).segmentation
    back = io.segmentation_from_json(json.loads(io.dumps(io.segmentation_to_json(seg))))
    assert back == seg
    sm = measure_to_segmap(m, seg)
    assert io.segmap_from_json(json.loads(io.dumps(io.segmap_to_json(sm)))).G == sm.G


@pytest.mark.parametrize("obj,path", [
    ({"market": {"grid": {"values": [1, 2]}, "types": [[1, "x"]]}}, "market.types[0].pmf[1]"),
    ({"market": {"types": [[1]]}}, "market.grid"),
    ({"market": {"grid": {"values": [1]}, "types": [[1]]}, "lambda": 2}, "lambda"),
    ({"market": {"grid": {"values": [1]}, "types": [[1]]}, "model": {"mode": "online"}}, "model.mode"),
    ({"market": {"grid": {"values": [1, 2]}, "types": [["1/2", "1/3"]]}}, "market.types[0].pmf"),
    ({"market": {"grid": {"scaled": True, "V": 0}, "types": [[1]]}}, "market.grid.V"),
])
def test_scenario_errors_name_the_field(obj, path):
    with pytest.raises(io.ScenarioError) as info:
        io.scenario_from_json(obj)
    assert info.value.path == path


def test_solve_pointmass_exact(capsys):
    code, out, _ = run(capsys, "solve", "--fixture", "pointmass", "--lambda", "0", "--exact", "--json")
    data = json.loads(out)
    assert code == 0 and data["exact"]
    assert (data["objective"], data["revenue"], data["cs"]) == ("2/3", "4/3", "2/3")
    # emitted artifacts re-parse
    seg = io.segmentation_from_json(data["segmentation"])
    assert len(seg) == len(data["intended_prices"])
    io.segmap_from_json(data["segmap"])


def test_solve_noisy_reports_useless(capsys):
    code, out, _ = run(capsys, "solve", "--fixture", "noisy_z049")
    assert code == 0 and "segmentation useless" in out


def test_solve_from_file(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(io.dumps(io.market_to_json(pointmass_market())))
    code, out, _ = run(capsys, "solve", "--market", str(path), "--json")
    assert code == 0 and json.loads(out)["lp_objective"] == pytest.approx(2 / 3)


def test_bad_scenario_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"market": {"grid": {"values": [1, 2]}, "types": [[1, "x"]]}}')
    code, out, err = run(capsys, "solve", "--scenario", str(path))
    assert code == 2 and out == ""
    assert "market.types[0].pmf[1]" in err


def test_invalid_json_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert run(capsys, "solve", "--scenario", str(path))[0] == 2


def test_seed_required(capsys):
    code, _, err = run(capsys, "simulate", "--fixture", "pointmass_scaled", "--rounds", "10")
    assert code == 2 and "--seed" in err


def test_infeasible_schedule_exit_code(capsys):
    code, _, err = run(capsys, "sample-learn", "--fixture", "pointmass_scaled", "--samples", "1000", "--seed", "7")
    assert code == 3 and "epsilon_schedule" in err


def test_robustify_emits_reparseable_json(tmp_path, capsys):
    out_path = tmp_path / "rob.json"
    code, out, _ = run(capsys, "robustify", "--fixture", "plateau", "--json", "--output", str(out_path))
    data = json.loads(out)
    assert code == 0 and data["audit"]["ok"]
    io.segmentation_from_json(json.loads(out_path.read_text())["robust"])


def test_robustify_infeasible(capsys):
    code, _, err = run(capsys, "robustify", "--fixture", "pointmass", "--eps-S", "0.5")
    assert code == 3 and "epsilon_schedule" in err


def test_audit_plateau(capsys):
    code, out, _ = run(capsys, "audit", "--fixture", "plateau", "--json")
    data = json.loads(out)
    assert code == 0 and data["tie_sensitivity"]["adversarial"] == 0


def test_project_command(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text('{"distribution": {"grid": {"scaled": true, "V": 4}, "pmf": ["1/4", "1/4", "1/4", "1/4"]}}')
    code, out, _ = run(capsys, "project", "--scenario", str(path), "--eps-S", "0.02", "--json")
    data = json.loads(out)
    assert code == 0 and len(data["candidates"]) == 4
    io.distribution_from_json(data["projected"])


def test_project_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text('{"distribution": {"grid": {"values": ["1/2", 1]}, "pmf": ["1/2", "1/2"]}}')
    code, _, err = run(capsys, "project", "--scenario", str(path), "--eps-S", "0.01")
    assert code == 3 and "project_mhr_like" in err


def test_simulate_csv(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "simulate", "--fixture", "pointmass_scaled", "--seller", "ucb", "--rounds", "120",
                       "--seed", "3", "--csv", str(path), "--json")
    assert code == 0 and json.loads(out)["m"] == 120
    assert path.read_text().splitlines()[0] == "round,type,price,bought,exploit,major,objective_cum"


def test_sample_learn_sweep_csv(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "sample-learn", "--fixture", "pointmass_scaled", "--sweep", "100", "1000",
                       "--seed", "7", "--skip-robustify", "--csv", str(path))
    assert code == 0 and "infeasible" in err
    lines = path.read_text().splitlines()
    assert lines[0] == "m,objective,adversarial_objective" and len(lines) == 3


def test_oracle_random(capsys):
    code, out, _ = run(capsys, "oracle", "--random", "4", "--seed", "1", "--json")
    assert code == 0 and all(r["agree"] for r in json.loads(out)["instances"])


def test_oracle_rejects_large_markets(tmp_path, capsys):
    path = tmp_path / "big.json"
    path.write_text(json.dumps({"grid": {"scaled": True, "V": 5}, "types": [[1, 0, 0, 0, 0]]}))
    assert run(capsys, "oracle", "--market", str(path))[0] == 2


def test_examples(tmp_path, capsys):
    code, out, _ = run(capsys, "examples", "--out", str(tmp_path))
    assert code == 0 and "FAIL" not in out
    assert "revenue = 4/3" in out and "cs = 2/3" in out and "deadweight = 0" in out
    assert sorted(p.stem for p in tmp_path.iterdir()) == sorted(io.FIXTURES)
