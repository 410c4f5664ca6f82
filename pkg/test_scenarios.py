# test_scenarios.py
"""Pruebas de archivos de escenario, del RunReport y de los comandos de escenario."""

import csv
import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from decolab.core.exceptions import InvalidParameterError, ScenarioError
from decolab.core.units import EV
from decolab.schemas.report import CheckResult, RunReport, format_number
from decolab.services import scenario_service
from decolab.services.scenario_service import load_scenario, parse_scenario, round_significant, with_overrides

SCENARIO_DIR = Path(__file__).parent / "scenarios"
SHIPPED = sorted(SCENARIO_DIR.glob("*.json"))


def _scenario_text(command: str, parameters: dict, **extra) -> str:
    return json.dumps({"name": "prueba", "command": command, "parameters": parameters, **extra})


def _run(text: str, out: Path, seed=None):
    scenario = with_overrides(parse_scenario(text), seed=seed, out=str(out))
    return scenario_service.run(scenario)


def _read_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


# ===============================
# PARSEO
# ===============================

def test_units_are_resolved_to_si():
    scenario = parse_scenario(_scenario_text("two-level-decay", {"delta_e": "1 eV", "tau": "1e-16 s"}))
    assert scenario.parameters.delta_e == pytest.approx(EV)
    assert scenario.parameters.tau == pytest.approx(1e-16)
    assert scenario.resolved()["parameters"]["delta_e"] == pytest.approx(1.602e-19)


@pytest.mark.parametrize(
    "parameters, key",
    [
        ({"delta_e": "1 eV", "tau": "1e-16 s", "bogus": 1}, "parameters.bogus"),
        ({"delta_e": "1 eV"}, "parameters.tau"),
        ({"delta_e": "1 s", "tau": "1e-16 s"}, "parameters.delta_e"),
        ({"delta_e": "1 eV", "tau": "-1 s"}, "parameters.tau"),
    ],
)
def test_parse_errors_name_the_key(parameters, key):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(_scenario_text("two-level-decay", parameters))
    assert exc.value.details["key"] == key
    assert key in str(exc.value)


def test_unknown_top_level_key_and_command():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(_scenario_text("milburn-table", {}, colour="azul"))
    assert exc.value.details["key"] == "colour"
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(_scenario_text("no-existe", {}))
    assert exc.value.details["key"] == "command"


def test_invalid_json_is_a_scenario_error():
    with pytest.raises(ScenarioError):
        parse_scenario("{ no es json")
    with pytest.raises(ScenarioError):
        parse_scenario("[1, 2]")


def test_lambda_alias_in_trace_demo():
    scenario = parse_scenario(_scenario_text("trace-demo", {"lambda": 0.2}))
    assert scenario.parameters.lam == 0.2
    assert scenario.resolved()["parameters"]["lambda"] == 0.2


def test_overrides_and_missing_file(tmp_path):
    scenario = parse_scenario(_scenario_text("milburn-table", {}))
    updated = with_overrides(scenario, seed=9, out=str(tmp_path))
    assert updated.seed == 9
    assert updated.output.path == str(tmp_path)
    with pytest.raises(ScenarioError):
        with_overrides(scenario, seed=-1)
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "falta.json")


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path):
    scenario = load_scenario(path)
    assert scenario.command in scenario_service.RUNNERS


# ===============================
# INFORME
# ===============================

def test_check_result_rules():
    assert CheckResult.evaluate("a", 1e-7, 1e-6).passed
    assert not CheckResult.evaluate("a", float("nan"), 1e-6).passed
    assert CheckResult.exceeds("b", 1e-3, 1e-4).passed
    assert not CheckResult.exceeds("b", 1e-5, 1e-4).passed


def test_report_rejects_duplicated_checks():
    with pytest.raises(ValidationError):
        RunReport(
            scenario={},
            wall_time=0.0,
            engine_versions={},
            checks=[CheckResult.evaluate("x", 0.0, 1.0), CheckResult.evaluate("x", 0.0, 1.0)],
        )


def test_format_number_is_reproducible():
    assert format_number(float("inf")) == "inf"
    assert format_number(float("-inf")) == "-inf"
    assert format_number(0.1) == "0.1"
    assert format_number(3) == "3"
    assert format_number(True) == "true"


def test_round_significant():
    assert round_significant(8.0412e12) == 8.0e12
    assert round_significant(2.063e-25) == 2.1e-25
    assert round_significant(0.0) == 0.0


# ===============================
# COMANDOS
# ===============================

def test_milburn_table_matches_reference(tmp_path):
    report = _run(_scenario_text("milburn-table", {}), tmp_path)
    assert report.passed
    rows = _read_csv(tmp_path / "prueba" / "milburn_table.csv")
    assert rows[0] == ["Delta E [J]", "Delta E [eV]", "t_D nominal [s]", "t_D rate_exact [s]"]
    assert len(rows) == 4
    nominal, exact = float(rows[1][2]), float(rows[1][3])
    assert exact == pytest.approx(2 * nominal)
    assert round_significant(nominal) == 8.0e12
    assert (tmp_path / "prueba" / "report.txt").read_text(encoding="utf-8").endswith("status = PASS\n")


def test_two_level_decay_writes_table(tmp_path):
    text = _scenario_text("two-level-decay", {"delta_e": "1 eV", "tau": "1e-16 s", "record_every": 10})
    report = _run(text, tmp_path)
    assert report.passed
    rows = _read_csv(tmp_path / "prueba" / "two_level_decay.csv")
    assert rows[0][0] == "t [s]"
    assert len(rows) == 1 + report.summary["n_steps"] // 10 + 1
    assert float(rows[1][3]) == pytest.approx(0.5)


def test_two_level_without_noise_has_zero_rate(tmp_path):
    report = _run(_scenario_text("two-level-decay", {"delta_e": "1 eV", "tau": 0}), tmp_path)
    assert report.passed
    assert report.summary["analytic_rate_per_s"] == 0.0


def test_milburn_model_requires_positive_tick(tmp_path):
    text = _scenario_text("two-level-decay", {"model": "milburn_exact", "delta_e": "1 eV", "tau": 0})
    with pytest.raises(InvalidParameterError):
        _run(text, tmp_path)


def test_identical_lumps_report_infinite_decay_time(tmp_path):
    text = _scenario_text("dp-lumps", {"radius": "1 um", "displacement": 0, "resolution": 4})
    report = _run(text, tmp_path)
    assert report.passed
    rows = _read_csv(tmp_path / "prueba" / "dp_lumps.csv")
    header, values = rows
    assert values[header.index("t_D [s]")] == "inf"
    assert float(values[header.index("E_grav [J]")]) == 0.0


def test_local_me_with_global_kernel(tmp_path):
    parameters = {
        "grid": {"dims": [2], "spacing": "1e-7 m"},
        "kernel": "global",
        "tau": "1e-16 s",
        "delta_e": "1e-19 J",
        "cells": [0, 1],
    }
    report = _run(_scenario_text("local-me", parameters), tmp_path)
    assert report.passed
    assert report.summary["kernel"] == "global"


def test_local_me_requires_tau_for_diagonal_kernel(tmp_path):
    parameters = {"grid": {"dims": [2], "spacing": "1e-7 m"}, "kernel": "diagonal", "delta_e": "1e-19 J"}
    with pytest.raises(ScenarioError) as exc:
        _run(_scenario_text("local-me", parameters), tmp_path)
    assert exc.value.details["key"] == "parameters.tau"


def test_local_me_rejects_cells_outside_grid(tmp_path):
    parameters = {"grid": {"dims": [2], "spacing": "1e-7 m"}, "delta_e": "1e-19 J", "cells": [5]}
    with pytest.raises(ScenarioError):
        _run(_scenario_text("local-me", parameters), tmp_path)


def test_critical_radius_command(tmp_path):
    parameters = {"density": "1 g/cm3", "r_min": "1 nm", "r_max": "10 um", "n_radii": 25, "sigma_floor": "1 nm"}
    report = _run(_scenario_text("critical-radius", parameters), tmp_path)
    assert report.passed
    assert 1e-9 < report.summary["r_crit_m"] < 1e-5


def test_trace_demo_and_negative_control(tmp_path):
    report = _run(_scenario_text("trace-demo", {"n_steps": 2000, "record_every": 100}, seed=3), tmp_path)
    assert report.passed
    assert [c.name for c in report.checks] == ["c_tilde_conservation", "energy_drift", "unitary_invariance"]
    rows = _read_csv(tmp_path / "prueba" / "trace_demo.csv")
    assert len(rows[0]) == 3 + 4
    assert len(rows) == 1 + 21

    control = {"n_steps": 10000, "matrix_coefficient": [[0, 0], [0, 1]], "n": 2, "r_cells": 2}
    report = _run(_scenario_text("trace-demo", control, seed=3), tmp_path / "control")
    assert [c.name for c in report.checks] == ["negative_control_c_drift"]
    assert report.passed


def test_same_seed_gives_identical_tables(tmp_path):
    text = _scenario_text(
        "mc-compare",
        {"noise": "gaussian_global_time", "delta_e": "1 eV", "tau": "6.58e-16 s", "n_traj": 200},
        seed=4,
    )
    first = _run(text, tmp_path)
    table = (tmp_path / "prueba" / "mc_compare.csv").read_bytes()
    report_lines = (tmp_path / "prueba" / "report.txt").read_text(encoding="utf-8").splitlines()
    second = _run(text, tmp_path)
    assert (tmp_path / "prueba" / "mc_compare.csv").read_bytes() == table
    again = (tmp_path / "prueba" / "report.txt").read_text(encoding="utf-8").splitlines()
    differing = [a for a, b in zip(report_lines, again) if a != b]
    assert all(line.startswith("wall_time_s") for line in differing)
    assert first.summary["max_z"] == second.summary["max_z"]


def test_seed_override_changes_ensemble(tmp_path):
    text = _scenario_text(
        "mc-compare",
        {"noise": "fluctuating_planck", "delta_e": "1 eV", "tau": "6.58e-16 s", "n_traj": 100},
    )
    a = _run(text, tmp_path / "a", seed=1)
    b = _run(text, tmp_path / "b", seed=2)
    assert a.summary["max_z"] != b.summary["max_z"]


@pytest.mark.parametrize("path", [p for p in SHIPPED if not p.stem.startswith("mc_compare")], ids=lambda p: p.stem)
def test_shipped_scenarios_pass(path, tmp_path):
    report = scenario_service.run(with_overrides(load_scenario(path), out=str(tmp_path)))
    assert report.passed, report.to_text()


@pytest.mark.slow
@pytest.mark.parametrize("path", [p for p in SHIPPED if p.stem.startswith("mc_compare")], ids=lambda p: p.stem)
def test_shipped_ensembles_pass(path, tmp_path):
    report = scenario_service.run(with_overrides(load_scenario(path), out=str(tmp_path)))
    assert report.passed, report.to_text()
