import pytest

from regime_sde.checks import run_checks
from regime_sde.demos import builtin_problem
from regime_sde.problem import load_problem
from pathlib import Path

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def failed_names(problem):
    return {i.name for i in run_checks(problem).failed()}


@pytest.mark.parametrize("name", ["gaussian", "linear", "explosion-finite", "explosion-global"])
def test_clean_builtins(name):
    rep = run_checks(builtin_problem(name))
    assert rep.ok, rep.lines()


def test_explosion_notes_globality():
    rep = run_checks(builtin_problem("explosion-finite"))
    notes = {i.name: i for i in rep.items if i.informational}
    assert not notes["globality"].passed and notes["bijectivity"].passed
    assert any(line.startswith("[note] globality") for line in rep.lines())


def test_initial_mean_violation():
    rep = run_checks(load_problem(PROBLEMS / "bad_initial_mean.json"))
    assert failed_names(load_problem(PROBLEMS / "bad_initial_mean.json")) == {"(As-x0)"}
    line = next(i.line() for i in rep.failed())
    assert "1 > sigma0_sq/2 = 0.5" in line


def test_decreasing_reference():
    assert "(As-r)" in failed_names(load_problem(PROBLEMS / "decreasing_reference.json"))


@pytest.mark.parametrize("name", ["two-solutions", "infinite", "oscillation"])
def test_pathologies_violate_band(name):
    assert "(As-beta_n)" in failed_names(builtin_problem(name))


def test_logdrift_band_fails_at_start():
    # alpha_1 = 1 with b = log-drift puts regime 1 outside the strict up band near t = 0
    assert failed_names(builtin_problem("logdrift")) == {"(As-beta_n)"}


def test_report_json():
    doc = run_checks(builtin_problem("gaussian")).to_json()
    assert doc["ok"] and len(doc["items"]) == 8
