import copy
import json
import math
from pathlib import Path

import pytest

from regime_sde import timefunc as tf
from regime_sde.demos import PROBLEM_DOCS, problem_doc
from regime_sde.errors import ProblemFileError
from regime_sde.io import json_text
from regime_sde.normal import std_normal_cdf
from regime_sde.problem import Levels, load_problem, problem_from_dict

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def test_levels_from_probs_and_scores():
    lv = Levels.from_probs([0.6, 0.75, 0.9])
    assert lv.count == 3 and not lv.truncated
    assert lv.prob(2) == pytest.approx(0.75, abs=1e-15)
    assert lv.score(0) == -math.inf and lv.prob(0) == 0.0
    with pytest.raises(IndexError):
        lv.score(4)
    assert lv.regime_for_score(-1.0) == 1
    assert lv.regime_for_prob(0.8) == 3
    assert lv.regime_for_prob(0.95) == 4
    tr = Levels.from_scores([0.0, 1.0], truncated=True)
    assert tr.regime_for_score(5.0) is None


def test_levels_closed_form_near_one():
    # y_n = 1 - 10^-(n+1): scores stay finite and increasing where doubles saturate
    lv = Levels.closed_form(tf.power(tf.const(10.0), 0) - tf.exp(tf.mul(-math.log(10.0), tf.add(tf.N, 1.0))))
    z = [lv.score(n) for n in range(1, 16)]
    assert all(b > a for a, b in zip(z, z[1:]))
    assert lv.validate(15) == []


def test_levels_validation():
    with pytest.raises(ValueError):
        Levels.from_probs([0.5, 1.0])
    assert Levels.from_probs([0.6, 0.5]).validate() != []


@pytest.mark.parametrize("name", list(PROBLEM_DOCS))
def test_builtin_docs_load(name):
    p = problem_from_dict(problem_doc(name))
    assert p.name == name
    # to_json feeds back through the schema
    again = problem_from_dict(json.loads(json_text(p.to_json())))
    assert again.levels.count == p.levels.count
    assert again.mu0_bar == p.mu0_bar


def test_problem_files_match_builtins():
    files = {f.stem: json.loads(f.read_text()) for f in PROBLEMS.glob("*.json")}
    for name in PROBLEM_DOCS:
        assert files[name.replace("-", "_")] == json.loads(json_text(problem_doc(name)))


def test_generated_levels_in_file():
    p = load_problem(PROBLEMS / "explosion_finite.json")
    assert p.levels.truncated and p.levels.count == 200
    assert p.levels.prob(1) == pytest.approx(std_normal_cdf(0.5 / math.sqrt(2)), abs=1e-14)


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.pop("levels"), "levels"),
    (lambda d: d["coefficients"].update(mode="weird"), "mode"),
    (lambda d: d["initial_law"].update(sigma0_sq=0.0), "sigma0_sq"),
    (lambda d: d["levels"].update(list=[0.5, 1.2]), "levels"),
    (lambda d: d["coefficients"].update(sigma2={"op": "nope"}), "unknown op"),
    (lambda d: d["levels"].update(list=[0.6, 0.3]), ""),
])
def test_schema_errors(mutate, fragment):
    d = copy.deepcopy(problem_doc("gaussian"))
    mutate(d)
    if fragment == "":
        # decreasing levels parse but fail validation
        assert problem_from_dict(d).levels.validate() != []
        return
    with pytest.raises(ProblemFileError) as info:
        problem_from_dict(d)
    assert fragment in str(info.value)


def test_load_problem_errors(tmp_path):
    with pytest.raises(ProblemFileError):
        load_problem(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ProblemFileError):
        load_problem(bad)


def test_from_times_count_mismatch():
    d = problem_doc("explosion-global")
    d["levels"]["from_times"]["count"] = 30
    with pytest.raises(ProblemFileError):
        problem_from_dict(d)
