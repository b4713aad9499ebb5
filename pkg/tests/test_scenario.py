import json

import numpy as np
import pytest

from lmictl import powernet
from lmictl.scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict, scenario_to_dict


def _doc(name="example1"):
    sys, cost, x0 = powernet.builtin(name)
    return scenario_to_dict(Scenario(sys, cost, x0, horizon=20, seed=4))


@pytest.mark.parametrize("name", powernet.BUILTIN_NAMES)
def test_round_trip_is_exact(name, tmp_path):
    doc = _doc(name)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    sc = load_scenario(path)
    assert scenario_to_dict(sc) == doc
    sys = powernet.builtin(name)[0]
    assert np.array_equal(sc.system.a_bar, sys.a_bar)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["terms"][0].update(variance=-1), "terms[0].variance"),
    (lambda d: d["terms"][1].update(subsystem=5), "terms[1].subsystem"),
    (lambda d: d.update(a_bar=[[1.0]]), "a_bar"),
    (lambda d: d["b_blocks"].pop(), "b_blocks"),
    (lambda d: d.pop("blocks"), "blocks"),
    (lambda d: d.update(x0=[1.0]), "x0"),
    (lambda d: d["terms"][0].update(law="cauchy"), "terms[0].law"),
])
def test_errors_name_the_field(mutate, field):
    doc = _doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=field.replace("[", r"\[").replace("]", r"\]")):
        scenario_from_dict(doc)


def test_structure_violation_is_rejected():
    doc = _doc()
    doc["terms"][0]["basis"][3][0] = 1.0
    with pytest.raises(ScenarioError, match="terms\\[0\\]"):
        scenario_from_dict(doc)


def test_identity_shorthand():
    doc = _doc("example2")
    doc["q"] = "identity"
    doc["r_blocks"] = "identity"
    sc = scenario_from_dict(doc)
    assert np.array_equal(sc.cost.r, np.eye(2))


def test_bad_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"blocks": [\n  {"n": 1,}\n]}')
    with pytest.raises(ScenarioError, match="line 2"):
        load_scenario(path)
