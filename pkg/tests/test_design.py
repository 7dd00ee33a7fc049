import json

import numpy as np
import pytest

from iac.design import Design, run_design
from iac.errors import InfeasibleConfig, InvalidConfig
from iac.system_model import SystemConfig


def test_bundle_round_trip(fig2_design, tmp_path):
    path = tmp_path / "b.json"
    fig2_design.save(path)
    back = Design.load(path)
    assert back.config == fig2_design.config
    assert back.graph == fig2_design.graph
    assert np.array_equal(back.channels.H, fig2_design.channels.H)
    for a, b in zip(back.precoders.V, fig2_design.precoders.V):
        assert np.array_equal(a, b)
    assert back.report.to_dict() == fig2_design.report.to_dict()


def test_bundle_is_plain_json(optimal_design, tmp_path):
    path = tmp_path / "b.json"
    optimal_design.save(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["version"] == 1
    assert set(doc) >= {"config", "channels", "graph", "precoders", "receivers", "report"}


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("graph"),
    lambda d: d.__setitem__("version", 2),
    lambda d: d["config"].__setitem__("d", "x"),
    lambda d: d["channels"].__setitem__("data", [[1, 2]]),
])
def test_malformed_bundle(fig2_design, mutate):
    doc = json.loads(json.dumps(fig2_design.to_dict()))
    mutate(doc)
    with pytest.raises(InvalidConfig):
        Design.from_dict(doc)


def test_infeasible_rejected_before_construction():
    with pytest.raises(InfeasibleConfig):
        run_design(SystemConfig(3, 2, (2, 2, 2)))


def test_optimal_flag_ignored_for_other_tuples():
    D = run_design(SystemConfig.from_tuple(6, (3, 1, 3, 2, 2)), 0, 0, optimal=True)
    assert D.trace.method == "general" and D.report.passed
