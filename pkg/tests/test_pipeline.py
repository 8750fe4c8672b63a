import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from test_grid import TRUTH
from ward_ident.errors import ConfigError, IdentificationError
from ward_ident.grid import apply_ward_equivalent
from ward_ident.objectives import SteadyReference, steady_quantities
from ward_ident.pipeline import (
    DEFAULT_DYNAMIC_FIELDS,
    apply_dynamic_values,
    default_dynamic_space,
    default_monitors,
    default_steady_space,
    dynamic_stage_config,
    dynamic_values_from_dict,
    dynamic_values_to_dict,
    generate_references,
    identify_dynamic,
    identify_steady_state,
    machine_template,
    steady_stage_config,
    ward_params_from_values,
    ward_params_to_values,
)
from ward_ident.report import flow_rows, flow_table, params_table, scc_table

AREAS = ["A", "C"]


def truth_equivalent(net):
    return apply_ward_equivalent(net, net.boundary_buses, ward_params_from_values(TRUTH, AREAS, 100.0), machine_template(None))


def test_default_spaces():
    names = [p.name for p in default_steady_space(AREAS)]
    assert names[:5] == ["A.r", "A.x", "A.s_nom", "A.p_load", "A.q_load"]
    assert names[-2:] == ["common.r", "common.x"]
    assert len(default_steady_space(AREAS, freeze_shunts=False)) == 2 * 9 + 6
    assert len(default_steady_space(["A"])) == 5
    dyn = default_dynamic_space(["A"])
    assert [p.name for p in dyn] == [f"A.{f}" for f in DEFAULT_DYNAMIC_FIELDS]
    assert all(p.scale == "log" and p.upper / p.lower <= 100.0 + 1e-9 for p in dyn)
    with pytest.raises(ConfigError):
        default_dynamic_space(["A"], ["gov.nonsense"])


def test_stage_configs():
    st1 = steady_stage_config({"space": [{"name": "A.x"}, {"name": "X.y", "lower": 0, "upper": 1}], "fixed": {"A.r": 0.1}}, AREAS)
    assert st1.space.names == ("A.x", "X.y") and st1.fixed == {"A.r": 0.1}
    assert st1.objective.weights == (0.5, 0.5)
    assert dynamic_stage_config({}, AREAS).objective.weights == (0.8, 0.2)
    with pytest.raises(ConfigError, match="explicit bounds"):
        steady_stage_config({"space": [{"name": "Z.q"}]}, AREAS)
    with pytest.raises(ConfigError, match="missing 'name'"):
        steady_stage_config({"space": [{"lower": 1}]}, AREAS)


@given(
    vals=st.fixed_dictionaries({k: st.floats(0.001, 1.0) if k.endswith((".r", ".x")) else st.floats(-900, 900) for k in TRUTH}),
    base=st.sampled_from([100.0, 1000.0]),
)
@settings(max_examples=30)
def test_ward_values_round_trip(vals, base):
    vals = dict(vals, **{"A.s_nom": 500.0, "C.s_nom": 800.0})
    back = ward_params_to_values(ward_params_from_values(vals, AREAS, base), base)
    for k, v in vals.items():
        assert back[k] == pytest.approx(v, rel=1e-12)


def test_ward_values_need_all_area_fields():
    vals = dict(TRUTH)
    del vals["C.s_nom"]
    with pytest.raises(ConfigError, match="C.s_nom"):
        ward_params_from_values(vals, AREAS, 100.0)


def test_dynamic_values(three_area):
    nested = {"A": {"h": 5.0, "avr": {"ka": 15.0}, "gov": {"rp": 0.05}}}
    flat = dynamic_values_from_dict(nested)
    assert flat == {"A.h": 5.0, "A.avr.ka": 15.0, "A.gov.rp": 0.05}
    assert dynamic_values_to_dict(flat) == nested
    eq = truth_equivalent(three_area)
    net = apply_dynamic_values(eq, flat, AREAS)
    m = net.machine_by_id["G_EQ_A"]
    assert (m.h, m.avr.ka, m.gov.rp) == (5.0, 15.0, 0.05)
    assert net.machine_by_id["G_EQ_C"] == eq.machine_by_id["G_EQ_C"]
    with pytest.raises(ConfigError, match="A.avr.bogus|A.bogus"):
        apply_dynamic_values(eq, {"A.bogus": 1.0}, AREAS)


def test_default_monitors(three_area):
    mons = default_monitors(three_area, ["B1"])
    assert mons[:3] == ["B1:vmag_pu", "B1:vang_rad", "B1:freq_hz"]
    assert "A@B1:p_mw" in mons and "B1-B3@B1:q_mvar" in mons


def test_steady_identification_recovers_truth_responses(three_area):
    eq = truth_equivalent(three_area)
    refs = generate_references(eq, three_area.boundary_buses, [], [], {})
    # only the two series reactances are free; the rest is fixed at truth
    fixed = {k: v for k, v in TRUTH.items() if k not in ("A.x", "C.x")}
    stage = steady_stage_config(
        {"space": [{"name": "A.x"}, {"name": "C.x"}], "fixed": fixed, "optimizer": {"population": 12, "max_iter": 60, "seed": 3}},
        AREAS,
    )
    res = identify_steady_state(three_area, refs, stage)
    assert res.result.best_f <= 1e-8
    assert res.params.areas["A"].series.x == pytest.approx(0.08, rel=1e-3)
    assert max(res.components) <= 1e-8


def test_steady_identification_infeasible_box(three_area):
    refs = generate_references(truth_equivalent(three_area), three_area.boundary_buses, [], [], {})
    fixed = dict(TRUTH, **{"A.p_load": -1e6})
    stage = steady_stage_config({"space": [{"name": "A.x"}], "fixed": fixed, "optimizer": {"population": 4, "max_iter": 1}}, AREAS)
    with pytest.raises(IdentificationError):
        identify_steady_state(three_area, refs, stage)


def test_dynamic_needs_stage1(three_area):
    with pytest.raises(ConfigError, match="stage-1"):
        identify_dynamic({}, None, [], dynamic_stage_config({}, AREAS))
    with pytest.raises(ConfigError, match="equivalent machines"):
        identify_dynamic({}, three_area, [], dynamic_stage_config({}, AREAS))


def test_dynamic_identification_small(three_area):
    from ward_ident.dynamics.events import Event

    eq = apply_dynamic_values(truth_equivalent(three_area), {"A.h": 5.0, "C.h": 3.5}, AREAS)
    events = [
        Event("load_step", "LB4", 0.2, {"fraction": 0.3}, name="f"),
        Event("line_fault_and_trip", "B4-B6", 0.2, {"location": 0.5, "clear_after": 0.1}, name="v"),
    ]
    mons = ["B1:freq_hz", "B2:vmag_pu", "A@B1:p_mw"]
    refs = generate_references(eq, three_area.boundary_buses, events, mons, {"frequency": 1.5, "voltage": 1.0})
    stage = dynamic_stage_config(
        {
            "space": [{"name": "A.h", "lower": 2.0, "upper": 10.0}],
            "fixed": {"C.h": 3.5},
            "optimizer": {"population": 6, "max_iter": 6, "seed": 0},
        },
        AREAS,
    )
    res = identify_dynamic(refs.records, truth_equivalent(three_area), events, stage)
    assert res.values["A.h"] == pytest.approx(5.0, rel=0.05)
    assert res.result.best_f <= 1e-4
    assert res.network.machine_by_id["G_EQ_C"].h == 3.5


# report tables


def test_report_row_deltas_from_rounded_values():
    rows = flow_rows({"L@B": (100.004, -0.001)}, {"L@B": (99.996, 0.001)})
    # no negative zero in the printed table
    assert rows == ["L@B, 100.0, 100.0, 0.0, 0.0, 0.0, 0.0"]
    assert flow_rows({"X@B": (1.234, 2.0)}, {"X@B": (1.0, 2.5)}) == ["X@B, 1.23, 1.0, 0.23, 2.0, 2.5, 0.5"]


def test_report_tables(three_area):
    eq = truth_equivalent(three_area)
    ref = steady_quantities(eq, three_area.boundary_buses)
    ft = flow_table(ref, ref).splitlines()
    assert ft[0] == "element, Po, P_new, dP, Qo, Q_new, dQ"
    assert len(ft) == 1 + len(ref.flows)
    assert all(line.split(", ")[3] == "0.0" for line in ft[1:])
    st_ = scc_table(ref, ref).splitlines()
    assert st_[0] == "element, Skss, Skss_new, dSkss, Ikss, Ikss_new, dIkss"
    assert [r.split(", ")[0] for r in st_[1:]] == ["B1", "B2"]
    assert params_table({"b": 2.0, "a": 1.0 / 3}) == "parameter, value\na, 0.3333333333\nb, 2\n"
