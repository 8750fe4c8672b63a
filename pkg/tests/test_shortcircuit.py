import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ward_ident.errors import ShortCircuitError
from ward_ident.grid import network_from_dict
from ward_ident.powerflow import solve_power_flow
from ward_ident.report import scc_rows
from ward_ident.objectives import SteadyReference
from ward_ident.shortcircuit import short_circuit


def single_source(xd_p=0.1, s_nom=100.0, extra_x=None):
    """Machine behind xd_p at an unloaded bus; optional parallel source path."""
    d = {
        "s_base_mva": 100.0,
        "f_nominal_hz": 50.0,
        "buses": [{"id": "G", "base_kv": 110.0, "kind": "slack", "v_set": 1.0}],
        "branches": [],
        "machines": [{"id": "M", "bus": "G", "s_nom_mva": s_nom, "h_s": 3.0, "xd_p": xd_p, "xd": 1.0}],
        "loads": [],
    }
    if extra_x is not None:
        d["buses"].append({"id": "H", "base_kv": 110.0, "kind": "pq"})
        d["branches"].append({"id": "HG", "from": "H", "to": "G", "impedance": {"s_base_mva": 100.0, "r": 0.0, "x": extra_x}})
        d["machines"].append({"id": "M2", "bus": "H", "s_nom_mva": 100.0, "h_s": 3.0, "xd_p": 0.2, "xd": 1.0})
    return network_from_dict(d)


def test_thevenin_hand_calculation():
    # fault at the machine terminal: Z_th = j0.1 pu -> Skss = V^2/X * S_base
    net = single_source()
    r = short_circuit(net, "G", v_prefault=1.0)
    assert r.skss == pytest.approx(1000.0, rel=1e-9)
    assert r.ikss_pu == pytest.approx(10.0, rel=1e-9)
    assert r.skss == pytest.approx(math.sqrt(3) * 110.0 * r.ikss, rel=1e-9)


def test_c_factor_scales_linearly():
    net = single_source()
    base = short_circuit(net, "G", v_prefault=1.0).skss
    assert short_circuit(net, "G", c_factor=1.1, v_prefault=1.0).skss == pytest.approx(1.1 * base, rel=1e-12)


def test_machine_reactance_rebased_on_rating():
    # 0.2 pu on 200 MVA is 0.1 pu on the 100 MVA system base
    assert short_circuit(single_source(0.2, 200.0), "G", v_prefault=1.0).skss == pytest.approx(1000.0, rel=1e-9)


def test_prefault_from_power_flow(three_area):
    sol = solve_power_flow(three_area)
    r = short_circuit(three_area, "B1", prefault=sol)
    assert r.v_prefault == pytest.approx(sol.v[three_area.bus_index["B1"]])
    assert r.skss > 0
    assert r.skss == pytest.approx(math.sqrt(3) * 230.0 * r.ikss, rel=1e-9)


def test_isolated_bus_raises():
    d = {
        "s_base_mva": 100.0,
        "f_nominal_hz": 50.0,
        "buses": [
            {"id": "A", "base_kv": 110.0, "kind": "slack", "v_set": 1.0},
            {"id": "B", "base_kv": 110.0, "kind": "slack", "v_set": 1.0},
        ],
        "branches": [],
        "machines": [{"id": "M", "bus": "A", "s_nom_mva": 100.0, "h_s": 3.0, "xd_p": 0.1}],
        "loads": [],
    }
    with pytest.raises(ShortCircuitError, match="isolated"):
        short_circuit(network_from_dict(d), "B", v_prefault=1.0)


def test_unknown_bus():
    with pytest.raises(ShortCircuitError):
        short_circuit(single_source(), "nope", v_prefault=1.0)


@given(extra=st.floats(0.01, 5.0))
@settings(max_examples=25, deadline=None)
def test_parallel_source_never_lowers_skss(extra):
    alone = short_circuit(single_source(), "G", v_prefault=1.0).skss
    both = short_circuit(single_source(extra_x=extra), "G", v_prefault=1.0).skss
    assert both >= alone * (1 - 1e-12)


def test_table_row_format_fixture():
    ref = SteadyReference({}, {"B1": 8028.1}, {"B1": 21.0})
    new = SteadyReference({}, {"B1": 7526.0}, {"B1": 19.7})
    (row,) = scc_rows(ref, new)
    assert row == "B1, 8028.1, 7526.0, 502.1, 21.0, 19.7, 1.3"
