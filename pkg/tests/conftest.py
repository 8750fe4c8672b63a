from __future__ import annotations

from importlib import resources

import pytest

from ward_ident.grid import network_from_dict, read_network

DATA = resources.files("ward_ident") / "data"


def two_bus_doc(p_mw=50.0, q_mvar=0.0, x=0.1, r=0.0):
    return {
        "s_base_mva": 100.0,
        "f_nominal_hz": 50.0,
        "buses": [
            {"id": "B1", "base_kv": 110.0, "kind": "slack", "v_set": 1.0},
            {"id": "B2", "base_kv": 110.0, "kind": "pq"},
        ],
        "branches": [{"id": "L12", "from": "B1", "to": "B2", "impedance": {"s_base_mva": 100.0, "r": r, "x": x}}],
        "machines": [],
        "loads": [{"id": "LD2", "bus": "B2", "p_mw": p_mw, "q_mvar": q_mvar}],
    }


def smib_doc(load_mw=100.0, gen_avr=True, gen_gov=True, gov=None, avr=None, s_nom=200.0, h=4.0):
    """One machine feeding a load over a short line."""
    m = {"id": "G1", "bus": "B1", "s_nom_mva": s_nom, "h_s": h, "xd_p": 0.3, "xd": 1.8, "td0_p": 6.0}
    if gen_avr:
        m["avr"] = avr or {}
    if gen_gov:
        m["gov"] = gov or {}
    return {
        "s_base_mva": 100.0,
        "f_nominal_hz": 50.0,
        "buses": [
            {"id": "B1", "base_kv": 20.0, "kind": "slack", "v_set": 1.02},
            {"id": "B2", "base_kv": 20.0, "kind": "pq"},
        ],
        "branches": [{"id": "L12", "from": "B1", "to": "B2", "impedance": {"s_base_mva": 100.0, "r": 0.002, "x": 0.02}}],
        "machines": [m],
        "loads": [{"id": "LD2", "bus": "B2", "p_mw": load_mw, "q_mvar": 20.0}],
    }


def three_bus_doc():
    """Two machines, a meshed triangle, and a load in the middle."""
    return {
        "s_base_mva": 100.0,
        "f_nominal_hz": 50.0,
        "buses": [
            {"id": "B1", "base_kv": 110.0, "kind": "slack", "v_set": 1.03},
            {"id": "B2", "base_kv": 110.0, "kind": "pq"},
            {"id": "B3", "base_kv": 110.0, "kind": "pv", "v_set": 1.02},
        ],
        "branches": [
            {"id": "L12", "from": "B1", "to": "B2", "impedance": {"s_base_mva": 100.0, "r": 0.01, "x": 0.08, "b_i": 0.02, "b_j": 0.02}},
            {"id": "L23", "from": "B2", "to": "B3", "impedance": {"s_base_mva": 100.0, "r": 0.01, "x": 0.1}},
            {"id": "L13", "from": "B1", "to": "B3", "impedance": {"s_base_mva": 100.0, "r": 0.02, "x": 0.15}},
        ],
        "machines": [
            {"id": "G1", "bus": "B1", "s_nom_mva": 500.0, "h_s": 5.0, "xd_p": 0.3, "xd": 1.8, "td0_p": 6.0, "avr": {}, "gov": {}},
            {"id": "G3", "bus": "B3", "s_nom_mva": 300.0, "h_s": 3.0, "xd_p": 0.25, "xd": 1.6, "td0_p": 5.0, "p_mw": 150.0, "avr": {}, "gov": {}},
        ],
        "loads": [{"id": "LD2", "bus": "B2", "p_mw": 300.0, "q_mvar": 50.0}],
    }


@pytest.fixture
def two_bus():
    return network_from_dict(two_bus_doc())


@pytest.fixture
def three_bus():
    return network_from_dict(three_bus_doc())


@pytest.fixture(scope="session")
def three_area():
    return read_network(DATA / "three_area.json")
