"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible with
``pytest -s`` or in the terminal summary via ``-rA``).
"""

import json
import math
import shutil
import time
from importlib import resources

import numpy as np
import pytest

from conftest import smib_doc, three_bus_doc, two_bus_doc
from ward_ident.dynamics.controls import HydroGovParams, gov_equilibrium, turbine_power
from ward_ident.dynamics.events import Event
from ward_ident.dynamics.simulator import Simulator, init_dynamic_state, simulate
from ward_ident.grid import network_from_dict
from ward_ident.objectives import ObjectiveConfig, performance_index, simulate_event
from ward_ident.optimizer import OptimizerConfig, Parameter, ParameterSpace, optimize
from ward_ident.pipeline import apply_dynamic_values, dynamic_f2, dynamic_values_from_dict
from ward_ident.powerflow import solve_power_flow
from ward_ident.runner import load_references, load_run_config, run_dynamic, run_steady, stage1_network
from ward_ident.shortcircuit import short_circuit
from ward_ident.objectives import steady_quantities

from test_shortcircuit import single_source

DATA = resources.files("ward_ident") / "data"


def report(n, ok, detail):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


# 1 performance indices


def test_criterion_1_indices():
    t0 = time.perf_counter()
    dt = 1e-3
    worst = 0.0
    for T in (1.0, 2.0):
        t = np.arange(int(round(T / dt)) + 1) * dt
        exact = {
            ("ISE", 1): T, ("ITSE", 1): T**2 / 2, ("IAE", 1): T, ("ITAE", 1): T**2 / 2,
            ("ISE", "t"): T**3 / 3, ("ITSE", "t"): T**4 / 4, ("IAE", "t"): T**2 / 2, ("ITAE", "t"): T**3 / 3,
        }
        for (kind, sig), ref in exact.items():
            e = np.ones_like(t) if sig == 1 else t
            worst = max(worst, abs(performance_index(kind, e, dt) - ref) / ref)
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-4 and elapsed < 1.0, f"max rel err {worst:.2e}, {elapsed:.3f} s")


# 2 power flow


def test_criterion_2_power_flow():
    t0 = time.perf_counter()
    sol = solve_power_flow(network_from_dict(two_bus_doc()))
    flat = solve_power_flow(network_from_dict(two_bus_doc(p_mw=0.0)))
    elapsed = time.perf_counter() - t0
    # V2 = a + jb with 10b = -0.5 and a^2 - a + b^2 = 0
    th_closed = math.atan2(-0.05, (1.0 + math.sqrt(0.99)) / 2.0)
    dv = abs(sol.v[1] - 0.998746)
    dth = abs(sol.theta[1] - (-0.050094))
    ok = sol.converged and dv <= 1e-6 and dth <= 1e-6
    ok = ok and flat.converged and flat.iterations <= 1 and elapsed < 1.0
    report(
        2,
        ok,
        f"|V2|={sol.v[1]:.7f} (dev {dv:.1e}), theta2={sol.theta[1]:.7f} vs -0.050094 (dev {dth:.1e}; "
        f"closed form of the same quadratic gives {th_closed:.7f}), flat iters={flat.iterations}, {elapsed:.3f} s",
    )


# 3 short circuit


def test_criterion_3_short_circuit():
    net = single_source()
    s1 = short_circuit(net, "G", v_prefault=1.0).skss
    s11 = short_circuit(net, "G", c_factor=1.1, v_prefault=1.0).skss
    rel = abs(s1 - 1000.0) / 1000.0
    lin = abs(s11 / s1 - 1.1)
    report(3, rel <= 1e-9 and lin <= 1e-12, f"Skss={s1:.9f} MVA (rel {rel:.1e}), c=1.1 ratio {s11 / s1:.12f}")


# 4 dynamics


def _init(net):
    return init_dynamic_state(net, solve_power_flow(net))


def test_criterion_4_dynamics():
    msgs, ok = [], True

    net = network_from_dict(three_bus_doc())
    rec = simulate(net, _init(net), [], 10.0, monitors=["B2:vmag_pu", "B2:freq_hz", "L12@B1:p_mw"])
    drift = max(np.max(np.abs(v - v[0])) / max(1.0, abs(v[0])) for v in rec.channels.values())
    ok &= drift <= 1e-4
    msgs.append(f"(a) drift {drift:.1e}")

    smib = network_from_dict(smib_doc(load_mw=100.0, s_nom=200.0))
    p0 = float(Simulator(smib, _init(smib)).electrical_power()[0])
    sim = Simulator(smib, _init(smib))
    sim.run(60.0, [Event("load_step", "LD2", 0.5, {"delta_p_mw": 20.0})])
    dp = float(sim.electrical_power()[0]) - p0
    dw = float(sim.state().omega[0]) - 1.0
    expect = -smib.machines[0].gov.rp * dp
    err = abs(dw - expect) / abs(expect)
    ok &= err <= 0.05
    msgs.append(f"(b) dw={dw:.5f} vs {expect:.5f} ({err:.1%})")

    def final(dt):
        s = Simulator(net, _init(net), dt=dt)
        s.run(2.0, [Event("load_step", "LD2", 0.4, {"fraction": 0.2})])
        return s.x.copy()

    ref = final(0.005)
    factor = np.max(np.abs(final(0.04) - ref)) / np.max(np.abs(final(0.02) - ref))
    ok &= 8.0 <= factor <= 32.0
    msgs.append(f"(c) order factor {factor:.1f}")

    p = HydroGovParams()
    s0 = gov_equilibrium(p, 0.6)
    g1 = s0.g + 0.05
    p0 = turbine_power(p, s0.g, s0.q)[0]
    dip = turbine_power(p, g1, s0.q)[0] - p0
    rise = turbine_power(p, g1, g1)[0] - p0
    ok &= bool(dip < 0 < rise)
    msgs.append(f"(d) dP just after gate opening {dip:.4f}, settled {rise:.4f}")
    report(4, bool(ok), "; ".join(msgs))


# 5 optimizer


def test_criterion_5_optimizer():
    space = ParameterSpace([Parameter(f"x{i}", -5.0, 5.0) for i in range(5)])
    cfg = OptimizerConfig(algorithm="PSO", population=50, max_iter=200, seed=7)

    def sphere(x):
        return float(np.sum(x * x))

    t0 = time.perf_counter()
    a = optimize(space, sphere, cfg)
    elapsed = time.perf_counter() - t0
    b = optimize(space, sphere, cfg)
    mono = all(y <= x for x, y in zip(a.history, a.history[1:]))
    same = a.history == b.history and a.best_x.tobytes() == b.best_x.tobytes()
    ok = a.best_f <= 1e-3 and mono and same and elapsed < 10.0
    report(5, ok, f"best {a.best_f:.2e}, monotone={mono}, identical={same}, {elapsed:.2f} s")


# 6-8 shipped three-area round trip


def _prepare(tmp_path_factory, name):
    d = tmp_path_factory.mktemp(name)
    for f in ("three_area.json", "events.json", "truth.json", "config.json"):
        shutil.copy(DATA / f, d / f)
    return d


@pytest.fixture(scope="module")
def shipped_run(tmp_path_factory):
    d = _prepare(tmp_path_factory, "run_a")
    cfg = load_run_config(d / "config.json")
    t0 = time.perf_counter()
    s1 = run_steady(cfg)
    t1 = time.perf_counter()
    s2 = run_dynamic(cfg)
    t2 = time.perf_counter()
    return cfg, s1, s2, t1 - t0, t2 - t1


@pytest.mark.slow
def test_criterion_6_stage1_round_trip(shipped_run):
    cfg, s1, _, t_stage1, _ = shipped_run
    refs = load_references(cfg)
    got = steady_quantities(stage1_network(cfg), cfg.boundary, cfg.c_factor)
    dp = max(abs(got.flows[k][0] - p) / abs(p) for k, (p, _) in refs.steady.flows.items())
    ds = max(abs(got.skss[b] - s) / s for b, s in refs.steady.skss.items())
    f1 = s1["best_objective"]
    ok = f1 <= 1e-4 and dp <= 0.01 and ds <= 0.07 and t_stage1 < 300.0
    report(6, ok, f"F1={f1:.2e}, max |dP|/P={dp:.2e}, max |dSkss|/Skss={ds:.2e}, {t_stage1:.0f} s")


def _nadir_dev(rec, cid):
    f = rec[cid]
    return float(np.min(f) - f[0])


@pytest.mark.slow
def test_criterion_7_stage2_round_trip(shipped_run):
    cfg, _, s2, _, t_stage2 = shipped_run
    refs = load_references(cfg)
    values = dynamic_values_from_dict(json.loads((cfg.run_dir / "stage2" / "params.json").read_text()))
    net = apply_dynamic_values(stage1_network(cfg), values, cfg.areas)
    objective = ObjectiveConfig.from_dict(cfg.section("dynamic")["objective"])
    f2 = dynamic_f2(net, refs.records, cfg.events, objective)

    freq_ev = next(e for e in cfg.events if e.category == "frequency")
    ref = refs.records[freq_ev.label]
    sim = simulate_event(net, freq_ev, float(ref.t[-1]), objective.sim_dt, list(ref.channels))
    nadirs = []
    for cid in ref.channels:
        if cid.endswith(":freq_hz"):
            r, s = _nadir_dev(ref, cid), _nadir_dev(sim, cid)
            nadirs.append(abs(s - r) / abs(r))
    nadir = max(nadirs)

    fault_ev = next(e for e in cfg.events if e.kind == "line_fault_and_trip")
    line = fault_ev.target
    br = net.branch_by_id[line]
    mons = [f"{line}@{br.from_bus}:p_mw", f"{line}@{br.to_bus}:q_mvar"]
    rec = simulate(net, _init(net), [fault_ev], fault_ev.t_start + 1.0, monitors=mons)
    k = int(round((fault_ev.t_start + fault_ev.params["clear_after"]) / rec.dt))
    tripped = all(np.all(rec[c][k:] == 0.0) for c in mons)

    ok = f2 <= 1e-3 and nadir <= 0.10 and tripped and t_stage2 < 1800.0
    report(
        7,
        ok,
        f"F2={f2:.2e} (search {s2['best_objective']:.2e}), nadir dev {nadir:.1%}, post-trip flow zero={tripped}, {t_stage2:.0f} s",
    )


@pytest.mark.slow
def test_criterion_8_determinism(shipped_run, tmp_path_factory):
    cfg_a = shipped_run[0]
    d = _prepare(tmp_path_factory, "run_b")
    cfg_b = load_run_config(d / "config.json")
    run_steady(cfg_b)
    run_dynamic(cfg_b)
    ra, rb = cfg_a.run_dir / "report", cfg_b.run_dir / "report"
    files_a = sorted(p.relative_to(ra) for p in ra.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(rb) for p in rb.rglob("*") if p.is_file())
    differ = [str(p) for p in files_a if (ra / p).read_bytes() != (rb / p).read_bytes()]
    ok = files_a == files_b and not differ and len(files_a) > 0
    report(8, ok, f"{len(files_a)} report files, differing: {differ or 'none'}")
