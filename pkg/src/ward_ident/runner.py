"""File-level orchestration of an identification run.

A run is described by one JSON config; all artefacts land in its run
directory::

    references/steady.json, references/records/<event>.csv
    stage1/params.json, stage1/history.csv, stage1/summary.json
    stage2/params.json, stage2/history.csv, stage2/summary.json
    report/flows.csv, report/scc.csv, report/params_*.csv, report/overlays/...
"""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics.events import Event, read_events
from .errors import ConfigError
from .grid import Network, WardEquivalentParams, apply_ward_equivalent, read_network, replaced_areas
from .objectives import SteadyReference, simulate_event, steady_quantities
from .pipeline import (
    References,
    apply_dynamic_values,
    default_monitors,
    dump_json,
    dynamic_stage_config,
    dynamic_values_from_dict,
    dynamic_values_to_dict,
    generate_references,
    identify_dynamic,
    identify_steady_state,
    machine_template,
    steady_stage_config,
    ward_params_to_values,
)
from .pmu import read_records, write_records
from .report import params_table, write_overlays, write_steady_report

log = logging.getLogger(__name__)

DEFAULT_T_END = {"frequency": 20.0, "voltage": 10.0}
KNOWN_KEYS = {
    "grid", "events", "run_dir", "seed", "boundary", "reference", "record_dt", "t_end",
    "c_factor", "impedance_base_mva", "monitors", "template", "steady", "dynamic", "simulation",
}


@dataclass
class RunConfig:
    grid: Network
    events: list[Event]
    run_dir: Path
    boundary: list[str]
    areas: list[str]
    raw: dict
    truth: dict | None = None
    record_dt: float = 0.01
    t_end: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_T_END))
    c_factor: float = 1.0
    impedance_base: float = 100.0
    monitors: list[str] | None = None
    sim_options: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        sec = dict(self.raw.get(name, {}))
        opt = dict(sec.get("optimizer", {}))
        opt.setdefault("seed", int(self.raw.get("seed", 0)))
        sec["optimizer"] = opt
        return sec

    @property
    def template(self):
        return machine_template(self.raw.get("template"))

    def truth_network(self) -> Network | None:
        """The known equivalent used to generate references, if configured."""
        if self.truth is None:
            return None
        params = WardEquivalentParams.from_dict(self.truth["steady"])
        net = apply_ward_equivalent(self.grid, self.boundary, params, self.template)
        if "dynamic" in self.truth:
            net = apply_dynamic_values(net, dynamic_values_from_dict(self.truth["dynamic"]), self.areas)
        return net


def _resolve(base: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else base / path


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    extra = set(raw) - KNOWN_KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    for key in ("grid", "events"):
        if key not in raw:
            raise ConfigError(f"config needs {key!r}")
    base = path.parent
    grid = read_network(_resolve(base, raw["grid"]))
    events = read_events(_resolve(base, raw["events"]))
    boundary = list(raw.get("boundary") or grid.boundary_buses)
    if not boundary:
        raise ConfigError("no boundary buses given or tagged in the grid")
    areas = sorted(replaced_areas(grid, boundary))
    truth = None
    resolved = dict(raw, grid=str(_resolve(base, raw["grid"]).resolve()), events=str(_resolve(base, raw["events"]).resolve()))
    ref = raw.get("reference", {})
    if "equivalent" in ref:
        truth_path = _resolve(base, ref["equivalent"])
        try:
            truth = json.loads(truth_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load reference equivalent {truth_path}: {exc}") from None
        resolved["reference"] = dict(ref, equivalent=str(truth_path.resolve()))
    t_end = dict(DEFAULT_T_END)
    t_end.update({k: float(v) for k, v in raw.get("t_end", {}).items()})
    return RunConfig(
        grid=grid,
        events=events,
        run_dir=_resolve(base, raw.get("run_dir", "run")),
        boundary=boundary,
        areas=areas,
        raw=resolved,
        truth=truth,
        record_dt=float(raw.get("record_dt", 0.01)),
        t_end=t_end,
        c_factor=float(raw.get("c_factor", 1.0)),
        impedance_base=float(raw.get("impedance_base_mva", 100.0)),
        monitors=raw.get("monitors"),
        sim_options=dict(raw.get("simulation", {})),
    )


# references


def _steady_to_json(s: SteadyReference) -> dict:
    return {"flows": {k: list(v) for k, v in s.flows.items()}, "skss": s.skss, "ikss": s.ikss}


def _steady_from_json(d: dict) -> SteadyReference:
    return SteadyReference({k: (float(v[0]), float(v[1])) for k, v in d["flows"].items()}, d["skss"], d["ikss"])


def build_references(cfg: RunConfig) -> References:
    source = cfg.truth_network() or cfg.grid
    monitors = cfg.monitors or default_monitors(cfg.grid, cfg.boundary)
    refs = generate_references(
        source, cfg.boundary, cfg.events, monitors, cfg.t_end, cfg.record_dt, cfg.c_factor, **cfg.sim_options
    )
    out = cfg.run_dir / "references"
    dump_json(_steady_to_json(refs.steady), out / "steady.json")
    for label, rec in refs.records.items():
        write_records(rec, out / "records" / f"{label}.csv")
    return refs


def load_references(cfg: RunConfig) -> References:
    out = cfg.run_dir / "references"
    if not (out / "steady.json").exists():
        raise ConfigError(f"no references in {out}; run ident-ss first")
    steady = _steady_from_json(json.loads((out / "steady.json").read_text()))
    records = {}
    for ev in cfg.events:
        p = out / "records" / f"{ev.label}.csv"
        if not p.exists():
            raise ConfigError(f"missing reference record {p}")
        records[ev.label] = read_records(p)
    return References(steady, records, list(cfg.boundary))


# stages


def _summary(res, components, names) -> dict:
    return {
        "best_objective": res.best_f,
        "components": dict(zip(names, components)),
        "evaluations": res.evaluations,
        "iterations": len(res.history) - 1,
        "stop_reason": res.stop_reason,
    }


def save_config(cfg: RunConfig) -> None:
    """Copy of the config with absolute input paths, for ``report --run``."""
    dump_json({k: v for k, v in cfg.raw.items() if k != "run_dir"}, cfg.run_dir / "config.json")


def run_steady(cfg: RunConfig) -> dict:
    save_config(cfg)
    refs = build_references(cfg)
    stage = steady_stage_config(cfg.section("steady"), cfg.areas)
    log.info("stage 1: %d parameters, %s", len(stage.space), stage.optimizer.algorithm)
    res = identify_steady_state(cfg.grid, refs, stage, cfg.impedance_base, cfg.template, cfg.c_factor)
    out = cfg.run_dir / "stage1"
    dump_json(res.params.to_dict(), out / "params.json")
    res.result.write_history(out / "history.csv")
    summary = _summary(res.result, res.components, ("F_PF", "F_SHC"))
    dump_json(summary, out / "summary.json")
    write_report(cfg)
    return summary


def stage1_network(cfg: RunConfig) -> Network:
    p = cfg.run_dir / "stage1" / "params.json"
    if not p.exists():
        raise ConfigError(f"stage-1 parameters absent ({p}); run ident-ss first")
    params = WardEquivalentParams.from_dict(json.loads(p.read_text()))
    return apply_ward_equivalent(cfg.grid, cfg.boundary, params, cfg.template)


def run_dynamic(cfg: RunConfig) -> dict:
    net = stage1_network(cfg)
    refs = load_references(cfg)
    stage = dynamic_stage_config(cfg.section("dynamic"), cfg.areas)
    log.info("stage 2: %d parameters, %s", len(stage.space), stage.optimizer.algorithm)
    res = identify_dynamic(refs.records, net, cfg.events, stage, **cfg.sim_options)
    out = cfg.run_dir / "stage2"
    dump_json(dynamic_values_to_dict(res.values), out / "params.json")
    res.result.write_history(out / "history.csv")
    summary = _summary(res.result, res.components, ("f_freq", "f_volt"))
    dump_json(summary, out / "summary.json")
    write_report(cfg)
    return summary


def write_report(cfg: RunConfig) -> Path:
    """Rebuild the report directory from the stored run artefacts."""
    refs = load_references(cfg)
    out = cfg.run_dir / "report"
    if out.exists():
        shutil.rmtree(out)
    net = stage1_network(cfg)
    params = WardEquivalentParams.from_dict(json.loads((cfg.run_dir / "stage1" / "params.json").read_text()))
    write_steady_report(out, refs.steady, steady_quantities(net, cfg.boundary, cfg.c_factor))
    (out / "params_steady.csv").write_text(params_table(ward_params_to_values(params, cfg.impedance_base)))

    p2 = cfg.run_dir / "stage2" / "params.json"
    if p2.exists():
        values = dynamic_values_from_dict(json.loads(p2.read_text()))
        (out / "params_dynamic.csv").write_text(params_table(values))
        net = apply_dynamic_values(net, values, cfg.areas)
        for ev in cfg.events:
            ref = refs.records[ev.label]
            dt = float(cfg.section("dynamic").get("objective", {}).get("sim_dt", 0.01))
            sim = simulate_event(net, ev, float(ref.t[-1]), dt, list(ref.channels), **cfg.sim_options)
            write_overlays(out / "overlays", ev.label, ref, sim)
    return out
