"""Two-stage identification of Ward dynamic equivalents.

Stage 1 fits the equivalent series/common impedances, machine ratings and
loads to boundary flows and short-circuit levels. Stage 2 freezes those and
fits inertia, excitation and governor parameters of the equivalent machines
to recorded disturbance responses.

Decision-vector names:
  steady   ``<area>.<r|x|g_i|b_i|g_j|b_j|s_nom|p_load|q_load>``,
           ``common.<r|x|g_i|b_i|g_j|b_j>``
  dynamic  ``<area>.h``, ``<area>.avr.<field>``, ``<area>.gov.<field>``
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics.controls import AvrAc5aParams, HydroGovParams, with_updates
from .dynamics.events import Event
from .errors import ConfigError, IdentificationError, NumericalError, ValidationError
from .grid import (
    COMMON_BRANCH_ID,
    EQUIVALENT_XD_FLOOR,
    Impedance,
    Machine,
    Network,
    WardAreaParams,
    WardEquivalentParams,
    apply_ward_equivalent,
    eq_machine_id,
    replaced_areas,
    with_machine,
)
from .objectives import (
    ObjectiveConfig,
    SteadyReference,
    dynamic_components,
    dynamic_objective,
    simulate_event,
    split_events,
    steady_components,
    steady_quantities,
    steady_state_objective,
    weighted_sum,
)
from .optimizer import OptimizationResult, OptimizerConfig, Parameter, ParameterSpace, optimize
from .signals import SignalSet, channel_id

log = logging.getLogger(__name__)

IMPEDANCE_FIELDS = ("r", "x", "g_i", "b_i", "g_j", "b_j")
SHUNT_FIELDS = ("g_i", "b_i", "g_j", "b_j")
AREA_FIELDS = IMPEDANCE_FIELDS + ("s_nom", "p_load", "q_load")

# (lower, upper, scale); impedances on the configured impedance base.
DEFAULT_STEADY_BOUNDS = {
    "r": (1e-4, 0.05, "log"),
    "x": (1e-3, 0.5, "log"),
    "g_i": (-0.2, 0.2, "linear"),
    "b_i": (-0.5, 0.5, "linear"),
    "g_j": (-0.2, 0.2, "linear"),
    "b_j": (-0.5, 0.5, "linear"),
    "s_nom": (100.0, 10000.0, "log"),
    "p_load": (-1500.0, 1500.0, "linear"),
    "q_load": (-800.0, 800.0, "linear"),
}
COMMON_BOUNDS = {"r": (1e-3, 0.2, "log"), "x": (1e-2, 2.0, "log")}

# One order of magnitude either side of the library-typical value.
TYPICAL_DYNAMIC = {
    "h": 4.0,
    "avr.ka": 10.0,
    "avr.ta": 0.1,
    "avr.te": 0.5,
    "avr.kf": 0.03,
    "avr.tf1": 1.0,
    "gov.rp": 0.04,
    "gov.kp": 3.0,
    "gov.ki": 0.3,
    "gov.kd": 0.05,
    "gov.tg": 0.1,
    "gov.tp": 0.1,
    "gov.tw": 1.0,
}
# Lower floors keep time constants integrable at the default step.
DYNAMIC_FLOORS = {"avr.ta": 0.01, "avr.te": 0.05, "avr.tf1": 0.05, "gov.tg": 0.01, "gov.tp": 0.01, "gov.tw": 0.2}
DEFAULT_DYNAMIC_FIELDS = ("h", "avr.ka", "avr.te", "gov.rp", "gov.kp", "gov.ki")


def default_monitors(net: Network, boundary: list[str]) -> list[str]:
    """V, angle and frequency at each boundary bus plus P, Q of every compared element."""
    from .powerflow import boundary_elements

    out = []
    for b in boundary:
        out += [channel_id(b, q) for q in ("vmag_pu", "vang_rad", "freq_hz")]
        for key in boundary_elements(net, b):
            out += [channel_id(key, "p_mw"), channel_id(key, "q_mvar")]
    return out


@dataclass(frozen=True)
class StageConfig:
    stage: str
    space: ParameterSpace
    objective: ObjectiveConfig
    optimizer: OptimizerConfig
    fixed: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.stage not in ("steady", "dynamic"):
            raise ConfigError(f"unknown stage {self.stage!r}")


def _space_from(items: list[dict] | None, defaults: list[Parameter]) -> ParameterSpace:
    if items is None:
        return ParameterSpace(defaults)
    by_name = {p.name: p for p in defaults}
    params = []
    for d in items:
        if "name" not in d:
            raise ConfigError("parameter entry missing 'name'")
        base = by_name.get(d["name"])
        if base is None and not {"lower", "upper"} <= set(d):
            raise ConfigError(f"parameter {d['name']!r} needs explicit bounds")
        params.append(
            Parameter(
                d["name"],
                float(d.get("lower", base.lower if base else 0.0)),
                float(d.get("upper", base.upper if base else 0.0)),
                d.get("scale", base.scale if base else "linear"),
            )
        )
    return ParameterSpace(params)


def default_steady_space(areas: list[str], freeze_shunts: bool = True) -> list[Parameter]:
    fields = [f for f in AREA_FIELDS if not (freeze_shunts and f in SHUNT_FIELDS)]
    out = [Parameter(f"{a}.{f}", *DEFAULT_STEADY_BOUNDS[f]) for a in areas for f in fields]
    if len(areas) == 2:
        cfields = [f for f in IMPEDANCE_FIELDS if not (freeze_shunts and f in SHUNT_FIELDS)]
        out += [Parameter(f"common.{f}", *(COMMON_BOUNDS.get(f) or DEFAULT_STEADY_BOUNDS[f])) for f in cfields]
    return out


def default_dynamic_space(areas: list[str], fields=DEFAULT_DYNAMIC_FIELDS) -> list[Parameter]:
    out = []
    for a in areas:
        for f in fields:
            if f not in TYPICAL_DYNAMIC:
                raise ConfigError(f"no default bounds for dynamic parameter {f!r}")
            typ = TYPICAL_DYNAMIC[f]
            lo = max(typ / 10.0, DYNAMIC_FLOORS.get(f, 0.0))
            out.append(Parameter(f"{a}.{f}", lo, typ * 10.0, "log"))
    return out


def steady_stage_config(section: dict, areas: list[str]) -> StageConfig:
    freeze = bool(section.get("freeze_shunts", True))
    space = _space_from(section.get("space"), default_steady_space(areas, freeze))
    return StageConfig(
        "steady",
        space,
        ObjectiveConfig.from_dict(section.get("objective", {})),
        OptimizerConfig.from_dict(section.get("optimizer", {})),
        {k: float(v) for k, v in section.get("fixed", {}).items()},
    )


def dynamic_stage_config(section: dict, areas: list[str]) -> StageConfig:
    fields = tuple(section.get("fields", DEFAULT_DYNAMIC_FIELDS))
    space = _space_from(section.get("space"), default_dynamic_space(areas, fields))
    return StageConfig(
        "dynamic",
        space,
        ObjectiveConfig.from_dict(section.get("objective", {}), weights=(0.8, 0.2)),
        OptimizerConfig.from_dict(section.get("optimizer", {})),
        {k: float(v) for k, v in section.get("fixed", {}).items()},
    )


# vector <-> parameters


def _impedance(prefix: str, values: dict[str, float], base: float) -> Impedance:
    if f"{prefix}.x" not in values and f"{prefix}.r" not in values:
        raise ConfigError(f"no series impedance given for {prefix!r}")
    r = values.get(f"{prefix}.r", 0.0)
    x = values.get(f"{prefix}.x", 0.0)
    return Impedance(
        s_base=base,
        r=r,
        x=x,
        r0=values.get(f"{prefix}.r0", 3.0 * r),
        x0=values.get(f"{prefix}.x0", 3.0 * x),
        **{f: values.get(f"{prefix}.{f}", 0.0) for f in SHUNT_FIELDS},
    )


def ward_params_from_values(values: dict[str, float], areas: list[str], base: float) -> WardEquivalentParams:
    out = {}
    for a in areas:
        for req in ("s_nom", "p_load", "q_load"):
            if f"{a}.{req}" not in values:
                raise ConfigError(f"parameter {a}.{req} is neither identified nor fixed")
        out[a] = WardAreaParams(_impedance(a, values, base), values[f"{a}.s_nom"], values[f"{a}.p_load"], values[f"{a}.q_load"])
    common = _impedance("common", values, base) if len(areas) == 2 else None
    return WardEquivalentParams(out, common)


def ward_params_to_values(params: WardEquivalentParams, base: float) -> dict[str, float]:
    values = {}
    for a, p in params.areas.items():
        z = p.series.rebased(base)
        values.update({f"{a}.{f}": getattr(z, f) for f in IMPEDANCE_FIELDS})
        values.update({f"{a}.s_nom": p.s_nom, f"{a}.p_load": p.p_load, f"{a}.q_load": p.q_load})
    if params.common is not None:
        z = params.common.rebased(base)
        values.update({f"common.{f}": getattr(z, f) for f in IMPEDANCE_FIELDS})
    return values


def apply_dynamic_values(net: Network, values: dict[str, float], areas: list[str]) -> Network:
    """Copy of ``net`` with H/AVR/GOV values set on the equivalent machines."""
    for a in areas:
        m = net.machine_by_id[eq_machine_id(a)]
        prefix = f"{a}."
        own = {k[len(prefix) :]: v for k, v in values.items() if k.startswith(prefix)}
        avr = {k[4:]: v for k, v in own.items() if k.startswith("avr.")}
        gov = {k[4:]: v for k, v in own.items() if k.startswith("gov.")}
        unknown = set(own) - {"h"} - {f"avr.{k}" for k in avr} - {f"gov.{k}" for k in gov}
        if unknown:
            raise ConfigError(f"unknown dynamic parameters {sorted(prefix + u for u in unknown)}")
        if avr and m.avr is None or gov and m.gov is None:
            raise ConfigError("equivalent machine has no controller to parameterize", m.id)
        new = replace(
            m,
            h=float(own.get("h", m.h)),
            avr=with_updates(m.avr, **avr) if avr else m.avr,
            gov=with_updates(m.gov, **gov) if gov else m.gov,
        )
        net = with_machine(net, new)
    return net


def dynamic_values_from_dict(data: dict) -> dict[str, float]:
    """Flatten ``{"A": {"h": .., "avr": {..}, "gov": {..}}}`` into vector names."""
    out = {}
    for a, d in data.items():
        for k, v in d.items():
            if isinstance(v, dict):
                out.update({f"{a}.{k}.{f}": float(x) for f, x in v.items()})
            else:
                out[f"{a}.{k}"] = float(v)
    return out


def dynamic_values_to_dict(values: dict[str, float]) -> dict:
    out: dict = {}
    for name, v in values.items():
        parts = name.split(".")
        node = out.setdefault(parts[0], {})
        for p in parts[1:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = v
    return out


def machine_template(data: dict | None) -> Machine:
    data = data or {}
    avr = data.get("avr", {})
    gov = data.get("gov", {})
    return Machine(
        id="",
        bus="",
        s_nom=1.0,
        h=float(data.get("h", 4.0)),
        xd_p=EQUIVALENT_XD_FLOOR,
        td0_p=float(data.get("td0_p", 5.0)),
        d_damp=float(data.get("d_damp", 0.0)),
        avr=None if avr is None else AvrAc5aParams.from_dict(avr),
        gov=None if gov is None else HydroGovParams.from_dict(gov),
    )


# objectives as picklable callables


class SteadyObjective:
    def __init__(self, full: Network, boundary, ref: SteadyReference, stage: StageConfig, base: float, template: Machine, c_factor: float) -> None:
        self.full, self.boundary, self.ref = full, list(boundary), ref
        self.stage, self.base, self.template, self.c_factor = stage, base, template, c_factor
        self.areas = list(replaced_areas(full, self.boundary))

    def network(self, x) -> Network:
        values = {**self.stage.fixed, **self.stage.space.as_dict(x)}
        params = ward_params_from_values(values, self.areas, self.base)
        return apply_ward_equivalent(self.full, self.boundary, params, self.template)

    def __call__(self, x) -> float:
        try:
            net = self.network(x)
        except (ValidationError, ValueError):
            return self.stage.objective.penalty
        return steady_state_objective(net, self.ref, self.boundary, self.stage.objective, self.c_factor)


class DynamicObjective:
    def __init__(self, net: Network, areas, refs: dict[str, SignalSet], events: list[Event], stage: StageConfig, sim_options: dict) -> None:
        self.net, self.areas, self.refs, self.events = net, list(areas), refs, list(events)
        self.stage, self.sim_options = stage, dict(sim_options)

    def network(self, x) -> Network:
        values = {**self.stage.fixed, **self.stage.space.as_dict(x)}
        return apply_dynamic_values(self.net, values, self.areas)

    def __call__(self, x) -> float:
        try:
            net = self.network(x)
        except (ValidationError, ValueError):
            return self.stage.objective.penalty
        return dynamic_objective(net, self.refs, self.events, self.stage.objective, **self.sim_options)


# stages


@dataclass
class References:
    steady: SteadyReference
    records: dict[str, SignalSet]
    boundary: list[str]


def generate_references(
    source: Network,
    boundary: list[str],
    events: list[Event],
    monitors: list[str],
    t_end: dict[str, float],
    dt: float = 0.01,
    c_factor: float = 1.0,
    **sim_options,
) -> References:
    """Base-case boundary flows, Skss at each boundary bus and one record per event."""
    try:
        steady = steady_quantities(source, boundary, c_factor)
    except NumericalError as exc:
        raise IdentificationError(f"reference base case failed: {exc}") from exc
    records = {}
    for ev in events:
        records[ev.label] = simulate_event(source, ev, float(t_end[ev.category]), dt, monitors, **sim_options)
    return References(steady, records, list(boundary))


@dataclass
class SteadyResult:
    params: WardEquivalentParams
    network: Network
    result: OptimizationResult
    components: tuple[float, float]


def identify_steady_state(
    full: Network,
    refs: References,
    stage: StageConfig,
    impedance_base: float = 100.0,
    template: Machine | None = None,
    c_factor: float = 1.0,
    evaluate=None,
) -> SteadyResult:
    objective = SteadyObjective(full, refs.boundary, refs.steady, stage, impedance_base, template or machine_template(None), c_factor)
    res = optimize(stage.space, objective, stage.optimizer, evaluate=evaluate)
    if res.best_f >= stage.objective.penalty:
        raise IdentificationError("every candidate failed; the steady search box looks infeasible")
    net = objective.network(res.best_x)
    values = {**stage.fixed, **stage.space.as_dict(res.best_x)}
    params = ward_params_from_values(values, objective.areas, impedance_base)
    comps = steady_components(refs.steady, steady_quantities(net, refs.boundary, c_factor))
    return SteadyResult(params, net, res, comps)


@dataclass
class DynamicResult:
    values: dict[str, float]
    network: Network
    result: OptimizationResult
    components: tuple[float, float]


def identify_dynamic(
    refs: dict[str, SignalSet],
    stage1_net: Network | None,
    events: list[Event],
    stage: StageConfig,
    evaluate=None,
    **sim_options,
) -> DynamicResult:
    if stage1_net is None:
        raise ConfigError("dynamic identification needs the stage-1 equivalent network")
    areas = sorted({m.id[len("G_EQ_") :] for m in stage1_net.machines if m.id.startswith("G_EQ_")})
    if not areas:
        raise ConfigError("network carries no equivalent machines; run stage 1 first")
    split_events(events)
    for ev in events:
        if ev.label not in refs:
            raise ValidationError("missing reference record for event", ev.label)
    objective = DynamicObjective(stage1_net, areas, refs, events, stage, sim_options)
    res = optimize(stage.space, objective, stage.optimizer, evaluate=evaluate)
    if res.best_f >= stage.objective.penalty:
        raise IdentificationError("every candidate failed to simulate; the dynamic search box looks infeasible")
    net = objective.network(res.best_x)
    values = {**stage.fixed, **stage.space.as_dict(res.best_x)}
    comps = dynamic_components(net, refs, events, stage.objective, **sim_options)
    return DynamicResult(values, net, res, comps)


def dynamic_f2(net: Network, refs, events, config: ObjectiveConfig, **sim_options) -> float:
    return weighted_sum(dynamic_components(net, refs, events, config, **sim_options), config.weights)


def common_branch_present(net: Network) -> bool:
    return COMMON_BRANCH_ID in net.branch_by_id


def dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def values_array(space: ParameterSpace, values: dict[str, float]) -> np.ndarray:
    return np.array([values[n] for n in space.names])
