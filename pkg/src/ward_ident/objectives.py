"""Performance indices, weighted-sum scalarization and the two stage objectives."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .dynamics.events import Event
from .dynamics.simulator import init_dynamic_state, simulate
from .errors import ConfigError, NumericalError, ValidationError
from .grid import Network
from .pmu import align
from .powerflow import boundary_flows, solve_power_flow
from .shortcircuit import short_circuit
from .signals import QUANTITIES, SignalSet, split_channel

DEFAULT_PENALTY = 1e6
WEIGHT_TOL = 1e-9
PTP_FLOOR = 1e-6
DEFAULT_CHANNEL_WEIGHTS = {"vmag_pu": 1.0, "vang_rad": 0.0, "freq_hz": 1.0, "p_mw": 1.0, "q_mvar": 1.0}


class IndexKind(str, enum.Enum):
    ISE = "ISE"
    ITSE = "ITSE"
    IAE = "IAE"
    ITAE = "ITAE"


def performance_index(kind: IndexKind | str, e, dt: float, t0: float = 0.0) -> float:
    """Trapezoidal integral of the chosen error measure.

    ISE: e^2, ITSE: t*e^2, IAE: |e|, ITAE: t*|e|, with t = t0 + k*dt.
    """
    kind = IndexKind(kind)
    if not dt > 0:
        raise ValueError("dt must be positive")
    e = np.asarray(e, dtype=float)
    if np.isnan(e).any():
        raise ValueError("error signal contains NaN")
    if not e.any():
        return 0.0
    f = e * e if kind in (IndexKind.ISE, IndexKind.ITSE) else np.abs(e)
    if kind in (IndexKind.ITSE, IndexKind.ITAE):
        f = f * (t0 + dt * np.arange(e.size))
    return float(trapezoid(f, dx=dt))


def check_weights(weights, n: int | None = None) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if n is not None and len(w) != n:
        raise ConfigError(f"expected {n} weights, got {len(w)}")
    if any(not 0.0 < x < 1.0 for x in w) and w != (1.0,):
        raise ConfigError(f"weights must lie in (0, 1): {w}")
    if abs(sum(w) - 1.0) > WEIGHT_TOL:
        raise ConfigError(f"weights must sum to 1, got {sum(w)!r}")
    return w


def weighted_sum(values, weights) -> float:
    """Sum of w_i * f_i with positive weights adding up to one."""
    values = [float(v) for v in values]
    w = check_weights(weights, len(values))
    return float(sum(wi * vi for wi, vi in zip(w, values)))


@dataclass(frozen=True)
class ObjectiveConfig:
    index: IndexKind = IndexKind.ISE
    weights: tuple[float, ...] = (0.5, 0.5)
    channel_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CHANNEL_WEIGHTS))
    penalty: float = DEFAULT_PENALTY
    sim_dt: float = 0.01

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "index", IndexKind(self.index))
        except ValueError:
            raise ConfigError(f"unknown index kind {self.index!r}") from None
        object.__setattr__(self, "weights", check_weights(self.weights, 2))
        cw = dict(DEFAULT_CHANNEL_WEIGHTS)
        cw.update({k: float(v) for k, v in self.channel_weights.items()})
        for q, v in cw.items():
            if q not in QUANTITIES:
                raise ConfigError(f"unknown channel quantity {q!r}")
            if v < 0:
                raise ConfigError(f"channel weight for {q!r} must be >= 0")
        if not any(cw.values()):
            raise ConfigError("at least one channel weight must be positive")
        object.__setattr__(self, "channel_weights", cw)
        if not self.penalty > 1.0:
            raise ConfigError("penalty must exceed any achievable objective (> 1)")
        if not self.sim_dt > 0:
            raise ConfigError("sim_dt must be positive")

    @classmethod
    def from_dict(cls, data: dict, **defaults) -> ObjectiveConfig:
        known = {"index", "weights", "channel_weights", "penalty", "sim_dt"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown objective keys {sorted(extra)}")
        kw = {**defaults, **data}
        if "weights" in kw:
            kw["weights"] = tuple(kw["weights"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "index": self.index.value,
            "weights": list(self.weights),
            "channel_weights": dict(self.channel_weights),
            "penalty": self.penalty,
            "sim_dt": self.sim_dt,
        }


# steady state


@dataclass(frozen=True)
class SteadyReference:
    """Boundary flows (MW, MVAr) and short-circuit levels (MVA, kA)."""

    flows: dict[str, tuple[float, float]]
    skss: dict[str, float]
    ikss: dict[str, float]


def steady_quantities(net: Network, boundary: list[str], c_factor: float = 1.0) -> SteadyReference:
    """Compared steady-state quantities of ``net``; raises on divergence."""
    sol = solve_power_flow(net)
    if not sol.converged:
        raise NumericalError(f"power flow did not converge (mismatch {sol.max_mismatch:.3g} pu)")
    flows = boundary_flows(net, sol, boundary)
    skss, ikss = {}, {}
    for b in boundary:
        sc = short_circuit(net, b, c_factor=c_factor, prefault=sol)
        skss[b] = sc.skss
        ikss[b] = sc.ikss
    return SteadyReference(flows, skss, ikss)


def _same_keys(ref: dict, got: dict, what: str) -> None:
    missing = sorted(set(ref) - set(got))
    extra = sorted(set(got) - set(ref))
    if missing or extra:
        raise ValidationError(f"{what} element sets differ: missing {missing}, unexpected {extra}")


def steady_components(ref: SteadyReference, cand: SteadyReference) -> tuple[float, float]:
    """(F_PF, F_SHC): mean squared flow error scaled by the largest reference
    flow, and mean squared relative Skss error."""
    _same_keys(ref.flows, cand.flows, "flow")
    _same_keys(ref.skss, cand.skss, "short-circuit")
    scale = max(max(max(abs(p), abs(q)) for p, q in ref.flows.values()), 1.0)
    terms = []
    for k, (p, q) in ref.flows.items():
        pc, qc = cand.flows[k]
        terms += [((pc - p) / scale) ** 2, ((qc - q) / scale) ** 2]
    f_pf = float(np.mean(terms))
    f_shc = float(np.mean([((cand.skss[b] - s) / s) ** 2 for b, s in ref.skss.items()]))
    return f_pf, f_shc


def steady_state_objective(
    candidate: Network,
    ref: SteadyReference,
    boundary: list[str],
    config: ObjectiveConfig,
    c_factor: float = 1.0,
) -> float:
    """w1*F_PF + w2*F_SHC of a candidate equivalent network; penalty on failure."""
    try:
        cand = steady_quantities(candidate, boundary, c_factor)
    except NumericalError:
        return config.penalty
    f = weighted_sum(steady_components(ref, cand), config.weights)
    return f if math.isfinite(f) else config.penalty


# dynamics


def channel_error(kind: IndexKind, ref: np.ndarray, sim: np.ndarray, dt: float) -> float:
    """Index of the error normalized by the reference peak-to-peak range,
    averaged over the record duration."""
    scale = max(float(np.ptp(ref)), PTP_FLOOR)
    e = (sim - ref) / scale
    duration = dt * (ref.size - 1)
    return performance_index(kind, e, dt) / duration


def record_error(ref: SignalSet, sim: SignalSet, config: ObjectiveConfig) -> float:
    """Channel-weighted mean index over the channels of ``ref``."""
    a, b = align(ref, sim)
    num = den = 0.0
    for cid, r in a.channels.items():
        w = config.channel_weights[split_channel(cid)[1]]
        if w == 0.0:
            continue
        num += w * channel_error(config.index, r, b.channels[cid], a.dt)
        den += w
    if den == 0.0:
        raise ValidationError("no reference channel carries a positive weight")
    return num / den


def split_events(events: list[Event]) -> tuple[Event, Event]:
    freq = [e for e in events if e.category == "frequency"]
    volt = [e for e in events if e.category == "voltage"]
    if len(freq) != 1 or len(volt) != 1:
        raise ConfigError("dynamic identification needs exactly one frequency event and one voltage event")
    return freq[0], volt[0]


def simulate_event(net: Network, event: Event, t_end: float, dt: float, monitors: list[str], **options) -> SignalSet:
    sol = solve_power_flow(net)
    if not sol.converged:
        raise NumericalError("power flow did not converge")
    state0 = init_dynamic_state(net, sol)
    return simulate(net, state0, [event], t_end, dt=dt, monitors=monitors, **options)


def dynamic_components(
    candidate: Network,
    refs: dict[str, SignalSet],
    events: list[Event],
    config: ObjectiveConfig,
    **options,
) -> tuple[float, float]:
    """(f_freq, f_volt) for one candidate; raises NumericalError on failure."""
    out = []
    for ev in split_events(events):
        if ev.label not in refs:
            raise ValidationError("missing reference record for event", ev.label)
        ref = refs[ev.label]
        sim = simulate_event(candidate, ev, float(ref.t[-1]), config.sim_dt, list(ref.channels), **options)
        out.append(record_error(ref, sim, config))
    return out[0], out[1]


def dynamic_objective(
    candidate: Network,
    refs: dict[str, SignalSet],
    events: list[Event],
    config: ObjectiveConfig,
    **options,
) -> float:
    """w1*f_freq + w2*f_volt; penalty when the candidate cannot be simulated."""
    for ev in split_events(events):
        if ev.label not in refs:
            raise ValidationError("missing reference record for event", ev.label)
    try:
        parts = dynamic_components(candidate, refs, events, config, **options)
    except (NumericalError, FloatingPointError):
        return config.penalty
    f = weighted_sum(parts, config.weights)
    return f if math.isfinite(f) else config.penalty
