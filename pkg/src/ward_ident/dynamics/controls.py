"""Excitation (IEEE AC5A) and hydro governor/turbine models.

Both models are written so that every argument may be a scalar or a numpy
array of equal shape; the simulator stacks the parameters of all machines
into arrays and evaluates every controller in one call.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np

# Gate opening floor used when forming the head ratio (q/g)^2.
_GATE_FLOOR = 1e-3


@dataclass(frozen=True)
class AvrAc5aParams:
    """IEEE AC5A excitation system parameters.

    Gains are per-unit, time constants in seconds. ``efd1``/``se_efd1`` and
    ``efd2``/``se_efd2`` are the two anchors of the exciter saturation curve.
    A zero ``tf2`` removes the feedback lead-lag (then ``tf3`` must be zero).
    """

    ka: float = 10.0
    ta: float = 0.1
    te: float = 0.5
    ke: float = 1.0
    efd1: float = 4.0
    se_efd1: float = 0.3
    efd2: float = 3.0
    se_efd2: float = 0.1
    kf: float = 0.03
    tf1: float = 1.0
    tf2: float = 0.1
    tf3: float = 0.3
    vr_max: float = 10.0
    vr_min: float = -10.0

    def validate(self) -> None:
        if not (self.ta > 0 and self.te > 0 and self.tf1 > 0):
            raise ValueError("AC5A time constants ta, te, tf1 must be positive")
        if self.ka <= 0:
            raise ValueError("AC5A gain ka must be positive")
        if self.tf2 < 0 or self.tf3 < 0:
            raise ValueError("AC5A tf2, tf3 must be non-negative")
        if self.tf2 == 0 and self.tf3 != 0:
            raise ValueError("AC5A feedback with tf2 = 0 requires tf3 = 0")
        if self.efd1 == self.efd2:
            raise ValueError("AC5A saturation anchors need efd1 != efd2")
        if self.se_efd1 < 0 or self.se_efd2 < 0:
            raise ValueError("AC5A saturation values must be non-negative")
        if not self.vr_min < self.vr_max:
            raise ValueError("AC5A limits need vr_min < vr_max")
        saturation_coefficients(self.efd1, self.se_efd1, self.efd2, self.se_efd2)

    @classmethod
    def from_dict(cls, data: dict) -> AvrAc5aParams:
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HydroGovParams:
    """PID speed governor with permanent droop driving a hydro turbine.

    Block chain: speed transducer lag ``tt`` -> deadband ``db1`` -> PID
    (``kp``, ``ki``, ``kd`` with derivative filter ``td``) with droop ``rp``
    fed back from mechanical power -> controller output lag ``tf`` -> pilot
    servo ``tp`` -> gate servo ``tg`` (rate and position limited) -> nonlinear
    turbine with water column ``tw``.  Zero lags (``tt``, ``tf``, ``tp``) are
    treated as pass-through.
    """

    rp: float = 0.04
    kp: float = 3.0
    ki: float = 0.3
    kd: float = 0.05
    tf: float = 0.1
    tg: float = 0.1
    tp: float = 0.1
    td: float = 0.05
    tt: float = 0.1
    db1: float = 0.0
    tw: float = 1.0
    at: float = 1.1
    q_nl: float = 0.08
    g_min: float = 0.0
    g_max: float = 1.0
    rate_min: float = -0.2
    rate_max: float = 0.2

    def validate(self) -> None:
        if self.rp < 0:
            raise ValueError("governor droop rp must be non-negative")
        if self.tw <= 0 or self.tg <= 0:
            raise ValueError("governor tw and tg must be positive")
        if min(self.tf, self.tp, self.td, self.tt) < 0:
            raise ValueError("governor time constants must be non-negative")
        if self.kd != 0 and self.td <= 0:
            raise ValueError("governor derivative gain needs a positive filter td")
        if not self.g_min < self.g_max:
            raise ValueError("governor needs g_min < g_max")
        if not self.rate_min < 0 < self.rate_max:
            raise ValueError("governor rate limits must bracket zero")
        if self.db1 < 0:
            raise ValueError("governor deadband must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> HydroGovParams:
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return asdict(self)


class AvrState(NamedTuple):
    """Regulator output, field voltage, rate-feedback washout and lead-lag."""

    vr: np.ndarray | float
    efd: np.ndarray | float
    z1: np.ndarray | float
    z2: np.ndarray | float


class GovState(NamedTuple):
    """Governor and turbine states."""

    wm: np.ndarray | float  # measured speed
    xi: np.ndarray | float  # PID integrator
    zd: np.ndarray | float  # derivative filter
    zf: np.ndarray | float  # controller output lag
    yp: np.ndarray | float  # pilot servo
    g: np.ndarray | float  # gate position
    q: np.ndarray | float  # water flow


def stack_params(params: list) -> object:
    """Turn a list of same-type parameter dataclasses into one of arrays."""
    cls = type(params[0])
    return cls(**{f.name: np.array([getattr(p, f.name) for p in params], dtype=float) for f in fields(cls)})


def saturation_coefficients(efd1, se1, efd2, se2) -> tuple[float, float, float]:
    """Vertex-form quadratic ``se = b*(efd - a)**2`` (zero left of ``a``).

    Returns ``(a, b, const)``; ``const`` is used only for the degenerate flat
    case where both anchors carry the same saturation value.
    """
    efd1, se1, efd2, se2 = float(efd1), float(se1), float(efd2), float(se2)
    if efd1 == efd2:
        raise ValueError("saturation anchors need distinct efd values")
    if efd1 > efd2:
        e_hi, s_hi, e_lo, s_lo = efd1, se1, efd2, se2
    else:
        e_hi, s_hi, e_lo, s_lo = efd2, se2, efd1, se1
    if s_hi == 0.0 and s_lo == 0.0:
        return 0.0, 0.0, 0.0
    if s_hi == s_lo:
        return 0.0, 0.0, s_hi
    if s_hi < s_lo:
        raise ValueError("saturation must not decrease with field voltage")
    r_hi, r_lo = np.sqrt(s_hi), np.sqrt(s_lo)
    a = (r_hi * e_lo - r_lo * e_hi) / (r_hi - r_lo)
    b = s_hi / (e_hi - a) ** 2
    return a, b, 0.0


def exciter_saturation(efd, a, b, const=0.0):
    """Saturation function for fitted coefficients; works on arrays."""
    efd = np.asarray(efd, dtype=float)
    over = np.maximum(efd - a, 0.0)
    return b * over * over + const


def se_from_params(params: AvrAc5aParams, efd):
    a, b, c = saturation_coefficients(params.efd1, params.se_efd1, params.efd2, params.se_efd2)
    return exciter_saturation(efd, a, b, c)


def _lag(u, state, tau):
    """Derivative and output of a first-order lag; tau == 0 is pass-through."""
    active = tau > 0
    safe = np.where(active, tau, 1.0)
    return np.where(active, (u - state) / safe, 0.0), np.where(active, state, u)


def avr_ac5a_derivatives(params: AvrAc5aParams, vt, vref, states: AvrState, sat=None):
    """AC5A state derivatives and field voltage.

    ``sat`` may carry precomputed ``(a, b, const)`` saturation coefficients
    (arrays when parameters are stacked); otherwise they are fitted here.

    Returns:
        (AvrState of derivatives, efd)
    """
    p = params
    vr, efd, z1, z2 = (np.asarray(s, dtype=float) for s in states)
    if sat is None:
        sat = saturation_coefficients(p.efd1, p.se_efd1, p.efd2, p.se_efd2)
    a, b, c = sat

    # rate feedback sKf/(1+sTf1) * (1+sTf3)/(1+sTf2) acting on efd
    dz1 = (efd - z1) / p.tf1
    y1 = p.kf * dz1
    lead = p.tf2 > 0
    tf2 = np.where(lead, p.tf2, 1.0)
    dz2 = np.where(lead, (y1 - z2) / tf2, 0.0)
    vf = np.where(lead, (p.tf3 / tf2) * y1 + (1.0 - p.tf3 / tf2) * z2, y1)

    err = vref - vt - vf
    dvr = (p.ka * err - vr) / p.ta
    dvr = np.where((vr >= p.vr_max) & (dvr > 0), 0.0, dvr)
    dvr = np.where((vr <= p.vr_min) & (dvr < 0), 0.0, dvr)
    vr_out = np.clip(vr, p.vr_min, p.vr_max)

    se = exciter_saturation(efd, a, b, c)
    defd = (vr_out - (p.ke + se) * efd) / p.te
    return AvrState(dvr, defd, dz1, dz2), efd


def deadband(x, width):
    """No-step deadband: zero inside ``|x| <= width``, shifted outside."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= width, 0.0, x - np.sign(x) * width)


def turbine_power(params: HydroGovParams, g, q):
    """Mechanical power (machine base) of the nonlinear hydro turbine."""
    g_eff = np.maximum(np.clip(g, params.g_min, params.g_max), _GATE_FLOOR)
    head = (q / g_eff) ** 2
    return params.at * head * (q - params.q_nl), head


def hydro_gov_turbine_derivatives(params: HydroGovParams, omega, p_ref, states: GovState):
    """Governor/turbine state derivatives and mechanical power.

    Returns:
        (GovState of derivatives, p_mech)
    """
    p = params
    wm, xi, zd, zf, yp, g, q = (np.asarray(s, dtype=float) for s in states)

    dwm, w_meas = _lag(omega, wm, p.tt)
    p_mech, head = turbine_power(p, g, q)

    eps = deadband(1.0 - w_meas, p.db1) - p.rp * (p_mech - p_ref)
    dxi = p.ki * eps
    has_d = p.td > 0
    td = np.where(has_d, p.td, 1.0)
    dzd = np.where(has_d, (eps - zd) / td, 0.0)
    d_out = np.where(has_d, p.kd * (eps - zd) / td, 0.0)
    u = p.kp * eps + xi + d_out

    dzf, u_f = _lag(u, zf, p.tf)
    dyp, y_pilot = _lag(u_f, yp, p.tp)

    dg = np.clip((y_pilot - g) / p.tg, p.rate_min, p.rate_max)
    dg = np.where((g >= p.g_max) & (dg > 0), 0.0, dg)
    dg = np.where((g <= p.g_min) & (dg < 0), 0.0, dg)

    dq = (1.0 - head) / p.tw
    return GovState(dwm, dxi, dzd, dzf, dyp, dg, dq), p_mech


def gov_equilibrium(params: HydroGovParams, p_mech: float) -> GovState:
    """Steady-state governor states for a given mechanical power at rated speed."""
    g0 = p_mech / params.at + params.q_nl
    return GovState(1.0, g0, 0.0, g0, g0, g0, g0)


def avr_equilibrium(params: AvrAc5aParams, efd0: float, vt0: float) -> tuple[AvrState, float]:
    """Steady-state AC5A states and the voltage reference that holds them."""
    se = float(se_from_params(params, efd0))
    vr0 = (params.ke + se) * efd0
    vref = vt0 + vr0 / params.ka
    return AvrState(vr0, efd0, efd0, 0.0), vref


def with_updates(params, **changes):
    """``dataclasses.replace`` that coerces to float."""
    return replace(params, **{k: float(v) for k, v in changes.items()})
