"""Fixed-step RK4 RMS simulation of machines, controls and the algebraic network.

The network is solved at every stage evaluation: machines enter as Norton
sources behind their transient reactance, loads draw constant power (constant
admittance below ``v_switch``), and a chord-Newton iteration on the real and
imaginary bus voltages closes the algebraic loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import InitializationError, SimulationError, ValidationError
from ..grid import Network
from ..powerflow import PowerFlowSolution, build_ybus
from ..signals import BUS_QUANTITIES, FLOW_QUANTITIES, SignalSet, split_channel
from .controls import (
    AvrState,
    GovState,
    avr_ac5a_derivatives,
    avr_equilibrium,
    gov_equilibrium,
    hydro_gov_turbine_derivatives,
    saturation_coefficients,
    stack_params,
)
from .events import Event
from .machine import flux_decay_derivative, rotor_frame, swing_derivatives

DEFAULT_Y_FAULT = 1e4
DEFAULT_FREQ_TC = 0.05
DEFAULT_V_SWITCH = 0.4
BLOWUP_LIMIT = 1e6


@dataclass
class DynamicState:
    """Differential and algebraic state of a network at one instant.

    Arrays follow ``machine_ids``; ``avr``/``gov`` hold stacked states of the
    machines listed in ``avr_index``/``gov_index``. ``vref`` and ``p_ref`` are
    setpoints fixed at initialization.
    """

    machine_ids: tuple[str, ...]
    delta: np.ndarray
    omega: np.ndarray
    eq_p: np.ndarray
    efd0: np.ndarray
    p_ref: np.ndarray
    avr_index: np.ndarray
    avr: AvrState
    vref: np.ndarray
    gov_index: np.ndarray
    gov: GovState
    v: np.ndarray
    freq_filter: np.ndarray
    t: float = 0.0

    def copy(self) -> DynamicState:
        return replace(
            self,
            delta=self.delta.copy(),
            omega=self.omega.copy(),
            eq_p=self.eq_p.copy(),
            avr=AvrState(*(np.array(s, dtype=float) for s in self.avr)),
            gov=GovState(*(np.array(s, dtype=float) for s in self.gov)),
            v=self.v.copy(),
            freq_filter=self.freq_filter.copy(),
        )


def init_dynamic_state(net: Network, sol: PowerFlowSolution) -> DynamicState:
    """Equilibrium state consistent with a converged power flow."""
    if not sol.converged:
        raise ValidationError("dynamic initialization needs a converged power flow")
    idx = net.bus_index
    v = sol.voltage
    s_bus = v * np.conj(build_ybus(net) @ v)
    s_load = np.zeros(len(net.buses), dtype=complex)
    for ld in net.loads:
        s_load[idx[ld.bus]] += complex(ld.p_mw, ld.q_mvar) / net.s_base

    machine_buses = {m.bus for m in net.machines}
    for b in net.buses:
        if b.kind in ("slack", "pv") and b.id not in machine_buses:
            raise ValidationError(f"{b.kind} bus has no machine to hold its voltage", b.id)

    n = len(net.machines)
    delta = np.zeros(n)
    eq_p = np.zeros(n)
    efd0 = np.zeros(n)
    p_ref = np.zeros(n)
    avr_idx, avr_params, avr_states, vrefs = [], [], [], []
    gov_idx, gov_params, gov_states = [], [], []
    for k, m in enumerate(net.machines):
        i = idx[m.bus]
        ratio = net.s_base / m.s_nom
        s_gen = s_bus[i] + s_load[i]
        cur = np.conj(s_gen / v[i])
        e = v[i] + 1j * m.xd_p * ratio * cur
        delta[k] = np.angle(e)
        eq_p[k] = abs(e)
        i_d, _ = rotor_frame(cur * ratio, delta[k])
        efd0[k] = eq_p[k] + (m.xd - m.xd_p) * i_d
        p_ref[k] = (e * np.conj(cur)).real * ratio
        if m.avr is not None:
            st, vref = avr_equilibrium(m.avr, efd0[k], abs(v[i]))
            if not m.avr.vr_min <= st.vr <= m.avr.vr_max:
                raise InitializationError(f"required regulator output {st.vr:.4g} pu outside AVR limits [{m.avr.vr_min}, {m.avr.vr_max}]", m.id)
            avr_idx.append(k)
            avr_params.append(m.avr)
            avr_states.append(st)
            vrefs.append(vref)
        if m.gov is not None:
            st = gov_equilibrium(m.gov, p_ref[k])
            if not m.gov.g_min <= st.g <= m.gov.g_max:
                raise InitializationError(f"dispatch needs gate {st.g:.4g} outside governor limits [{m.gov.g_min}, {m.gov.g_max}]", m.id)
            gov_idx.append(k)
            gov_params.append(m.gov)
            gov_states.append(st)

    def stack(states, cls, width):
        if not states:
            return cls(*(np.zeros(0) for _ in range(width)))
        return cls(*(np.array(col, dtype=float) for col in zip(*states)))

    return DynamicState(
        machine_ids=tuple(m.id for m in net.machines),
        delta=delta,
        omega=np.ones(n),
        eq_p=eq_p,
        efd0=efd0,
        p_ref=p_ref,
        avr_index=np.array(avr_idx, dtype=int),
        avr=stack(avr_states, AvrState, 4),
        vref=np.array(vrefs, dtype=float),
        gov_index=np.array(gov_idx, dtype=int),
        gov=stack(gov_states, GovState, 7),
        v=v.copy(),
        freq_filter=np.angle(v).copy(),
    )


def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


@dataclass
class _Monitor:
    cid: str
    kind: str  # "bus" | "flow"
    quantity: str
    bus: int
    branches: list = field(default_factory=list)  # branch ids whose end at `bus` is summed


class Simulator:
    """Stateful fixed-step integrator for one network and one initial state."""

    def __init__(
        self,
        net: Network,
        state0: DynamicState,
        dt: float = 0.01,
        monitors: list[str] | None = None,
        y_fault: float = DEFAULT_Y_FAULT,
        freq_tc: float = DEFAULT_FREQ_TC,
        v_switch: float = DEFAULT_V_SWITCH,
        newton_tol: float = 1e-11,
    ) -> None:
        if dt <= 0:
            raise ValidationError("dt must be positive")
        if state0.machine_ids != tuple(m.id for m in net.machines):
            raise ValidationError("dynamic state does not belong to this network")
        self.net = net
        self.dt = float(dt)
        self.y_fault = complex(y_fault)
        self.freq_tc = float(freq_tc)
        self.v_switch = float(v_switch)
        self.newton_tol = float(newton_tol)
        self.t = float(state0.t)
        self.omega_base = net.omega_base

        idx = net.bus_index
        self.nb = len(net.buses)
        machines = net.machines
        self.nm = len(machines)
        self.m_bus = np.array([idx[m.bus] for m in machines], dtype=int)
        self.ratio = np.array([net.s_base / m.s_nom for m in machines])
        self.h = np.array([m.h for m in machines])
        self.d_damp = np.array([m.d_damp for m in machines])
        self.xd = np.array([m.xd for m in machines])
        self.xd_p = np.array([m.xd_p for m in machines])
        self.td0_p = np.array([m.td0_p for m in machines])
        self.y_m = 1.0 / (1j * self.xd_p * self.ratio)
        self.efd0 = state0.efd0.copy()
        self.p_ref = state0.p_ref.copy()

        self.avr_index = state0.avr_index
        self.gov_index = state0.gov_index
        self.na = self.avr_index.size
        self.ng = self.gov_index.size
        self.vref = state0.vref.copy()
        if self.na:
            self.avr_p = stack_params([machines[k].avr for k in self.avr_index])
            coeffs = [saturation_coefficients(a.efd1, a.se_efd1, a.efd2, a.se_efd2) for a in (machines[k].avr for k in self.avr_index)]
            self.avr_sat = tuple(np.array(c) for c in zip(*coeffs))
        if self.ng:
            self.gov_p = stack_params([machines[k].gov for k in self.gov_index])

        # mutable network condition
        self.branch_in = {br.id: br.in_service for br in net.branches}
        self.load_s = np.zeros(self.nb, dtype=complex)
        for ld in net.loads:
            self.load_s[idx[ld.bus]] += complex(ld.p_mw, ld.q_mvar) / net.s_base
        self.bus_faults: dict[int, complex] = {}
        self.line_faults: dict[str, tuple[float, complex]] = {}
        self._rebuild_network()

        # state vector layout
        m, a, g = self.nm, self.na, self.ng
        self._sl = {}
        pos = 0
        for name, size in (("delta", m), ("omega", m), ("eq_p", m), ("avr", 4 * a), ("gov", 7 * g), ("filt", self.nb)):
            self._sl[name] = slice(pos, pos + size)
            pos += size
        self.x = self._pack(state0)
        self.v = state0.v.astype(complex).copy()

        self.monitors = [self._resolve_monitor(c) for c in (monitors or [])]
        self.v = self.solve_network(self.x, self.v)

    # ------------------------------------------------------------------ state

    def _pack(self, st: DynamicState) -> np.ndarray:
        parts = [st.delta, st.omega, st.eq_p]
        parts.append(np.concatenate([np.atleast_1d(np.asarray(s, dtype=float)) for s in st.avr]) if self.na else np.zeros(0))
        parts.append(np.concatenate([np.atleast_1d(np.asarray(s, dtype=float)) for s in st.gov]) if self.ng else np.zeros(0))
        parts.append(st.freq_filter)
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def state(self) -> DynamicState:
        """Snapshot of the current state."""
        x = self.x
        avr = AvrState(*x[self._sl["avr"]].reshape(4, self.na)) if self.na else AvrState(*(np.zeros(0),) * 4)
        gov = GovState(*x[self._sl["gov"]].reshape(7, self.ng)) if self.ng else GovState(*(np.zeros(0),) * 7)
        return DynamicState(
            machine_ids=tuple(m.id for m in self.net.machines),
            delta=x[self._sl["delta"]].copy(),
            omega=x[self._sl["omega"]].copy(),
            eq_p=x[self._sl["eq_p"]].copy(),
            efd0=self.efd0.copy(),
            p_ref=self.p_ref.copy(),
            avr_index=self.avr_index,
            avr=AvrState(*(np.array(s) for s in avr)),
            vref=self.vref.copy(),
            gov_index=self.gov_index,
            gov=GovState(*(np.array(s) for s in gov)),
            v=self.v.copy(),
            freq_filter=x[self._sl["filt"]].copy(),
            t=self.t,
        )

    def state_names(self) -> list[str]:
        ids = [m.id for m in self.net.machines]
        names = [f"{i}.delta" for i in ids] + [f"{i}.omega" for i in ids] + [f"{i}.eq_p" for i in ids]
        for field_name in AvrState._fields:
            names += [f"{ids[k]}.avr.{field_name}" for k in self.avr_index]
        for field_name in GovState._fields:
            names += [f"{ids[k]}.gov.{field_name}" for k in self.gov_index]
        names += [f"{b.id}.freq_filter" for b in self.net.buses]
        return names

    # ---------------------------------------------------------------- network

    def _rebuild_network(self) -> None:
        net = self.net
        branches = tuple(replace(br, in_service=self.branch_in[br.id] and br.id not in self.line_faults) for br in net.branches)
        y = build_ybus(net, branches)
        idx = net.bus_index
        for br_id, (alpha, yf) in self.line_faults.items():
            br = net.branch_by_id[br_id]
            i, j = idx[br.from_bus], idx[br.to_bus]
            y1 = 1.0 / (br.z.z * alpha)
            y2 = 1.0 / (br.z.z * (1.0 - alpha))
            yff = y1 + y2 + yf
            # fault node eliminated by Kron reduction
            y[i, i] += y1 + br.z.y_i - y1 * y1 / yff
            y[j, j] += y2 + br.z.y_j - y2 * y2 / yff
            y[i, j] -= y1 * y2 / yff
            y[j, i] -= y1 * y2 / yff
        for b, yf in self.bus_faults.items():
            y[b, b] += yf
        np.add.at(y, (self.m_bus, self.m_bus), self.y_m)
        self.y = y
        n = self.nb
        self._ylin = np.block([[y.real, -y.imag], [y.imag, y.real]])
        self._lu = None
        self._i_bus = np.zeros(n, dtype=complex)

    def _load_current(self, v):
        """Load current and the per-bus complex derivative pieces."""
        vabs = np.abs(v)
        low = vabs < self.v_switch
        s_conj = np.conj(self.load_s)
        cv = np.conj(v)
        cv = np.where(cv == 0, 1e-12, cv)
        i_p = s_conj / cv
        y_z = s_conj / self.v_switch**2
        i_load = np.where(low, y_z * v, i_p)
        return i_load, low, s_conj, cv, y_z

    def _jac(self, v) -> np.ndarray:
        _, low, s_conj, cv, y_z = self._load_current(v)
        n = self.nb
        c = -s_conj / (cv * cv)
        # constant-power part: d/dVr -> c, d/dVi -> -j c ; constant-Z part like Y
        a_rr = np.where(low, y_z.real, c.real)
        a_ir = np.where(low, y_z.imag, c.imag)
        a_ri = np.where(low, -y_z.imag, c.imag)
        a_ii = np.where(low, y_z.real, -c.real)
        jac = self._ylin.copy()
        d = np.arange(n)
        jac[d, d] += a_rr
        jac[d + n, d] += a_ir
        jac[d, d + n] += a_ri
        jac[d + n, d + n] += a_ii
        return jac

    def solve_network(self, x: np.ndarray, v_guess: np.ndarray) -> np.ndarray:
        """Bus voltages for the machine EMFs in ``x``."""
        delta = x[self._sl["delta"]]
        eq_p = x[self._sl["eq_p"]]
        e = eq_p * np.exp(1j * delta)
        i_src = np.zeros(self.nb, dtype=complex)
        np.add.at(i_src, self.m_bus, self.y_m * e)
        v = v_guess.copy()
        n = self.nb
        for it in range(40):
            # chord iteration; Jacobian refreshed after events or slow progress
            if self._lu is None or (it > 0 and it % 5 == 0):
                self._lu = lu_factor(self._jac(v), check_finite=False)
            i_load, *_ = self._load_current(v)
            f = self.y @ v - i_src + i_load
            step = lu_solve(self._lu, -np.concatenate([f.real, f.imag]), check_finite=False)
            dv = step[:n] + 1j * step[n:]
            v = v + dv
            if not np.all(np.isfinite(v)):
                break
            if np.max(np.abs(dv)) < self.newton_tol:
                return v
        raise SimulationError(f"network equations did not converge at t={self.t:.6g} s")

    # ------------------------------------------------------------ derivatives

    def derivatives(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        sl = self._sl
        delta, omega, eq_p = x[sl["delta"]], x[sl["omega"]], x[sl["eq_p"]]
        e = eq_p * np.exp(1j * delta)
        i_sys = self.y_m * (e - v[self.m_bus])
        p_e = (e * np.conj(i_sys)).real * self.ratio
        i_d, _ = rotor_frame(i_sys * self.ratio, delta)

        dx = np.empty_like(x)
        efd = self.efd0.copy()
        p_mech = self.p_ref.copy()
        if self.na:
            st = AvrState(*x[sl["avr"]].reshape(4, self.na))
            vt = np.abs(v[self.m_bus[self.avr_index]])
            d_avr, efd_a = avr_ac5a_derivatives(self.avr_p, vt, self.vref, st, self.avr_sat)
            efd[self.avr_index] = efd_a
            dx[sl["avr"]] = np.concatenate(d_avr)
        if self.ng:
            st = GovState(*x[sl["gov"]].reshape(7, self.ng))
            d_gov, pm = hydro_gov_turbine_derivatives(self.gov_p, omega[self.gov_index], self.p_ref[self.gov_index], st)
            p_mech[self.gov_index] = pm
            dx[sl["gov"]] = np.concatenate(d_gov)

        d_delta, d_omega = swing_derivatives(omega, p_mech / omega, p_e / omega, self.h, self.d_damp, self.omega_base)
        dx[sl["delta"]] = d_delta
        dx[sl["omega"]] = d_omega
        dx[sl["eq_p"]] = flux_decay_derivative(efd, eq_p, i_d, self.xd, self.xd_p, self.td0_p)
        dx[sl["filt"]] = _wrap(np.angle(v) - x[sl["filt"]]) / self.freq_tc
        return dx

    def state_derivatives(self) -> np.ndarray:
        """Derivative vector at the current state (network already solved)."""
        return self.derivatives(self.x, self.v)

    def electrical_power(self) -> np.ndarray:
        """Machine electrical power, pu on each machine base."""
        sl = self._sl
        e = self.x[sl["eq_p"]] * np.exp(1j * self.x[sl["delta"]])
        return (e * np.conj(self.y_m * (e - self.v[self.m_bus]))).real * self.ratio

    # ------------------------------------------------------------------ events

    def apply_event(self, event: Event, phase: str = "start") -> None:
        """Apply an event (``phase="start"``) or clear a fault (``"clear"``)."""
        net = self.net
        p = event.params
        if event.kind == "load_step":
            ld = net.load_by_id.get(event.target)
            if ld is None:
                raise ValidationError("load step target not found", event.target)
            i = net.bus_index[ld.bus]
            base = complex(ld.p_mw, ld.q_mvar) / net.s_base
            if "fraction" in p:
                ds = base * float(p["fraction"])
            else:
                ds = complex(float(p.get("delta_p_mw", 0.0)), float(p.get("delta_q_mvar", 0.0))) / net.s_base
            self.load_s[i] += ds
            self._lu = None
            return
        if event.kind == "bus_fault":
            if event.target not in net.bus_index:
                raise ValidationError("fault bus not found", event.target)
            i = net.bus_index[event.target]
            if phase == "start":
                self.bus_faults[i] = complex(p.get("y_fault", self.y_fault))
            else:
                self.bus_faults.pop(i, None)
        elif event.kind in ("line_fault_and_trip", "line_trip"):
            if event.target not in net.branch_by_id:
                raise ValidationError("event branch not found", event.target)
            if event.kind == "line_trip":
                self.branch_in[event.target] = False
            elif phase == "start":
                self.line_faults[event.target] = (float(p.get("location", 0.5)), complex(p.get("y_fault", self.y_fault)))
            else:
                self.line_faults.pop(event.target, None)
                self.branch_in[event.target] = False
        self._rebuild_network()

    def _schedule(self, events: list[Event]) -> list[tuple[int, Event, str]]:
        starts = [ev.t_start for ev in events]
        if starts != sorted(starts):
            raise ValidationError("events must be sorted by t_start")
        actions = []
        for ev in events:
            k = int(round(ev.t_start / self.dt))
            actions.append((k, ev, "start"))
            if ev.kind in ("bus_fault", "line_fault_and_trip"):
                k_clear = int(round((ev.t_start + float(ev.params["clear_after"])) / self.dt))
                actions.append((max(k_clear, k + 1), ev, "clear"))
        actions.sort(key=lambda a: a[0])
        return actions

    # ---------------------------------------------------------------- monitors

    def _resolve_monitor(self, cid: str) -> _Monitor:
        loc, qty = split_channel(cid)
        net = self.net
        if qty in BUS_QUANTITIES:
            if loc not in net.bus_index:
                raise ValidationError("monitored bus not found", loc)
            return _Monitor(cid, "bus", qty, net.bus_index[loc])
        elem, sep, bus = loc.partition("@")
        if not sep or bus not in net.bus_index:
            raise ValidationError(f"flow monitor {cid!r} must be '<branch-or-area>@<bus>'", loc)
        if elem in net.branch_by_id:
            br = net.branch_by_id[elem]
            if bus not in (br.from_bus, br.to_bus):
                raise ValidationError(f"branch {elem!r} does not end at bus {bus!r}", elem)
            branches = [elem]
        elif elem in net.area_by_id:
            branches = []
            for br in net.branches:
                if bus not in (br.from_bus, br.to_bus):
                    continue
                other = br.to_bus if br.from_bus == bus else br.from_bus
                if net.bus_by_id[other].area == elem:
                    branches.append(br.id)
            if not branches:
                raise ValidationError(f"no branch joins bus {bus!r} to area {elem!r}", loc)
        else:
            raise ValidationError("monitored element not found", elem)
        return _Monitor(cid, "flow", qty, net.bus_index[bus], branches)

    def _flow_at(self, br_id: str, bus: int, v: np.ndarray) -> complex:
        if not self.branch_in[br_id]:
            return 0j
        net = self.net
        br = net.branch_by_id[br_id]
        i, j = net.bus_index[br.from_bus], net.bus_index[br.to_bus]
        at_from = bus == i
        if br_id in self.line_faults:
            alpha, yf = self.line_faults[br_id]
            y1 = 1.0 / (br.z.z * alpha)
            y2 = 1.0 / (br.z.z * (1.0 - alpha))
            vf = (y1 * v[i] + y2 * v[j]) / (y1 + y2 + yf)
            if at_from:
                cur = (v[i] - vf) * y1 + v[i] * br.z.y_i
            else:
                cur = (v[j] - vf) * y2 + v[j] * br.z.y_j
        else:
            ys = 1.0 / br.z.z
            cur = (v[i] - v[j]) * ys + v[i] * br.z.y_i if at_from else (v[j] - v[i]) * ys + v[j] * br.z.y_j
        return v[bus] * np.conj(cur) * net.s_base

    def sample(self) -> list[float]:
        v = self.v
        out = []
        filt = self.x[self._sl["filt"]]
        for mon in self.monitors:
            if mon.kind == "bus":
                vb = v[mon.bus]
                if mon.quantity == "vmag_pu":
                    out.append(float(abs(vb)))
                elif mon.quantity == "vang_rad":
                    out.append(float(np.angle(vb)))
                else:
                    dev = _wrap(np.angle(vb) - filt[mon.bus]) / (self.freq_tc * self.omega_base)
                    out.append(float(self.net.f_nominal * (1.0 + dev)))
            else:
                s = sum((self._flow_at(b, mon.bus, v) for b in mon.branches), 0j)
                out.append(float(s.real if mon.quantity == "p_mw" else s.imag))
        return out

    # ------------------------------------------------------------- integration

    def step(self) -> None:
        """Advance one RK4 step; ``self.v`` is left consistent with the new state."""
        dt = self.dt
        x0, v0 = self.x, self.v
        k1 = self.derivatives(x0, v0)
        x1 = x0 + 0.5 * dt * k1
        v1 = self.solve_network(x1, v0)
        k2 = self.derivatives(x1, v1)
        x2 = x0 + 0.5 * dt * k2
        v2 = self.solve_network(x2, v1)
        k3 = self.derivatives(x2, v2)
        x3 = x0 + dt * k3
        v3 = self.solve_network(x3, v2)
        k4 = self.derivatives(x3, v3)
        x_new = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        self.t += dt
        self._check(x_new)
        self.x = x_new
        self.v = self.solve_network(x_new, v3)

    def _check(self, x: np.ndarray) -> None:
        bad = ~np.isfinite(x) | (np.abs(x) > BLOWUP_LIMIT)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise SimulationError(f"numerical blow-up: state {self.state_names()[k]!r} = {x[k]!r} at t={self.t:.6g} s")

    def run(self, t_end: float, events: list[Event] | tuple = ()) -> SignalSet:
        """Integrate to ``t_end`` and return the monitored channels."""
        n_steps = int(round((t_end - self.t) / self.dt))
        if n_steps < 1:
            raise ValidationError("t_end must exceed the current time by at least one step")
        k0 = int(round(self.t / self.dt))
        actions = self._schedule(list(events))
        data = np.empty((n_steps + 1, len(self.monitors)))
        a = 0
        for k in range(n_steps + 1):
            applied = False
            while a < len(actions) and actions[a][0] <= k0 + k:
                _, ev, phase = actions[a]
                self.apply_event(ev, phase)
                applied = True
                a += 1
            if applied:
                self.v = self.solve_network(self.x, self.v)
            data[k] = self.sample()
            if k < n_steps:
                self.step()
        t = (k0 + np.arange(n_steps + 1)) * self.dt
        return SignalSet(t, {m.cid: data[:, i] for i, m in enumerate(self.monitors)}, self.net.f_nominal)


def simulate(
    net: Network,
    state0: DynamicState,
    events: list[Event] | tuple,
    t_end: float,
    dt: float = 0.01,
    monitors: list[str] | None = None,
    **options,
) -> SignalSet:
    """Fixed-step RK4 simulation from ``state0`` to ``t_end``.

    Events are applied at the nearest step boundary; faults are shunt
    admittances (a line fault splits the line at its location fraction) and
    are cleared by removing the fault and, for line faults, the line.
    """
    sim = Simulator(net, state0, dt=dt, monitors=monitors, **options)
    return sim.run(t_end, events)
