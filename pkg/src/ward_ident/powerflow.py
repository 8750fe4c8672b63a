"""Newton-Raphson AC power flow and branch-flow evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PowerFlowError
from .grid import Branch, Network


@dataclass(frozen=True)
class PowerFlowSolution:
    """Bus voltages and solver diagnostics.

    ``v``/``theta`` are ordered like ``net.buses``. For a non-converged run
    they hold the last iterate.
    """

    bus_ids: tuple[str, ...]
    v: np.ndarray
    theta: np.ndarray
    converged: bool
    iterations: int
    max_mismatch: float
    s_base: float

    @property
    def voltage(self) -> np.ndarray:
        return self.v * np.exp(1j * self.theta)

    def bus_voltage(self, bus_id: str) -> complex:
        i = self.bus_ids.index(bus_id)
        return complex(self.voltage[i])


def build_ybus(net: Network, branches: tuple[Branch, ...] | None = None) -> np.ndarray:
    """Dense positive-sequence bus admittance matrix in system pu."""
    n = len(net.buses)
    idx = net.bus_index
    y = np.zeros((n, n), dtype=complex)
    for br in net.branches if branches is None else branches:
        if not br.in_service:
            continue
        i, j = idx[br.from_bus], idx[br.to_bus]
        ys = 1.0 / br.z.z
        y[i, i] += ys + br.z.y_i
        y[j, j] += ys + br.z.y_j
        y[i, j] -= ys
        y[j, i] -= ys
    return y


def scheduled_injections(net: Network) -> np.ndarray:
    """Net scheduled complex injection per bus (generation minus load), pu."""
    s = np.zeros(len(net.buses), dtype=complex)
    idx = net.bus_index
    for m in net.machines:
        s[idx[m.bus]] += complex(m.p_mw, m.q_mvar) / net.s_base
    for ld in net.loads:
        s[idx[ld.bus]] -= complex(ld.p_mw, ld.q_mvar) / net.s_base
    return s


def _jacobian(y: np.ndarray, v: np.ndarray, rows_p: np.ndarray, rows_q: np.ndarray, cols_th: np.ndarray, cols_v: np.ndarray) -> np.ndarray:
    # dS/dtheta and dS/d|V| in complex form
    i_bus = y @ v
    vn = v / np.abs(v)
    ds_dth = 1j * np.diag(v) @ np.conj(np.diag(i_bus) - y @ np.diag(v))
    ds_dvm = np.diag(v) @ np.conj(y @ np.diag(vn)) + np.diag(vn) @ np.conj(np.diag(i_bus))
    j11 = ds_dth.real[np.ix_(rows_p, cols_th)]
    j12 = ds_dvm.real[np.ix_(rows_p, cols_v)]
    j21 = ds_dth.imag[np.ix_(rows_q, cols_th)]
    j22 = ds_dvm.imag[np.ix_(rows_q, cols_v)]
    return np.block([[j11, j12], [j21, j22]])


def solve_power_flow(
    net: Network,
    tol: float = 1e-8,
    max_iter: int = 50,
    v0: np.ndarray | None = None,
    theta0: np.ndarray | None = None,
) -> PowerFlowSolution:
    """Solve the AC power flow by Newton-Raphson in polar coordinates.

    Starts flat (1.0 pu, 0 rad; setpoint magnitudes on slack/PV buses) unless
    an initial guess is given. Non-convergence is reported through the
    ``converged`` flag; a singular Jacobian raises :class:`PowerFlowError`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = build_ybus(net)
    s_sched = scheduled_injections(net)
    kinds = np.array([b.kind for b in net.buses])
    n = len(net.buses)

    vm = np.ones(n) if v0 is None else np.array(v0, dtype=float)
    th = np.zeros(n) if theta0 is None else np.array(theta0, dtype=float)
    for i, b in enumerate(net.buses):
        if b.kind in ("slack", "pv"):
            vm[i] = b.v_set

    pv_pq = np.flatnonzero(kinds != "slack")
    pq = np.flatnonzero(kinds == "pq")

    def mismatch(vm, th):
        v = vm * np.exp(1j * th)
        s_calc = v * np.conj(y @ v)
        ds = s_sched - s_calc
        return np.concatenate([ds.real[pv_pq], ds.imag[pq]]), v

    f, v = mismatch(vm, th)
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    it = 0
    while norm > tol and it < max_iter:
        jac = _jacobian(y, v, pv_pq, pq, pv_pq, pq)
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise PowerFlowError(f"singular Jacobian at iteration {it} (islanded bus or degenerate topology)") from None
        if not np.all(np.isfinite(dx)):
            raise PowerFlowError(f"non-finite Newton step at iteration {it}")
        th[pv_pq] += dx[: len(pv_pq)]
        vm[pq] += dx[len(pv_pq) :]
        it += 1
        f, v = mismatch(vm, th)
        norm = float(np.max(np.abs(f))) if f.size else 0.0
        if not np.isfinite(norm) or np.any(vm <= 0):
            break

    converged = bool(np.isfinite(norm) and norm <= tol)
    return PowerFlowSolution(
        bus_ids=tuple(b.id for b in net.buses),
        v=vm,
        theta=th,
        converged=converged,
        iterations=it,
        max_mismatch=norm,
        s_base=net.s_base,
    )


def bus_injections(net: Network, sol: PowerFlowSolution) -> np.ndarray:
    """Computed complex injection per bus in pu."""
    v = sol.voltage
    return v * np.conj(build_ybus(net) @ v)


def branch_end_flow(br: Branch, vi: complex, vj: complex) -> tuple[complex, complex]:
    """Complex power (pu) entering the branch at its from and to ends."""
    ys = 1.0 / br.z.z
    i_from = (vi - vj) * ys + vi * br.z.y_i
    i_to = (vj - vi) * ys + vj * br.z.y_j
    return vi * np.conj(i_from), vj * np.conj(i_to)


@dataclass(frozen=True)
class BranchFlow:
    element: str
    p_from: float
    q_from: float
    p_to: float
    q_to: float


def branch_flows(sol: PowerFlowSolution, net: Network) -> list[BranchFlow]:
    """Flows at both ends of every in-service branch, MW / MVAr.

    Sign convention: positive power enters the branch at that end.
    """
    if not sol.converged:
        raise PowerFlowError("branch flows need a converged power flow")
    v = sol.voltage
    idx = net.bus_index
    out = []
    for br in net.branches:
        if not br.in_service:
            continue
        sf, st = branch_end_flow(br, v[idx[br.from_bus]], v[idx[br.to_bus]])
        sf *= net.s_base
        st *= net.s_base
        out.append(BranchFlow(br.id, sf.real, sf.imag, st.real, st.imag))
    return out


def boundary_elements(net: Network, bus_id: str) -> dict[str, list[Branch]]:
    """Group in-service branches at a boundary bus into compared elements.

    Branches into a retained area are compared one by one (keyed by branch
    id); branches into an external area (or its Ward equivalent) are summed
    and keyed by the area id.
    """
    groups: dict[str, list[Branch]] = {}
    for br in net.branches:
        if not br.in_service or bus_id not in (br.from_bus, br.to_bus):
            continue
        other = br.to_bus if br.from_bus == bus_id else br.from_bus
        area = net.bus_by_id[other].area
        key = area if net.area_by_id[area].external else br.id
        groups.setdefault(f"{key}@{bus_id}", []).append(br)
    return groups


def boundary_flows(net: Network, sol: PowerFlowSolution, boundary: list[str]) -> dict[str, tuple[float, float]]:
    """P (MW), Q (MVAr) leaving each boundary bus into each compared element."""
    if not sol.converged:
        raise PowerFlowError("boundary flows need a converged power flow")
    v = sol.voltage
    idx = net.bus_index
    out: dict[str, tuple[float, float]] = {}
    for b in boundary:
        for key, brs in boundary_elements(net, b).items():
            s = 0j
            for br in brs:
                sf, st = branch_end_flow(br, v[idx[br.from_bus]], v[idx[br.to_bus]])
                s += sf if br.from_bus == b else st
            s *= net.s_base
            out[key] = (float(s.real), float(s.imag))
    return out
