"""Three-phase bolted short circuit by Thevenin reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import PowerFlowError, ShortCircuitError
from .grid import Network
from .powerflow import PowerFlowSolution, build_ybus, solve_power_flow


@dataclass(frozen=True)
class ShortCircuitResult:
    """Initial symmetrical short-circuit quantities at one bus.

    ``skss`` in MVA, ``ikss`` in kA, ``ikss_pu`` in pu current on the system
    base, ``thevenin_z`` in system pu.
    """

    bus: str
    skss: float
    ikss: float
    ikss_pu: float
    thevenin_z: complex
    v_prefault: float


def source_ybus(net: Network) -> np.ndarray:
    """Bus admittance matrix with every machine as a source behind xd_p."""
    y = build_ybus(net)
    idx = net.bus_index
    for m in net.machines:
        y[idx[m.bus], idx[m.bus]] += 1.0 / (1j * m.xd_p * net.s_base / m.s_nom)
    return y


def _source_reachable(net: Network, bus_id: str) -> bool:
    n = len(net.buses)
    idx = net.bus_index
    live = [br for br in net.branches if br.in_service]
    graph = coo_matrix((np.ones(len(live)), ([idx[b.from_bus] for b in live], [idx[b.to_bus] for b in live])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    island = labels[idx[bus_id]]
    return any(labels[idx[m.bus]] == island for m in net.machines)


def short_circuit(
    net: Network,
    bus: str,
    c_factor: float = 1.0,
    prefault: PowerFlowSolution | None = None,
    v_prefault: float | None = None,
) -> ShortCircuitResult:
    """Skss/Ikss for a bolted three-phase fault at ``bus``.

    The prefault voltage magnitude comes from ``v_prefault`` when given,
    otherwise from ``prefault`` (a converged power flow), otherwise from a
    fresh power flow of ``net``.
    """
    if bus not in net.bus_by_id:
        raise ShortCircuitError(f"fault bus {bus!r} not found")
    if not _source_reachable(net, bus):
        raise ShortCircuitError(f"bus {bus!r} is isolated from every source")
    k = net.bus_index[bus]

    if v_prefault is None:
        if prefault is None:
            prefault = solve_power_flow(net)
        if not prefault.converged:
            raise PowerFlowError("prefault power flow did not converge")
        v_prefault = float(prefault.v[k])

    y = source_ybus(net)
    e = np.zeros(len(net.buses), dtype=complex)
    e[k] = 1.0
    try:
        z_col = np.linalg.solve(y, e)
    except np.linalg.LinAlgError:
        raise ShortCircuitError(f"singular source admittance matrix for fault at {bus!r}") from None
    z_th = complex(z_col[k])
    if not np.isfinite(z_th) or abs(z_th) < 1e-12:
        raise ShortCircuitError(f"zero Thevenin impedance at {bus!r} (fault at an ideal source)")

    skss_pu = c_factor * v_prefault**2 / abs(z_th)
    ikss_pu = c_factor * v_prefault / abs(z_th)
    skss = skss_pu * net.s_base
    base_kv = net.bus_by_id[bus].base_kv
    ikss = skss / (math.sqrt(3.0) * base_kv)
    return ShortCircuitResult(bus=bus, skss=skss, ikss=ikss, ikss_pu=ikss_pu, thevenin_z=z_th, v_prefault=v_prefault)
