"""Network data model, grid-file ingestion and the generalized Ward reduction.

All impedances are stored in per-unit on the system MVA base after loading;
the original element base travels with each :class:`Impedance` so values can
be rebased back for reporting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .dynamics.controls import AvrAc5aParams, HydroGovParams
from .errors import GridError

# Internal reactance given to equivalent machines (pu on machine base); the
# identified series impedance carries the electrical distance instead.
EQUIVALENT_XD_FLOOR = 1e-4

EQ_BUS_PREFIX = "EQ_"
COMMON_BRANCH_ID = "Z_EQ_COMMON"


@dataclass(frozen=True)
class Impedance:
    """Series impedance plus pi-model end admittances, in pu on ``s_base``.

    ``r0``/``x0`` carry the zero-sequence impedance; it is stored and
    round-tripped but not used by the three-phase computations.
    """

    r: float
    x: float
    s_base: float
    r0: float = 0.0
    x0: float = 0.0
    g_i: float = 0.0
    b_i: float = 0.0
    g_j: float = 0.0
    b_j: float = 0.0

    def rebased(self, s_new: float) -> Impedance:
        """Same physical element expressed on another MVA base."""
        if s_new == self.s_base:
            return self
        kz = s_new / self.s_base
        ky = self.s_base / s_new
        return Impedance(
            r=self.r * kz,
            x=self.x * kz,
            s_base=s_new,
            r0=self.r0 * kz,
            x0=self.x0 * kz,
            g_i=self.g_i * ky,
            b_i=self.b_i * ky,
            g_j=self.g_j * ky,
            b_j=self.b_j * ky,
        )

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)

    @property
    def y_i(self) -> complex:
        return complex(self.g_i, self.b_i)

    @property
    def y_j(self) -> complex:
        return complex(self.g_j, self.b_j)

    @classmethod
    def from_dict(cls, data: dict) -> Impedance:
        return cls(
            r=float(data["r"]),
            x=float(data["x"]),
            s_base=float(data["s_base_mva"]),
            r0=float(data.get("r0", 0.0)),
            x0=float(data.get("x0", 0.0)),
            g_i=float(data.get("g_i", 0.0)),
            b_i=float(data.get("b_i", 0.0)),
            g_j=float(data.get("g_j", 0.0)),
            b_j=float(data.get("b_j", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "s_base_mva": self.s_base,
            "r": self.r,
            "x": self.x,
            "r0": self.r0,
            "x0": self.x0,
            "g_i": self.g_i,
            "b_i": self.b_i,
            "g_j": self.g_j,
            "b_j": self.b_j,
        }


@dataclass(frozen=True)
class Bus:
    id: str
    base_kv: float
    kind: str  # "slack" | "pv" | "pq"
    v_set: float | None = None
    area: str = "main"
    is_boundary: bool = False


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    z: Impedance
    in_service: bool = True


@dataclass(frozen=True)
class Machine:
    """Synchronous machine with optional AC5A exciter and hydro governor.

    Reactances are per-unit on ``s_nom``; ``h`` is the inertia constant in
    seconds on ``s_nom``. ``p_mw``/``q_mvar`` are the dispatch (reactive
    dispatch is only used when the machine sits on a PQ bus).
    """

    id: str
    bus: str
    s_nom: float
    h: float
    xd_p: float
    xd: float = 1.8
    td0_p: float = 5.0
    d_damp: float = 0.0
    p_mw: float = 0.0
    q_mvar: float = 0.0
    q_min_mvar: float | None = None
    q_max_mvar: float | None = None
    avr: AvrAc5aParams | None = None
    gov: HydroGovParams | None = None


@dataclass(frozen=True)
class Load:
    """Constant-power load."""

    id: str
    bus: str
    p_mw: float
    q_mvar: float


@dataclass(frozen=True)
class Area:
    id: str
    external: bool = False


@dataclass(frozen=True)
class Network:
    """Validated, immutable power network in system per-unit."""

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    machines: tuple[Machine, ...] = ()
    loads: tuple[Load, ...] = ()
    areas: tuple[Area, ...] = ()
    s_base: float = 100.0
    f_nominal: float = 50.0
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(b if b.z.s_base == self.s_base else replace(b, z=b.z.rebased(self.s_base)) for b in self.branches))
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "loads", tuple(self.loads))
        if not self.areas:
            object.__setattr__(self, "areas", tuple(Area(a) for a in dict.fromkeys(b.area for b in self.buses)))
        else:
            object.__setattr__(self, "areas", tuple(self.areas))
        _validate(self)

    @cached_property
    def bus_index(self) -> dict[str, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def bus_by_id(self) -> dict[str, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def branch_by_id(self) -> dict[str, Branch]:
        return {b.id: b for b in self.branches}

    @cached_property
    def machine_by_id(self) -> dict[str, Machine]:
        return {m.id: m for m in self.machines}

    @cached_property
    def load_by_id(self) -> dict[str, Load]:
        return {ld.id: ld for ld in self.loads}

    @cached_property
    def area_by_id(self) -> dict[str, Area]:
        return {a.id: a for a in self.areas}

    @property
    def omega_base(self) -> float:
        return 2.0 * np.pi * self.f_nominal

    @property
    def boundary_buses(self) -> list[str]:
        return [b.id for b in self.buses if b.is_boundary]

    def is_external(self, bus_id: str) -> bool:
        return self.area_by_id[self.bus_by_id[bus_id].area].external

    def to_dict(self) -> dict:
        def bus(b: Bus) -> dict:
            d = {"id": b.id, "base_kv": b.base_kv, "kind": b.kind, "area": b.area, "is_boundary": b.is_boundary}
            if b.v_set is not None:
                d["v_set"] = b.v_set
            return d

        def machine(m: Machine) -> dict:
            d = {
                "id": m.id,
                "bus": m.bus,
                "s_nom_mva": m.s_nom,
                "h_s": m.h,
                "xd_p": m.xd_p,
                "xd": m.xd,
                "td0_p": m.td0_p,
                "d_damp": m.d_damp,
                "p_mw": m.p_mw,
                "q_mvar": m.q_mvar,
                "avr": m.avr.to_dict() if m.avr else None,
                "gov": m.gov.to_dict() if m.gov else None,
            }
            if m.q_min_mvar is not None:
                d["q_min_mvar"] = m.q_min_mvar
            if m.q_max_mvar is not None:
                d["q_max_mvar"] = m.q_max_mvar
            return d

        return {
            "name": self.name,
            "s_base_mva": self.s_base,
            "f_nominal_hz": self.f_nominal,
            "areas": [{"id": a.id, "external": a.external} for a in self.areas],
            "buses": [bus(b) for b in self.buses],
            "branches": [
                {"id": br.id, "from": br.from_bus, "to": br.to_bus, "status": "in" if br.in_service else "out", "impedance": br.z.to_dict()}
                for br in self.branches
            ],
            "machines": [machine(m) for m in self.machines],
            "loads": [{"id": ld.id, "bus": ld.bus, "p_mw": ld.p_mw, "q_mvar": ld.q_mvar} for ld in self.loads],
        }


def _validate(net: Network) -> None:
    for kind, items in (("bus", net.buses), ("branch", net.branches), ("machine", net.machines), ("load", net.loads), ("area", net.areas)):
        seen: set[str] = set()
        for item in items:
            if item.id in seen:
                raise GridError(f"duplicate {kind} id", item.id)
            seen.add(item.id)
    clash = {b.id for b in net.branches} & {a.id for a in net.areas}
    if clash:
        raise GridError("branch ids must not reuse area ids", sorted(clash)[0])

    areas = {a.id for a in net.areas}
    buses = {}
    for b in net.buses:
        if b.base_kv <= 0:
            raise GridError("base_kv must be positive", b.id)
        if b.kind not in ("slack", "pv", "pq"):
            raise GridError(f"unknown bus kind {b.kind!r}", b.id)
        if b.v_set is not None and not 0.5 < b.v_set < 1.5:
            raise GridError("v_set must lie in (0.5, 1.5)", b.id)
        if b.area not in areas:
            raise GridError(f"bus references undeclared area {b.area!r}", b.id)
        buses[b.id] = b

    for br in net.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in buses:
                raise GridError(f"branch {br.id!r} references undefined bus {end!r}", end)
        if br.from_bus == br.to_bus:
            raise GridError("branch connects a bus to itself", br.id)
        if br.z.r == 0.0 and br.z.x == 0.0:
            raise GridError("zero-impedance branch", br.id)

    machine_buses: set[str] = set()
    for m in net.machines:
        if m.bus not in buses:
            raise GridError(f"machine {m.id!r} references undefined bus {m.bus!r}", m.bus)
        if m.bus in machine_buses:
            raise GridError("only one machine per bus is supported", m.id)
        machine_buses.add(m.bus)
        if m.s_nom <= 0 or m.h <= 0 or m.xd_p <= 0:
            raise GridError("machine needs s_nom > 0, h > 0, xd_p > 0", m.id)
        if m.xd < m.xd_p:
            raise GridError("machine needs xd >= xd_p", m.id)
        for ctrl in (m.avr, m.gov):
            if ctrl is not None:
                try:
                    ctrl.validate()
                except ValueError as exc:
                    raise GridError(str(exc), m.id) from None

    for ld in net.loads:
        if ld.bus not in buses:
            raise GridError(f"load {ld.id!r} references undefined bus {ld.bus!r}", ld.bus)

    for b in net.buses:
        if b.is_boundary and net.area_by_id[b.area].external:
            raise GridError("boundary buses must belong to a retained area", b.id)

    # one slack per connected island of in-service branches
    idx = {b.id: i for i, b in enumerate(net.buses)}
    live = [br for br in net.branches if br.in_service]
    n = len(net.buses)
    rows = [idx[br.from_bus] for br in live]
    cols = [idx[br.to_bus] for br in live]
    graph = coo_matrix((np.ones(len(live)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)
    slack_count = np.zeros(n_comp, dtype=int)
    for b in net.buses:
        if b.kind == "slack":
            slack_count[labels[idx[b.id]]] += 1
    for comp in range(n_comp):
        if slack_count[comp] != 1:
            first = next(b.id for b in net.buses if labels[idx[b.id]] == comp)
            what = "no slack bus" if slack_count[comp] == 0 else "multiple slack buses"
            raise GridError(f"{what} in the island containing bus {first!r}", first)


def _schema() -> dict:
    text = resources.files("ward_ident").joinpath("data/grid.schema.json").read_text()
    return json.loads(text)


def network_from_dict(data: dict) -> Network:
    """Build a validated :class:`Network` from a parsed grid document."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        element = None
        if len(path) >= 2 and isinstance(path[1], int):
            try:
                element = data[path[0]][path[1]].get("id")
            except (AttributeError, KeyError, IndexError, TypeError):
                element = None
        where = "/".join(str(p) for p in path) or "<root>"
        raise GridError(f"schema violation at {where}: {err.message}", element)

    areas = tuple(Area(a["id"], bool(a.get("external", False))) for a in data.get("areas", []))
    default_area = areas[0].id if areas else "main"
    buses = []
    for b in data["buses"]:
        v_set = b.get("v_set")
        if v_set is None and b["kind"] in ("slack", "pv"):
            v_set = 1.0
        buses.append(Bus(b["id"], float(b["base_kv"]), b["kind"], None if v_set is None else float(v_set), b.get("area", default_area), bool(b.get("is_boundary", False))))
    branches = [Branch(br["id"], br["from"], br["to"], Impedance.from_dict(br["impedance"]), br.get("status", "in") == "in") for br in data["branches"]]
    machines = []
    for m in data.get("machines", []):
        try:
            avr = AvrAc5aParams.from_dict(m["avr"]) if m.get("avr") is not None else None
            gov = HydroGovParams.from_dict(m["gov"]) if m.get("gov") is not None else None
        except TypeError as exc:
            raise GridError(f"bad controller parameters: {exc}", m["id"]) from None
        machines.append(
            Machine(
                id=m["id"],
                bus=m["bus"],
                s_nom=float(m["s_nom_mva"]),
                h=float(m["h_s"]),
                xd_p=float(m["xd_p"]),
                xd=float(m.get("xd", max(1.8, m["xd_p"]))),
                td0_p=float(m.get("td0_p", 5.0)),
                d_damp=float(m.get("d_damp", 0.0)),
                p_mw=float(m.get("p_mw", 0.0)),
                q_mvar=float(m.get("q_mvar", 0.0)),
                q_min_mvar=m.get("q_min_mvar"),
                q_max_mvar=m.get("q_max_mvar"),
                avr=avr,
                gov=gov,
            )
        )
    loads = [Load(ld["id"], ld["bus"], float(ld["p_mw"]), float(ld["q_mvar"])) for ld in data.get("loads", [])]
    return Network(
        buses=tuple(buses),
        branches=tuple(branches),
        machines=tuple(machines),
        loads=tuple(loads),
        areas=areas,
        s_base=float(data["s_base_mva"]),
        f_nominal=float(data["f_nominal_hz"]),
        name=data.get("name", ""),
    )


def load_network(text: str) -> Network:
    """Parse a JSON grid document into a validated :class:`Network`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GridError(f"grid document is not valid JSON: {exc}") from None
    return network_from_dict(data)


def read_network(path: str | Path) -> Network:
    return load_network(Path(path).read_text())


# --------------------------------------------------------------------------
# generalized Ward equivalent


@dataclass(frozen=True)
class WardAreaParams:
    """Equivalent of one replaced area: series impedance, machine rating, load."""

    series: Impedance
    s_nom: float
    p_load: float
    q_load: float

    def to_dict(self) -> dict:
        return {"series": self.series.to_dict(), "s_nom_mva": self.s_nom, "load": {"p_mw": self.p_load, "q_mvar": self.q_load}}

    @classmethod
    def from_dict(cls, data: dict) -> WardAreaParams:
        return cls(Impedance.from_dict(data["series"]), float(data["s_nom_mva"]), float(data["load"]["p_mw"]), float(data["load"]["q_mvar"]))


@dataclass(frozen=True)
class WardEquivalentParams:
    areas: dict[str, WardAreaParams] = field(default_factory=dict)
    common: Impedance | None = None

    def to_dict(self) -> dict:
        return {
            "areas": {k: v.to_dict() for k, v in self.areas.items()},
            "common": None if self.common is None else self.common.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> WardEquivalentParams:
        common = data.get("common")
        return cls(
            areas={k: WardAreaParams.from_dict(v) for k, v in data["areas"].items()},
            common=None if common is None else Impedance.from_dict(common),
        )


def eq_bus_id(area: str) -> str:
    return f"{EQ_BUS_PREFIX}{area}"


def eq_machine_id(area: str) -> str:
    return f"G_EQ_{area}"


def eq_load_id(area: str) -> str:
    return f"L_EQ_{area}"


def eq_branch_id(area: str) -> str:
    return f"Z_EQ_{area}"


def external_areas_at(net: Network, bus_id: str) -> list[str]:
    """External areas reached from ``bus_id`` over a single branch."""
    found: list[str] = []
    for br in net.branches:
        if bus_id not in (br.from_bus, br.to_bus):
            continue
        other = br.to_bus if br.from_bus == bus_id else br.from_bus
        area = net.bus_by_id[other].area
        if net.area_by_id[area].external and area not in found:
            found.append(area)
    return found


def replaced_areas(net: Network, boundary: list[str]) -> dict[str, str]:
    """Map each external area adjacent to ``boundary`` to its boundary bus."""
    out: dict[str, str] = {}
    for b in boundary:
        if b not in net.bus_by_id:
            raise GridError("boundary bus not found", b)
        for area in external_areas_at(net, b):
            if area in out:
                raise GridError(f"area {area!r} touches more than one boundary bus", area)
            out[area] = b
    return out


def apply_ward_equivalent(
    net: Network,
    boundary: list[str],
    params: WardEquivalentParams,
    machine_template: Machine | None = None,
) -> Network:
    """Replace every external area adjacent to ``boundary`` by a Ward equivalent.

    Each replaced area becomes one bus holding one machine and one
    constant-power load, tied to its boundary bus through the identified
    series impedance. With two replaced areas the equivalent buses are linked
    by the common impedance. ``machine_template`` supplies the dynamic data
    (inertia, controls) of the equivalent machines; library defaults are used
    when omitted.
    """
    areas = replaced_areas(net, boundary)
    if not areas:
        raise GridError("no external area is adjacent to the boundary buses")
    if len(areas) > 2:
        raise GridError("at most two linked areas can share one common impedance")
    for area in areas:
        if area not in params.areas:
            raise GridError("equivalent parameters missing series impedance for area", area)
    if len(areas) == 2 and params.common is None:
        raise GridError("two linked areas need a common impedance", COMMON_BRANCH_ID)

    removed = {b.id for b in net.buses if b.area in areas}
    slack_lost = [b.id for b in net.buses if b.id in removed and b.kind == "slack"]
    if slack_lost:
        raise GridError("replaced area holds the slack bus", slack_lost[0])

    template = machine_template or Machine(id="", bus="", s_nom=1.0, h=4.0, xd_p=EQUIVALENT_XD_FLOOR, avr=AvrAc5aParams(), gov=HydroGovParams())

    buses = [b for b in net.buses if b.id not in removed]
    branches = [br for br in net.branches if br.from_bus not in removed and br.to_bus not in removed]
    machines = [m for m in net.machines if m.bus not in removed]
    loads = [ld for ld in net.loads if ld.bus not in removed]

    for area, bnd in areas.items():
        p = params.areas[area]
        eq = eq_bus_id(area)
        buses.append(Bus(eq, net.bus_by_id[bnd].base_kv, "pq", None, area, False))
        branches.append(Branch(eq_branch_id(area), bnd, eq, p.series))
        machines.append(
            replace(
                template,
                id=eq_machine_id(area),
                bus=eq,
                s_nom=p.s_nom,
                xd_p=EQUIVALENT_XD_FLOOR,
                xd=EQUIVALENT_XD_FLOOR,
                p_mw=0.0,
                q_mvar=0.0,
                q_min_mvar=None,
                q_max_mvar=None,
            )
        )
        loads.append(Load(eq_load_id(area), eq, p.p_load, p.q_load))
    if len(areas) == 2:
        a1, a2 = areas
        branches.append(Branch(COMMON_BRANCH_ID, eq_bus_id(a1), eq_bus_id(a2), params.common))

    return Network(
        buses=tuple(buses),
        branches=tuple(branches),
        machines=tuple(machines),
        loads=tuple(loads),
        areas=net.areas,
        s_base=net.s_base,
        f_nominal=net.f_nominal,
        name=f"{net.name} (Ward equivalent)" if net.name else "Ward equivalent",
    )


def with_machine(net: Network, machine: Machine) -> Network:
    """Copy of ``net`` with the machine of the same id replaced."""
    if machine.id not in net.machine_by_id:
        raise GridError("machine not found", machine.id)
    machines = tuple(machine if m.id == machine.id else m for m in net.machines)
    return replace(net, machines=machines)
