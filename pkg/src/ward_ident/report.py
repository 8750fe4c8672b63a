"""Comparison tables and overlay curves for an identification run."""

from __future__ import annotations

from pathlib import Path

from .objectives import SteadyReference
from .pmu import align
from .signals import SignalSet

FLOW_HEADER = "element, Po, P_new, dP, Qo, Q_new, dQ"
SCC_HEADER = "element, Skss, Skss_new, dSkss, Ikss, Ikss_new, dIkss"
OVERLAY_HEADER = "t, reference, equivalent"


def _num(x: float, digits: int) -> float:
    return round(float(x), digits) + 0.0


def _cells(orig: float, new: float, digits: int) -> list[str]:
    o, n = _num(orig, digits), _num(new, digits)
    return [repr(o), repr(n), repr(_num(abs(n - o), digits))]


def flow_rows(ref: dict[str, tuple[float, float]], new: dict[str, tuple[float, float]]) -> list[str]:
    """One row per compared element; deltas are taken from the printed values."""
    rows = []
    for key in ref:
        (po, qo), (pn, qn) = ref[key], new[key]
        rows.append(", ".join([key, *_cells(po, pn, 2), *_cells(qo, qn, 2)]))
    return rows


def scc_rows(ref: SteadyReference, new: SteadyReference) -> list[str]:
    rows = []
    for bus in ref.skss:
        rows.append(", ".join([bus, *_cells(ref.skss[bus], new.skss[bus], 2), *_cells(ref.ikss[bus], new.ikss[bus], 3)]))
    return rows


def flow_table(ref: SteadyReference, new: SteadyReference) -> str:
    return "\n".join([FLOW_HEADER, *flow_rows(ref.flows, new.flows)]) + "\n"


def scc_table(ref: SteadyReference, new: SteadyReference) -> str:
    return "\n".join([SCC_HEADER, *scc_rows(ref, new)]) + "\n"


def params_table(values: dict[str, float]) -> str:
    lines = ["parameter, value"]
    lines += [f"{k}, {format(float(v), '.10g')}" for k, v in sorted(values.items())]
    return "\n".join(lines) + "\n"


def overlay_csv(t, ref, eq) -> str:
    lines = [OVERLAY_HEADER]
    lines += [f"{format(float(a), '.12g')}, {format(float(b), '.12g')}, {format(float(c), '.12g')}" for a, b, c in zip(t, ref, eq)]
    return "\n".join(lines) + "\n"


def overlay_name(cid: str) -> str:
    return cid.replace(":", ".") + ".csv"


def write_overlays(out: Path, label: str, ref: SignalSet, sim: SignalSet) -> list[Path]:
    a, b = align(ref, sim)
    folder = out / label
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    for cid, r in a.channels.items():
        p = folder / overlay_name(cid)
        p.write_text(overlay_csv(a.t, r, b.channels[cid]))
        paths.append(p)
    return paths


def write_steady_report(out: Path, ref: SteadyReference, new: SteadyReference) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "flows.csv").write_text(flow_table(ref, new))
    (out / "scc.csv").write_text(scc_table(ref, new))
