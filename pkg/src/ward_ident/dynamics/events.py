"""Disturbance events and the JSON event-script format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError

EVENT_KINDS = ("load_step", "bus_fault", "line_fault_and_trip", "line_trip")


@dataclass(frozen=True)
class Event:
    """One scripted disturbance.

    ``params`` by kind:
      * ``load_step``: ``fraction`` (scales P and Q) or ``delta_p_mw`` /
        ``delta_q_mvar``.
      * ``bus_fault``: ``clear_after`` seconds, optional ``y_fault`` pu.
      * ``line_fault_and_trip``: ``location`` in (0, 1) from the from-bus,
        ``clear_after`` seconds, optional ``y_fault``.
      * ``line_trip``: none.
    """

    kind: str
    target: str
    t_start: float
    params: dict = field(default_factory=dict)
    name: str = ""
    t_end: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {self.kind!r}", self.name or self.target)
        if self.t_start < 0:
            raise ValidationError("event t_start must be >= 0", self.name or self.target)
        if self.kind in ("bus_fault", "line_fault_and_trip"):
            if float(self.params.get("clear_after", 0.0)) <= 0:
                raise ValidationError("fault clearing delay must be > 0", self.name or self.target)
        if self.kind == "line_fault_and_trip":
            loc = float(self.params.get("location", 0.5))
            if not 0.0 < loc < 1.0:
                raise ValidationError("fault location fraction must lie in (0, 1)", self.name or self.target)
        if self.kind == "load_step" and not ({"fraction", "delta_p_mw", "delta_q_mvar"} & set(self.params)):
            raise ValidationError("load step needs 'fraction' or 'delta_p_mw'/'delta_q_mvar'", self.name or self.target)

    @property
    def category(self) -> str:
        """``"frequency"`` for load steps, ``"voltage"`` for faults and trips."""
        return "frequency" if self.kind == "load_step" else "voltage"

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}_{self.target}"

    @classmethod
    def from_dict(cls, data: dict) -> Event:
        try:
            return cls(
                kind=data["kind"],
                target=data["target"],
                t_start=float(data.get("t_start", 0.0)),
                params=dict(data.get("params", {})),
                name=data.get("name", ""),
                t_end=None if data.get("t_end") is None else float(data["t_end"]),
            )
        except KeyError as exc:
            raise ValidationError(f"event record missing field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "target": self.target, "t_start": self.t_start, "params": self.params}
        if self.t_end is not None:
            d["t_end"] = self.t_end
        return d


def load_events(text: str) -> list[Event]:
    """Parse an event script: a JSON list of event records."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"event script is not valid JSON: {exc}") from None
    if isinstance(data, dict) and "events" in data:
        data = data["events"]
    if not isinstance(data, list):
        raise ValidationError("event script must be a list of event records")
    return [Event.from_dict(d) for d in data]


def read_events(path: str | Path) -> list[Event]:
    return load_events(Path(path).read_text())
