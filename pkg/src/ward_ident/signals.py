"""Time-aligned multi-channel signal container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUANTITIES = ("vmag_pu", "vang_rad", "freq_hz", "p_mw", "q_mvar")
BUS_QUANTITIES = ("vmag_pu", "vang_rad", "freq_hz")
FLOW_QUANTITIES = ("p_mw", "q_mvar")


def channel_id(location: str, quantity: str) -> str:
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    return f"{location}:{quantity}"


def split_channel(cid: str) -> tuple[str, str]:
    """``"B1:vmag_pu"`` -> ``("B1", "vmag_pu")``."""
    loc, sep, qty = cid.rpartition(":")
    if not sep or not loc or qty not in QUANTITIES:
        raise ValueError(f"malformed channel id {cid!r}")
    return loc, qty


def uniform_step(t: np.ndarray, atol: float) -> float:
    """Step of a uniform grid; raises ValueError naming the first bad sample."""
    if t.size < 2:
        raise ValueError("a signal set needs at least two samples")
    d = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0:
        raise ValueError("time must be strictly increasing")
    bad = np.flatnonzero(np.abs(d - dt) > atol)
    if bad.size:
        k = int(bad[0]) + 1
        raise ValueError(f"non-uniform time step at sample {k} (t={t[k]!r})")
    return float(dt)


@dataclass(frozen=True)
class SignalSet:
    """Channels sampled on a common uniform time grid.

    Channel ids have the form ``<location>:<quantity>``.
    """

    t: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    f_nominal: float = 50.0

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        chans = {}
        for cid, values in self.channels.items():
            split_channel(cid)
            arr = np.asarray(values, dtype=float)
            if arr.shape != t.shape:
                raise ValueError(f"channel {cid!r} has {arr.size} samples, time has {t.size}")
            chans[cid] = arr
        object.__setattr__(self, "channels", chans)
        uniform_step(t, 1e-12 * max(1.0, float(np.max(np.abs(t)))))

    @property
    def dt(self) -> float:
        return float((self.t[-1] - self.t[0]) / (self.t.size - 1))

    def __getitem__(self, cid: str) -> np.ndarray:
        return self.channels[cid]

    def select(self, cids) -> SignalSet:
        return SignalSet(self.t, {c: self.channels[c] for c in cids}, self.f_nominal)
