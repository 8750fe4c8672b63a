"""Synthetic PMU disturbance records: CSV read/write and grid alignment."""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .errors import RecordError
from .signals import SignalSet, split_channel

FORMAT_VERSION = "v1"
DT_TOL = 1e-9
_HEADER = re.compile(r"^# pmu-record (\S+), f_nominal=(\S+), dt=(\S+)$")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def format_records(signals: SignalSet) -> str:
    """Canonical text of a record file (LF line endings, 12 significant digits)."""
    if not signals.channels:
        raise RecordError("a record must carry at least one channel")
    cids = list(signals.channels)
    lines = [
        f"# pmu-record {FORMAT_VERSION}, f_nominal={_fmt(signals.f_nominal)}, dt={_fmt(signals.dt)}",
        ",".join(["t_s", *cids]),
    ]
    cols = [signals.t] + [signals.channels[c] for c in cids]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_records(signals: SignalSet, path: str | Path) -> Path:
    path = Path(path)
    text = format_records(signals)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def parse_records(text: str) -> SignalSet:
    """Parse record text; errors carry the 1-based line number."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise RecordError("record file needs a header, a column line and data", 1)
    m = _HEADER.match(lines[0].rstrip("\r"))
    if not m:
        raise RecordError("malformed header, expected '# pmu-record v1, f_nominal=<Hz>, dt=<s>'", 1)
    version, f_txt, dt_txt = m.groups()
    if version != FORMAT_VERSION:
        raise RecordError(f"unsupported record version {version!r}", 1)
    try:
        f_nominal, dt = float(f_txt), float(dt_txt)
    except ValueError:
        raise RecordError("non-numeric f_nominal or dt in header", 1) from None
    if not (dt > 0 and math.isfinite(dt)):
        raise RecordError("header dt must be positive", 1)

    names = lines[1].rstrip("\r").split(",")
    if names[0] != "t_s" or len(names) < 2:
        raise RecordError("column line must start with 't_s' and name at least one channel", 2)
    for cid in names[1:]:
        try:
            split_channel(cid)
        except ValueError as exc:
            raise RecordError(str(exc), 2) from None
    if len(set(names)) != len(names):
        raise RecordError("duplicate channel id", 2)

    width = len(names)
    rows = []
    for n, line in enumerate(lines[2:], start=3):
        fields = line.rstrip("\r").split(",")
        if len(fields) != width:
            raise RecordError(f"expected {width} columns, found {len(fields)}", n)
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise RecordError("non-numeric value", n) from None
    if len(rows) < 2:
        raise RecordError("record needs at least two data rows", len(lines))

    data = np.array(rows)
    t = data[:, 0]
    for k in range(1, t.size):
        step = t[k] - t[k - 1]
        if abs(step - dt) > DT_TOL:
            raise RecordError(f"non-uniform time step {step!r} (dt={dt!r})", k + 3)
    # Decimal text carries up to ~1e-12 jitter; snap onto the exact grid.
    t = t[0] + dt * np.arange(t.size)
    return SignalSet(t, {c: data[:, i + 1] for i, c in enumerate(names[1:])}, f_nominal)


def read_records(path: str | Path) -> SignalSet:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise RecordError(f"cannot read {path}: {exc.strerror}") from None
    return parse_records(text)


def align(a: SignalSet, b: SignalSet, rtol: float = 1e-9) -> tuple[SignalSet, SignalSet]:
    """Restrict both sets to their overlap, resampled onto the coarser step."""
    if a.t.shape == b.t.shape and np.array_equal(a.t, b.t):
        return a, b
    lo = max(a.t[0], b.t[0])
    hi = min(a.t[-1], b.t[-1])
    if hi <= lo:
        raise RecordError("signal sets do not overlap in time")
    fine, coarse = sorted((a.dt, b.dt))
    ratio = coarse / fine
    if abs(ratio - round(ratio)) > rtol * ratio:
        raise RecordError(f"incommensurate steps {a.dt!r} and {b.dt!r}")
    n = int(math.floor((hi - lo) / coarse * (1 + rtol))) + 1
    t = lo + coarse * np.arange(n)
    t[-1] = min(t[-1], hi)

    def resample(s: SignalSet) -> SignalSet:
        return SignalSet(t, {c: np.interp(t, s.t, v) for c, v in s.channels.items()}, s.f_nominal)

    return resample(a), resample(b)
