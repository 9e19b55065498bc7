"""Telemetry ingestion: the Measurement record, CSV parsing and decimation.

CSV schema: header ``ts,v_pv,i_pv,t_c[,g_meas][,p_pv]``, UTF-8, units
V / A / degC / W/m^2 / W. Timestamps are Unix seconds or ISO-8601
(auto-detected). Rows that violate the measurement invariants are rejected
with a line-numbered ParseError; timestamp gaps are logged, not filled.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ParseError, SchemaError

log = logging.getLogger(__name__)

# A sample is dark when voltage AND current sit below these floors.
DARK_V_FLOOR = 1.0  # V
DARK_I_FLOOR = 0.5  # A

G_MEAS_RANGE = (0.0, 1500.0)
P_CONSISTENCY_RTOL = 0.005

REQUIRED_COLUMNS = ("ts", "v_pv", "i_pv", "t_c")
OPTIONAL_COLUMNS = ("g_meas", "p_pv")


@dataclass(frozen=True)
class Measurement:
    """One telemetry sample. ``p_meas`` defaults to ``v_meas * i_meas``."""

    ts: float
    v_meas: float
    i_meas: float
    t_meas: float
    g_meas: float | None = None
    p_meas: float | None = None

    def __post_init__(self):
        if self.p_meas is None:
            object.__setattr__(self, "p_meas", self.v_meas * self.i_meas)

    def is_dark(self, v_floor: float = DARK_V_FLOOR, i_floor: float = DARK_I_FLOOR) -> bool:
        return self.v_meas < v_floor and self.i_meas < i_floor


def _parse_ts(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"unrecognized timestamp {raw!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _validate_row(ts, v, i, t_c, g, p, line: int) -> Measurement:
    if not all(math.isfinite(x) for x in (ts, v, i, t_c)):
        raise ParseError("non-finite value", line)
    if v < 0.0:
        raise ParseError(f"negative voltage {v}", line)
    if i < 0.0:
        raise ParseError(f"negative current {i}", line)
    if g is not None and not G_MEAS_RANGE[0] <= g <= G_MEAS_RANGE[1]:
        raise ParseError(f"g_meas {g} outside {G_MEAS_RANGE}", line)
    if p is not None:
        ref = v * i
        if abs(p - ref) > P_CONSISTENCY_RTOL * max(abs(ref), 1e-9) and ref > 1e-9:
            raise ParseError(f"p_pv {p} inconsistent with v*i = {ref:.6g}", line)
    return Measurement(ts=ts, v_meas=v, i_meas=i, t_meas=t_c, g_meas=g, p_meas=p)


def parse_telemetry(text: str, schema: dict[str, str] | None = None) -> list[Measurement]:
    """Parse telemetry CSV text into a timestamp-sorted measurement list.

    ``schema`` optionally remaps logical column names (``ts``, ``v_pv``, ...)
    to the file's header names.
    """
    schema = schema or {}
    names = {logical: schema.get(logical, logical)
             for logical in REQUIRED_COLUMNS + OPTIONAL_COLUMNS}

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty telemetry file") from None
    header = [h.strip() for h in header]
    col = {}
    for logical in REQUIRED_COLUMNS:
        if names[logical] not in header:
            raise SchemaError(f"missing required column {names[logical]!r}")
        col[logical] = header.index(names[logical])
    for logical in OPTIONAL_COLUMNS:
        col[logical] = header.index(names[logical]) if names[logical] in header else None

    out: list[Measurement] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            ts = _parse_ts(row[col["ts"]].strip())
            v = float(row[col["v_pv"]])
            i = float(row[col["i_pv"]])
            t_c = float(row[col["t_c"]])
            g = float(row[col["g_meas"]]) if col["g_meas"] is not None and row[col["g_meas"]].strip() != "" else None
            p = float(row[col["p_pv"]]) if col["p_pv"] is not None and row[col["p_pv"]].strip() != "" else None
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), line_no) from exc
        out.append(_validate_row(ts, v, i, t_c, g, p, line_no))

    out.sort(key=lambda m: m.ts)
    _report_gaps(out)
    return out


def load_telemetry(path: str | Path, schema: dict[str, str] | None = None) -> list[Measurement]:
    """Load and validate a telemetry CSV file."""
    return parse_telemetry(Path(path).read_text(encoding="utf-8"), schema=schema)


def _report_gaps(stream: list[Measurement]):
    if len(stream) < 3:
        return
    dts = [b.ts - a.ts for a, b in zip(stream, stream[1:])]
    dts_sorted = sorted(dts)
    typical = dts_sorted[len(dts_sorted) // 2]
    if typical <= 0:
        return
    gaps = sum(1 for dt in dts if dt > 2.5 * typical)
    if gaps:
        log.warning("telemetry has %d gaps longer than 2.5x the typical step (%.3gs)",
                    gaps, typical)


def resample(stream: list[Measurement], resample_s: float) -> list[Measurement]:
    """Decimate a stream to one sample per ``resample_s`` boundary.

    Takes the first sample at-or-after each boundary (no averaging, so the
    sub-interval dynamics of the kept samples are preserved). The number of
    dropped samples is logged.
    """
    if resample_s <= 0:
        raise ValueError("resample_s must be positive")
    if not stream:
        return []
    out: list[Measurement] = []
    t0 = stream[0].ts
    k = 0
    for m in stream:
        boundary = t0 + k * resample_s
        if m.ts >= boundary:
            out.append(m)
            # skip boundaries the stream jumped over
            k = math.floor((m.ts - t0) / resample_s) + 1
    dropped = len(stream) - len(out)
    if dropped:
        log.info("resample dropped %d of %d samples", dropped, len(stream))
    return out


def measurements_to_csv(stream: list[Measurement], include_g: bool = True,
                        include_p: bool = True) -> str:
    """Serialize measurements back to the telemetry CSV schema."""
    cols = ["ts", "v_pv", "i_pv", "t_c"]
    if include_g:
        cols.append("g_meas")
    if include_p:
        cols.append("p_pv")
    lines = [",".join(cols)]
    for m in stream:
        row = [repr(float(m.ts)), repr(float(m.v_meas)), repr(float(m.i_meas)),
               repr(float(m.t_meas))]
        if include_g:
            row.append("" if m.g_meas is None else repr(float(m.g_meas)))
        if include_p:
            row.append(repr(float(m.p_meas)))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
