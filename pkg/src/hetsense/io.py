"""Tabular and raster I/O.

Sensor CSV columns, in order::

    id,x,y,network,noise_std,threshold,cost,reading

``network`` is ``H`` or ``L``; ``threshold`` is empty for ``H`` rows and a
number (``inf``/``-inf`` allowed) for ``L`` rows; ``reading`` is optional but
must be given for all rows or none. Lines starting with ``#`` are comments.

Rasters are written twice: as long-format CSV ``x,y,value`` and as a 16-bit
binary PGM whose comment lines record the ``min``/``max`` used for
normalization. PGM rows run from the largest ``y`` (top) to the smallest.
"""

from __future__ import annotations

import csv
import io
import math
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, SchemaError
from .network import HIGH, LOW, Sensor, SensorArray

SENSOR_COLUMNS = ("id", "x", "y", "network", "noise_std", "threshold", "cost", "reading")


def fmt(v) -> str:
    """Shortest round-tripping text for a number."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path: Path, header: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Columns and rows of a CSV written by :func:`write_csv` (comments skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# sensors
# ---------------------------------------------------------------------------


def _float(text: str, col: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"column {col!r}: not a number: {text!r}", line) from None
    if math.isnan(v):
        raise SchemaError(f"column {col!r}: NaN not allowed", line)
    return v


def ingest_sensors(path) -> tuple[SensorArray, np.ndarray | None]:
    """Read a sensor CSV into a canonically ordered array.

    Returns ``(array, readings)``; ``readings`` is aligned with the array
    order, or ``None`` when the file has no readings.
    """
    path = Path(path)
    text = path.read_text()
    physical = text.splitlines()
    content = [(i + 1, ln) for i, ln in enumerate(physical) if ln.strip() and not ln.lstrip().startswith("#")]
    if not content:
        raise SchemaError("empty sensor file", None)
    header_line, header = content[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    required = list(SENSOR_COLUMNS[:7])
    if cols[:7] != required or len(cols) > 8 or (len(cols) == 8 and cols[7] != "reading"):
        raise SchemaError(f"header must be {','.join(SENSOR_COLUMNS)} (reading optional), got {','.join(cols)}", header_line)
    if len(content) == 1:
        raise SchemaError("no sensor rows", header_line)

    sensors: list[Sensor] = []
    readings: dict[str, float] = {}
    seen: dict[str, int] = {}
    has_reading: bool | None = None
    for line, raw in content[1:]:
        row = [c.strip() for c in next(csv.reader([raw]))]
        if len(row) != len(cols):
            raise SchemaError(f"expected {len(cols)} fields, got {len(row)}", line)
        rec = dict(zip(cols, row))
        sid = rec["id"]
        if not sid:
            raise SchemaError("empty id", line)
        if sid in seen:
            raise DuplicateId(f"id {sid!r} already defined on line {seen[sid]}", line)
        seen[sid] = line
        net = rec["network"].upper()
        if net not in (HIGH, LOW):
            raise SchemaError(f"network must be H or L, got {rec['network']!r}", line)
        thr_text = rec["threshold"]
        if net == HIGH and thr_text:
            raise SchemaError(f"row {sid!r}: high-quality sensor must not have a threshold", line)
        if net == LOW and not thr_text:
            raise SchemaError(f"row {sid!r}: low-quality sensor needs a threshold", line)
        x = _float(rec["x"], "x", line)
        y = _float(rec["y"], "y", line)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SchemaError("coordinates must be finite", line)
        noise = _float(rec["noise_std"], "noise_std", line)
        cost = _float(rec["cost"], "cost", line)
        if not (noise >= 0 and math.isfinite(noise)):
            raise SchemaError("noise_std must be finite and >= 0", line)
        if not (cost >= 0 and math.isfinite(cost)):
            raise SchemaError("cost must be finite and >= 0", line)
        thr = _float(thr_text, "threshold", line) if net == LOW else None
        r_text = rec.get("reading", "")
        present = bool(r_text)
        if has_reading is None:
            has_reading = present
        elif present != has_reading:
            raise SchemaError("reading must be given for all rows or none", line)
        if present:
            rv = _float(r_text, "reading", line)
            if not math.isfinite(rv):
                raise SchemaError("reading must be finite", line)
            readings[sid] = rv
        sensors.append(Sensor(sid, x, y, net, noise, thr, cost))

    arr = SensorArray.of(sensors)
    obs = np.array([readings[s.id] for s in arr]) if has_reading else None
    return arr, obs


def write_sensors(path: Path, header: str, arr: SensorArray, readings=None) -> None:
    rows = []
    for i, s in enumerate(arr):
        rows.append(
            [
                s.id, s.x, s.y, s.network, s.noise_std,
                "" if s.threshold is None else s.threshold,
                s.cost,
                "" if readings is None else float(readings[i]),
            ]
        )
    write_csv(path, header, SENSOR_COLUMNS, rows)


# ---------------------------------------------------------------------------
# rasters
# ---------------------------------------------------------------------------


def write_raster_csv(path: Path, header: str, xs, ys, values) -> None:
    values = np.asarray(values)
    rows = ((x, y, values[j, i]) for j, y in enumerate(ys) for i, x in enumerate(xs))
    write_csv(path, header, ("x", "y", "value"), rows)


def write_pgm16(path: Path, header: str, values) -> tuple[float, float]:
    """Write ``values`` (ny, nx; row 0 = smallest y) as a P5 16-bit PGM.

    Returns the ``(min, max)`` used for normalization.
    """
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    scaled = np.zeros_like(v) if span == 0 else (v - lo) / span * 65535.0
    data = np.rint(scaled).astype(">u2")[::-1]
    ny, nx = v.shape
    head = f"P5\n# {header}\n# min={fmt(lo)} max={fmt(hi)}\n{nx} {ny}\n65535\n".encode("ascii")
    Path(path).write_bytes(head + data.tobytes())
    return lo, hi


_PGM_RANGE = re.compile(rb"# min=(\S+) max=(\S+)")


def read_pgm16(path: Path) -> np.ndarray:
    """Read a PGM written by :func:`write_pgm16` back to de-normalized values."""
    blob = Path(path).read_bytes()
    if not blob.startswith(b"P5"):
        raise ValueError("not a binary PGM")
    pos = 2
    tokens: list[bytes] = []
    lo = hi = None
    while len(tokens) < 3:
        while blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            end = blob.index(b"\n", pos)
            m = _PGM_RANGE.match(blob[pos:end])
            if m:
                lo, hi = float(m.group(1)), float(m.group(2))
            pos = end + 1
            continue
        end = pos
        while not blob[end : end + 1].isspace():
            end += 1
        tokens.append(blob[pos:end])
        pos = end
    pos += 1  # single whitespace before the raster
    nx, ny, maxval = (int(t) for t in tokens)
    if maxval != 65535:
        raise ValueError("expected a 16-bit PGM")
    raw = np.frombuffer(blob, dtype=">u2", count=nx * ny, offset=pos).reshape(ny, nx)[::-1]
    if lo is None:
        raise ValueError("PGM lacks a min/max comment")
    return lo + raw.astype(float) / 65535.0 * (hi - lo)
