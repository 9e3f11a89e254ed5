"""CSV files with a ``timestamp`` column followed by one column per metric.

Empty cells mark a missing sample for that metric; alignment fills or
rejects the gap later.
"""
import csv
import math

import numpy as np

from ..errors import ContractError, ParseError
from .frame import split_metric_id
from .series import RawSeries

TIMESTAMP = "timestamp"


def _number(text, row, column, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric {what} {text!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", row=row, column=column)
    return value


def load_csv(path):
    """Read ``path`` into one :class:`RawSeries` per metric column.

    Row numbers in errors are 1-based file lines (the header is line 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError("empty file", row=1)
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != TIMESTAMP:
        raise ParseError(f"first column must be {TIMESTAMP!r}, got {header[0]!r}", row=1, column=1)
    ids = header[1:]
    if not ids:
        raise ParseError("no metric columns", row=1)
    seen = {}
    for j, mid in enumerate(ids, start=2):
        if mid in seen:
            raise ParseError(f"duplicate column {mid!r} (first at column {seen[mid]})",
                             row=1, column=j)
        seen[mid] = j
        try:
            split_metric_id(mid)
        except ContractError as exc:
            raise ParseError(str(exc), row=1, column=j) from None

    times = [[] for _ in ids]
    values = [[] for _ in ids]
    previous = None
    for line, cells in enumerate(rows[1:], start=2):
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(cells)}", row=line)
        t = _number(cells[0].strip(), line, 1, "timestamp")
        if previous is not None and t <= previous:
            raise ParseError(f"timestamp {cells[0].strip()} not after {previous!r}", row=line, column=1)
        previous = t
        for j, cell in enumerate(cells[1:]):
            cell = cell.strip()
            if not cell:
                continue
            values[j].append(_number(cell, line, j + 2, "value"))
            times[j].append(t)
    return [RawSeries(mid, ts, vs) for mid, ts, vs in zip(ids, times, values)]


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(series, path):
    """Write ``series`` (RawSeries list or a MetricFrame with timestamps).

    Rows cover the union of all timestamps; a series without a sample at a
    row gets an empty cell. Numbers use 17 significant digits, which is
    enough to read back the exact same doubles.
    """
    if hasattr(series, "metric_ids"):
        frame = series
        ts = frame.timestamps
        if ts is None:
            ts = np.arange(frame.n_samples) * frame.sample_period_seconds
        series = [RawSeries(mid, ts, frame.data[:, j]) for j, mid in enumerate(frame.metric_ids)]
    union = np.unique(np.concatenate([s.timestamps for s in series])) if series else np.array([])
    lookup = [dict(zip(s.timestamps.tolist(), s.values.tolist())) for s in series]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([TIMESTAMP] + [s.metric_id for s in series])
        for t in union.tolist():
            writer.writerow([_fmt(t)] + [_fmt(d[t]) if t in d else "" for d in lookup])
