"""Resample raw series onto a common grid and standardize them."""
import numpy as np

from ..errors import AlignmentError, ContractError
from .frame import MetricFrame, standardize


def resample(series, grid, step):
    """Values of ``series`` on ``grid``.

    A grid point takes the nearest sample within ``step / 2``. Otherwise it
    is linearly interpolated between the samples on either side, provided
    they are at most ``2 * step`` apart; anything wider (including a grid
    point before the first or after the last sample) is an error.
    """
    ts, vs = series.timestamps, series.values
    if ts.size == 0 or ts[-1] < grid[0] - step / 2 or ts[0] > grid[-1] + step / 2:
        raise ContractError(f"{series.metric_id}: no samples overlap the window")
    out = np.empty(grid.size)
    right = np.searchsorted(ts, grid)  # first sample >= grid point
    half = step / 2.0 * (1.0 + 1e-9)
    for g, (t, r) in enumerate(zip(grid, right)):
        lo = r - 1 if r > 0 else None
        hi = r if r < ts.size else None
        d_lo = t - ts[lo] if lo is not None else np.inf
        d_hi = ts[hi] - t if hi is not None else np.inf
        if min(d_lo, d_hi) <= half:
            # ties go to the earlier sample
            out[g] = vs[lo] if d_lo <= d_hi else vs[hi]
            continue
        if lo is None or hi is None:
            edge = "start" if lo is None else "end"
            raise AlignmentError(
                f"{series.metric_id}: no sample within {step / 2:g}s of window {edge} "
                f"at t={t:.17g}")
        gap = ts[hi] - ts[lo]
        if gap > 2.0 * step * (1.0 + 1e-9):
            raise AlignmentError(
                f"{series.metric_id}: gap of {gap:g}s between t={ts[lo]:.17g} and "
                f"t={ts[hi]:.17g} exceeds {2 * step:g}s")
        w = (t - ts[lo]) / gap
        out[g] = (1.0 - w) * vs[lo] + w * vs[hi]
    return out


def align(series, window, difference=()):
    """Grid every series onto ``window`` without standardizing.

    Metric ids listed in ``difference`` are replaced by their first
    difference (useful for monotone counters); in that case the first grid
    row is dropped from every column so all columns stay the same length.
    """
    series = list(series)
    if len(series) < 2:
        raise ContractError(f"need at least 2 series, got {len(series)}")
    ids = [s.metric_id for s in series]
    unknown = set(difference) - set(ids)
    if unknown:
        raise ContractError(f"difference requested for unknown metrics {sorted(unknown)}")
    grid = window.grid()
    data = np.column_stack([resample(s, grid, window.step) for s in series])
    if difference:
        cols = [i for i, mid in enumerate(ids) if mid in set(difference)]
        diffed = np.diff(data[:, cols], axis=0)
        data = data[1:]
        data[:, cols] = diffed
        grid = grid[1:]
    return MetricFrame(data, ids, sample_period_seconds=window.step, timestamps=grid)


def align_and_standardize(series, window, difference=()):
    """:func:`align` followed by per-column population z-scores."""
    return standardize(align(series, window, difference))
