"""Sample matrices with metric identities."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ContractError


def split_metric_id(metric_id):
    """``"service/metric"`` -> ``("service", "metric")``; both parts required."""
    service, sep, metric = str(metric_id).partition("/")
    if not sep or not service or not metric or "/" in metric:
        raise ContractError(f"metric id {metric_id!r} is not of the form 'service/metric'")
    return service, metric


@dataclass(frozen=True, eq=False)
class MetricFrame:
    """``data`` is (n samples x m metrics); column j belongs to ``metric_ids[j]``.

    ``degenerate`` flags zero-variance columns found during standardization.
    ``timestamps`` is optional and only informative.
    """

    data: np.ndarray
    metric_ids: tuple
    sample_period_seconds: float = 5.0
    degenerate: np.ndarray = field(default=None)
    timestamps: np.ndarray = field(default=None)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        ids = tuple(str(x) for x in self.metric_ids)
        if data.ndim != 2:
            raise ContractError(f"data must be 2-D, got shape {data.shape}")
        n, m = data.shape
        if n < 2 or m < 2:
            raise ContractError(f"need at least 2 samples and 2 metrics, got {n}x{m}")
        if len(ids) != m:
            raise ContractError(f"{len(ids)} metric ids for {m} columns")
        if len(set(ids)) != m:
            raise ContractError("metric ids must be unique")
        for mid in ids:
            split_metric_id(mid)
        if not np.all(np.isfinite(data)):
            raise ContractError("data contains NaN or infinite entries")
        if self.sample_period_seconds <= 0:
            raise ContractError("sample period must be positive")
        deg = (np.zeros(m, dtype=bool) if self.degenerate is None
               else np.array(self.degenerate, dtype=bool))
        if deg.shape != (m,):
            raise ContractError("degenerate mask must have one flag per column")
        data.setflags(write=False)
        deg.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "metric_ids", ids)
        object.__setattr__(self, "degenerate", deg)
        if self.timestamps is not None:
            ts = np.array(self.timestamps, dtype=np.float64)
            if ts.shape != (n,):
                raise ContractError("timestamps must have one entry per sample")
            object.__setattr__(self, "timestamps", ts)

    @property
    def n_samples(self):
        return self.data.shape[0]

    @property
    def n_metrics(self):
        return self.data.shape[1]

    def with_data(self, data, **changes):
        return replace(self, data=data, **changes)


def standardize(frame, tol=1e-12):
    """Per-column z-scores with the population (1/n) standard deviation.

    Columns whose standard deviation is at most ``tol`` times their scale are
    set to zero and flagged as degenerate; column positions never change.
    """
    x = frame.data
    mean = x.mean(axis=0)
    centered = x - mean
    std = np.sqrt((centered ** 2).mean(axis=0))
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    degenerate = std <= tol * scale
    out = np.zeros_like(x)
    live = ~degenerate
    out[:, live] = centered[:, live] / std[live]
    return frame.with_data(out, degenerate=degenerate | frame.degenerate)
