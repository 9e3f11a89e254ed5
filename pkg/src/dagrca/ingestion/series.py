"""Raw timestamped series and the scrape window they are resampled onto."""
import math
import time
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from .frame import split_metric_id

DEFAULT_STEP = 5.0
DEFAULT_WINDOW_SECONDS = 300.0


@dataclass(frozen=True, eq=False)
class RawSeries:
    """One metric's (epoch-seconds, value) samples, timestamps strictly increasing."""

    metric_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        split_metric_id(self.metric_id)
        ts = np.array(self.timestamps, dtype=np.float64).reshape(-1)
        vs = np.array(self.values, dtype=np.float64).reshape(-1)
        if ts.shape != vs.shape:
            raise ContractError(
                f"{self.metric_id}: {ts.size} timestamps but {vs.size} values")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(vs))):
            raise ContractError(f"{self.metric_id}: non-finite timestamp or value")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
            raise ContractError(f"{self.metric_id}: timestamps not strictly increasing at point {bad}")
        ts.setflags(write=False)
        vs.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self):
        return self.timestamps.size

    @property
    def points(self):
        return list(zip(self.timestamps.tolist(), self.values.tolist()))

    def __eq__(self, other):
        if not isinstance(other, RawSeries):
            return NotImplemented
        return (self.metric_id == other.metric_id
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"RawSeries({self.metric_id!r}, {len(self)} points)"


@dataclass(frozen=True)
class ScrapeWindow:
    """Closed interval ``[start, end]`` sampled every ``step`` seconds."""

    start: float
    end: float
    step: float = DEFAULT_STEP

    def __post_init__(self):
        for name in ("start", "end", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ContractError(f"window {name} must be finite")
        if not self.start < self.end:
            raise ContractError(f"window start {self.start} must precede end {self.end}")
        if not self.step > 0:
            raise ContractError("window step must be positive")

    @classmethod
    def last(cls, seconds=DEFAULT_WINDOW_SECONDS, step=DEFAULT_STEP, now=None):
        """The ``seconds`` before ``now`` (default: the current time)."""
        end = float(time.time() if now is None else now)
        return cls(end - float(seconds), end, float(step))

    def grid(self):
        count = int(math.floor((self.end - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)
