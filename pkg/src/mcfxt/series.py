"""Timestamped crosstalk series, the unit of all analysis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class XtSeries:
    """Crosstalk samples in dB (10 log10 of the power ratio).

    ``averaging_time`` is the integration time behind each sample, in
    seconds.  ``metadata`` carries provenance (source, temperature, seed,
    cores) and is copied, never shared, by the transforming functions.
    """

    timestamps: np.ndarray
    xt_db: np.ndarray
    averaging_time: float
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.array(self.timestamps, dtype=float)
        x = np.array(self.xt_db, dtype=float)
        if t.ndim != 1 or t.shape != x.shape:
            raise ConfigurationError("timestamps and xt_db must be equal-length 1-D arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ConfigurationError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ConfigurationError("series contains non-finite values")
        if not self.averaging_time > 0:
            raise ConfigurationError("averaging_time must be > 0")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "xt_db", x)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return int(self.xt_db.size)

    @property
    def linear(self) -> np.ndarray:
        return 10.0 ** (self.xt_db / 10.0)

    @property
    def sample_interval(self) -> float:
        if len(self) < 2:
            return self.averaging_time
        return float(np.median(np.diff(self.timestamps)))

    @property
    def span(self) -> float:
        """Covered time: number of samples times the sample interval."""
        return len(self) * self.sample_interval

    def with_metadata(self, **updates) -> "XtSeries":
        meta = dict(self.metadata)
        meta.update(updates)
        return replace(self, metadata=meta)

    def equals(self, other: "XtSeries") -> bool:
        """Bit-identical samples, timestamps and averaging time."""
        return (
            self.averaging_time == other.averaging_time
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.xt_db, other.xt_db)
        )
