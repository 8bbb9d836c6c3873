from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ContractError


@dataclass(frozen=True, eq=False)
class Contour:
    """Uniformly sampled track; NaN marks undefined (e.g. unvoiced) frames.

    Attributes:
        t0_s: center time of the first frame.
        dt_s: time step between frame centers.
        values: per-frame values.
    """

    t0_s: float
    dt_s: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ContractError("contour time step must be positive")
        values = np.asarray(self.values, dtype=np.float64)
        if np.isinf(values).any():
            raise ContractError("contour values must be finite or NaN")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0_s + self.dt_s * np.arange(len(self.values))

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def restrict(self, t_start_s: float, t_end_s: float) -> "Contour":
        """Frames whose center lies in [t_start_s, t_end_s]."""
        t = self.times
        keep = np.flatnonzero((t >= t_start_s) & (t <= t_end_s))
        if keep.size == 0:
            return Contour(t_start_s, self.dt_s, np.empty(0))
        return Contour(float(t[keep[0]]), self.dt_s, self.values[keep[0] : keep[-1] + 1])

    def __eq__(self, other):
        if not isinstance(other, Contour):
            return NotImplemented
        return (
            self.t0_s == other.t0_s
            and self.dt_s == other.dt_s
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None
