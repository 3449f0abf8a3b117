"""Time grids ``0 = t_0 < t_1 < ... < t_M = T``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 2:
            raise ConfigurationError("a time grid needs at least two points")
        if not np.all(np.isfinite(t)):
            raise ConfigurationError("grid times must be finite")
        if t[0] != 0.0:
            raise ConfigurationError(f"grid must start at 0, got {t[0]!r}")
        if np.any(np.diff(t) <= 0):
            raise ConfigurationError("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, T, M):
        if M < 1 or T <= 0:
            raise ConfigurationError(f"need T > 0 and M >= 1, got T={T!r}, M={M!r}")
        return cls(np.linspace(0.0, float(T), int(M) + 1))

    @classmethod
    def dyadic(cls, T, level):
        return cls.uniform(T, 2 ** int(level))

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def n_cells(self):
        return self.times.size - 1

    @property
    def dt(self):
        return np.diff(self.times)

    @property
    def mesh(self):
        return float(np.max(self.dt))

    def __len__(self):
        return self.n_cells

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    def __hash__(self):
        return hash(self.times.tobytes())

    def embedding(self, fine, atol=1e-12):
        """Indices of this grid's points inside the finer grid ``fine``.

        Raises ConfigurationError unless every point of ``self`` is (within
        ``atol``) a point of ``fine`` and both end at the same T.
        """
        idx = np.searchsorted(fine.times, self.times - atol)
        idx = np.clip(idx, 0, fine.times.size - 1)
        if not np.allclose(fine.times[idx], self.times, rtol=0, atol=atol) or idx[-1] != fine.n_cells:
            raise ConfigurationError("grid is not a subgrid of the driving path grid")
        return idx

    def to_list(self):
        return self.times.tolist()


def as_grid(spec):
    """Build a TimeGrid from a TimeGrid, a sequence of times or ``{"T":..,"M":..}``."""
    if isinstance(spec, TimeGrid):
        return spec
    if isinstance(spec, dict):
        if "times" in spec:
            return TimeGrid(spec["times"])
        return TimeGrid.uniform(spec.get("T", 1.0), spec["M"])
    return TimeGrid(spec)
