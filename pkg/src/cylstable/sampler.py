"""Exact seeded sampling of symmetric and positive stable randomness.

The truncated cylindrical process is realised through the sub-Gaussian
representation: over a cell of length ``dt`` the increment of the first
``d_G`` coordinates is ``sqrt(2 dt^(2/alpha) A) xi`` with ``A`` positive
``alpha/2``-stable (Laplace transform ``exp(-s^(alpha/2))``) and ``xi``
standard normal.  This reproduces ``E exp(i<u, dZ>) = exp(-dt |u|^alpha)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .grid import TimeGrid, as_grid
from .hilbert import HSOperator, TruncationConfig
from .rng import as_stream, draw


@dataclass(frozen=True)
class StabilityIndex:
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    def __float__(self):
        return self.alpha


def check_alpha(alpha):
    a = float(alpha)
    if not (0.0 < a < 2.0):
        raise ConfigurationError(f"stability index must lie in (0, 2), got {alpha!r}")
    return a


def _uv(gen, n):
    v = gen.uniform(-0.5 * np.pi, 0.5 * np.pi, size=n)
    w = gen.standard_exponential(size=n)
    return v, w


def sample_sas(alpha, rng, size, scale=1.0):
    """``size`` draws with ``E cos(uX) = exp(-(scale |u|)^alpha)``."""
    alpha = check_alpha(alpha)
    if not scale > 0:
        raise ConfigurationError(f"scale must be positive, got {scale!r}")
    x = draw(lambda g, k: kernels.sas_cms(alpha, *_uv(g, k)), int(size), as_stream(rng))
    return scale * x


def sample_sas_1d(alpha, scale, rng):
    """A single symmetric stable draw (see :func:`sample_sas`)."""
    return float(sample_sas(alpha, rng, 1, scale)[0])


def sample_positive_stable(alpha, rng, size=None):
    """Positive ``alpha/2``-stable draws with ``E exp(-uA) = exp(-u^(alpha/2))``."""
    alpha = check_alpha(alpha)
    a = 0.5 * alpha
    n = 1 if size is None else int(size)
    x = draw(lambda g, k: _positive(a, g, k), n, as_stream(rng))
    return float(x[0]) if size is None else x


def _positive(a, gen, k):
    a_draw = kernels.positive_cms(a, *_uv(gen, k))
    # v at the open end of its range can underflow to exactly 0
    return np.maximum(a_draw, np.finfo(float).tiny)


def subgaussian_scale(dt, alpha, subordinators):
    """``sqrt(2 dt^(2/alpha) A)`` broadcast over cells."""
    return np.sqrt(2.0 * np.asarray(dt) ** (2.0 / alpha) * subordinators)


def sample_isotropic(alpha, dim, rng, size, t=1.0):
    """``size`` isotropic stable vectors in R^dim with char. fn. exp(-t|u|^alpha)."""
    alpha = check_alpha(alpha)

    def block(g, k):
        a = _positive(0.5 * alpha, g, k)
        xi = g.standard_normal((k, dim))
        return subgaussian_scale(t, alpha, a)[:, None] * xi

    return draw(block, int(size), as_stream(rng))


@dataclass(frozen=True, eq=False)
class DrivingPath:
    """Simulated scenarios of the truncated cylindrical process.

    Arrays carry a leading scenario axis: ``subordinators`` is ``(S, M)``,
    ``gaussians`` and ``increments`` are ``(S, M, d_G)``.  ``path[s]`` gives
    the single-scenario path ``s``.
    """

    alpha: float
    grid: TimeGrid
    subordinators: np.ndarray
    gaussians: np.ndarray
    increments: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.subordinators, dtype=float)
        xi = np.asarray(self.gaussians, dtype=float)
        if a.ndim == 1:
            a, xi = a[None], xi[None]
        if xi.shape[:2] != a.shape or a.shape[1] != self.grid.n_cells:
            raise ConfigurationError("subordinator/gaussian shapes do not match the grid")
        if np.any(a <= 0):
            raise ConfigurationError("subordinator draws must be positive")
        inc = recompute_increments(self.alpha, self.grid, a, xi)
        for arr in (a, xi, inc):
            arr.setflags(write=False)
        object.__setattr__(self, "subordinators", a)
        object.__setattr__(self, "gaussians", xi)
        object.__setattr__(self, "increments", inc)

    @property
    def n_scenarios(self):
        return self.subordinators.shape[0]

    @property
    def d_G(self):
        return self.gaussians.shape[2]

    @property
    def positions(self):
        """``Z(t_i)`` for i = 0..M, shape ``(S, M+1, d_G)``."""
        pos = self.__dict__.get("_positions")
        if pos is None:
            pos = np.zeros((self.n_scenarios, self.grid.n_cells + 1, self.d_G))
            np.cumsum(self.increments, axis=1, out=pos[:, 1:])
            pos.setflags(write=False)
            object.__setattr__(self, "_positions", pos)
        return pos

    def __getitem__(self, s):
        s = np.atleast_1d(np.arange(self.n_scenarios)[s])
        return DrivingPath(self.alpha, self.grid, self.subordinators[s], self.gaussians[s])

    def coarse_increments(self, grid):
        """Increments summed over the cells of a coarser subgrid ``grid``."""
        idx = grid.embedding(self.grid)
        return self.positions[:, idx[1:]] - self.positions[:, idx[:-1]]

    def prefix(self, i):
        """Path information up to grid index ``i`` (time ``t_i``)."""
        return PathPrefix(self, int(i))

    def to_csv(self, header=None):
        buf = io.StringIO()
        if header:
            for line in header:
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "t_left", "t_right", "A"] + [f"dZ{j}" for j in range(self.d_G)])
        t = self.grid.times
        for s in range(self.n_scenarios):
            for i in range(self.grid.n_cells):
                w.writerow([s, repr(float(t[i])), repr(float(t[i + 1])), repr(float(self.subordinators[s, i]))]
                           + [repr(float(x)) for x in self.increments[s, i]])
        return buf.getvalue()


class PathPrefix:
    """Read-only view of a driving path restricted to ``[0, t_i]``.

    Evaluators of predictable integrands only ever receive one of these, so
    they cannot look at increments after ``t_i``.
    """

    __slots__ = ("_path", "_i")

    def __init__(self, path, i):
        if not 0 <= i <= path.grid.n_cells:
            raise ConfigurationError(f"prefix index {i} outside 0..{path.grid.n_cells}")
        self._path = path
        self._i = i

    @property
    def index(self):
        return self._i

    @property
    def time(self):
        return float(self._path.grid.times[self._i])

    @property
    def n_scenarios(self):
        return self._path.n_scenarios

    @property
    def d_G(self):
        return self._path.d_G

    @property
    def alpha(self):
        return self._path.alpha

    @property
    def times(self):
        return self._path.grid.times[: self._i + 1]

    @property
    def increments(self):
        return self._path.increments[:, : self._i]

    @property
    def subordinators(self):
        return self._path.subordinators[:, : self._i]

    @property
    def position(self):
        """``Z(t_i)``, shape ``(S, d_G)``."""
        return self._path.positions[:, self._i]

    @property
    def positions(self):
        return self._path.positions[:, : self._i + 1]

    def rewind(self, t):
        """Prefix up to the last grid point not after ``t`` (never later than this one)."""
        k = int(np.searchsorted(self.times, t * (1 + 1e-12) + 1e-300, side="right")) - 1
        return PathPrefix(self._path, min(max(k, 0), self._i))


def recompute_increments(alpha, grid, subordinators, gaussians):
    scale = subgaussian_scale(grid.dt[None, :], alpha, subordinators)
    return scale[..., None] * gaussians


def sample_driving_path(alpha, config, grid, rng, n_scenarios=1):
    """Sample ``n_scenarios`` independent scenarios on ``grid``."""
    alpha = check_alpha(alpha)
    grid = as_grid(grid)
    if not isinstance(config, TruncationConfig):
        config = TruncationConfig(*config)
    M, d = grid.n_cells, config.d_G

    def block(g, k):
        a = _positive(0.5 * alpha, g, k * M).reshape(k, M)
        xi = g.standard_normal((k, M, d))
        return np.concatenate([a[..., None], xi], axis=2)

    raw = draw(block, int(n_scenarios), as_stream(rng))
    return DrivingPath(alpha, grid, raw[..., 0], raw[..., 1:])


def radonified_increment(phi, path, cell_index):
    """``phi @ dZ_i`` for every scenario, shape ``(S, d_H)``."""
    m = phi.matrix if isinstance(phi, HSOperator) else np.asarray(phi)
    if m.shape[1] != path.d_G:
        raise ConfigurationError(f"operator has d_G={m.shape[1]}, path has d_G={path.d_G}")
    if not 0 <= cell_index < path.grid.n_cells:
        raise ConfigurationError(f"cell index {cell_index} outside 0..{path.grid.n_cells - 1}")
    return path.increments[:, cell_index] @ m.T


def coupled_radonified(operators, alpha, dt, subordinators, gaussians):
    """Radonified increments of several operators driven by shared ``(A, xi)``.

    Returns an array ``(len(operators), S, d_H)``; used to exhibit the
    pathwise continuity of the Radonified increment in the operator.
    """
    scale = subgaussian_scale(dt, alpha, np.asarray(subordinators))
    base = scale[:, None] * np.asarray(gaussians)
    return np.stack([base @ op.matrix.T for op in operators])
