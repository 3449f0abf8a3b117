"""Stochastic integrals: exact for step processes, limits of step
approximations for general predictable programs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .grid import TimeGrid, as_grid
from .hilbert import HSOperator
from .processes import (
    AdaptedStepProcess, DetStepFunction, IntegrandProgram, approximate_by_steps,
    lalpha_quadrature, path_lalpha,
)
from .sampler import check_alpha, sample_driving_path
from .stats import mc_mean

CAUCHY_TOL = 1e-3
CAUCHY_CONSECUTIVE = 2


@dataclass(frozen=True, eq=False)
class IntegralPath:
    """Values of ``t -> int_0^t Psi dL`` at grid points, ``(S, M+1, d_H)``.

    Between grid points the path is the cadlag step interpolation.
    """

    grid: TimeGrid
    values: np.ndarray

    @property
    def terminal(self):
        return self.values[:, -1]

    def at(self, t):
        i = int(np.searchsorted(self.grid.times, t, side="right")) - 1
        return self.values[:, max(i, 0)]

    def sup_norm(self):
        return kernels.sup_norm(self.values)

    def norms(self):
        return np.linalg.norm(self.values, axis=2)


def _as_step_process(theta):
    if isinstance(theta, DetStepFunction):
        return theta.as_process()
    if not isinstance(theta, AdaptedStepProcess):
        raise ConfigurationError(f"expected a step process, got {type(theta).__name__}")
    return theta


def step_integral_path(theta, path, fine=False):
    """Running integral of a step process.

    By default values sit on ``theta.grid``; with ``fine=True`` on the
    driving grid (the coefficient is held over the fine cells it covers).
    """
    theta = _as_step_process(theta)
    if theta.d_G != path.d_G:
        raise ConfigurationError(f"integrand has d_G={theta.d_G}, path has d_G={path.d_G}")
    coeffs = theta.coefficients(path)
    if not fine:
        dz = path.coarse_increments(theta.grid)
        return IntegralPath(theta.grid, kernels.step_integral_path(coeffs, dz))
    idx = theta.grid.embedding(path.grid)
    owner = np.searchsorted(idx, np.arange(path.grid.n_cells), side="right") - 1
    return IntegralPath(path.grid, kernels.step_integral_path(coeffs[:, owner], path.increments))


def integrate_step(theta, path):
    """``sum_i F_i (Z(t_{i+1}) - Z(t_i))`` per scenario, shape ``(S, d_H)``."""
    return step_integral_path(theta, path).terminal


@dataclass(frozen=True)
class RefinementSchedule:
    """Dyadic levels ``k`` with grids of ``2^k`` cells and truncation ``n_k``."""

    levels: tuple
    truncations: tuple = None
    tol: float = CAUCHY_TOL
    consecutive: int = CAUCHY_CONSECUTIVE

    def __post_init__(self):
        levels = tuple(int(k) for k in self.levels)
        if not levels or any(k < 0 for k in levels) or list(levels) != sorted(set(levels)):
            raise ConfigurationError(f"levels must be increasing nonnegative integers, got {self.levels}")
        object.__setattr__(self, "levels", levels)
        if self.truncations is None:
            object.__setattr__(self, "truncations", tuple(2.0 ** k for k in levels))
        elif len(self.truncations) != len(levels):
            raise ConfigurationError("need one truncation level per refinement level")

    @classmethod
    def for_grid(cls, grid, coarsest=0, **kw):
        """All dyadic levels up to the driving grid (which must be dyadic)."""
        K = int(round(np.log2(grid.n_cells)))
        if grid != TimeGrid.dyadic(grid.T, K):
            raise ConfigurationError("default schedule needs a dyadic driving grid")
        return cls(tuple(range(coarsest, K + 1)), **kw)

    def grids(self, T):
        return [TimeGrid.dyadic(T, k) for k in self.levels]

    def to_dict(self):
        return {"levels": list(self.levels), "truncations": list(self.truncations),
                "tol": self.tol, "consecutive": self.consecutive}


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    """Finest-level value plus the Cauchy diagnostics of the refinement."""

    value: np.ndarray
    level_values: np.ndarray
    increments: np.ndarray
    converged: np.ndarray
    schedule: RefinementSchedule
    path: IntegralPath = field(repr=False)

    @property
    def inconclusive(self):
        return ~self.converged

    def median_increments(self):
        return np.median(self.increments, axis=0)


def _program(psi):
    if isinstance(psi, HSOperator):
        m = psi.matrix
        return IntegrandProgram(lambda t, p: m, m.shape[0], m.shape[1], "constant", True)
    return psi


def integrate(psi, path, schedule=None):
    """Integral of a predictable integrand along each scenario of ``path``.

    Evaluates :func:`integrate_step` on ``approximate_by_steps(psi, grid_k, n_k)``
    across the schedule and returns the finest value with the increments
    ``|I_k - I_{k-1}|``.  A scenario converges when its last
    ``schedule.consecutive`` increments are below ``schedule.tol``.
    """
    psi = _program(psi)
    if schedule is None:
        schedule = RefinementSchedule.for_grid(path.grid)
    vals, ipath = [], None
    for grid, n in zip(schedule.grids(path.grid.T), schedule.truncations):
        theta = approximate_by_steps(psi, grid, n)
        ipath = step_integral_path(theta, path)
        vals.append(ipath.terminal)
    level_values = np.stack(vals, axis=1)
    inc = np.linalg.norm(np.diff(level_values, axis=1), axis=2)
    c = schedule.consecutive
    if inc.shape[1] >= c:
        converged = np.all(inc[:, -c:] < schedule.tol, axis=1)
    else:
        converged = np.zeros(path.n_scenarios, dtype=bool)
    return IntegrationResult(level_values[:, -1], level_values, inc, converged, schedule, ipath)


def integral_path(psi, path, schedule=None):
    """``t -> int_0^t psi dL`` on the finest schedule grid; its terminal
    value is the value returned by :func:`integrate`."""
    return integrate(psi, path, schedule).path


# -- integrability ----------------------------------------------------------

@dataclass(frozen=True)
class IntegrabilityReport:
    verdict: str
    metric: float
    norms: tuple
    diagnostics: dict

    def to_dict(self):
        return {"verdict": self.verdict, "metric": self.metric,
                "norms": list(self.norms), "diagnostics": self.diagnostics}


def is_integrable(psi, alpha, n_scenarios=200, rng=0, grid=None, T=1.0, rtol=1e-2):
    """Classify ``psi`` as integrable, not_integrable or inconclusive.

    Deterministic integrands are decided by quadrature of the L^alpha norm.
    Random ones are sampled: every scenario must have a finite, resolved
    path norm (two sub-node resolutions agreeing to ``rtol``).
    """
    alpha = check_alpha(alpha)
    if isinstance(psi, DetStepFunction) or (isinstance(psi, AdaptedStepProcess) and psi.is_static()):
        mats = psi.matrices() if isinstance(psi, DetStepFunction) else psi._static
        norms = np.linalg.norm(mats, axis=(1, 2))
        v = float(np.sum(norms ** alpha * psi.grid.dt))
        ok = np.isfinite(v)
        return IntegrabilityReport("integrable" if ok else "not_integrable",
                                   min(v, 1.0), (v,), {"method": "exact-sum"})
    psi = _program(psi)
    if isinstance(psi, AdaptedStepProcess):
        psi = psi.as_program()
    if psi.deterministic:
        q = lalpha_quadrature(psi, alpha, T=grid.T if grid is not None else T)
        verdict = "integrable" if q.converged else ("not_integrable" if q.diverging else "inconclusive")
        return IntegrabilityReport(verdict, min(q.value, 1.0), (q.value,),
                                   {"method": "graded-midpoint", **q.to_dict()})
    grid = as_grid(grid) if grid is not None else TimeGrid.uniform(T, 64)
    path = sample_driving_path(alpha, (psi.d_G, psi.d_H), grid, rng, n_scenarios)
    v1, div1 = path_lalpha(psi, alpha, path, nodes_per_cell=2)
    v2, div2 = path_lalpha(psi, alpha, path, nodes_per_cell=4)
    finite = np.isfinite(v2) & ~div2
    with np.errstate(invalid="ignore"):
        rel = np.abs(v2 - v1) / np.maximum(np.abs(v2), 1e-300)
    resolved = bool(np.all(rel[finite] <= rtol)) if finite.any() else False
    if not finite.all():
        verdict = "not_integrable"
    elif resolved:
        verdict = "integrable"
    else:
        verdict = "inconclusive"
    est = mc_mean(np.minimum(v2, 1.0))
    diag = {"method": "path-quadrature", "n_scenarios": int(n_scenarios),
            "n_diverging": int((~finite).sum()), "max_relative_change": float(np.max(rel[finite]))
            if finite.any() else None, "metric_stderr": est.stderr}
    return IntegrabilityReport(verdict, est.value, tuple(float(x) for x in v2), diag)
