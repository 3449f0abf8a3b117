"""Deterministic step functions, adapted step processes and predictable integrands.

A scenario ``omega`` is identified with its driving path.  Integrands only
ever see a :class:`~cylstable.sampler.PathPrefix`, which makes adaptedness
and predictability structural: a coefficient for the cell ``(t_i, t_{i+1}]``
is computed from the path up to ``t_i`` and nothing later.

Integrand programs are evaluated as right limits: ``program(t, prefix)`` is
the value on ``(t, t + dt]`` given the path up to ``t``.  This is what
left-point step approximation needs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import TimeGrid, as_grid
from .hilbert import CONTRACTION_TOL, HSOperator, random_contraction
from .rng import as_stream
from .sampler import check_alpha, sample_driving_path
from .stats import MCEstimate, mc_mean


def _as_matrix(op):
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=float)


def _broadcast(values, S, d_H, d_G):
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = np.broadcast_to(v, (S, d_H, d_G))
    if v.shape != (S, d_H, d_G):
        raise ConfigurationError(f"integrand returned shape {v.shape}, expected {(S, d_H, d_G)}")
    return v


def hs_norms(values):
    """HS norms of a stack ``(..., d_H, d_G)``; non-finite entries give inf."""
    with np.errstate(invalid="ignore", over="ignore"):
        n = np.sqrt(np.sum(values * values, axis=(-2, -1)))
    return np.where(np.isnan(n), np.inf, n)


def truncate(values, level):
    """Zero out every operator whose HS norm exceeds ``level`` (or is not finite)."""
    norms = hs_norms(values)
    keep = norms <= level
    out = np.where(keep[..., None, None], values, 0.0)
    return np.where(np.isfinite(out), out, 0.0)


# -- deterministic step functions ------------------------------------------

@dataclass(frozen=True, eq=False)
class DetStepFunction:
    """``psi = F_0 1_{0} + sum_i F_i 1_(t_i, t_{i+1}]``; the value at 0 is carried but unused."""

    grid: TimeGrid
    values: tuple
    initial: HSOperator | None = None

    def __post_init__(self):
        object.__setattr__(self, "grid", as_grid(self.grid))
        vals = tuple(v if isinstance(v, HSOperator) else HSOperator(v) for v in self.values)
        if len(vals) != self.grid.n_cells:
            raise ConfigurationError(f"need {self.grid.n_cells} cell values, got {len(vals)}")
        if len({v.shape for v in vals}) > 1:
            raise ConfigurationError("all cell values must have the same shape")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self):
        return self.values[0].shape

    def matrices(self):
        return np.stack([v.matrix for v in self.values])

    def __call__(self, t):
        if t <= 0:
            return self.initial if self.initial is not None else HSOperator.zeros(*self.shape)
        i = int(np.searchsorted(self.grid.times, t, side="left")) - 1
        return self.values[min(i, self.grid.n_cells - 1)]

    def __sub__(self, other):
        if self.grid != other.grid:
            raise ConfigurationError("step functions live on different grids")
        return DetStepFunction(self.grid, [a - b for a, b in zip(self.values, other.values)])

    def scaled(self, c):
        return DetStepFunction(self.grid, [c * v for v in self.values], self.initial)

    def as_process(self):
        return AdaptedStepProcess.deterministic(self.grid, self.values)

    def as_program(self):
        mats = self.matrices()
        times = self.grid.times

        def ev(t, prefix):
            i = min(int(np.searchsorted(times, t, side="right")) - 1, len(mats) - 1)
            return mats[i]

        d_H, d_G = self.shape
        return IntegrandProgram(ev, d_H, d_G, "det-step", deterministic=True)


# -- integrand programs -----------------------------------------------------

class IntegrandProgram:
    """A predictable integrand ``(t, prefix) -> (S, d_H, d_G)`` operator stack.

    ``evaluator`` must be pure.  Deterministic programs may ignore ``prefix``
    (it is ``None`` when evaluated without a path) and may return a single
    ``(d_H, d_G)`` matrix.
    """

    def __init__(self, evaluator, d_H, d_G, description="", deterministic=False, bound=None):
        self.evaluator = evaluator
        self.d_H = int(d_H)
        self.d_G = int(d_G)
        self.description = description
        self.deterministic = bool(deterministic)
        self.bound = bound

    def __repr__(self):
        return f"IntegrandProgram({self.description!r}, d_H={self.d_H}, d_G={self.d_G})"

    def __call__(self, t, prefix):
        S = prefix.n_scenarios
        if prefix.d_G != self.d_G:
            raise ConfigurationError(f"program expects d_G={self.d_G}, path has {prefix.d_G}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _broadcast(self.evaluator(t, prefix), S, self.d_H, self.d_G)

    def at(self, t):
        """Value of a deterministic program at time ``t``."""
        if not self.deterministic:
            raise ConfigurationError("only deterministic programs can be evaluated without a path")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(self.evaluator(t, None), dtype=float)

    def scaled(self, c):
        c = float(c)
        ev = self.evaluator
        bound = None if self.bound is None else abs(c) * self.bound
        return IntegrandProgram(lambda t, p: c * np.asarray(ev(t, p)), self.d_H, self.d_G,
                                f"{c}*{self.description}", self.deterministic, bound)

    def truncated(self, level):
        ev = self.evaluator

        def tr(t, p):
            return truncate(np.asarray(ev(t, p), dtype=float), level)

        return IntegrandProgram(tr, self.d_H, self.d_G, f"trunc[{level}]({self.description})",
                                self.deterministic, level)

    def restricted(self, t0, t1):
        """``psi 1_(t0, t1]`` (right-limit convention: zero at t >= t1)."""
        ev = self.evaluator

        def r(t, p):
            v = np.asarray(ev(t, p), dtype=float)
            return v if t0 <= t < t1 else np.zeros_like(v)

        return IntegrandProgram(r, self.d_H, self.d_G, f"{self.description}*1({t0},{t1}]",
                                self.deterministic, self.bound)


# -- adapted step processes -------------------------------------------------

class AdaptedStepProcess:
    """Operator-valued step process on ``grid`` with adapted coefficients.

    ``coefficient_program(i, prefix)`` returns the coefficient for cell
    ``(t_i, t_{i+1}]`` from the path up to ``t_i``.
    """

    def __init__(self, grid, coefficient_program, d_H, d_G, description=""):
        self.grid = as_grid(grid)
        self.coefficient_program = coefficient_program
        self.d_H = int(d_H)
        self.d_G = int(d_G)
        self.description = description

    def __repr__(self):
        return f"{type(self).__name__}({self.description!r}, cells={self.grid.n_cells})"

    @classmethod
    def deterministic(cls, grid, operators, description="deterministic"):
        mats = np.stack([_as_matrix(op) for op in operators])
        grid = as_grid(grid)
        if mats.shape[0] != grid.n_cells:
            raise ConfigurationError(f"need {grid.n_cells} operators, got {mats.shape[0]}")
        proc = cls(grid, lambda i, prefix: mats[i], mats.shape[1], mats.shape[2], description)
        proc._static = mats
        return proc

    @classmethod
    def constant(cls, grid, operator):
        grid = as_grid(grid)
        return cls.deterministic(grid, [operator] * grid.n_cells, "constant")

    @classmethod
    def from_partition(cls, grid, cells, description="partition"):
        """Finite-partition form ``sum_k F_{i,k} 1_{A_{i,k}}`` on each cell.

        ``cells[i]`` is a list of ``(indicator, operator)`` pairs where
        ``indicator(prefix)`` returns a boolean array over scenarios.
        """
        grid = as_grid(grid)
        if len(cells) != grid.n_cells:
            raise ConfigurationError(f"need {grid.n_cells} cell partitions, got {len(cells)}")
        parts = [[(ind, _as_matrix(op)) for ind, op in cell] for cell in cells]
        d_H, d_G = parts[0][0][1].shape

        def coeff(i, prefix):
            out = np.zeros((prefix.n_scenarios, d_H, d_G))
            for ind, m in parts[i]:
                mask = np.asarray(ind(prefix), dtype=bool)
                out += mask[:, None, None] * m
            return out

        return cls(grid, coeff, d_H, d_G, description)

    def is_static(self):
        return getattr(self, "_static", None) is not None

    def coefficients(self, path):
        """Coefficient stack ``(S, M, d_H, d_G)`` over this process's cells."""
        idx = self.grid.embedding(path.grid)
        S = path.n_scenarios
        static = getattr(self, "_static", None)
        if static is not None:
            return np.broadcast_to(static, (S,) + static.shape)
        out = np.empty((S, self.grid.n_cells, self.d_H, self.d_G))
        for i in range(self.grid.n_cells):
            out[:, i] = _broadcast(self.coefficient_program(i, path.prefix(idx[i])),
                                   S, self.d_H, self.d_G)
        self._check(out)
        return out

    def _check(self, coeffs):
        pass

    def scaled(self, c):
        prog = self.coefficient_program
        proc = type(self)(self.grid, lambda i, p: c * np.asarray(prog(i, p)), self.d_H, self.d_G,
                          f"{c}*{self.description}")
        if self.is_static():
            proc._static = c * self._static
        return proc

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def truncated(self, level):
        prog = self.coefficient_program
        proc = AdaptedStepProcess(
            self.grid, lambda i, p: truncate(np.asarray(prog(i, p), dtype=float), level),
            self.d_H, self.d_G, self.description)
        if self.is_static():
            proc._static = truncate(self._static, level)
        return proc

    def as_program(self):
        """View as an integrand program (right-limit convention)."""
        times = self.grid.times
        prog = self.coefficient_program
        n = self.grid.n_cells

        def ev(t, prefix):
            i = min(int(np.searchsorted(times, t, side="right")) - 1, n - 1)
            # the cell starts at times[i] <= t, so the prefix up to t covers it
            return prog(i, prefix.rewind(times[i]) if prefix is not None else None)

        return IntegrandProgram(ev, self.d_H, self.d_G, self.description,
                                deterministic=self.is_static())


def _combine(a, b, sign):
    if a.grid != b.grid:
        raise ConfigurationError("step processes live on different grids")
    pa, pb = a.coefficient_program, b.coefficient_program
    proc = AdaptedStepProcess(a.grid, lambda i, p: np.asarray(pa(i, p)) + sign * np.asarray(pb(i, p)),
                              a.d_H, a.d_G, f"({a.description}{'+' if sign > 0 else '-'}{b.description})")
    if a.is_static() and b.is_static():
        proc._static = a._static + sign * b._static
    return proc


class ContractionStepProcess(AdaptedStepProcess):
    """Adapted step process with values of operator norm at most one."""

    def __init__(self, grid, coefficient_program, d, description=""):
        super().__init__(grid, coefficient_program, d, d, description)

    @classmethod
    def deterministic(cls, grid, operators, description="deterministic"):
        mats = np.stack([_as_matrix(op) for op in operators])
        proc = cls(grid, lambda i, prefix: mats[i], mats.shape[1], description)
        proc._check(mats[None])
        proc._static = mats
        return proc

    @classmethod
    def identity(cls, grid, d):
        grid = as_grid(grid)
        return cls.deterministic(grid, [np.eye(d)] * grid.n_cells, "identity")

    @classmethod
    def random(cls, grid, d, rng, adapted=True):
        """Random rotations times diagonal contractions, refreshed per cell.

        With ``adapted=True`` each cell picks one of two candidates by the
        sign of the first path coordinate at the cell's left endpoint.
        """
        grid = as_grid(grid)
        gen = as_stream(rng).generator()
        a = np.stack([random_contraction(gen, d).matrix for _ in range(grid.n_cells)])
        if not adapted:
            return cls.deterministic(grid, a, "random-contraction")
        b = np.stack([random_contraction(gen, d).matrix for _ in range(grid.n_cells)])

        def coeff(i, prefix):
            up = prefix.position[:, 0] > 0
            return np.where(up[:, None, None], a[i], b[i])

        proc = cls(grid, coeff, d, "random-adapted-contraction")
        proc._validated = True  # every candidate was checked on construction
        return proc

    def _check(self, coeffs):
        if not coeffs.size or getattr(self, "_validated", False):
            return
        d = coeffs.shape[-1]
        flat = coeffs.reshape(-1, d, d)
        # Frobenius norm <= 1 already bounds the operator norm
        suspect = flat[np.linalg.norm(flat, axis=(1, 2)) > 1.0]
        top = np.linalg.norm(suspect, 2, axis=(-2, -1)) if len(suspect) else np.zeros(1)
        if np.any(top > 1.0 + CONTRACTION_TOL):
            raise ConfigurationError(f"contraction process has operator norm {top.max()!r} > 1")

    def truncated(self, level):
        return self

    def compose(self, theta):
        """The step process ``Gamma Theta`` on the common grid."""
        if self.grid != theta.grid:
            raise ConfigurationError("contraction and integrand grids differ")
        pg, pt = self.coefficient_program, theta.coefficient_program

        def coeff(i, p):
            return np.matmul(np.asarray(pg(i, p)), np.asarray(pt(i, p)))

        proc = AdaptedStepProcess(self.grid, coeff, theta.d_H, theta.d_G,
                                  f"{self.description}*{theta.description}")
        if self.is_static() and theta.is_static():
            proc._static = np.matmul(self._static, theta._static)
        return proc


# -- L^alpha norms ----------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: float
    step: float
    error: float
    converged: bool
    diverging: bool
    history: tuple

    def to_dict(self):
        return {"value": self.value, "step": self.step, "error": self.error,
                "converged": self.converged, "diverging": self.diverging,
                "history": list(self.history)}


def _graded_midpoint(f, T, N, grading):
    u = np.arange(N + 1) / N
    nodes = T * u ** grading
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    vals = np.array([f(t) for t in mids])
    return float(np.sum(vals * np.diff(nodes))), float(nodes[1] - nodes[0])


def lalpha_quadrature(program, alpha, T=1.0, min_level=3, max_level=14, grading=4.0,
                      rtol=1e-6):
    """``int_0^T ||psi(t)||_HS^alpha dt`` for a deterministic program.

    Composite midpoint rule on a graded mesh ``T (j/N)^grading`` with ``N``
    doubling per level; the error is estimated from the geometric decay of
    successive differences (Richardson).  A sequence whose differences stop
    shrinking is reported as ``diverging``.
    """
    alpha = check_alpha(alpha)

    def f(t):
        return float(hs_norms(program.at(t))) ** alpha

    history, steps = [], []
    for lvl in range(min_level, max_level + 1):
        q, h = _graded_midpoint(f, T, 2 ** lvl, grading)
        history.append(q)
        steps.append(h)
        if not np.isfinite(q):
            return QuadratureResult(float("inf"), h, float("inf"), False, True, tuple(history))
        if len(history) >= 3:
            d1 = abs(history[-2] - history[-3])
            d2 = abs(history[-1] - history[-2])
            if d2 == 0:
                return QuadratureResult(q, h, 0.0, True, False, tuple(history))
            r = d2 / d1 if d1 > 0 else np.inf
            err = d2 * r / (1 - r) if r < 1 else np.inf
            if err <= rtol * max(abs(q), 1e-300):
                return QuadratureResult(q + (d2 * r / (1 - r)) * np.sign(history[-1] - history[-2]),
                                        h, err, True, False, tuple(history))
    d = np.abs(np.diff(history))
    ratios = d[1:] / np.maximum(d[:-1], 1e-300)
    diverging = bool(np.all(ratios[-3:] >= 0.97))
    return QuadratureResult(history[-1], steps[-1], float("inf") if diverging else float(d[-1]),
                            False, diverging, tuple(history))


def _first_cell_nodes(dt, depth=40):
    """Geometric subcells ``[dt 2^-(j+1), dt 2^-j]`` and their midpoints."""
    hi = dt * 2.0 ** -np.arange(depth)
    lo = hi / 2
    return 0.5 * (hi + lo), hi - lo


def path_lalpha(program, alpha, path, nodes_per_cell=4):
    """Per-scenario ``int ||Psi(t)||^alpha dt`` along realised paths.

    On each driving cell the integrand is evaluated at midpoint sub-nodes
    with the prefix frozen at the cell's left end; the first cell uses a
    geometric mesh towards 0 so integrable singularities are resolved.
    Returns ``(values, diverging)`` arrays over scenarios.
    """
    alpha = check_alpha(alpha)
    grid = path.grid
    S = path.n_scenarios
    total = np.zeros(S)
    times = grid.times
    m = int(nodes_per_cell)
    # first cell
    mids, w = _first_cell_nodes(times[1] - times[0])
    p0 = path.prefix(0)
    contrib = np.stack([hs_norms(program(t, p0)) ** alpha for t in mids], axis=1) * w
    total += contrib.sum(axis=1)
    tail = contrib[:, -4:]
    diverging = np.all(tail[:, 1:] >= 0.97 * tail[:, :-1], axis=1) & (tail[:, -1] > 0)
    for i in range(1, grid.n_cells):
        p = path.prefix(i)
        h = (times[i + 1] - times[i]) / m
        for k in range(m):
            total += h * hs_norms(program(times[i] + (k + 0.5) * h, p)) ** alpha
    diverging |= ~np.isfinite(total)
    return total, diverging


def lalpha_norm(psi, alpha, path=None, **kwargs):
    """``int_0^T ||psi(t)||_HS^alpha dt``.

    Exact finite sum for step functions; quadrature for deterministic
    programs (see :func:`lalpha_quadrature`); for random integrands a
    per-scenario array along ``path``.
    """
    alpha = check_alpha(alpha)
    if isinstance(psi, DetStepFunction):
        norms = np.array([np.linalg.norm(v.matrix) for v in psi.values])
        return float(np.sum(norms ** alpha * psi.grid.dt))
    if isinstance(psi, AdaptedStepProcess):
        if psi.is_static():
            norms = hs_norms(psi._static)
            return float(np.sum(norms ** alpha * psi.grid.dt))
        if path is None:
            raise ConfigurationError("random step processes need a path")
        c = psi.coefficients(path)
        return np.sum(hs_norms(c) ** alpha * psi.grid.dt, axis=1)
    if isinstance(psi, IntegrandProgram):
        if psi.deterministic:
            return lalpha_quadrature(psi, alpha, T=(path.grid.T if path is not None else
                                                    kwargs.pop("T", 1.0)), **kwargs).value
        if path is None:
            raise ConfigurationError("random programs need a path")
        return path_lalpha(psi, alpha, path, **kwargs)[0]
    raise TypeError(f"cannot take the L^alpha norm of {type(psi).__name__}")


def lalpha_distance(f, g, alpha):
    """``d(f, g) = int ||f - g||_HS^alpha dt`` for step functions on one grid."""
    return lalpha_norm(f - g, alpha)


def randomized_metric(psi, alpha, n_scenarios, rng, grid=None, T=1.0, d_G=None):
    """``E[ int ||Psi||^alpha dt ^ 1 ]`` over driving-path scenarios."""
    alpha = check_alpha(alpha)
    if isinstance(psi, IntegrandProgram) and psi.deterministic:
        v = lalpha_quadrature(psi, alpha, T=grid.T if grid is not None else T).value
        return MCEstimate(min(v, 1.0), 0.0, int(n_scenarios))
    if isinstance(psi, (DetStepFunction,)) or (isinstance(psi, AdaptedStepProcess) and psi.is_static()):
        return MCEstimate(min(lalpha_norm(psi, alpha), 1.0), 0.0, int(n_scenarios))
    if grid is None:
        grid = psi.grid if isinstance(psi, AdaptedStepProcess) else TimeGrid.uniform(T, 64)
    d_G = d_G or psi.d_G
    path = sample_driving_path(alpha, (d_G, psi.d_H), grid, rng, n_scenarios)
    vals = lalpha_norm(psi, alpha, path)
    return mc_mean(np.minimum(vals, 1.0))


# -- step approximation -----------------------------------------------------

def approximate_by_steps(psi, grid, level=np.inf):
    """Left-point adapted step approximation truncated at HS norm ``level``.

    The coefficient on ``(t_i, t_{i+1}]`` is ``psi(t_i+)`` computed from the
    path up to ``t_i``, set to zero if its HS norm exceeds ``level``.
    """
    grid = as_grid(grid)
    if isinstance(psi, AdaptedStepProcess) and psi.grid == grid:
        return psi if level == np.inf else psi.truncated(level)
    if isinstance(psi, DetStepFunction):
        psi = psi.as_program()
    elif isinstance(psi, AdaptedStepProcess):
        psi = psi.as_program()
    times = grid.times
    if psi.deterministic:
        mats = np.stack([truncate(np.asarray(psi.at(t), dtype=float), level) for t in times[:-1]])
        return AdaptedStepProcess.deterministic(grid, mats, f"steps({psi.description})")

    def coeff(i, prefix):
        return truncate(psi(times[i], prefix), level)

    return AdaptedStepProcess(grid, coeff, psi.d_H, psi.d_G, f"steps({psi.description})")
