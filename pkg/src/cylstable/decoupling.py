"""Decoupled tangent sequences on a simulated product space.

The ghost noise is an independent re-run of the driving process on the same
grid; the coefficients stay those computed from the base path.  The
decoupled sum is then ``sum_i F_i(base) dZ_i(ghost)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import as_grid
from .integrator import _as_step_process
from .rng import as_stream
from .sampler import _positive, check_alpha, sample_driving_path, subgaussian_scale
from .stats import mc_mean, paired_ratio


@dataclass(frozen=True, eq=False)
class TangentPair:
    base_path: object
    ghost_path: object
    coefficients: np.ndarray
    grid: object

    @property
    def alpha(self):
        return self.base_path.alpha

    def coupled_terms(self):
        """``F_i dZ_i`` on the base path, shape ``(S, M, d_H)``."""
        dz = self.base_path.coarse_increments(self.grid)
        return np.einsum("smhg,smg->smh", self.coefficients, dz)

    def decoupled_terms(self):
        """``F_i dZ'_i`` with ghost increments, shape ``(S, M, d_H)``."""
        dz = self.ghost_path.coarse_increments(self.grid)
        return np.einsum("smhg,smg->smh", self.coefficients, dz)

    @property
    def coupled(self):
        return self.coupled_terms().sum(axis=1)

    @property
    def decoupled(self):
        return self.decoupled_terms().sum(axis=1)


def build_tangent_pair(theta, rng_base, rng_ghost, alpha, n_scenarios, d_G=None, path_grid=None):
    """Sample base and ghost paths and freeze ``theta``'s coefficients on the base.

    ``path_grid`` (default ``theta.grid``) is the driving grid; it must
    refine ``theta.grid``.
    """
    theta = _as_step_process(theta)
    base, ghost = as_stream(rng_base), as_stream(rng_ghost)
    if base.same_as(ghost):
        raise ConfigurationError("base and ghost streams must differ")
    alpha = check_alpha(alpha)
    grid = as_grid(path_grid) if path_grid is not None else theta.grid
    cfg = (d_G or theta.d_G, theta.d_H)
    bp = sample_driving_path(alpha, cfg, grid, base, n_scenarios)
    gp = sample_driving_path(alpha, cfg, grid, ghost, n_scenarios)
    coeffs = np.ascontiguousarray(theta.coefficients(bp))
    return TangentPair(bp, gp, coeffs, theta.grid)


def _fresh_cell(alpha, dt, d_G, gen, n):
    a = _positive(0.5 * alpha, gen, n)
    return subgaussian_scale(dt, alpha, a)[:, None] * gen.standard_normal((n, d_G))


def conditional_charfn_check(pair, h, n_inner, n_outer, rng, return_all=False):
    """Worst deviation of conditional characteristic functions from
    ``exp(-dt |F_n^* h|^alpha)`` over sampled (prefix, cell) pairs.

    For each outer draw a scenario and a cell are picked; the cell's base
    increment (coupled term) and ghost increment (decoupled term) are each
    redrawn ``n_inner`` times with the coefficient held fixed.
    """
    h = np.asarray(getattr(h, "coords", h), dtype=float)
    stream = as_stream(rng)
    pick = stream.child("pick").generator()
    S, M = pair.coefficients.shape[:2]
    scen = pick.integers(0, S, size=n_outer)
    cells = pick.integers(0, M, size=n_outer)
    dts = pair.grid.dt
    d_G = pair.coefficients.shape[3]
    devs = np.zeros((n_outer, 2))
    for j in range(n_outer):
        F = pair.coefficients[scen[j], cells[j]]
        v = F.T @ h
        target = np.exp(-dts[cells[j]] * np.linalg.norm(v) ** pair.alpha)
        for side in range(2):
            gen = stream.child("inner", j, side).generator()
            dz = _fresh_cell(pair.alpha, dts[cells[j]], d_G, gen, n_inner)
            x = dz @ v
            emp = complex(np.mean(np.cos(x)), np.mean(np.sin(x)))
            devs[j, side] = abs(emp - target)
    return devs if return_all else float(devs.max())


def decoupling_ratio(theta, gamma, n_scenarios, rng, alpha, path_grid=None):
    """Forward and reverse ratios ``E[|coupled| ^ 1] / E[|decoupled| ^ 1]``
    for ``Gamma Theta``.

    ``gamma=None`` means the identity.  Returns two :class:`MCEstimate`.
    """
    theta = _as_step_process(theta)
    if gamma is not None:
        theta = gamma.compose(theta)
    stream = as_stream(rng)
    pair = build_tangent_pair(theta, stream.child("base"), stream.child("ghost"), alpha,
                              n_scenarios, path_grid=path_grid)
    c = np.minimum(np.linalg.norm(pair.coupled, axis=1), 1.0)
    d = np.minimum(np.linalg.norm(pair.decoupled, axis=1), 1.0)
    return paired_ratio(c, d), paired_ratio(d, c)


def metric_of(samples):
    """``E[|X| ^ 1]`` as an MC estimate for samples of shape ``(S, d_H)``."""
    return mc_mean(np.minimum(np.linalg.norm(samples, axis=1), 1.0))
