"""Named integrand programs, buildable from a name plus JSON parameters."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .grid import TimeGrid
from .hilbert import HSOperator
from .processes import IntegrandProgram


def default_operator(d_H, d_G):
    """``diag(1, 1/2, 1/3, ...)`` scaled to unit HS norm."""
    k = min(d_H, d_G)
    m = np.zeros((d_H, d_G))
    m[np.arange(k), np.arange(k)] = 1.0 / np.arange(1, k + 1)
    return m / np.linalg.norm(m)


def _matrix(params, d_H, d_G, key="matrix"):
    if params.get(key) is None:
        return default_operator(d_H, d_G)
    m = np.asarray(params[key], dtype=float)
    if m.shape != (d_H, d_G):
        raise ConfigurationError(f"{key} has shape {m.shape}, expected {(d_H, d_G)}")
    return m


def constant(d_H, d_G, matrix=None, scale=1.0):
    m = float(scale) * _matrix({"matrix": matrix}, d_H, d_G)
    return IntegrandProgram(lambda t, p: m, d_H, d_G, "constant", deterministic=True,
                            bound=float(np.linalg.norm(m)))


def power_law(d_H, d_G, beta, matrix=None, scale=1.0):
    """``scale * t^(-beta) Phi``; square integrable in L^alpha iff beta*alpha < 1."""
    m = float(scale) * _matrix({"matrix": matrix}, d_H, d_G)
    b = float(beta)
    return IntegrandProgram(lambda t, p: (t ** -b if t > 0 else np.inf) * m, d_H, d_G,
                            f"power_law(beta={b})", deterministic=True)


def volatility(d_H, d_G, exponent=0.5, matrix=None, scale=1.0):
    """``scale * (1 + |Z(t-)|)^exponent Phi``, driven by the running path."""
    m = float(scale) * _matrix({"matrix": matrix}, d_H, d_G)
    p = float(exponent)

    def ev(t, prefix):
        z = np.linalg.norm(prefix.position, axis=1)
        return ((1.0 + z) ** p)[:, None, None] * m

    return IntegrandProgram(ev, d_H, d_G, f"volatility(p={p})")


def random_partition(d_H, d_G, cells=8, T=1.0, plus=None, minus=None, scale=1.0):
    """Step integrand choosing ``Phi_+`` or ``Phi_-`` on each cell of a uniform
    grid by the sign of the first path coordinate at the cell's left end."""
    grid = TimeGrid.uniform(T, int(cells))
    a = float(scale) * _matrix({"m": plus}, d_H, d_G, "m")
    b = -a if minus is None else float(scale) * _matrix({"m": minus}, d_H, d_G, "m")
    times = grid.times

    def ev(t, prefix):
        j = min(int(np.searchsorted(times, t, side="right")) - 1, grid.n_cells - 1)
        z = prefix.rewind(times[j]).position[:, 0]
        return np.where((z > 0)[:, None, None], a, b)

    return IntegrandProgram(ev, d_H, d_G, f"random_partition(cells={cells})",
                            bound=max(np.linalg.norm(a), np.linalg.norm(b)))


CATALOG = {
    "constant": constant,
    "power_law": power_law,
    "volatility": volatility,
    "random_partition": random_partition,
}


def build(name, d_H, d_G, params=None):
    """Instantiate a catalog integrand, e.g. ``build("power_law", 2, 2, {"beta": 0.4})``."""
    if name not in CATALOG:
        raise ConfigurationError(f"unknown integrand {name!r}; choose from {sorted(CATALOG)}")
    try:
        return CATALOG[name](int(d_H), int(d_G), **(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}") from None


def as_operator(m):
    return m if isinstance(m, HSOperator) else HSOperator(np.asarray(m, dtype=float))
