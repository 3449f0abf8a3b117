"""Monte Carlo estimates and robust summary statistics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int

    def to_dict(self):
        return asdict(self)

    def __float__(self):
        return self.value


def mc_mean(samples):
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n == 0:
        return MCEstimate(float("nan"), float("nan"), 0)
    se = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return MCEstimate(float(np.mean(x)), se, n)


def mc_probability(events):
    e = np.asarray(events, dtype=bool).ravel()
    n = e.size
    p = float(np.mean(e))
    # floor keeps the error honest when no event was observed
    se = float(np.sqrt(max(p * (1 - p), 1.0 / n) / n))
    return MCEstimate(p, se, n)


def ratio_estimate(num, den, zero_tol=1e-12):
    """``num/den`` for two independent estimates, delta-method stderr.

    Returns ratio 1 with zero error when both are below ``zero_tol``.
    """
    if abs(num.value) < zero_tol and abs(den.value) < zero_tol:
        return MCEstimate(1.0, 0.0, min(num.n, den.n))
    if den.value == 0:
        return MCEstimate(float("inf"), float("inf"), min(num.n, den.n))
    r = num.value / den.value
    rel = np.hypot(num.stderr / max(abs(num.value), zero_tol), den.stderr / abs(den.value))
    return MCEstimate(float(r), float(abs(r) * rel), min(num.n, den.n))


def charfn_mean(x):
    """Empirical characteristic function value ``mean exp(i x)``."""
    return complex(np.mean(np.cos(x)), np.mean(np.sin(x)))


def tail_slope(x, frac=0.01):
    """Slope of log survival vs log level over the top ``frac`` of ``|x|``."""
    a = np.sort(np.abs(np.asarray(x, dtype=float).ravel()))[::-1]
    k = max(int(a.size * frac), 10)
    top = a[:k]
    surv = np.arange(1, k + 1) / a.size
    return float(np.polyfit(np.log(top), np.log(surv), 1)[0])


def quantile_match(x, y, qs=(0.1, 0.25, 0.5, 0.75, 0.9)):
    """Largest relative quantile discrepancy between two samples."""
    qx = np.quantile(x, qs)
    qy = np.quantile(y, qs)
    return float(np.max(np.abs(qx - qy) / np.maximum(np.abs(qy), 1e-300)))


def ks_distance(x, cdf):
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    f = cdf(x)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


def paired_ratio(x, y, zero_tol=1e-12):
    """``mean(x)/mean(y)`` for paired samples, delta-method stderr with covariance."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    mx, my = float(np.mean(x)), float(np.mean(y))
    if abs(mx) < zero_tol and abs(my) < zero_tol:
        return MCEstimate(1.0, 0.0, n)
    if my == 0:
        return MCEstimate(float("inf"), float("inf"), n)
    r = mx / my
    c = np.cov(x, y, ddof=1)
    var = (c[0, 0] - 2 * r * c[0, 1] + r * r * c[1, 1]) / (n * my * my)
    return MCEstimate(float(r), float(np.sqrt(max(var, 0.0))), n)
