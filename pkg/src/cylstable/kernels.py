"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``CYLSTABLE_DISABLE_NUMBA=1`` (before import) to force the numpy path.
Both paths consume the same pre-drawn uniforms/exponentials, so they agree
to floating-point rounding; within one backend results are deterministic.
"""
from __future__ import annotations

import math
import os

import numpy as np

_disabled = os.environ.get("CYLSTABLE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    import numba
    from numba import njit, prange
    # prefer OpenMP: it tolerates kernels being called from several Python threads
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# -- numpy reference implementations ---------------------------------------

def _sas_cms_np(alpha, v, w):
    if alpha == 1.0:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha))


def _positive_cms_np(a, v, w):
    # skew-1 CMS for index a in (0,1), scale cos(pi a / 2)^(1/a) folded in
    u = v + 0.5 * np.pi
    return (np.sin(a * u) / np.sin(u) ** (1.0 / a)
            * (np.sin((1.0 - a) * u) / w) ** ((1.0 - a) / a))


def _sphere_power_mean_np(x, weights, p):
    return np.sum(weights * x * x, axis=1) ** (0.5 * p)


def _step_integral_path_np(coeffs, dz):
    # coeffs (S, M, dH, dG), dz (S, M, dG) -> running sums (S, M+1, dH)
    terms = np.einsum("smhg,smg->smh", coeffs, dz)
    out = np.zeros((dz.shape[0], dz.shape[1] + 1, coeffs.shape[2]))
    np.cumsum(terms, axis=1, out=out[:, 1:])
    return out


def _apply_sum_np(ops, vecs):
    # ops (S, M, a, b), vecs (S, M, b) -> sum_m ops[:, m] @ vecs[:, m], shape (S, a)
    return np.einsum("smab,smb->sa", ops, vecs)


def _sup_norm_np(path):
    return np.sqrt(np.max(np.sum(path * path, axis=2), axis=1))


# -- numba implementations --------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _sas_cms_nb(alpha, v, w):
        out = np.empty(v.shape[0])
        if alpha == 1.0:
            for i in prange(v.shape[0]):
                out[i] = math.tan(v[i])
            return out
        inv = 1.0 / alpha
        ex = (1.0 - alpha) / alpha
        for i in prange(v.shape[0]):
            out[i] = (math.sin(alpha * v[i]) / math.cos(v[i]) ** inv
                      * (math.cos(v[i] - alpha * v[i]) / w[i]) ** ex)
        return out

    @njit(cache=True, parallel=True)
    def _positive_cms_nb(a, v, w):
        out = np.empty(v.shape[0])
        inv = 1.0 / a
        ex = (1.0 - a) / a
        for i in prange(v.shape[0]):
            u = v[i] + 0.5 * math.pi
            out[i] = (math.sin(a * u) / math.sin(u) ** inv
                      * (math.sin((1.0 - a) * u) / w[i]) ** ex)
        return out

    @njit(cache=True, parallel=True)
    def _sphere_power_mean_nb(x, weights, p):
        n, d = x.shape
        out = np.empty(n)
        for i in prange(n):
            acc = 0.0
            for j in range(d):
                acc += weights[j] * x[i, j] * x[i, j]
            out[i] = acc ** (0.5 * p)
        return out

    @njit(cache=True, parallel=True)
    def _step_integral_path_nb(coeffs, dz):
        S, M, dH, dG = coeffs.shape
        out = np.zeros((S, M + 1, dH))
        for s in prange(S):
            for m in range(M):
                for h in range(dH):
                    acc = 0.0
                    for g in range(dG):
                        acc += coeffs[s, m, h, g] * dz[s, m, g]
                    out[s, m + 1, h] = out[s, m, h] + acc
        return out

    @njit(cache=True, parallel=True)
    def _apply_sum_nb(ops, vecs):
        S, M, A, B = ops.shape
        out = np.zeros((S, A))
        for s in prange(S):
            for m in range(M):
                for a in range(A):
                    acc = 0.0
                    for b in range(B):
                        acc += ops[s, m, a, b] * vecs[s, m, b]
                    out[s, a] += acc
        return out

    @njit(cache=True, parallel=True)
    def _sup_norm_nb(path):
        S, M, dH = path.shape
        out = np.empty(S)
        for s in prange(S):
            best = 0.0
            for m in range(M):
                acc = 0.0
                for h in range(dH):
                    acc += path[s, m, h] * path[s, m, h]
                if acc > best:
                    best = acc
            out[s] = math.sqrt(best)
        return out


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sas_cms(alpha, v, w, backend=None):
    """Symmetric alpha-stable variates with char. fn. exp(-|u|^alpha).

    ``v`` uniform on (-pi/2, pi/2), ``w`` standard exponential.
    """
    if _use_numba(backend):
        return _sas_cms_nb(float(alpha), _c(v), _c(w))
    return _sas_cms_np(float(alpha), v, w)


def positive_cms(a, v, w, backend=None):
    """Positive a-stable variates, a in (0,1), Laplace transform exp(-s^a)."""
    if _use_numba(backend):
        return _positive_cms_nb(float(a), _c(v), _c(w))
    return _positive_cms_np(float(a), v, w)


def sphere_power(x, weights, p, backend=None):
    """Per-row ``(sum_j weights_j x_j^2)^(p/2)``."""
    if _use_numba(backend):
        return _sphere_power_mean_nb(_c(x), _c(weights), float(p))
    return _sphere_power_mean_np(x, weights, p)


def apply_sum(ops, vecs, backend=None):
    """``sum_m ops[:, m] @ vecs[:, m]`` per scenario."""
    if _use_numba(backend):
        return _apply_sum_nb(_c(ops), _c(vecs))
    return _apply_sum_np(ops, vecs)


def step_integral_path(coeffs, dz, backend=None):
    """Running sums of ``coeffs[:, m] @ dz[:, m]`` with a leading zero."""
    if _use_numba(backend):
        return _step_integral_path_nb(_c(coeffs), _c(dz))
    return _step_integral_path_np(coeffs, dz)


def sup_norm(path, backend=None):
    """``max_m ||path[s, m]||`` for each scenario ``s``."""
    if _use_numba(backend):
        return _sup_norm_nb(_c(path))
    return _sup_norm_np(path)


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend == "numba"
