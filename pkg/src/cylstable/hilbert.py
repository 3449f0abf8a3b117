"""Finite-dimensional truncations of the Hilbert spaces G and H.

Operators G -> H are stored as ``d_H x d_G`` real matrices in the
orthonormal bases kept by the truncation.  Everything here is immutable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

CONTRACTION_TOL = 1e-12


@dataclass(frozen=True)
class TruncationConfig:
    d_G: int
    d_H: int

    def __post_init__(self):
        for name in ("d_G", "d_H"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))


def _frozen(a, ndim, what):
    a = np.array(a, dtype=np.float64)
    if a.ndim != ndim:
        raise ConfigurationError(f"{what} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{what} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HVector:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords, 1, "HVector"))

    @property
    def dim(self):
        return self.coords.shape[0]

    def norm(self):
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True, eq=False)
class HSOperator:
    """Hilbert-Schmidt operator G -> H as a ``d_H x d_G`` matrix."""

    matrix: np.ndarray
    singular_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix, 2, "HSOperator matrix")
        object.__setattr__(self, "matrix", m)
        sv = np.linalg.svd(m, compute_uv=False)
        sv.setflags(write=False)
        object.__setattr__(self, "singular_values", sv)

    @classmethod
    def zeros(cls, d_H, d_G):
        return cls(np.zeros((d_H, d_G)))

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @property
    def d_H(self):
        return self.matrix.shape[0]

    @property
    def d_G(self):
        return self.matrix.shape[1]

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        return self.matrix @ np.asarray(other)

    def __mul__(self, c):
        return HSOperator(float(c) * self.matrix)

    __rmul__ = __mul__

    def __add__(self, other):
        return HSOperator(self.matrix + other.matrix)

    def __sub__(self, other):
        return HSOperator(self.matrix - other.matrix)

    def __eq__(self, other):
        return isinstance(other, HSOperator) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))


@dataclass(frozen=True, eq=False)
class ContractionOperator:
    """Operator H -> H with operator norm at most one."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix, 2, "ContractionOperator matrix")
        if m.shape[0] != m.shape[1]:
            raise ConfigurationError(f"contraction must be square, got {m.shape}")
        top = np.linalg.norm(m, 2) if m.size else 0.0
        if top > 1.0 + CONTRACTION_TOL:
            raise ConfigurationError(f"operator norm {top!r} exceeds 1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def op_norm(self):
        return float(np.linalg.norm(self.matrix, 2))


def hs_norm(phi):
    m = phi.matrix if isinstance(phi, HSOperator) else np.asarray(phi, dtype=float)
    return float(np.sqrt(np.sum(m * m)))


def op_norm(phi):
    m = phi.matrix if hasattr(phi, "matrix") else np.asarray(phi, dtype=float)
    return float(np.linalg.norm(m, 2))


def adjoint(phi):
    return HSOperator(phi.matrix.T)


def compose(gamma, phi):
    """Return ``gamma @ phi`` as an HSOperator.

    ``gamma`` may be a ContractionOperator or any HSOperator acting on H.
    """
    if gamma.matrix.shape[1] != phi.matrix.shape[0]:
        raise ConfigurationError(
            f"cannot compose {gamma.matrix.shape} with {phi.matrix.shape}"
        )
    return HSOperator(gamma.matrix @ phi.matrix)


def singular_decomposition(phi):
    """Return ``(U, s, Vt)`` with ``phi = U @ diag(s) @ Vt``.

    ``U`` has orthonormal columns in H, rows of ``Vt`` are orthonormal in G,
    and ``s`` is nonincreasing and nonnegative.  Signs of the spectral
    coefficients are absorbed into the factors.
    """
    u, s, vt = np.linalg.svd(phi.matrix, full_matrices=False)
    return u, s, vt


def random_hs_operator(rng, d_H, d_G, hs=None):
    """Gaussian random operator, optionally rescaled to HS norm ``hs``."""
    m = rng.standard_normal((d_H, d_G))
    if hs is not None:
        m *= hs / np.linalg.norm(m)
    return HSOperator(m)


def random_contraction(rng, d, min_scale=0.0):
    """Random rotation times a random diagonal contraction."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    diag = rng.uniform(min_scale, 1.0, size=d)
    return ContractionOperator(q @ np.diag(diag))


# -- serialization ---------------------------------------------------------

def operator_to_json(phi):
    m = phi.matrix
    return json.dumps({"rows": m.shape[0], "cols": m.shape[1], "data": m.tolist()})


def operator_from_json(text):
    obj = json.loads(text) if isinstance(text, str) else text
    data = np.asarray(obj["data"], dtype=float).reshape(obj["rows"], obj["cols"])
    return HSOperator(data)


def operator_to_csv(phi):
    m = phi.matrix
    lines = [f"# rows={m.shape[0]},cols={m.shape[1]}"]
    lines += [",".join(repr(float(x)) for x in row) for row in m]
    return "\n".join(lines) + "\n"


def operator_from_csv(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ConfigurationError("operator CSV must start with a '# rows=..,cols=..' header")
    header = dict(kv.split("=") for kv in lines[0].lstrip("# ").split(","))
    rows, cols = int(header["rows"]), int(header["cols"])
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if data.shape != (rows, cols):
        raise ConfigurationError(f"header says {(rows, cols)}, data has shape {data.shape}")
    return HSOperator(data)
