"""Schwartz functions as truncated expansions in orthonormal Hermite functions.

A function on R^n is stored by its coefficients in the tensor basis
``h_k = h_{k_1} x ... x h_{k_n}``, where ``h_k`` are the harmonic-oscillator
eigenfunctions.  Position, momentum and derivatives act through the ladder
operators and always grow the coefficient array, so they are exact on the
stored function.  ``Q^2 + P^2 + 1`` is diagonal in this basis with eigenvalue
``2|k| + n + 1``, which makes the nuclear seminorms exact.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from numbers import Number
from typing import Iterable, Sequence

import numpy as np

from . import config
from .errors import AxisError, DimensionMismatch, GridTooSmall

PI_QUARTER = math.pi ** -0.25

MultiIndex = tuple  # tuple[int, ...]


def as_multi_index(index, dim: int) -> tuple:
    """Normalise ``index`` (int for 1D, or a sequence) to a tuple of length ``dim``."""
    if isinstance(index, (int, np.integer)):
        if dim != 1:
            raise DimensionMismatch(f"scalar multi-index used with dim={dim}")
        index = (int(index),)
    index = tuple(int(i) for i in index)
    if len(index) != dim:
        raise DimensionMismatch(f"multi-index {index} has length {len(index)}, expected {dim}")
    if any(i < 0 for i in index):
        raise ValueError(f"multi-index entries must be non-negative: {index}")
    return index


@dataclass(frozen=True, eq=False)
class SchwartzFn:
    """Immutable truncated Hermite expansion.

    ``coeffs`` has one axis per spatial dimension; entry ``coeffs[k]``
    multiplies ``h_k``.  The per-axis truncation degree is ``shape - 1``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.ndim == 0:
            raise ValueError("coefficients need at least one axis")
        if c.size == 0:
            raise ValueError("empty coefficient array")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    @property
    def degree(self) -> tuple:
        return tuple(s - 1 for s in self.coeffs.shape)

    @cached_property
    def norm_sq(self) -> float:
        return float(np.sum(self.coeffs.real ** 2 + self.coeffs.imag ** 2))

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    def is_zero(self, tol: float | None = None) -> bool:
        tol = config.get().nonzero_tol if tol is None else tol
        return self.norm <= tol

    def pad(self, degree) -> "SchwartzFn":
        """Zero-pad to at least ``degree`` per axis (never truncates)."""
        degree = _degree_tuple(degree, self.dim)
        shape = tuple(max(s, d + 1) for s, d in zip(self.coeffs.shape, degree))
        if shape == self.coeffs.shape:
            return self
        out = np.zeros(shape, dtype=np.complex128)
        out[tuple(slice(0, s) for s in self.coeffs.shape)] = self.coeffs
        return SchwartzFn(out)

    @property
    def flat(self) -> np.ndarray:
        """Coefficients in row-major multi-index order."""
        return self.coeffs.reshape(-1)

    # arithmetic -------------------------------------------------------

    def _binary(self, other, op):
        if not isinstance(other, SchwartzFn):
            return NotImplemented
        a, b = _common(self, other)
        return SchwartzFn(op(a.coeffs, b.coeffs))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SchwartzFn(-self.coeffs)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return SchwartzFn(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return SchwartzFn(self.coeffs / scalar)

    def __repr__(self):
        return f"SchwartzFn(dim={self.dim}, degree={self.degree}, norm={self.norm:.6g})"

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        flat = self.flat
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        return {"dim": self.dim, "degree": list(self.degree), "coeffs": inter.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "SchwartzFn":
        dim = int(record["dim"])
        degree = _degree_tuple(record["degree"], dim)
        inter = np.asarray(record["coeffs"], dtype=np.float64)
        shape = tuple(d + 1 for d in degree)
        if inter.size != 2 * math.prod(shape):
            raise ValueError(
                f"expected {2 * math.prod(shape)} interleaved values, got {inter.size}"
            )
        return cls((inter[0::2] + 1j * inter[1::2]).reshape(shape))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SchwartzFn":
        return cls.from_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        header = _MAGIC + struct.pack("<I", self.dim) + struct.pack(f"<{self.dim}I", *self.degree)
        return header + self.flat.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SchwartzFn":
        if data[:4] != _MAGIC:
            raise ValueError("not a serialized SchwartzFn (bad magic)")
        (dim,) = struct.unpack_from("<I", data, 4)
        degree = struct.unpack_from(f"<{dim}I", data, 8)
        offset = 8 + 4 * dim
        shape = tuple(d + 1 for d in degree)
        flat = np.frombuffer(data, dtype="<c16", offset=offset)
        if flat.size != math.prod(shape):
            raise ValueError("payload length does not match header")
        return cls(flat.reshape(shape))


_MAGIC = b"SFN1"


def _degree_tuple(degree, dim: int) -> tuple:
    if isinstance(degree, (int, np.integer)):
        return (int(degree),) * dim
    degree = tuple(int(d) for d in degree)
    if len(degree) != dim:
        raise DimensionMismatch(f"degree {degree} does not match dim {dim}")
    return degree


def _common(f: SchwartzFn, g: SchwartzFn):
    if f.dim != g.dim:
        raise DimensionMismatch(f"dimension mismatch: {f.dim} vs {g.dim}")
    degree = tuple(max(a, b) for a, b in zip(f.degree, g.degree))
    return f.pad(degree), g.pad(degree)


def _check_axis(f: SchwartzFn, axis: int) -> None:
    if not 0 <= axis < f.dim:
        raise AxisError(f"axis {axis} out of range for dim {f.dim}")


# constructors ---------------------------------------------------------


def zeros(dim: int, degree=0) -> SchwartzFn:
    shape = tuple(d + 1 for d in _degree_tuple(degree, dim))
    return SchwartzFn(np.zeros(shape, dtype=np.complex128))


def basis(k, dim: int | None = None, degree=None) -> SchwartzFn:
    """The basis function ``h_k``; ``k`` is an int (1D) or a multi-index."""
    if dim is None:
        dim = 1 if isinstance(k, (int, np.integer)) else len(k)
    k = as_multi_index(k, dim)
    degree = k if degree is None else tuple(max(a, b) for a, b in zip(k, _degree_tuple(degree, dim)))
    c = np.zeros(tuple(d + 1 for d in degree), dtype=np.complex128)
    c[k] = 1.0
    return SchwartzFn(c)


def random_schwartz(rng: np.random.Generator, dim: int = 1, degree=8, decay: float = 0.3,
                    real: bool = False) -> SchwartzFn:
    """Random expansion with coefficients damped like ``exp(-decay * |k|)``."""
    degree = _degree_tuple(degree, dim)
    shape = tuple(d + 1 for d in degree)
    c = rng.standard_normal(shape)
    if not real:
        c = c + 1j * rng.standard_normal(shape)
    total = np.zeros(shape)
    for axis, n in enumerate(shape):
        idx = np.arange(n).reshape([-1 if a == axis else 1 for a in range(dim)])
        total = total + idx
    return SchwartzFn(c * np.exp(-decay * total))


# inner product and ladder algebra -------------------------------------


def inner(f: SchwartzFn, g: SchwartzFn) -> complex:
    """``<f, g>``, antilinear in the first argument."""
    a, b = _common(f, g)
    return complex(np.vdot(a.coeffs, b.coeffs))


def l2_norm(f: SchwartzFn) -> float:
    return f.norm


def _ladder(c: np.ndarray, axis: int, sign: float) -> np.ndarray:
    # (a + sign * a^dagger)/sqrt2 acting on coefficients along ``axis``
    c = np.moveaxis(c, axis, 0)
    n = c.shape[0]
    out = np.zeros((n + 1,) + c.shape[1:], dtype=np.complex128)
    shape = (-1,) + (1,) * (c.ndim - 1)
    lower = np.sqrt(np.arange(1, n)).reshape(shape)  # a: c_{m+1} -> m
    raise_ = np.sqrt(np.arange(1, n + 1)).reshape(shape)  # a^dagger: c_{m-1} -> m
    out[: n - 1] += lower * c[1:]
    out[1:] += sign * raise_ * c
    return np.moveaxis(out / math.sqrt(2.0), 0, axis)


def apply_position(f: SchwartzFn, axis: int = 0) -> SchwartzFn:
    """``(Q^i f)(x) = x^i f(x)``."""
    _check_axis(f, axis)
    return SchwartzFn(_ladder(f.coeffs, axis, +1.0))


def partial(f: SchwartzFn, axis: int = 0) -> SchwartzFn:
    """``d f / d x^i`` via ``(a - a^dagger)/sqrt2``."""
    _check_axis(f, axis)
    return SchwartzFn(_ladder(f.coeffs, axis, -1.0))


def apply_momentum(f: SchwartzFn, axis: int = 0) -> SchwartzFn:
    """``(P_i f)(x) = -i d_i f(x)``."""
    return SchwartzFn(-1j * partial(f, axis).coeffs)


def derivative(f: SchwartzFn, beta) -> SchwartzFn:
    beta = as_multi_index(beta, f.dim)
    for axis, count in enumerate(beta):
        for _ in range(count):
            f = partial(f, axis)
    return f


def monomial_multiply(f: SchwartzFn, alpha) -> SchwartzFn:
    alpha = as_multi_index(alpha, f.dim)
    for axis, count in enumerate(alpha):
        for _ in range(count):
            f = apply_position(f, axis)
    return f


def gradient(f: SchwartzFn) -> list:
    return [partial(f, axis) for axis in range(f.dim)]


# pointwise evaluation -------------------------------------------------


def hermite_functions(kmax: int, x) -> np.ndarray:
    """Values ``h_0(x) ... h_kmax(x)`` stacked along the first axis."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def evaluate(f: SchwartzFn, x) -> complex | np.ndarray:
    """Value of ``f`` at ``x`` (shape ``(dim,)``) or at many points (shape ``(m, dim)``)."""
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim <= 1
    pts = pts.reshape(-1, f.dim) if not single else pts.reshape(1, -1)
    if pts.shape[1] != f.dim:
        raise DimensionMismatch(f"point has {pts.shape[1]} coordinates, expected {f.dim}")
    result = f.coeffs.reshape(f.coeffs.shape + (1,)) * np.ones(pts.shape[0])
    # contract the leading axis one dimension at a time
    for axis in range(f.dim):
        h = hermite_functions(f.degree[axis], pts[:, axis])  # (K+1, m)
        result = np.einsum("k...m,km->...m", result, h)
    return complex(result[0]) if single else result


def evaluate_grid(f: SchwartzFn, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Values on the tensor grid ``axes[0] x ... x axes[n-1]``."""
    if len(axes) != f.dim:
        raise DimensionMismatch(f"{len(axes)} grid axes for dim {f.dim}")
    values = f.coeffs
    for axis, pts in enumerate(axes):
        h = hermite_functions(f.degree[axis], pts)  # (K+1, m)
        values = np.moveaxis(np.tensordot(values, h, axes=([axis], [0])), -1, axis)
    return values


# seminorms ------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be at least 2")

    @classmethod
    def for_degree(cls, degree: int, points_per_axis: int = 4001, margin: float | None = None):
        margin = config.get().grid_margin if margin is None else margin
        return cls(math.sqrt(2 * degree + 1) + margin, points_per_axis)

    def required_half_width(self, degree: int, margin: float | None = None) -> float:
        margin = config.get().grid_margin if margin is None else margin
        return math.sqrt(2 * degree + 1) + margin

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)


def sup_seminorm(f: SchwartzFn, alpha, beta, grid: GridSpec) -> float:
    """Grid estimate of ``sup_x |x^alpha D_beta f(x)|``.

    The maximum is taken over grid points only, so the result is a lower
    bound on the true supremum that increases under nested refinement.
    """
    g = monomial_multiply(derivative(f, beta), alpha)
    required = grid.required_half_width(max(g.degree))
    if grid.half_width < required:
        raise GridTooSmall(grid.half_width, required)
    values = evaluate_grid(g, [grid.axis()] * f.dim)
    return float(np.max(np.abs(values)))


def _oscillator_levels(f: SchwartzFn) -> np.ndarray:
    total = np.zeros(f.coeffs.shape)
    for axis, n in enumerate(f.coeffs.shape):
        idx = np.arange(n).reshape([-1 if a == axis else 1 for a in range(f.dim)])
        total = total + idx
    return 2.0 * total + f.dim + 1.0


def nuclear_quadratic_form(f: SchwartzFn, p: int) -> float:
    """``<f, (Q^2 + P^2 + 1)^p f>`` (no square root)."""
    if p < 0:
        raise ValueError("p must be non-negative")
    weights = _oscillator_levels(f) ** p
    return float(np.sum(weights * (f.coeffs.real ** 2 + f.coeffs.imag ** 2)))


def nuclear_seminorm(f: SchwartzFn, p: int) -> float:
    """Square root of :func:`nuclear_quadratic_form`; ``p = 0`` is the L2 norm."""
    return math.sqrt(nuclear_quadratic_form(f, p))


# truncation -----------------------------------------------------------


def truncate(f: SchwartzFn, degree) -> tuple:
    """Cut ``f`` to ``degree`` per axis; returns ``(g, discarded_l2_mass)``."""
    degree = _degree_tuple(degree, f.dim)
    keep = tuple(slice(0, min(d, k) + 1) for d, k in zip(degree, f.degree))
    g = SchwartzFn(f.coeffs[keep])
    return g, max(f.norm_sq - g.norm_sq, 0.0)


def trim(f: SchwartzFn, tol: float) -> tuple:
    """Drop trailing levels per axis whose combined amplitude is at most ``tol``.

    Returns ``(g, discarded_amplitude)`` where the amplitude is the L2 norm of
    what was removed.
    """
    mass = f.coeffs.real ** 2 + f.coeffs.imag ** 2
    budget = tol * tol
    keep = []
    for axis in range(f.dim):
        other = tuple(a for a in range(f.dim) if a != axis)
        marginal = mass.sum(axis=other) if other else mass
        tail = np.cumsum(marginal[::-1])[::-1]  # tail[m] = mass at levels >= m
        # per-axis share of the budget keeps the total below tol
        ok = np.nonzero(tail <= budget / f.dim)[0]
        cut = int(ok[0]) if ok.size else len(marginal)
        keep.append(max(cut, 1))
    g = SchwartzFn(f.coeffs[tuple(slice(0, k) for k in keep)])
    return g, math.sqrt(max(f.norm_sq - g.norm_sq, 0.0))


def commutator_residual(f: SchwartzFn, g: SchwartzFn, axis: int = 0) -> float:
    """``|<g, (QP - PQ) f> - i <g, f>|``."""
    qp = apply_position(apply_momentum(f, axis), axis)
    pq = apply_momentum(apply_position(f, axis), axis)
    return abs(inner(g, qp - pq) - 1j * inner(g, f))


def stack_norms(fs: Iterable[SchwartzFn]) -> float:
    """Euclidean norm of a vector of functions, ``sqrt(sum ||f_i||^2)``."""
    return math.sqrt(sum(f.norm_sq for f in fs))
