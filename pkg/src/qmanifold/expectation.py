"""Position expectation value, its differential and the Gaussian section."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import config
from .errors import NonzeroRequired, NotHermitian, PreconditionError, TruncationError
from .hermite import (
    SchwartzFn,
    apply_momentum,
    apply_position,
    inner,
    nuclear_seminorm,
    stack_norms,
)


def require_nonzero(f: SchwartzFn, name: str = "f") -> None:
    if f.is_zero():
        raise NonzeroRequired(f"{name} must be nonzero (norm {f.norm:.3e})")


def expectation(f: SchwartzFn, operator="position", axis: int = 0) -> float:
    """``<f, O f> / <f, f>`` for ``O`` in {"position", "momentum"} or a callable.

    A callable must implement a Hermitian action ``SchwartzFn -> SchwartzFn``;
    a non-negligible imaginary part of ``<f, O f>`` raises :class:`NotHermitian`.
    """
    require_nonzero(f)
    if operator == "position":
        of = apply_position(f, axis)
    elif operator == "momentum":
        of = apply_momentum(f, axis)
    elif callable(operator):
        of = operator(f)
    else:
        raise ValueError(f"unknown operator {operator!r}")
    value = inner(f, of)
    if abs(value.imag) > 1e-10 * f.norm_sq:
        raise NotHermitian(f"<f, Of> has imaginary part {value.imag:.3e}")
    return value.real / f.norm_sq


def position_expectation(f: SchwartzFn) -> np.ndarray:
    """The vector ``Qbar(f)``."""
    require_nonzero(f)
    return np.array([expectation(f, "position", i) for i in range(f.dim)])


def d_expectation(f0: SchwartzFn, f: SchwartzFn) -> np.ndarray:
    """Differential of ``Qbar`` at ``f0`` applied to the direction ``f``.

    ``(<f0,Qf> + <f,Qf0> - Qbar(f0) (<f0,f> + <f,f0>)) / <f0,f0>``
    """
    require_nonzero(f0, "f0")
    qbar = position_expectation(f0)
    overlap = 2.0 * inner(f0, f).real
    out = np.empty(f0.dim)
    for i in range(f0.dim):
        cross = inner(f0, apply_position(f, i)) + inner(f, apply_position(f0, i))
        out[i] = (cross.real - qbar[i] * overlap) / f0.norm_sq
    return out


# Gaussian section -----------------------------------------------------


def _section_axis(x: float, degree: int, width: float) -> np.ndarray:
    # c_k = int h_k(y) exp(-((y - x)/width)^2) dy.  With h_k = p_k(y) exp(-y^2/2)
    # the integrand is a polynomial times one Gaussian, so Gauss-Hermite with
    # degree//2 + 1 nodes is exact.
    a = 0.5 + 1.0 / width ** 2
    centre = (x / width ** 2) / a
    log_const = -x * x / width ** 2 + a * centre * centre
    nodes, weights = np.polynomial.hermite.hermgauss(degree // 2 + 2)
    y = centre + nodes / math.sqrt(a)
    p = np.empty((degree + 1, y.size))
    p[0] = math.pi ** -0.25
    if degree >= 1:
        p[1] = math.sqrt(2.0) * y * p[0]
    for k in range(1, degree):
        p[k + 1] = math.sqrt(2.0 / (k + 1)) * y * p[k] - math.sqrt(k / (k + 1)) * p[k - 1]
    return math.exp(log_const) / math.sqrt(a) * (p @ weights)


def gaussian_section_width(x, degree: int, width: float = 1.0, tol: float | None = None) -> SchwartzFn:
    """Coefficients of ``y -> exp(-|y - x|^2 / width^2)`` truncated at ``degree``.

    Raises :class:`TruncationError` when the relative L2 mass lost to the
    truncation exceeds ``tol`` (``section_tol`` by default; pass ``math.inf``
    to skip the check).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    tol = config.get().section_tol if tol is None else tol
    coeffs = np.ones(())
    for xi in x:
        coeffs = np.multiply.outer(coeffs, _section_axis(float(xi), degree, width))
    f = SchwartzFn(coeffs)
    exact = (width * math.sqrt(math.pi / 2.0)) ** x.size
    defect = abs(1.0 - f.norm_sq / exact)
    if defect > tol:
        raise TruncationError(f"degree {degree} too small for section at {x.tolist()}", defect)
    return f


def gaussian_section(x, degree: int, tol: float | None = None) -> SchwartzFn:
    """``Psi(x) = (y -> exp(-|y - x|^2))``, a right inverse of ``Qbar``."""
    return gaussian_section_width(x, degree, 1.0, tol)


def section_mass_defect(x, degree: int, width: float = 1.0) -> float:
    f = gaussian_section_width(x, degree, width, tol=math.inf)
    exact = (width * math.sqrt(math.pi / 2.0)) ** np.atleast_1d(x).size
    return abs(1.0 - f.norm_sq / exact)


# indistinguishability -------------------------------------------------


def indistinguishable(f: SchwartzFn, g: SchwartzFn, tol: float | None = None) -> bool:
    """True iff the position expectation values agree to ``tol`` in the max norm.

    With a positive tolerance the relation is reflexive and symmetric but only
    transitive up to ``2 * tol``.
    """
    tol = config.get().indistinguishable_tol if tol is None else tol
    diff = position_expectation(f) - position_expectation(g)
    return bool(np.max(np.abs(diff)) <= tol)


# continuity bound -----------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    lhs: float
    rhs: float


def _position_norm(f: SchwartzFn) -> float:
    return stack_norms(apply_position(f, i) for i in range(f.dim))


def continuity_bound_check(f0: SchwartzFn, f: SchwartzFn) -> BoundCheck:
    """Evaluate both sides of the continuity estimate for ``Qbar``.

    ``|Qbar(f0+f) - Qbar(f0)| <= 4 |f|_1 |f0|^-3 [(|Qf0| + |f0| + |f|_1)|f0|
    + |Qf0| (2|f0| + |f|_1)]``, valid when ``|f| < |f0|/2``.
    """
    require_nonzero(f0, "f0")
    if not f.norm < 0.5 * f0.norm:
        raise PreconditionError(
            f"bound requires |f| < |f0|/2, got {f.norm:.3e} vs {f0.norm:.3e}"
        )
    n0 = f0.norm
    q0 = _position_norm(f0)
    f1 = nuclear_seminorm(f, 1)
    if f.norm == 0.0:
        lhs = 0.0
    else:
        lhs = float(np.linalg.norm(position_expectation(f0 + f) - position_expectation(f0)))
    rhs = 4.0 * f1 * n0 ** -3 * ((q0 + n0 + f1) * n0 + q0 * (2.0 * n0 + f1))
    return BoundCheck(lhs <= rhs, lhs, rhs)


def norm_bounds(f: SchwartzFn) -> tuple:
    """``(|f|_1 - |f|, |f|_1 - |Q f|)``; both non-negative when the bounds hold."""
    f1 = nuclear_seminorm(f, 1)
    return f1 - f.norm, f1 - _position_norm(f)


# tangent-to-zero diagnostics -----------------------------------------


@dataclass(frozen=True)
class TangentSlopeReport:
    t_values: tuple
    residual_norms: tuple
    fitted_slope: float
    threshold: float
    vacuous: bool

    @property
    def passed(self) -> bool:
        return self.vacuous or self.fitted_slope >= self.threshold

    @property
    def status(self) -> str:
        if self.vacuous:
            return "vacuous"
        return "pass" if self.passed else "fail"


def _norm_of(value, norm) -> float:
    if callable(norm):
        return float(norm(value))
    if isinstance(value, SchwartzFn):
        if norm == "l2":
            return value.norm
        if norm == "nuclear1":
            return nuclear_seminorm(value, 1)
        raise ValueError(f"unknown norm {norm!r} for a function residual")
    if isinstance(value, tuple):
        return product_norm(*value)
    return float(np.linalg.norm(np.asarray(value)))


def product_norm(vector, fn: SchwartzFn) -> float:
    """Norm on R^n x S: max of the Euclidean norm and the nuclear-1 seminorm."""
    return max(float(np.linalg.norm(vector)), nuclear_seminorm(fn, 1))


def tangent_slope(delta: Callable, f, norm="euclid", t_grid: Sequence[float] | None = None,
                  threshold: float | None = None, floor: float = 1e-14) -> TangentSlopeReport:
    """Least-squares log-log slope of ``|delta(t, f)|`` against ``t``.

    ``delta`` is a remainder map; a slope of 2 means it vanishes like ``t^2``.
    If every residual is below ``floor`` the check is reported as vacuous.
    """
    threshold = config.get().slope_threshold if threshold is None else threshold
    t = np.asarray(t_grid if t_grid is not None else np.logspace(-3, -5, 7), dtype=np.float64)
    if t.size < 4:
        raise PreconditionError("need at least 4 t values")
    if np.any(t <= 0) or np.any(t > 1):
        raise PreconditionError("t values must lie in (0, 1]")
    if np.any(np.diff(t) >= 0):
        raise PreconditionError("t values must be strictly decreasing")
    if t[0] / t[-1] < 100.0 * (1 - 1e-12):
        raise PreconditionError("t values must span at least two decades")
    residuals = np.array([_norm_of(delta(float(ti), f), norm) for ti in t])
    if np.all(residuals < floor):
        return TangentSlopeReport(tuple(t), tuple(residuals), float("nan"), threshold, True)
    safe = np.maximum(residuals, np.finfo(float).tiny)
    slope = float(np.polyfit(np.log(t), np.log(safe), 1)[0])
    return TangentSlopeReport(tuple(t), tuple(residuals), slope, threshold, False)


def expectation_remainder(f0: SchwartzFn) -> Callable:
    """``delta(t, f) = Qbar(f0 + t f) - Qbar(f0) - t DQbar(f0)(f)``."""
    q0 = position_expectation(f0)

    def delta(t, f):
        return position_expectation(f0 + t * f) - q0 - t * d_expectation(f0, f)

    return delta
