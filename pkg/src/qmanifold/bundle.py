"""Trivialization of the nonzero Schwartz functions as ``R^n x S_0``.

``tau(f) = (Qbar(f), T_{-Qbar(f)} f)`` splits a function into its position
expectation value and a fiber element with zero expectation value;
``tau^{-1}(x, g) = T_x g``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import DirectionNotTangent, NonzeroRequired, PreconditionError, SampleOutsideChart
from .expectation import d_expectation, position_expectation, product_norm, require_nonzero
from .hermite import SchwartzFn, partial
from .report import below
from .translation import translate


@dataclass(frozen=True, eq=False)
class FiberPoint:
    """A point ``(base, fiber)`` of ``R^n x S_0``."""

    base: np.ndarray
    fiber: SchwartzFn

    def __post_init__(self):
        base = np.atleast_1d(np.asarray(self.base, dtype=np.float64)).copy()
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        if base.size != self.fiber.dim:
            raise PreconditionError(f"base of length {base.size} for fiber of dim {self.fiber.dim}")
        if not np.all(np.isfinite(base)):
            raise PreconditionError("base must be finite")
        if self.fiber.is_zero():
            raise NonzeroRequired("fiber must be nonzero")
        offset = np.max(np.abs(position_expectation(self.fiber)))
        if offset > config.get().fiber_tol:
            raise PreconditionError(f"fiber has expectation value {offset:.3e}, not in S_0")


def in_fiber(f: SchwartzFn, tol: float | None = None) -> bool:
    tol = config.get().fiber_tol if tol is None else tol
    return not f.is_zero() and bool(np.max(np.abs(position_expectation(f))) <= tol)


def project_to_fiber(f: SchwartzFn, max_degree: int | None = None) -> SchwartzFn:
    """``T_{-Qbar(f)} f``."""
    require_nonzero(f)
    return translate(f, -position_expectation(f), max_degree=max_degree)


def trivialize(f: SchwartzFn, max_degree: int | None = None) -> FiberPoint:
    require_nonzero(f)
    x = position_expectation(f)
    return FiberPoint(x, translate(f, -x, max_degree=max_degree))


def untrivialize(p: FiberPoint, max_degree: int | None = None) -> SchwartzFn:
    return translate(p.fiber, p.base, max_degree=max_degree)


def _directional_gradient(vector, f: SchwartzFn) -> SchwartzFn:
    out = SchwartzFn(np.zeros_like(f.coeffs))
    for i, v in enumerate(vector):
        if v != 0.0:
            out = out + float(v) * partial(f, i)
    return out


def d_trivialize(f0: SchwartzFn, g: SchwartzFn, max_degree: int | None = None):
    """``Dtau(f0)(g) = (DQ(g), DQ(g) . grad(T_{-Qbar f0} f0) + T_{-Qbar f0} g)``."""
    require_nonzero(f0, "f0")
    x0 = position_expectation(f0)
    dq = d_expectation(f0, g)
    fiber0 = translate(f0, -x0, max_degree=max_degree)
    fn = _directional_gradient(dq, fiber0) + translate(g, -x0, max_degree=max_degree)
    return dq, fn


def d_untrivialize(x0, g0: SchwartzFn, x, g: SchwartzFn, check: bool = True,
                   max_degree: int | None = None) -> SchwartzFn:
    """``Dtau^{-1}(x0, g0)(x, g) = -x . grad(T_{x0} g0) + T_{x0} g``.

    The direction ``g`` must satisfy ``DQbar(g0)(g) = 0`` (within ``fiber_tol``,
    relative to the size of ``g``) unless ``check`` is false.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if check:
        residual = float(np.max(np.abs(d_expectation(g0, g))))
        if residual > config.get().fiber_tol * max(1.0, g.norm / g0.norm):
            raise DirectionNotTangent(residual)
    moved = translate(g0, x0, max_degree=max_degree)
    return translate(g, x0, max_degree=max_degree) - _directional_gradient(x, moved)


def tangent_direction(g0: SchwartzFn, h: SchwartzFn) -> SchwartzFn:
    """Project ``h`` onto ``ker DQbar(g0)`` along the gradient of ``g0``.

    Translation equivariance gives ``DQbar(g0)(d_i g0) = -e_i``, so adding
    ``DQbar(g0)(h) . grad g0`` removes the component that moves the
    expectation value.
    """
    return h + _directional_gradient(d_expectation(g0, h), g0)


def trivialize_remainder(f0: SchwartzFn, max_degree: int | None = None):
    """``delta(t, g) = tau(f0 + t g) - tau(f0) - t Dtau(f0)(g)`` as ``(vector, function)``."""
    p0 = trivialize(f0, max_degree)

    def delta(t, g):
        p = trivialize_raw(f0 + t * g, max_degree)
        dq, dfn = d_trivialize(f0, g, max_degree)
        return (p[0] - p0.base - t * dq, p[1] - p0.fiber - t * dfn)

    return delta


def trivialize_raw(f: SchwartzFn, max_degree: int | None = None):
    """``tau(f)`` as a plain tuple, without fiber validation."""
    x = position_expectation(f)
    return x, translate(f, -x, max_degree=max_degree)


def untrivialize_remainder(x0, g0: SchwartzFn, max_degree: int | None = None):
    """``delta(t, (x, g)) = T(x0 + t x, g0 + t g) - T(x0, g0) - t Dtau^{-1}(x, g)``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    base = translate(g0, x0, max_degree=max_degree)

    def delta(t, direction):
        x, g = direction
        moved = translate(g0 + t * g, x0 + t * np.asarray(x), max_degree=max_degree)
        lin = d_untrivialize(x0, g0, x, g, check=False, max_degree=max_degree)
        return moved - base - t * lin

    return delta


def product_distance(a, b) -> float:
    """Distance on ``R^n x S`` between ``(vector, function)`` pairs."""
    return product_norm(np.asarray(a[0]) - np.asarray(b[0]), a[1] - b[1])


def _euclidean(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))


def local_trivialization(quantum_chart, classical_chart, psi, max_degree: int | None = None):
    """``omega(psi) = (chi^{-1} x id)(tau(phi(psi)))`` as ``(point, fiber)``."""
    if not classical_chart.contains(psi.base):
        raise SampleOutsideChart(f"{np.atleast_1d(psi.base).tolist()} not in chart")
    x, g = trivialize_raw(quantum_chart.phi(psi), max_degree)
    return classical_chart.inverse_map(x), g


def inverse_local_trivialization(quantum_chart, classical_chart, point, fiber: SchwartzFn,
                                 max_degree: int | None = None):
    """``omega^{-1}(xi, g) = phi^{-1}(tau^{-1}(chi(xi), g))``."""
    f = translate(fiber, classical_chart.chart_map(point), max_degree=max_degree)
    return quantum_chart.phi_inv(f)


def verify_local_triviality(quantum_chart, classical_chart, samples, distance=None,
                            max_degree: int | None = None, prefix: str = "bundle.omega") -> list:
    """Check that ``omega_1`` is the Kolmogorov projection and ``omega`` inverts.

    ``samples`` are quantum points ``(base, fiber)`` in the chart; for the
    product structure the Kolmogorov projection of ``(xi, g)`` is ``xi``.
    ``distance`` compares manifold points (Euclidean by default).
    """
    distance = _euclidean if distance is None else distance
    tols = config.get()
    proj_err = 0.0
    chart_err = 0.0
    trip_err = 0.0
    n = 0
    for psi in samples:
        point, g = local_trivialization(quantum_chart, classical_chart, psi, max_degree)
        # Kolmogorov projection through the chart, computed independently of tau
        f = quantum_chart.phi(psi)
        kolmogorov = classical_chart.inverse_map(position_expectation(f))
        proj_err = max(proj_err, distance(point, psi.base), distance(point, kolmogorov))
        chart_err = max(chart_err, (g - psi.fiber).norm / psi.fiber.norm)
        back = inverse_local_trivialization(quantum_chart, classical_chart, point, g, max_degree)
        trip_err = max(trip_err, distance(back.base, psi.base), (back.fiber - psi.fiber).norm / psi.fiber.norm)
        n += 1
    detail = f"{n} samples"
    return [
        below(f"{prefix}.projection", "local-triviality", proj_err, tols.point_tol, detail),
        below(f"{prefix}.fiber", "local-triviality", chart_err, tols.chart_tol, detail),
        below(f"{prefix}.roundtrip", "local-triviality", trip_err, tols.chart_tol, detail),
    ]
