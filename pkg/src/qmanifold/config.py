"""Numerical tolerances shared across the library.

The active :class:`Tolerances` live in a context variable, so overrides made
with :func:`using` are local to the current thread / task.
"""
from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    nonzero_tol: float = 1e-12  # L2 norm below which a function counts as zero
    section_tol: float = 1e-13  # relative L2 mass missing from a truncated Gaussian section
    translation_tol: float = 1e-9  # accepted unitarity defect of a translation plan
    trim_tol: float = 1e-16  # relative tail amplitude dropped after a translation
    fiber_tol: float = 1e-9  # |Qbar| band defining the zero-expectation fiber
    chart_tol: float = 1e-8
    point_tol: float = 1e-9
    indistinguishable_tol: float = 1e-9
    grid_margin: float = 4.0  # extra half width beyond the classical turning point
    max_degree: int = 1024  # per-axis cap on padded translation degree
    slope_threshold: float = 1.9  # log-log slope certifying o(t) = t^2
    lipschitz_slope: float = 0.95

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not value > 0:
                raise ValueError(f"tolerance {field.name} must be positive, got {value!r}")


DEFAULT = Tolerances()
_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "qmanifold_tolerances", default=DEFAULT
)


def get() -> Tolerances:
    return _current.get()


@contextlib.contextmanager
def using(tolerances: Tolerances | None = None, **overrides):
    """Temporarily replace the active tolerances.

    >>> with using(fiber_tol=1e-6):
    ...     get().fiber_tol
    1e-06
    """
    base = tolerances if tolerances is not None else get()
    new = base.replace(**overrides) if overrides else base
    new.validate()
    token = _current.set(new)
    try:
        yield new
    finally:
        _current.reset(token)
