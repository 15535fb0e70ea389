"""Translation ``T_x f = f(. - x)`` as a truncated displacement operator.

Per axis, ``T_x = exp(x (a^dagger - a) / sqrt2)``.  The generator is
exponentiated on a padded space; the rows of the result beyond the output
degree (the guard band) measure how much amplitude reaches the truncation
edge and serve as the plan's defect certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from . import config
from .errors import DimensionMismatch, PlanRejected
from .hermite import SchwartzFn, nuclear_seminorm, trim

GUARD = 8


def padded_degree_for(source_degree: int, shift: float) -> int:
    """Heuristic output degree; the defect check is the actual contract."""
    if shift == 0.0:
        return source_degree
    return source_degree + math.ceil(6.0 * abs(shift) * math.sqrt(source_degree + 1)) + 8


def generator(size: int) -> np.ndarray:
    """``(a^dagger - a)/sqrt2`` truncated to ``size`` levels (real, antisymmetric)."""
    off = np.sqrt(np.arange(1, size) / 2.0)
    return np.diag(off, -1) - np.diag(off, 1)


@lru_cache(maxsize=256)
def _axis_operator(shift: float, source_degree: int, padded: int):
    work = padded + 1 + GUARD
    full = scipy.linalg.expm(shift * generator(work))[:, : source_degree + 1]
    block = full[: padded + 1].copy()
    guard = full[padded + 1:]
    defect = float(np.linalg.norm(guard, 2)) if guard.size else 0.0
    block.setflags(write=False)
    return block, defect


@dataclass(frozen=True)
class TranslationPlan:
    shift: tuple
    source_degree: tuple
    padded_degree: tuple
    unitarity_defect: float

    @property
    def dim(self) -> int:
        return len(self.shift)


def plan_translation(shift, source_degree, max_degree: int | None = None,
                     tol: float | None = None) -> TranslationPlan:
    """Build and certify a plan; raises :class:`PlanRejected` when it cannot be."""
    shift = tuple(float(s) for s in np.atleast_1d(np.asarray(shift, dtype=np.float64)))
    if isinstance(source_degree, (int, np.integer)):
        source_degree = (int(source_degree),) * len(shift)
    source_degree = tuple(int(d) for d in source_degree)
    if len(source_degree) != len(shift):
        raise DimensionMismatch(f"shift has {len(shift)} components, degree has {len(source_degree)}")
    tols = config.get()
    max_degree = tols.max_degree if max_degree is None else max_degree
    tol = tols.translation_tol if tol is None else tol
    padded = tuple(padded_degree_for(k, s) for k, s in zip(source_degree, shift))
    if max(padded) > max_degree:
        raise PlanRejected(
            f"shift {shift} from degree {source_degree} needs degree {max(padded)} > cap {max_degree}",
            padded_degree=padded,
        )
    defect = 0.0
    for s, k, p in zip(shift, source_degree, padded):
        if s != 0.0:
            defect += _axis_operator(s, k, p)[1]
    if not defect < tol:
        raise PlanRejected(
            f"unitarity defect {defect:.3e} exceeds {tol:.1e}", defect=defect, padded_degree=padded
        )
    return TranslationPlan(shift, source_degree, padded, defect)


def translate(f: SchwartzFn, shift, plan: TranslationPlan | None = None,
              max_degree: int | None = None) -> SchwartzFn:
    """``T_x f``; coefficients grow to the plan's padded degree.

    A trailing tail with relative amplitude below ``trim_tol`` is dropped so
    that chains of translations do not grow without bound.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=np.float64))
    if shift.size != f.dim:
        raise DimensionMismatch(f"shift of length {shift.size} for dim {f.dim}")
    if not np.any(shift):
        return f
    if plan is None:
        plan = plan_translation(shift, f.degree, max_degree=max_degree)
    elif plan.source_degree != f.degree or not np.allclose(plan.shift, shift, rtol=0, atol=0):
        raise ValueError("plan does not match function degree or shift")
    c = f.coeffs
    for axis, (s, k, p) in enumerate(zip(plan.shift, plan.source_degree, plan.padded_degree)):
        if s == 0.0:
            continue
        op, _ = _axis_operator(s, k, p)
        c = np.moveaxis(np.tensordot(op, c, axes=([1], [axis])), 0, axis)
    out = SchwartzFn(c)
    if out.norm_sq > 0.0:
        out, _ = trim(out, config.get().trim_tol * f.norm)
    return out


# verification helpers --------------------------------------------------


def verify_translation_group(f: SchwartzFn, x, y, max_degree: int | None = None) -> float:
    """``|T_y T_x f - T_{x+y} f| / |f|``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if f.norm == 0.0:
        return 0.0
    lhs = translate(translate(f, x, max_degree=max_degree), y, max_degree=max_degree)
    rhs = translate(f, x + y, max_degree=max_degree)
    return (lhs - rhs).norm / f.norm


def verify_translation_linearity(f: SchwartzFn, g: SchwartzFn, lam: complex, x,
                                 max_degree: int | None = None) -> float:
    """Max of the homogeneity and additivity residuals (L2)."""
    tx = lambda h: translate(h, x, max_degree=max_degree)  # noqa: E731
    scale = max(f.norm, g.norm, 1e-300)
    homogeneity = (tx(lam * f) - lam * tx(f)).norm
    additivity = (tx(f + g) - (tx(f) + tx(g))).norm
    return max(homogeneity, additivity) / scale


def unitarity_defect(f: SchwartzFn, x, max_degree: int | None = None) -> float:
    """Measured ``| |T_x f| - |f| | / |f|``."""
    return abs(translate(f, x, max_degree=max_degree).norm - f.norm) / f.norm


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.maximum(np.asarray(y, dtype=np.float64), np.finfo(float).tiny)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _probe_directions(dim: int) -> list:
    dirs = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        dirs += [e, -e]
    if dim > 1:
        d = np.ones(dim) / math.sqrt(dim)
        dirs += [d, -d]
    return dirs


@dataclass(frozen=True)
class ModulusRecord:
    radii: tuple
    moduli: tuple
    slope: float

    def passed(self, threshold: float | None = None) -> bool:
        threshold = config.get().lipschitz_slope if threshold is None else threshold
        if all(m == 0.0 for m in self.moduli):
            return True
        return self.slope >= threshold


def translation_continuity_probe(f: SchwartzFn, x0, radii: Sequence[float],
                                 max_degree: int | None = None) -> ModulusRecord:
    """Modulus ``r -> max_{|x|=r} |T_{x0+x} f - T_{x0} f|_1`` (nuclear-1 seminorm)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    base = translate(f, x0, max_degree=max_degree)
    moduli = []
    for r in radii:
        worst = 0.0
        for d in _probe_directions(f.dim):
            moved = translate(f, x0 + r * d, max_degree=max_degree)
            worst = max(worst, nuclear_seminorm(moved - base, 1))
        moduli.append(worst)
    slope = loglog_slope(radii, moduli) if any(moduli) else float("nan")
    return ModulusRecord(tuple(float(r) for r in radii), tuple(moduli), slope)


@dataclass(frozen=True)
class JointModulusRecord:
    radii: tuple
    total: tuple
    function_term: tuple  # |T(x0+x, f0+f) - T(x0+x, f0)|_1
    shift_term: tuple  # |T(x0+x, f0) - T(x0, f0)|_1

    @property
    def split_holds(self) -> bool:
        return all(t <= a + b + 1e-14 for t, a, b in zip(self.total, self.function_term, self.shift_term))

    @property
    def vanishing(self) -> bool:
        return self.total[-1] < self.total[0] and loglog_slope(self.radii, self.total) > 0.9


def joint_continuity_probe(f0: SchwartzFn, x0, direction: SchwartzFn, radii: Sequence[float],
                           max_degree: int | None = None) -> JointModulusRecord:
    """Continuity of ``(x, f) -> T_x f`` probed along ``(x0 + r e, f0 + r g)``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    unit = np.ones(f0.dim) / math.sqrt(f0.dim)
    g = direction / max(nuclear_seminorm(direction, 1), 1e-300)
    ref = translate(f0, x0, max_degree=max_degree)
    total, fn_term, shift_term = [], [], []
    for r in radii:
        x = x0 + r * unit
        moved_f0 = translate(f0, x, max_degree=max_degree)
        moved = translate(f0 + r * g, x, max_degree=max_degree)
        total.append(nuclear_seminorm(moved - ref, 1))
        fn_term.append(nuclear_seminorm(moved - moved_f0, 1))
        shift_term.append(nuclear_seminorm(moved_f0 - ref, 1))
    return JointModulusRecord(tuple(radii), tuple(total), tuple(fn_term), tuple(shift_term))
