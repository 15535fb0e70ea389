"""Classical atlases, their trivial quantization and the classical limit.

Manifold points are 1-D float arrays: coordinates for ``euclidean(n)`` and a
single angle in ``[0, 2 pi)`` for the circle.  Chart images and overlaps are
finite unions of open boxes so that membership is decidable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import config
from .bundle import project_to_fiber
from .errors import NonzeroRequired, OutOfOverlap, PreconditionError, SampleOutsideChart
from .expectation import gaussian_section, position_expectation, tangent_slope
from .hermite import SchwartzFn, nuclear_seminorm, random_schwartz
from .report import CheckRecord, at_least, below
from .translation import loglog_slope, translate

TWO_PI = 2.0 * math.pi
# smallest degree at which Psi(x), |x| <= 2, meets the default section_tol
SECTION_DEGREE = 32


@dataclass(frozen=True)
class Box:
    """Open box ``prod (lo_i, hi_i)``."""

    lo: tuple
    hi: tuple

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.atleast_1d(x)
        return bool(np.all(x > np.asarray(self.lo) + margin) and np.all(x < np.asarray(self.hi) - margin))

    def bound(self) -> float:
        return float(max(np.max(np.abs(self.lo)), np.max(np.abs(self.hi))))


def in_boxes(x, boxes: Sequence[Box], margin: float = 0.0) -> bool:
    return any(b.contains(x, margin) for b in boxes)


@dataclass(frozen=True, eq=False)
class ClassicalChart:
    """A chart ``(X, chi)``; ``image`` describes ``chi(X)`` as open boxes."""

    id: str
    contains: Callable
    chart_map: Callable
    inverse_map: Callable
    image: tuple
    cut: float | None = None  # circle charts: the excluded angle


@dataclass(frozen=True, eq=False)
class ClassicalAtlas:
    kind: str
    dim: int
    charts: tuple
    sampler: Callable  # rng -> manifold point
    distance: Callable  # (point, point) -> float
    overlap_fn: Callable  # (chart_i, chart_j) -> boxes for chi_i(X_i & X_j)
    coordinate_bound: float  # largest |coordinate| the atlas is used with

    def chart_index(self, chart_id: str) -> int:
        for i, c in enumerate(self.charts):
            if c.id == chart_id:
                return i
        raise KeyError(chart_id)

    def charts_containing(self, point) -> list:
        return [i for i, c in enumerate(self.charts) if c.contains(point)]

    def overlap_image(self, i: int, j: int) -> tuple:
        return self.overlap_fn(self.charts[i], self.charts[j])

    def transition(self, i: int, j: int) -> Callable:
        """``chi_ji = chi_j o chi_i^{-1}`` on ``chi_i(X_i & X_j)``."""
        ci, cj = self.charts[i], self.charts[j]
        return lambda x: cj.chart_map(ci.inverse_map(np.atleast_1d(x)))

    def sample(self, rng: np.random.Generator):
        return self.sampler(rng)

    def union(self, other: "ClassicalAtlas") -> "ClassicalAtlas":
        if (self.kind, self.dim) != (other.kind, other.dim):
            raise ValueError("atlases describe different manifolds")
        ids = {c.id for c in self.charts}
        if any(c.id in ids for c in other.charts):
            raise ValueError("chart ids collide")
        return replace(self, charts=self.charts + other.charts,
                       coordinate_bound=max(self.coordinate_bound, other.coordinate_bound))


def _circle_distance(a, b) -> float:
    d = abs(float(np.atleast_1d(a)[0]) - float(np.atleast_1d(b)[0])) % TWO_PI
    return min(d, TWO_PI - d)


def _circle_chart(chart_id: str, cut: float, offset: float, scale: float) -> ClassicalChart:
    cut = cut % TWO_PI

    def contains(p):
        return _circle_distance(p, cut) > 0.0

    def chart_map(p):
        theta = float(np.atleast_1d(p)[0])
        return np.array([scale * (offset + (theta - cut) % TWO_PI)])

    def inverse_map(x):
        return np.array([(float(np.atleast_1d(x)[0]) / scale - offset + cut) % TWO_PI])

    image = (Box((scale * offset,), (scale * (offset + TWO_PI),)),)
    return ClassicalChart(chart_id, contains, chart_map, inverse_map, image, cut)


def _circle_overlap(ci: ClassicalChart, cj: ClassicalChart) -> tuple:
    (box,) = ci.image
    if _circle_distance(ci.cut, cj.cut) == 0.0:
        return ci.image
    split = float(ci.chart_map(np.array([cj.cut]))[0])
    return (Box(box.lo, (split,)), Box((split,), box.hi))


def _euclidean_overlap(ci: ClassicalChart, cj: ClassicalChart) -> tuple:
    return ci.image


def make_classical_atlas(kind: str, dim: int = 1, scale: float = 0.25, rotation: float = 0.0,
                         sample_radius: float = 1.0, prefix: str = "") -> ClassicalAtlas:
    """Built-in test manifolds.

    ``euclidean``: one identity chart on R^dim, sampled in the cube of
    half width ``sample_radius``.  ``circle``: two charts with coordinates
    ``scale * (-pi, pi)`` (cut at pi) and ``scale * (0, 2 pi)`` (cut at 0),
    both cuts rotated by ``rotation``.
    """
    if kind == "euclidean":
        inf = (math.inf,) * dim
        chart = ClassicalChart(
            f"{prefix}id",
            contains=lambda p: bool(np.all(np.isfinite(p))),
            chart_map=lambda p: np.array(p, dtype=np.float64),
            inverse_map=lambda x: np.array(x, dtype=np.float64),
            image=(Box(tuple(-v for v in inf), inf),),
        )
        return ClassicalAtlas(
            "euclidean", dim, (chart,),
            sampler=lambda rng: rng.uniform(-sample_radius, sample_radius, dim),
            distance=lambda a, b: float(np.linalg.norm(np.asarray(a) - np.asarray(b))),
            overlap_fn=_euclidean_overlap,
            coordinate_bound=sample_radius,
        )
    if kind == "circle":
        if dim != 1:
            raise ValueError("the circle is one-dimensional")
        charts = (
            _circle_chart(f"{prefix}chi1", math.pi + rotation, -math.pi, scale),
            _circle_chart(f"{prefix}chi2", 0.0 + rotation, 0.0, scale),
        )
        return ClassicalAtlas(
            "circle", 1, charts,
            sampler=lambda rng: np.array([rng.uniform(0.0, TWO_PI)]),
            distance=_circle_distance,
            overlap_fn=_circle_overlap,
            coordinate_bound=max(c.image[0].bound() for c in charts),
        )
    raise ValueError(f"unknown manifold kind {kind!r}")


# quantum side ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuantumPoint:
    """``(xi, g)`` in ``M x S_0``."""

    base: np.ndarray
    fiber: SchwartzFn

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_1d(np.asarray(self.base, dtype=np.float64)))
        if self.fiber.is_zero():
            raise NonzeroRequired("fiber of a quantum point must be nonzero")
        offset = np.max(np.abs(position_expectation(self.fiber)))
        if offset > config.get().fiber_tol:
            raise PreconditionError(f"fiber expectation {offset:.3e} outside the S_0 band")


@dataclass(frozen=True, eq=False)
class QuantumChart:
    classical: ClassicalChart
    max_degree: int | None = None

    @property
    def id(self) -> str:
        return self.classical.id

    def contains(self, q: QuantumPoint) -> bool:
        return self.classical.contains(q.base)

    def phi(self, q: QuantumPoint) -> SchwartzFn:
        """``phi(xi, g) = T_{chi(xi)} g``."""
        if not self.classical.contains(q.base):
            raise SampleOutsideChart(f"point {q.base.tolist()} not in chart {self.id}")
        return translate(q.fiber, self.classical.chart_map(q.base), max_degree=self.max_degree)

    def phi_inv(self, f: SchwartzFn) -> QuantumPoint:
        x = position_expectation(f)
        if not in_boxes(x, self.classical.image):
            raise SampleOutsideChart(f"Qbar(f) = {x.tolist()} outside the image of chart {self.id}")
        fiber = translate(f, -x, max_degree=self.max_degree)
        return QuantumPoint(self.classical.inverse_map(x), fiber)


@dataclass(frozen=True, eq=False)
class QuantumAtlas:
    classical: ClassicalAtlas
    charts: tuple
    degree: int
    max_degree: int | None = None
    transition_overrides: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.classical.dim

    def classical_transition(self, i: int, j: int) -> Callable:
        return self.transition_overrides.get((i, j)) or self.classical.transition(i, j)

    def with_transition(self, i: int, j: int, fn: Callable) -> "QuantumAtlas":
        """Copy with the classical transition ``chi_ji`` replaced by ``fn``."""
        return replace(self, transition_overrides={**self.transition_overrides, (i, j): fn})

    def random_fiber(self, rng: np.random.Generator, degree: int | None = None) -> SchwartzFn:
        """Random unit-norm element of ``S_0``."""
        f = random_schwartz(rng, self.dim, degree or min(self.degree, 12), decay=0.4)
        g = project_to_fiber(f, max_degree=self.max_degree)
        return g / g.norm

    def random_point(self, rng: np.random.Generator) -> QuantumPoint:
        return QuantumPoint(self.classical.sample(rng), self.random_fiber(rng))


def trivial_quantization(atlas: ClassicalAtlas, degree: int = 32, max_shift: float = 2.0,
                         max_degree: int | None = None) -> QuantumAtlas:
    """``U_i = X_i x S_0`` with ``phi_i(xi, g) = T_{chi_i(xi)} g``."""
    if atlas.coordinate_bound > max_shift:
        raise PreconditionError(
            f"chart coordinates reach {atlas.coordinate_bound:.3g} > max shift {max_shift}; "
            "rescale the charts or raise the degree cap"
        )
    charts = tuple(QuantumChart(c, max_degree) for c in atlas.charts)
    return QuantumAtlas(atlas, charts, degree, max_degree)


def _in_overlap(qatlas: QuantumAtlas, i: int, j: int, x) -> bool:
    return in_boxes(x, qatlas.classical.overlap_image(i, j))


def quantum_transition(qatlas: QuantumAtlas, i: int, j: int, f: SchwartzFn) -> SchwartzFn:
    """``phi_ji(f) = T_{chi_ji(Qbar f)} T_{-Qbar f} f``."""
    x = position_expectation(f)
    if not _in_overlap(qatlas, i, j, x):
        raise OutOfOverlap(f"Qbar(f) = {x.tolist()} not in chi_{i}(X_{i} & X_{j})")
    y = np.atleast_1d(qatlas.classical_transition(i, j)(x))
    fiber = translate(f, -x, max_degree=qatlas.max_degree)
    return translate(fiber, y, max_degree=qatlas.max_degree)


def recover_classical_transition(qatlas: QuantumAtlas, i: int, j: int, x) -> np.ndarray:
    """``Qbar(phi_ji(Psi(x)))``, which reproduces ``chi_ji(x)``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if not _in_overlap(qatlas, i, j, x):
        raise OutOfOverlap(f"{x.tolist()} not in chi_{i}(X_{i} & X_{j})")
    psi = gaussian_section(x, max(qatlas.degree, SECTION_DEGREE))
    return position_expectation(quantum_transition(qatlas, i, j, psi))


def kolmogorov_project(qatlas: QuantumAtlas, psi, chart: int | str | None = None) -> np.ndarray:
    """``chi_i^{-1}(Qbar(phi_i(psi)))``.

    ``psi`` is a :class:`QuantumPoint`, or a chart-image function together
    with ``chart``.
    """
    if isinstance(chart, str):
        chart = qatlas.classical.chart_index(chart)
    if isinstance(psi, QuantumPoint):
        if chart is None:
            found = qatlas.classical.charts_containing(psi.base)
            if not found:
                raise SampleOutsideChart(f"{psi.base.tolist()} lies in no chart")
            chart = found[0]
        f = qatlas.charts[chart].phi(psi)
    else:
        if chart is None:
            raise ValueError("a chart is required to project a function")
        f = psi
    x = position_expectation(f)
    cc = qatlas.classical.charts[chart]
    if not in_boxes(x, cc.image):
        raise SampleOutsideChart(f"Qbar = {x.tolist()} outside chart {cc.id}")
    return cc.inverse_map(x)


# verification -----------------------------------------------------------


def _chart_pairs(qatlas: QuantumAtlas) -> list:
    n = len(qatlas.charts)
    return [(i, j) for i in range(n) for j in range(n) if i != j] or [(0, 0)]


def _sample_overlap(qatlas: QuantumAtlas, i: int, j: int, rng, margin: float, attempts: int = 200):
    boxes = qatlas.classical.overlap_image(i, j)
    ci = qatlas.classical.charts[i]
    for _ in range(attempts):
        xi = qatlas.classical.sample(rng)
        if ci.contains(xi) and qatlas.classical.charts[j].contains(xi):
            if in_boxes(ci.chart_map(xi), boxes, margin):
                return xi
    raise RuntimeError(f"could not sample the overlap of charts {i} and {j}")


def verify_quantum_atlas(qatlas: QuantumAtlas, sample_budget: int = 16,
                         rng: np.random.Generator | None = None, prefix: str = "atlas") -> list:
    """Spot-check the four quantum-atlas conditions on random samples."""
    rng = np.random.default_rng(0) if rng is None else rng
    tols = config.get()
    cl = qatlas.classical
    records = []

    # (i) covering
    uncovered = sum(not cl.charts_containing(cl.sample(rng)) for _ in range(sample_budget))
    records.append(below(f"{prefix}.i.cover", "atlas-i", uncovered, 0.5,
                         f"{uncovered} of {sample_budget} samples in no chart"))

    # (ii) bijectivity: round trips and injectivity
    worst, collisions = 0.0, 0
    for k, chart in enumerate(qatlas.charts):
        images = []
        for _ in range(max(2, sample_budget // len(qatlas.charts))):
            xi = _sample_in_chart(cl, k, rng)
            q = QuantumPoint(xi, qatlas.random_fiber(rng))
            f = chart.phi(q)
            back = chart.phi_inv(f)
            worst = max(worst, cl.distance(back.base, q.base), (back.fiber - q.fiber).norm)
            images.append(f)
        for a in range(len(images)):
            for b in range(a + 1, len(images)):
                collisions += (images[a] - images[b]).norm == 0.0
    records.append(below(f"{prefix}.ii.roundtrip", "atlas-ii", worst, tols.chart_tol))
    records.append(below(f"{prefix}.ii.injective", "atlas-ii", collisions, 0.5))

    # (iii) phi_i(U_i & U_j) = Qbar^{-1}(chi_i(X_i & X_j)) on samples
    mismatches = 0
    for i, j in _chart_pairs(qatlas):
        ci, cj = cl.charts[i], cl.charts[j]
        boxes = cl.overlap_image(i, j)
        for _ in range(max(2, sample_budget // 2)):
            xi = _sample_in_chart(cl, i, rng)
            q = QuantumPoint(xi, qatlas.random_fiber(rng))
            in_u = cj.contains(xi)
            in_img = in_boxes(position_expectation(qatlas.charts[i].phi(q)), boxes)
            mismatches += in_u != in_img
        # box edges interior to the chart image are excluded from the overlap
        for box in boxes:
            for edge in (np.asarray(box.lo), np.asarray(box.hi)):
                if np.all(np.isfinite(edge)) and in_boxes(edge, ci.image):
                    mismatches += cj.contains(ci.inverse_map(edge)) != in_boxes(edge, boxes)
    records.append(below(f"{prefix}.iii.overlap", "atlas-iii", mismatches, 0.5))

    # (iv) continuity in the expectation value topology, differentiability
    records.extend(_transition_probes(qatlas, sample_budget, rng, prefix))
    return records


def _sample_in_chart(cl: ClassicalAtlas, k: int, rng, attempts: int = 200):
    for _ in range(attempts):
        xi = cl.sample(rng)
        if cl.charts[k].contains(xi):
            return xi
    raise RuntimeError(f"could not sample chart {k}")


def _transition_probes(qatlas: QuantumAtlas, sample_budget: int, rng, prefix: str) -> list:
    tols = config.get()
    cl = qatlas.classical
    # non-round radii so that probes do not align with any decimal lattice
    radii = math.sqrt(2.0) * np.array([1e-2, 1e-3, 1e-4, 1e-5])
    n_samples = max(2, sample_budget // 2)
    records = []
    for i, j in _chart_pairs(qatlas):
        boxes = cl.overlap_image(i, j)
        moduli = np.zeros(radii.size)
        slopes = []
        consistency = 0.0
        for _ in range(n_samples):
            xi = _sample_overlap(qatlas, i, j, rng, margin=0.05)
            x = cl.charts[i].chart_map(xi)
            f = qatlas.charts[i].phi(QuantumPoint(xi, qatlas.random_fiber(rng)))
            image = quantum_transition(qatlas, i, j, f)
            target = image if i == j else qatlas.charts[j].phi(qatlas.charts[i].phi_inv(f))
            consistency = max(consistency, (image - target).norm / f.norm)
            y = position_expectation(image)
            u = rng.standard_normal(qatlas.dim)
            u /= np.linalg.norm(u)
            for r_idx, r in enumerate(radii):
                for sign in (1.0, -1.0):
                    near = x + sign * r * u
                    if not in_boxes(near, boxes):
                        continue
                    # a different fiber: nearness only concerns the expectation value
                    other = QuantumPoint(cl.charts[i].inverse_map(near), qatlas.random_fiber(rng))
                    y2 = position_expectation(quantum_transition(qatlas, i, j, qatlas.charts[i].phi(other)))
                    moduli[r_idx] = max(moduli[r_idx], float(np.max(np.abs(y2 - y))))
            slopes.append(_differentiability_slope(qatlas, i, j, f, rng))
        anchor = "atlas-iv"
        tag = f"{prefix}.iv.{cl.charts[i].id}->{cl.charts[j].id}"
        if i != j:
            records.append(below(f"{tag}.consistency", anchor, consistency, tols.chart_tol))
        if np.all(moduli <= 1e-13):
            records.append(CheckRecord(f"{tag}.continuity", anchor, "vacuous", float(moduli.max()),
                                       tols.lipschitz_slope))
        else:
            # the modulus must fall with the radius at every scale, not only on average
            slope = loglog_slope(radii, moduli)
            local = np.log(moduli[1:] / moduli[:-1]) / np.log(radii[1:] / radii[:-1])
            worst = float(min(slope, local.min()))
            records.append(at_least(f"{tag}.continuity", anchor, worst, tols.lipschitz_slope,
                                    f"fitted slope {slope:.4f}, moduli {moduli.tolist()}"))
        failed = [s for s in slopes if not s.passed]
        worst = min((s.fitted_slope for s in slopes if not s.vacuous), default=float("nan"))
        status = "fail" if failed else ("vacuous" if all(s.vacuous for s in slopes) else "pass")
        records.append(CheckRecord(f"{tag}.differentiability", anchor, status, worst,
                                   tols.slope_threshold,
                                   detail=f"{sum(s.vacuous for s in slopes)} of {len(slopes)} remainders at noise floor"))
    return records


def _differentiability_slope(qatlas: QuantumAtlas, i: int, j: int, f: SchwartzFn, rng):
    # Richardson-extrapolated central difference as the linearization
    d = random_schwartz(rng, qatlas.dim, min(qatlas.degree, 6), decay=0.5)
    d = d * (0.1 * f.norm / d.norm)
    trans = lambda h: quantum_transition(qatlas, i, j, h)  # noqa: E731
    h = 1e-2
    central = lambda s: (trans(f + s * d) - trans(f - s * d)) / (2.0 * s)  # noqa: E731
    deriv = (4.0 * central(h / 2) - central(h)) / 3.0
    base = trans(f)

    def delta(t, direction):
        return trans(f + t * direction) - base - t * deriv

    # remainder at the level of the derivative estimate's rounding error is noise
    floor = 1e-11 * nuclear_seminorm(f, 1)
    return tangent_slope(delta, d, norm="nuclear1", t_grid=np.logspace(-1, -3, 5), floor=floor)


def classical_limit_residuals(qatlas: QuantumAtlas, n_samples: int, rng) -> dict:
    """Deviation of the recovered atlas from the original one.

    ``chart``: max ``|Qbar(phi_i(xi, g)) - chi_i(xi)|``; ``projection``: max
    distance between ``Kolmogorov(xi, g)`` and ``xi``; ``transition``: max
    ``|Qbar(phi_ji(Psi(x))) - chi_ji(x)|`` over sampled overlaps.
    """
    cl = qatlas.classical
    out = {"chart": 0.0, "projection": 0.0, "transition": 0.0}
    for k, chart in enumerate(qatlas.charts):
        for _ in range(n_samples):
            xi = _sample_in_chart(cl, k, rng)
            q = QuantumPoint(xi, qatlas.random_fiber(rng))
            x = position_expectation(chart.phi(q))
            out["chart"] = max(out["chart"], float(np.max(np.abs(x - cl.charts[k].chart_map(xi)))))
            out["projection"] = max(out["projection"], cl.distance(kolmogorov_project(qatlas, q, k), xi))
    for i, j in _chart_pairs(qatlas):
        for _ in range(n_samples):
            x = cl.charts[i].chart_map(_sample_overlap(qatlas, i, j, rng, margin=0.0))
            got = recover_classical_transition(qatlas, i, j, x)
            out["transition"] = max(out["transition"], float(np.max(np.abs(got - cl.transition(i, j)(x)))))
    return out


def indistinguishability_mismatches(qatlas: QuantumAtlas, n_pairs: int, rng) -> int:
    """Count sampled pairs where Kolmogorov-fiber equality and indistinguishability disagree.

    Half of the pairs share the base point (and differ in the fiber).
    """
    from .expectation import indistinguishable

    cl = qatlas.classical
    tols = config.get()
    bad = 0
    for n in range(n_pairs):
        q1 = qatlas.random_point(rng)
        base2 = q1.base if n % 2 == 0 else cl.sample(rng)
        q2 = QuantumPoint(base2, qatlas.random_fiber(rng))
        shared = [k for k in cl.charts_containing(q1.base) if cl.charts[k].contains(q2.base)]
        if not shared:
            # no common chart: the points are distinguishable by construction
            bad += cl.distance(q1.base, q2.base) <= tols.point_tol
            continue
        k = shared[0]
        same_class = cl.distance(kolmogorov_project(qatlas, q1, k), kolmogorov_project(qatlas, q2, k)) <= tols.point_tol
        same_value = indistinguishable(qatlas.charts[k].phi(q1), qatlas.charts[k].phi(q2))
        bad += same_class != same_value
    return bad


def corrupted_transition(qatlas: QuantumAtlas, i: int = 0, j: int = 1,
                         jump: float = 0.05, period: float = 1e-6) -> QuantumAtlas:
    """Negative control: add a square wave of tiny period to ``chi_ji``."""
    clean = qatlas.classical.transition(i, j)

    def bad(x):
        x = np.atleast_1d(x)
        return clean(x) + jump * (np.floor(x / period) % 2)

    return qatlas.with_transition(i, j, bad)
