"""Named verification suites and truncation-degree sweeps."""
from __future__ import annotations

import csv
import io
import math
import re
import time
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import __version__, config
from . import atlas as at
from . import bundle as bd
from . import expectation as ex
from . import hermite as hm
from . import translation as tr
from .errors import NonzeroRequired
from .report import CheckRecord, VerificationReport, at_least, below, timed

# working degree per axis when a suite runs in a dimension other than the configured one
DEFAULT_DEGREE = {1: 32, 2: 16}

SUITES = ("model-space", "expectation", "translation", "bundle", "atlas-euclidean",
          "atlas-circle", "appendix-b", "all")


@dataclass
class SuiteConfig:
    suite: str = "all"
    manifold: str = "euclidean(1)"
    degree: int = 32
    tolerances: dict = field(default_factory=dict)
    samples: int = 16
    seed: int = 0
    out: str | None = None
    max_degree: int | None = None  # default 8 * degree
    scale: float = 0.25  # circle chart scaling

    def validate(self) -> "SuiteConfig":
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        parse_manifold(self.manifold)
        if self.degree < 1:
            raise ValueError("degree must be positive")
        if self.samples < 2:
            raise ValueError("samples must be at least 2")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        config.DEFAULT.replace(**self.tolerances).validate()
        return self

    @property
    def degree_cap(self) -> int:
        return 8 * self.degree if self.max_degree is None else self.max_degree

    @property
    def dim(self) -> int:
        return parse_manifold(self.manifold)[1]


def parse_manifold(text: str) -> tuple:
    """``"euclidean"``, ``"euclidean(n)"`` or ``"circle"`` -> ``(kind, dim)``."""
    m = re.fullmatch(r"\s*(euclidean|circle)\s*(?:\(\s*(\d+)\s*\))?\s*", text)
    if not m:
        raise ValueError(f"unknown manifold {text!r}")
    kind, n = m.group(1), int(m.group(2) or 1)
    if kind == "circle" and n != 1:
        raise ValueError("the circle is one-dimensional")
    if n < 1:
        raise ValueError("dimension must be positive")
    return kind, n


@dataclass(frozen=True)
class Check:
    check_id: str
    anchor: str
    run: Callable  # Context -> CheckRecord | list


class Context:
    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self.K = cfg.degree
        self.dim = cfg.dim
        self.cap = cfg.degree_cap
        self.n = cfg.samples

    def for_dim(self, dim: int) -> "Context":
        """Context for a suite whose manifold dimension is fixed (the circle)."""
        if dim == self.dim:
            return self
        other = Context(self.cfg)
        other.dim = dim
        other.K = DEFAULT_DEGREE.get(dim, self.K)
        other.cap = 8 * other.K if self.cfg.max_degree is None else self.cfg.max_degree
        return other

    def rng(self, check_id: str) -> np.random.Generator:
        # one stream per check keeps results independent of execution order
        return np.random.default_rng([self.cfg.seed, zlib.crc32(check_id.encode())])

    def random_fn(self, rng, degree: int | None = None, decay: float = 0.4) -> hm.SchwartzFn:
        degree = min(self.K, 12) if degree is None else degree
        f = hm.random_schwartz(rng, self.dim, degree, decay=decay)
        return f / f.norm

    def translate(self, f, x):
        return tr.translate(f, x, max_degree=self.cap)


# model space ----------------------------------------------------------


def _orthonormality(ctx: Context):
    k = min(ctx.K, 16)
    worst = 0.0
    for a in range(k + 1):
        for b in range(k + 1):
            worst = max(worst, abs(hm.inner(hm.basis((a,), degree=k), hm.basis((b,), degree=k)) - (a == b)))
    return below("model.orthonormality", "inner", worst, 1e-15)


def _commutator(ctx: Context):
    rng = ctx.rng("model.commutator")
    worst = 0.0
    for _ in range(ctx.n):
        f, g = ctx.random_fn(rng), ctx.random_fn(rng)
        for axis in range(ctx.dim):
            worst = max(worst, hm.commutator_residual(f, g, axis))
    return below("model.commutator", "operators", worst, 1e-12)


def _nuclear_two_routes(ctx: Context):
    # diagonal formula against <f,Q^2 f> + <f,P^2 f> + <f,f> through the ladder actions
    rng = ctx.rng("model.nuclear")
    worst = 0.0
    for _ in range(ctx.n):
        f = ctx.random_fn(rng)
        direct = f.norm_sq
        for i in range(ctx.dim):
            direct += hm.apply_position(f, i).norm_sq + hm.apply_momentum(f, i).norm_sq
        worst = max(worst, abs(hm.nuclear_quadratic_form(f, 1) - direct) / direct)
    return below("model.nuclear", "nuclear-seminorm", worst, 1e-12)


def _norm_bounds(ctx: Context):
    rng = ctx.rng("model.norm-bounds")
    margin = math.inf
    for _ in range(ctx.n):
        f = ctx.random_fn(rng) * complex(*rng.standard_normal(2))
        margin = min(margin, *ex.norm_bounds(f))
    return at_least("model.norm-bounds", "norm-bounds", margin, -1e-12, "min of |f|_1 - |f| and |f|_1 - |Qf|")


def _sup_ground_state(ctx: Context):
    grid = hm.GridSpec.for_degree(0, points_per_axis=4001)
    value = hm.sup_seminorm(hm.basis((0,) * ctx.dim), (0,) * ctx.dim, (0,) * ctx.dim, grid)
    return below("model.sup-seminorm", "sup-seminorm", abs(value - math.pi ** (-0.25 * ctx.dim)), 1e-12)


def _serialization(ctx: Context):
    rng = ctx.rng("model.serialization")
    f = ctx.random_fn(rng)
    worst = max((hm.SchwartzFn.from_json(f.to_json()) - f).norm, (hm.SchwartzFn.from_bytes(f.to_bytes()) - f).norm)
    return below("model.serialization", "plumbing", worst, 1e-15)


MODEL_SPACE = [
    Check("model.orthonormality", "inner", _orthonormality),
    Check("model.commutator", "operators", _commutator),
    Check("model.nuclear", "nuclear-seminorm", _nuclear_two_routes),
    Check("model.norm-bounds", "norm-bounds", _norm_bounds),
    Check("model.sup-seminorm", "sup-seminorm", _sup_ground_state),
    Check("model.serialization", "plumbing", _serialization),
]


# expectation ----------------------------------------------------------


def _section(ctx: Context):
    rng = ctx.rng("expectation.section")
    degree = max(ctx.K, at.SECTION_DEGREE)
    worst = 0.0
    for _ in range(ctx.n):
        x = rng.uniform(-2, 2, ctx.dim)
        worst = max(worst, float(np.max(np.abs(ex.position_expectation(ex.gaussian_section(x, degree)) - x))))
    return below("expectation.section", "section", worst, 1e-9, f"section degree {degree}")


def _dqbar_fd(ctx: Context):
    rng = ctx.rng("expectation.dqbar")
    worst = 0.0
    h = 1e-5
    for _ in range(ctx.n):
        f0, f = ctx.random_fn(rng), ctx.random_fn(rng)
        fd = (ex.position_expectation(f0 + h * f) - ex.position_expectation(f0 - h * f)) / (2 * h)
        an = ex.d_expectation(f0, f)
        worst = max(worst, float(np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-3)))
    return below("expectation.dqbar", "dqbar", worst, 1e-6)


def _dqbar_slope(ctx: Context):
    rng = ctx.rng("expectation.dqbar-tangent")
    reports = [ex.tangent_slope(ex.expectation_remainder(ctx.random_fn(rng)), ctx.random_fn(rng))
               for _ in range(ctx.n)]
    return _slope_record("expectation.dqbar-tangent", "dqbar-tangent", reports)


def _slope_record(check_id: str, anchor: str, reports) -> CheckRecord:
    fails = [r for r in reports if not r.passed]
    live = [r.fitted_slope for r in reports if not r.vacuous]
    worst = min(live) if live else float("nan")
    status = "fail" if fails else ("vacuous" if not live else "pass")
    return CheckRecord(check_id, anchor, status, worst, reports[0].threshold,
                       detail=f"{len(reports)} configurations, {len(reports) - len(live)} vacuous")


def _continuity_bound(ctx: Context):
    rng = ctx.rng("expectation.continuity-bound")
    violations, ratio = 0, 0.0
    for _ in range(4 * ctx.n):
        f0 = ctx.random_fn(rng) * rng.uniform(0.5, 2.0)
        f = ctx.random_fn(rng) * (rng.uniform(0.0, 0.49) * f0.norm)
        b = ex.continuity_bound_check(f0, f)
        violations += not b.holds
        ratio = max(ratio, b.lhs / b.rhs if b.rhs > 0 else 0.0)
    return below("expectation.continuity-bound", "continuity-bound", violations, 0.5,
                 f"largest lhs/rhs {ratio:.3e}")


def _indistinguishable(ctx: Context):
    rng = ctx.rng("expectation.indistinguishable")
    wrong = 0
    for _ in range(ctx.n):
        f = ctx.random_fn(rng)
        phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
        wrong += not ex.indistinguishable(f, phase * f * rng.uniform(0.5, 2))
        wrong += ex.indistinguishable(f, ctx.translate(f, rng.uniform(0.01, 1) * np.ones(ctx.dim)))
    return below("expectation.indistinguishable", "indistinguishable", wrong, 0.5)


def _zero_rejected(ctx: Context):
    zero = hm.zeros(ctx.dim, 4)
    f = ctx.random_fn(ctx.rng("expectation.zero"))
    entry_points = [
        lambda: ex.position_expectation(zero),
        lambda: ex.expectation(zero, "momentum"),
        lambda: ex.d_expectation(zero, f),
        lambda: ex.expectation_remainder(zero),
        lambda: bd.trivialize(zero),
        lambda: bd.project_to_fiber(zero),
        lambda: bd.d_trivialize(zero, f),
        lambda: bd.FiberPoint(np.zeros(ctx.dim), zero),
    ]
    accepted = 0
    for call in entry_points:
        try:
            call()
            accepted += 1
        except NonzeroRequired:
            pass
    return below("expectation.zero-rejected", "expectation", accepted, 0.5,
                 f"{accepted} of {len(entry_points)} entry points accepted the zero function")


EXPECTATION = [
    Check("expectation.section", "section", _section),
    Check("expectation.dqbar", "dqbar", _dqbar_fd),
    Check("expectation.dqbar-tangent", "dqbar-tangent", _dqbar_slope),
    Check("expectation.continuity-bound", "continuity-bound", _continuity_bound),
    Check("expectation.indistinguishable", "indistinguishable", _indistinguishable),
    Check("expectation.zero-rejected", "expectation", _zero_rejected),
]


# translation -----------------------------------------------------------


def _shift_identity(ctx: Context):
    rng = ctx.rng("translation.expectation-shift")
    worst = 0.0
    for _ in range(ctx.n):
        f, x = ctx.random_fn(rng), rng.uniform(-1, 1, ctx.dim)
        got = ex.position_expectation(ctx.translate(f, x))
        worst = max(worst, float(np.max(np.abs(got - ex.position_expectation(f) - x))))
    return below("translation.expectation-shift", "expectation-shift", worst, 1e-9)


def _group(ctx: Context):
    rng = ctx.rng("translation.group")
    group = inverse = 0.0
    for _ in range(ctx.n):
        f = ctx.random_fn(rng)
        x, y = rng.uniform(-1, 1, ctx.dim), rng.uniform(-1, 1, ctx.dim)
        group = max(group, tr.verify_translation_group(f, x, y, ctx.cap))
        inverse = max(inverse, tr.verify_translation_group(f, x, -x, ctx.cap))
    return [below("translation.group", "translation-group", group, 1e-8),
            below("translation.inverse", "translation-group", inverse, 1e-8)]


def _linearity(ctx: Context):
    rng = ctx.rng("translation.linear")
    worst = 0.0
    for _ in range(ctx.n):
        lam = complex(*rng.standard_normal(2))
        worst = max(worst, tr.verify_translation_linearity(ctx.random_fn(rng), ctx.random_fn(rng), lam,
                                                           rng.uniform(-1, 1, ctx.dim), ctx.cap))
    return below("translation.linear", "translation-linear", worst, 1e-8)


def _unitarity(ctx: Context):
    rng = ctx.rng("translation.unitarity")
    worst = 0.0
    for _ in range(ctx.n):
        f, x = ctx.random_fn(rng), rng.uniform(-2, 2, ctx.dim)
        plan = tr.plan_translation(x, f.degree, max_degree=ctx.cap)
        worst = max(worst, plan.unitarity_defect, tr.unitarity_defect(f, x, ctx.cap))
    return below("translation.unitarity", "plumbing", worst, 1e-9, "plan certificate and measured norm change")


def _large_shift(ctx: Context):
    # |x| = 2 from the full working degree; small K cannot host these plans
    rng = ctx.rng("translation.large-shift")
    worst = 0.0
    for sign in (1.0, -1.0):
        f = ctx.random_fn(rng, degree=ctx.K)
        x = sign * 2.0 * np.ones(ctx.dim) / math.sqrt(ctx.dim)
        got = ex.position_expectation(ctx.translate(f, x))
        worst = max(worst, float(np.max(np.abs(got - ex.position_expectation(f) - x))))
    return below("translation.large-shift", "expectation-shift", worst, 1e-9)


def _continuity(ctx: Context):
    rng = ctx.rng("translation.continuity")
    f = ctx.random_fn(rng)
    rec = tr.translation_continuity_probe(f, rng.uniform(-1, 1, ctx.dim), [1e-2, 1e-3, 1e-4, 1e-5], ctx.cap)
    # injectivity: distinct shifts give distinct functions
    shifts = np.linspace(-1, 1, 9)
    images = [ctx.translate(f, s * np.ones(ctx.dim)) for s in shifts]
    sep = min((images[a] - images[b]).norm for a in range(len(images)) for b in range(a))
    return [at_least("translation.continuity", "translation-continuity", rec.slope, config.get().lipschitz_slope,
                     f"moduli {list(rec.moduli)}"),
            at_least("translation.injective", "translation-continuity", sep, 1e-6)]


def _joint(ctx: Context):
    rng = ctx.rng("translation.joint")
    rec = tr.joint_continuity_probe(ctx.random_fn(rng), rng.uniform(-1, 1, ctx.dim), ctx.random_fn(rng),
                                    [1e-2, 1e-3, 1e-4, 1e-5], ctx.cap)
    ok = rec.split_holds and rec.vanishing
    return CheckRecord("translation.joint", "translation-joint", "pass" if ok else "fail",
                       float(rec.total[-1]), float(rec.total[0]),
                       detail=f"split {rec.split_holds}, vanishing {rec.vanishing}")


TRANSLATION = [
    Check("translation.expectation-shift", "expectation-shift", _shift_identity),
    Check("translation.group", "translation-group", _group),
    Check("translation.linear", "translation-linear", _linearity),
    Check("translation.unitarity", "plumbing", _unitarity),
    Check("translation.large-shift", "expectation-shift", _large_shift),
    Check("translation.continuity", "translation-continuity", _continuity),
    Check("translation.joint", "translation-joint", _joint),
]


# bundle ---------------------------------------------------------------


def _tau_roundtrips(ctx: Context):
    rng = ctx.rng("bundle.tau")
    fwd = back = fiber = 0.0
    for _ in range(ctx.n):
        f = ctx.translate(ctx.random_fn(rng), rng.uniform(-1, 1, ctx.dim))
        p = bd.trivialize(f, ctx.cap)
        fwd = max(fwd, (bd.untrivialize(p, ctx.cap) - f).norm / f.norm)
        fiber = max(fiber, float(np.max(np.abs(ex.position_expectation(p.fiber)))))
        x = rng.uniform(-1, 1, ctx.dim)
        g = bd.project_to_fiber(ctx.random_fn(rng), ctx.cap)
        q = bd.trivialize(bd.untrivialize(bd.FiberPoint(x, g), ctx.cap), ctx.cap)
        back = max(back, float(np.max(np.abs(q.base - x))), (q.fiber - g).norm / g.norm)
    tol = config.get()
    return [below("bundle.tau-inverse-after-tau", "tau", fwd, 1e-8),
            below("bundle.tau-after-tau-inverse", "tau-inverse", back, 1e-8),
            below("bundle.fiber-band", "tau", fiber, tol.fiber_tol)]


def _fn_pair_norm(vec, fn):
    return max(float(np.linalg.norm(vec)), fn.norm)


def _dtau(ctx: Context):
    rng = ctx.rng("bundle.dtau")
    fd_err = 0.0
    reports = []
    t = 1e-5
    for _ in range(ctx.n):
        f0 = ctx.translate(ctx.random_fn(rng), rng.uniform(-1, 1, ctx.dim))
        g = ctx.random_fn(rng)
        plus = bd.trivialize_raw(f0 + t * g, ctx.cap)
        minus = bd.trivialize_raw(f0 - t * g, ctx.cap)
        dq, dfn = bd.d_trivialize(f0, g, ctx.cap)
        err = _fn_pair_norm((plus[0] - minus[0]) / (2 * t) - dq, (plus[1] - minus[1]) / (2 * t) - dfn)
        fd_err = max(fd_err, err / _fn_pair_norm(dq, dfn))
        reports.append(ex.tangent_slope(bd.trivialize_remainder(f0, ctx.cap), g))
    return [below("bundle.dtau", "dtau", fd_err, 1e-5),
            _slope_record("bundle.dtau-tangent", "dtau", reports)]


def _admissible(ctx: Context, rng):
    x0 = rng.uniform(-1, 1, ctx.dim)
    g0 = bd.project_to_fiber(ctx.random_fn(rng), ctx.cap)
    g = bd.tangent_direction(g0, ctx.random_fn(rng))
    return x0, g0, rng.standard_normal(ctx.dim), g


def _dtau_inverse(ctx: Context):
    rng = ctx.rng("bundle.dtau-inverse")
    fd_err = 0.0
    reports = []
    t = 1e-5
    for _ in range(ctx.n):
        x0, g0, x, g = _admissible(ctx, rng)
        plus = ctx.translate(g0 + t * g, x0 + t * x)
        minus = ctx.translate(g0 - t * g, x0 - t * x)
        lin = bd.d_untrivialize(x0, g0, x, g, max_degree=ctx.cap)
        fd_err = max(fd_err, ((plus - minus) / (2 * t) - lin).norm / lin.norm)
        reports.append(ex.tangent_slope(bd.untrivialize_remainder(x0, g0, ctx.cap), (x, g), norm="nuclear1"))
    return [below("bundle.dtau-inverse", "dtau-inverse", fd_err, 1e-5),
            _slope_record("bundle.dtau-inverse-tangent", "dtau-inverse", reports)]


def _mutual(ctx: Context):
    rng = ctx.rng("bundle.dtau-mutual")
    worst = 0.0
    for _ in range(ctx.n):
        f0 = ctx.translate(ctx.random_fn(rng), rng.uniform(-1, 1, ctx.dim))
        p = bd.trivialize(f0, ctx.cap)
        g = ctx.random_fn(rng)
        dq, dfn = bd.d_trivialize(f0, g, ctx.cap)
        back = bd.d_untrivialize(p.base, p.fiber, dq, dfn, max_degree=ctx.cap)
        worst = max(worst, (back - g).norm / g.norm)
        # and the other order, on an admissible direction
        x0, g0, x, h = _admissible(ctx, rng)
        dq2, dfn2 = bd.d_trivialize(ctx.translate(g0, x0), bd.d_untrivialize(x0, g0, x, h, max_degree=ctx.cap),
                                    ctx.cap)
        worst = max(worst, float(np.linalg.norm(dq2 - x)) / np.linalg.norm(x), (dfn2 - h).norm / h.norm)
    return below("bundle.dtau-mutual", "dtau-mutual", worst, 1e-7)


def _dtau_linear(ctx: Context):
    rng = ctx.rng("bundle.dtau-linear")
    worst = 0.0
    for _ in range(ctx.n):
        f0, g, h = (ctx.random_fn(rng) for _ in range(3))
        a, b = rng.standard_normal(2)
        dq, dfn = bd.d_trivialize(f0, a * g + b * h, ctx.cap)
        dq1, dfn1 = bd.d_trivialize(f0, g, ctx.cap)
        dq2, dfn2 = bd.d_trivialize(f0, h, ctx.cap)
        worst = max(worst, _fn_pair_norm(dq - a * dq1 - b * dq2, dfn - a * dfn1 - b * dfn2))
    return below("bundle.dtau-linear", "dtau", worst, 1e-12)


BUNDLE = [
    Check("bundle.tau", "tau", _tau_roundtrips),
    Check("bundle.dtau", "dtau", _dtau),
    Check("bundle.dtau-inverse", "dtau-inverse", _dtau_inverse),
    Check("bundle.dtau-mutual", "dtau-mutual", _mutual),
    Check("bundle.dtau-linear", "dtau", _dtau_linear),
]


# atlases ----------------------------------------------------------------


def _qatlas(ctx: Context, kind: str) -> at.QuantumAtlas:
    cl = at.make_classical_atlas(kind, ctx.dim, scale=ctx.cfg.scale)
    return at.trivial_quantization(cl, ctx.K, max_degree=ctx.cap)


def _points_in_chart(qa: at.QuantumAtlas, k: int, n: int, rng) -> list:
    out = []
    while len(out) < n:
        q = qa.random_point(rng)
        if qa.classical.charts[k].contains(q.base):
            out.append(q)
    return out


def _atlas_checks(kind: str) -> list:
    p = f"atlas.{kind}"

    def conditions(ctx):
        return at.verify_quantum_atlas(_qatlas(ctx, kind), ctx.n, ctx.rng(f"{p}.conditions"), prefix=p)

    def recovery(ctx):
        qa, rng = _qatlas(ctx, kind), ctx.rng(f"{p}.transition-recovery")
        worst = 0.0
        for i, j in at._chart_pairs(qa):
            for _ in range(ctx.n):
                x = qa.classical.charts[i].chart_map(at._sample_overlap(qa, i, j, rng, 0.0))
                got = at.recover_classical_transition(qa, i, j, x)
                worst = max(worst, float(np.max(np.abs(got - qa.classical.transition(i, j)(x)))))
        return below(f"{p}.transition-recovery", "transition-recovery", worst, 1e-7)

    def local(ctx):
        qa, rng = _qatlas(ctx, kind), ctx.rng(f"{p}.local-triviality")
        out = []
        for k, chart in enumerate(qa.charts):
            out += bd.verify_local_triviality(chart, qa.classical.charts[k], _points_in_chart(qa, k, ctx.n, rng),
                                              distance=qa.classical.distance, max_degree=ctx.cap,
                                              prefix=f"{p}.omega.{chart.id}")
        return out

    def limit(ctx):
        qa = _qatlas(ctx, kind)
        res = at.classical_limit_residuals(qa, ctx.n, ctx.rng(f"{p}.classical-limit"))
        mism = at.indistinguishability_mismatches(qa, ctx.n, ctx.rng(f"{p}.classes"))
        return [below(f"{p}.classical-limit", "classical-limit", max(res.values()), 1e-7,
                      ", ".join(f"{k} {v:.2e}" for k, v in res.items())),
                below(f"{p}.classes", "kolmogorov", mism, 0.5)]

    def functorial(ctx):
        qa, rng = _qatlas(ctx, kind), ctx.rng(f"{p}.functoriality")
        tol = config.get()
        worst = proj = 0.0
        for i, j in at._chart_pairs(qa):
            for _ in range(ctx.n):
                xi = at._sample_overlap(qa, i, j, rng, 0.05)
                q = at.QuantumPoint(xi, qa.random_fiber(rng))
                f = qa.charts[i].phi(q)
                there = at.quantum_transition(qa, i, j, f)
                back = at.quantum_transition(qa, j, i, there) if i != j else there
                worst = max(worst, (back - f).norm / f.norm)
                proj = max(proj, qa.classical.distance(at.kolmogorov_project(qa, q, i),
                                                       at.kolmogorov_project(qa, q, j)))
        return [below(f"{p}.functoriality", "atlas-iv", worst, 2 * tol.chart_tol),
                below(f"{p}.chart-independence", "kolmogorov", proj, 2 * tol.point_tol)]

    checks = [
        Check(f"{p}.conditions", "atlas-i", conditions),
        Check(f"{p}.transition-recovery", "transition-recovery", recovery),
        Check(f"{p}.local-triviality", "local-triviality", local),
        Check(f"{p}.classical-limit", "classical-limit", limit),
        Check(f"{p}.functoriality", "atlas-iv", functorial),
    ]
    if kind == "circle":
        def negative(ctx):
            bad = at.corrupted_transition(_qatlas(ctx, kind))
            recs = at.verify_quantum_atlas(bad, ctx.n, ctx.rng(f"{p}.negative-control"), prefix=f"{p}.corrupt")
            caught = any(r.failed and r.check_id.endswith(".continuity") for r in recs)
            return CheckRecord(f"{p}.negative-control", "atlas-iv", "pass" if caught else "fail",
                               float(not caught), 0.5, detail="corrupted transition must fail continuity")

        def union(ctx):
            qa = _qatlas(ctx, kind)
            rotated = at.make_classical_atlas("circle", scale=ctx.cfg.scale, rotation=1.0, prefix="rot-")
            joint = at.trivial_quantization(qa.classical.union(rotated), ctx.K, max_degree=ctx.cap)
            return at.verify_quantum_atlas(joint, ctx.n, ctx.rng(f"{p}.union"), prefix=f"{p}.union")

        checks += [Check(f"{p}.negative-control", "atlas-iv", negative),
                   Check(f"{p}.union", "atlas-i", union)]
        # the circle is one-dimensional whatever the configured manifold
        checks = [Check(c.check_id, c.anchor, lambda ctx, fn=c.run: fn(ctx.for_dim(1))) for c in checks]
    return checks


# appendix-style analytic estimates --------------------------------------


def _linear_remainder_rejected(ctx: Context):
    rep = ex.tangent_slope(lambda t, f: t * f, ctx.random_fn(ctx.rng("appendix.linear-rejected")), norm="l2")
    return CheckRecord("appendix.linear-rejected", "dqbar-tangent", "pass" if not rep.passed else "fail",
                       rep.fitted_slope, rep.threshold, detail="a slope-1 remainder must be rejected")


APPENDIX_B = [
    Check("appendix.norm-bounds", "norm-bounds", _norm_bounds),
    Check("appendix.continuity-bound", "continuity-bound", _continuity_bound),
    Check("appendix.dqbar-tangent", "dqbar-tangent", _dqbar_slope),
    Check("appendix.translation-continuity", "translation-continuity", _continuity),
    Check("appendix.translation-joint", "translation-joint", _joint),
    Check("appendix.dtau", "dtau", _dtau),
    Check("appendix.dtau-inverse", "dtau-inverse", _dtau_inverse),
    Check("appendix.linear-rejected", "dqbar-tangent", _linear_remainder_rejected),
]


def catalog() -> dict:
    cat = {
        "model-space": MODEL_SPACE,
        "expectation": EXPECTATION,
        "translation": TRANSLATION,
        "bundle": BUNDLE,
        "atlas-euclidean": _atlas_checks("euclidean"),
        "atlas-circle": _atlas_checks("circle"),
        "appendix-b": APPENDIX_B,
    }
    cat["all"] = [c for name in SUITES[:-1] for c in cat[name]]
    return cat


def _renamed(records: list, check: Check) -> list:
    # shared check bodies report under their own id; re-key them under the suite's id
    prefix = check.check_id.split(".")[0]
    for r in records:
        head, _, tail = r.check_id.partition(".")
        if head != prefix:
            r.check_id = f"{prefix}.{tail}"
    return records


def run_suite(cfg: SuiteConfig) -> VerificationReport:
    """Run the configured suite; writes the JSON report when ``cfg.out`` is set."""
    cfg.validate()
    ctx = Context(cfg)
    records = []
    with config.using(**cfg.tolerances):
        for check in catalog()[cfg.suite]:
            records += _renamed(timed(check.check_id, check.anchor, lambda c=check: c.run(ctx)), check)
        echo = asdict(cfg)
        echo["tolerances"] = asdict(config.get())
    report = VerificationReport(__version__, echo, records)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(report.to_json())
    return report


def report_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check_id", "anchor", "status", "residual", "tolerance", "wall_time", "detail"])
    for r in report.sorted_checks():
        w.writerow([r.check_id, r.anchor, r.status, repr(r.residual), repr(r.tolerance),
                    f"{r.wall_time:.6f}", r.detail])
    return buf.getvalue()


# convergence sweeps -----------------------------------------------------


def _truncated_shift(coeffs: np.ndarray, x: float) -> np.ndarray:
    # translation confined to the first len(coeffs) levels, no padding
    return scipy.linalg.expm(x * tr.generator(coeffs.size)) @ coeffs


def _sweep_tau_roundtrip(K: int) -> float:
    # (x, Psi(0)) -> T_x Psi(0) -> tau, with T_x applied inside the degree-K space
    x = 1.0
    g = ex.gaussian_section(0.0, K, tol=math.inf)
    f = hm.SchwartzFn(_truncated_shift(g.coeffs.astype(complex), x))
    p = bd.trivialize_raw(f)
    return max(abs(float(p[0][0]) - x), (p[1] - g).norm / g.norm)


def _sweep_section(K: int) -> float:
    return abs(float(ex.position_expectation(ex.gaussian_section(2.0, K, tol=math.inf))[0]) - 2.0)


SWEEPS = {
    "tau-roundtrip": _sweep_tau_roundtrip,
    "section-expectation": _sweep_section,
}


def convergence_sweep(check_id: str, k_list, output: str | None = None) -> list:
    """Rows ``(K, residual, wall_time)``; writes CSV to ``output`` when given."""
    if check_id not in SWEEPS:
        raise ValueError(f"unsupported sweep {check_id!r}; choose from {', '.join(SWEEPS)}")
    rows = []
    for K in k_list:
        if int(K) < 1:
            raise ValueError("degrees must be positive")
        start = time.perf_counter()
        residual = SWEEPS[check_id](int(K))
        rows.append((int(K), residual, time.perf_counter() - start))
    if output:
        with open(output, "w") as fh:
            fh.write(sweep_csv(rows))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["K", "residual", "wall_time"])
    for K, res, wt in rows:
        w.writerow([K, repr(res), f"{wt:.6f}"])
    return buf.getvalue()


__all__ = ["SUITES", "SWEEPS", "SuiteConfig", "run_suite", "convergence_sweep", "catalog",
           "parse_manifold", "report_csv", "sweep_csv"]
