"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section of the
pytest terminal summary.
"""
import math

import numpy as np
import pytest

import oracles
from qmanifold import atlas as at
from qmanifold import bundle as bd
from qmanifold import expectation as ex
from qmanifold import hermite as hm
from qmanifold import translation as tr
from qmanifold.errors import NonzeroRequired, PlanRejected
from qmanifold.suites import convergence_sweep


def unit(f):
    return f / f.norm


def random_fn(rng, dim=1, degree=10, decay=0.4):
    return unit(hm.random_schwartz(rng, dim, degree, decay=decay))


@pytest.fixture(scope="module")
def circle():
    return at.trivial_quantization(at.make_classical_atlas("circle"), 32, max_degree=256)


@pytest.fixture(scope="module")
def plane():
    return at.trivial_quantization(at.make_classical_atlas("euclidean", 1), 32, max_degree=256)


def test_criterion_01_expectation_shift(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        f = random_fn(rng, 1, 48, decay=0.15)
        x = rng.uniform(-1, 1, 1)
        got = ex.position_expectation(tr.translate(f, x))
        worst = max(worst, float(np.max(np.abs(got - ex.position_expectation(f) - x))))
    assert criterion(1, worst < 1e-9, f"expectation shift, 100 samples K=48: max residual {worst:.2e} (< 1e-9)")


def test_criterion_02_gaussian_section(criterion):
    rng = np.random.default_rng(102)
    xs = np.concatenate([[-2.0, 2.0, 0.0], rng.uniform(-2, 2, 47)])
    worst = max(abs(ex.position_expectation(ex.gaussian_section(x, 48))[0] - x) for x in xs)
    rows = convergence_sweep("section-expectation", [8, 16, 24, 32, 40, 48])
    res = [r for _, r, _ in rows]
    monotone = all(b <= a + 1e-13 for a, b in zip(res, res[1:]))
    ok = worst < 1e-9 and monotone
    assert criterion(2, ok, f"section right inverse K=48: max residual {worst:.2e} (< 1e-9); "
                            f"sweep non-increasing {monotone} ({res[0]:.1e} -> {res[-1]:.1e})")


def test_criterion_03_trivialization_round_trips(criterion):
    rng = np.random.default_rng(103)
    fwd = back = 0.0
    for _ in range(200):
        f = tr.translate(random_fn(rng), rng.uniform(-1, 1, 1))
        fwd = max(fwd, (bd.untrivialize(bd.trivialize(f)) - f).norm / f.norm)
        x, g = rng.uniform(-1, 1, 1), bd.project_to_fiber(random_fn(rng))
        q = bd.trivialize(bd.untrivialize(bd.FiberPoint(x, g)))
        back = max(back, float(np.max(np.abs(q.base - x))), (q.fiber - g).norm / g.norm)
    ok = fwd < 1e-8 and back < 1e-8
    assert criterion(3, ok, f"tau round trips, 200 points: {fwd:.2e} and {back:.2e} (< 1e-8)")


def test_criterion_04_dqbar(criterion):
    rng = np.random.default_rng(104)
    worst = 0.0
    h = 1e-5
    for _ in range(100):
        f0, f = random_fn(rng), random_fn(rng)
        fd = (ex.position_expectation(f0 + h * f) - ex.position_expectation(f0 - h * f)) / (2 * h)
        an = ex.d_expectation(f0, f)
        worst = max(worst, float(np.linalg.norm(fd - an) / np.linalg.norm(an)))
    slopes = [ex.tangent_slope(ex.expectation_remainder(random_fn(rng)), random_fn(rng)) for _ in range(20)]
    low = min(s.fitted_slope for s in slopes)
    ok = worst < 1e-6 and all(s.status == "pass" for s in slopes)
    assert criterion(4, ok, f"DQbar vs central differences, 100 pairs: rel {worst:.2e} (< 1e-6); "
                            f"min remainder slope over 20 = {low:.3f} (>= 1.9)")


def test_criterion_05_dtau(criterion):
    rng = np.random.default_rng(105)
    t = 1e-5
    fd_fwd = fd_inv = mutual = 0.0
    slopes = []
    for _ in range(20):
        f0 = tr.translate(random_fn(rng), rng.uniform(-1, 1, 1))
        g = random_fn(rng)
        plus, minus = bd.trivialize_raw(f0 + t * g), bd.trivialize_raw(f0 - t * g)
        dq, dfn = bd.d_trivialize(f0, g)
        err = max(float(np.linalg.norm((plus[0] - minus[0]) / (2 * t) - dq)),
                  ((plus[1] - minus[1]) / (2 * t) - dfn).norm)
        fd_fwd = max(fd_fwd, err / max(float(np.linalg.norm(dq)), dfn.norm))
        slopes.append(ex.tangent_slope(bd.trivialize_remainder(f0), g))

        p = bd.trivialize(f0)
        mutual = max(mutual, (bd.d_untrivialize(p.base, p.fiber, dq, dfn) - g).norm / g.norm)

        x0, g0 = rng.uniform(-1, 1, 1), bd.project_to_fiber(random_fn(rng))
        x, h = rng.standard_normal(1), bd.tangent_direction(g0, random_fn(rng))
        lin = bd.d_untrivialize(x0, g0, x, h)
        fd = (tr.translate(g0 + t * h, x0 + t * x) - tr.translate(g0 - t * h, x0 - t * x)) / (2 * t)
        fd_inv = max(fd_inv, (fd - lin).norm / lin.norm)
        slopes.append(ex.tangent_slope(bd.untrivialize_remainder(x0, g0), (x, h), norm="nuclear1"))
        dq2, dfn2 = bd.d_trivialize(tr.translate(g0, x0), lin)
        mutual = max(mutual, float(np.linalg.norm(dq2 - x) / np.linalg.norm(x)), (dfn2 - h).norm / h.norm)
    low = min(s.fitted_slope for s in slopes)
    ok = fd_fwd < 1e-5 and fd_inv < 1e-5 and mutual < 1e-7 and all(s.status == "pass" for s in slopes)
    assert criterion(5, ok, f"Dtau / Dtau^-1 vs differences: {fd_fwd:.2e}, {fd_inv:.2e} (< 1e-5); "
                            f"min slope {low:.3f} (>= 1.9); mutual inverse {mutual:.2e} (< 1e-7)")


def test_criterion_06_continuity_bound(criterion):
    rng = np.random.default_rng(106)
    held = 0
    for _ in range(500):
        f0 = random_fn(rng, 1, 10) * rng.uniform(0.2, 5.0)
        f = random_fn(rng, 1, 10) * (rng.uniform(0.0, 0.5) * f0.norm * (1 - 1e-12))
        held += ex.continuity_bound_check(f0, f).holds
    bounds = 0
    for _ in range(200):
        f = hm.random_schwartz(rng, int(rng.integers(1, 3)), 6, decay=0.1) * rng.uniform(0.1, 10)
        a, b = ex.norm_bounds(f)
        bounds += a >= 0 and b >= 0
    ok = held == 500 and bounds == 200
    assert criterion(6, ok, f"continuity bound held on {held}/500 pairs; norm bounds on {bounds}/200")


def test_criterion_07_translation_algebra(criterion):
    rng = np.random.default_rng(107)
    group = inverse = linear = defect = 0.0
    accepted = rejected = 0
    for _ in range(50):
        f, g = random_fn(rng, 1, 16), random_fn(rng, 1, 16)
        x, y = rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1)
        group = max(group, tr.verify_translation_group(f, x, y))
        inverse = max(inverse, tr.verify_translation_group(f, x, -x))
        linear = max(linear, tr.verify_translation_linearity(f, g, complex(*rng.standard_normal(2)), x))
    for K in (4, 8, 16, 32, 48):
        for shift in (-2.0, -0.5, 0.7, 2.0):
            try:
                plan = tr.plan_translation(shift, K, max_degree=8 * K)
            except PlanRejected:
                rejected += 1
                continue
            accepted += 1
            f = random_fn(rng, 1, K)
            defect = max(defect, plan.unitarity_defect, tr.unitarity_defect(f, shift))
    f = random_fn(rng, 1, 10)
    images = [tr.translate(f, s) for s in np.linspace(-1, 1, 9)]
    separation = min((images[a] - images[b]).norm for a in range(9) for b in range(a))
    rec = tr.translation_continuity_probe(f, [0.3], [1e-2, 1e-3, 1e-4, 1e-5])
    ok = (max(group, inverse, linear) < 1e-8 and defect < 1e-9 and separation > 0
          and rec.slope >= 0.95)
    assert criterion(7, ok, f"group {group:.1e}, inverse {inverse:.1e}, linear {linear:.1e} (< 1e-8); "
                            f"unitarity {defect:.1e} over {accepted} plans ({rejected} rejected) (< 1e-9); "
                            f"injective gap {separation:.2f}; modulus slope {rec.slope:.4f} (>= 0.95)")


def test_criterion_08_transition_recovery(criterion, circle):
    rng = np.random.default_rng(108)
    cl = circle.classical
    worst = 0.0
    for i, j in ((0, 1), (1, 0)):
        for _ in range(64):
            x = cl.charts[i].chart_map(at._sample_overlap(circle, i, j, rng, 0.0))
            got = at.recover_classical_transition(circle, i, j, x)
            worst = max(worst, float(np.max(np.abs(got - cl.transition(i, j)(x)))))
    assert criterion(8, worst < 1e-7, f"circle transition recovery, 2 x 64 overlap points: {worst:.2e} (< 1e-7)")


def test_criterion_09_local_triviality(criterion, circle, plane):
    rng = np.random.default_rng(109)
    projection = trip = 0.0
    for qa in (circle, plane):
        cl = qa.classical
        for k, chart in enumerate(qa.charts):
            n = 0
            while n < 64:
                q = qa.random_point(rng)
                if not cl.charts[k].contains(q.base):
                    continue
                n += 1
                point, g = bd.local_trivialization(chart, cl.charts[k], q)
                projection = max(projection, cl.distance(point, at.kolmogorov_project(qa, q, k)))
                back = bd.inverse_local_trivialization(chart, cl.charts[k], point, g)
                trip = max(trip, cl.distance(back.base, q.base), (back.fiber - q.fiber).norm)
    ok = projection < 1e-8 and trip < 1e-8
    assert criterion(9, ok, f"omega_1 vs Kolmogorov projection, 64 samples per chart: {projection:.2e}; "
                            f"omega round trip {trip:.2e} (< 1e-8)")


def test_criterion_10_classical_limit(criterion, circle):
    rng = np.random.default_rng(110)
    plane2 = at.trivial_quantization(at.make_classical_atlas("euclidean", 2), 16, max_degree=128)
    worst = 0.0
    mismatches = 0
    for qa in (circle, plane2):
        res = at.classical_limit_residuals(qa, 16, rng)
        worst = max(worst, *res.values())
        mismatches += at.indistinguishability_mismatches(qa, 40, rng)
    ok = worst < 1e-7 and mismatches == 0
    assert criterion(10, ok, f"classical limit of circle and plane: {worst:.2e} (< 1e-7); "
                             f"class/fiber mismatches {mismatches} of 80 pairs")


def test_criterion_11_nuclear_exactness(criterion):
    rng = np.random.default_rng(111)
    worst = 0.0
    for dim in (1, 2):
        for p in range(4):
            for k in range(9):
                f = hm.basis((k,) * dim if dim == 2 else k)
                ref = oracles.nuclear_form_sparse(f.coeffs, p)
                worst = max(worst, abs(hm.nuclear_quadratic_form(f, p) - ref) / ref)
            f = hm.random_schwartz(rng, dim, 8)
            ref = oracles.nuclear_form_sparse(f.coeffs, p)
            worst = max(worst, abs(hm.nuclear_quadratic_form(f, p) - ref) / ref)
    assert criterion(11, worst < 1e-12, f"diagonal formula vs sparse matrices, k <= 8, p <= 3, n in 1,2: "
                                        f"rel {worst:.2e} (< 1e-12)")


def test_criterion_12_negative_controls(criterion, circle):
    rng = np.random.default_rng(112)
    records = at.verify_quantum_atlas(at.corrupted_transition(circle), 8, rng)
    continuity_failed = any(r.failed and r.check_id.endswith("continuity") for r in records)
    linear = ex.tangent_slope(lambda t, f: t * f, hm.basis(0), norm="l2")
    zero, f = hm.zeros(1, 4), random_fn(rng)
    entry_points = {
        "expectation": lambda: ex.expectation(zero),
        "position_expectation": lambda: ex.position_expectation(zero),
        "d_expectation": lambda: ex.d_expectation(zero, f),
        "expectation_remainder": lambda: ex.expectation_remainder(zero),
        "continuity_bound_check": lambda: ex.continuity_bound_check(zero, zero),
        "trivialize": lambda: bd.trivialize(zero),
        "project_to_fiber": lambda: bd.project_to_fiber(zero),
        "d_trivialize": lambda: bd.d_trivialize(zero, f),
        "trivialize_remainder": lambda: bd.trivialize_remainder(zero),
        "FiberPoint": lambda: bd.FiberPoint([0.0], zero),
        "QuantumPoint": lambda: at.QuantumPoint([0.0], zero),
    }
    accepted = []
    for name, call in entry_points.items():
        try:
            call()
            accepted.append(name)
        except NonzeroRequired:
            pass
    ok = continuity_failed and not linear.passed and not accepted
    assert criterion(12, ok, f"corrupted transition caught {continuity_failed}; slope-1 remainder "
                             f"rejected {not linear.passed} (slope {linear.fitted_slope:.2f}); "
                             f"zero accepted by {accepted or 'none'} of {len(entry_points)} entry points")
