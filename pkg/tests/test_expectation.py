import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qmanifold import expectation as ex
from qmanifold import hermite as hm
from qmanifold import config
from qmanifold.errors import NonzeroRequired, NotHermitian, PreconditionError, TruncationError

SQRT2 = math.sqrt(2.0)


def unit(f):
    return f / f.norm


@pytest.mark.parametrize("k", range(8))
def test_basis_states_are_centred(k):
    assert ex.expectation(hm.basis(k), "position") == 0.0
    assert ex.expectation(hm.basis(k), "momentum") == 0.0


def test_superposition_matches_quadrature():
    f = (hm.basis(0) + hm.basis(1)) / SQRT2
    assert abs(ex.expectation(f) - 1 / SQRT2) < 1e-15
    assert abs(ex.expectation(f) - oracles.gauss_hermite_moment(f.coeffs)) < 1e-13


def test_random_expectation_matches_quadrature(rng):
    for _ in range(5):
        f = hm.random_schwartz(rng, 1, 12)
        assert abs(ex.expectation(f) - oracles.gauss_hermite_moment(f.coeffs)) < 1e-12


def test_expectation_is_scale_invariant(rng):
    f = hm.random_schwartz(rng, 1, 6)
    assert abs(ex.expectation(3j * f) - ex.expectation(f)) < 1e-14


def test_custom_operator():
    f = hm.random_schwartz(np.random.default_rng(3), 1, 5)
    q2 = lambda g: hm.apply_position(hm.apply_position(g))  # noqa: E731
    ref = oracles.gauss_hermite_moment(f.coeffs, power=2)
    assert abs(ex.expectation(f, q2) - ref) < 1e-12


def test_non_hermitian_operator_rejected():
    f = hm.basis(0) + 1j * hm.basis(1)
    with pytest.raises(NotHermitian):
        ex.expectation(f, lambda g: hm.partial(g, 0))


def test_unknown_operator():
    with pytest.raises(ValueError):
        ex.expectation(hm.basis(0), "energy")


def test_zero_function_rejected():
    zero = hm.zeros(1, 3)
    for call in (lambda: ex.expectation(zero), lambda: ex.position_expectation(zero),
                 lambda: ex.d_expectation(zero, hm.basis(0)), lambda: ex.expectation_remainder(zero)):
        with pytest.raises(NonzeroRequired):
            call()


def test_below_nonzero_tolerance_rejected():
    with pytest.raises(NonzeroRequired):
        ex.position_expectation(hm.basis(0) * 1e-13)
    with config.using(nonzero_tol=1e-20):
        assert ex.position_expectation(hm.basis(0) * 1e-13)[0] == 0.0


def test_product_state_centred():
    np.testing.assert_array_equal(ex.position_expectation(hm.basis((0, 0))), [0.0, 0.0])


# Gaussian section ---------------------------------------------------------


@pytest.mark.parametrize("x", [-2.0, -0.7, 0.0, 1.3, 2.0])
def test_section_coefficients_match_quadrature(x):
    psi = ex.gaussian_section(x, 32)
    ref = oracles.project(lambda y: np.exp(-(y - x) ** 2), 32)
    np.testing.assert_allclose(psi.coeffs, ref, atol=1e-13)


@pytest.mark.parametrize("x", [-2.0, -0.5, 0.0, 0.9, 2.0])
def test_section_is_right_inverse(x):
    assert abs(ex.position_expectation(ex.gaussian_section(x, 48))[0] - x) < 1e-12


def test_section_2d():
    got = ex.position_expectation(ex.gaussian_section((1.0, -2.0), 40))
    np.testing.assert_allclose(got, [1.0, -2.0], atol=1e-12)


def test_section_norm():
    psi = ex.gaussian_section(0.4, 40)
    assert abs(psi.norm_sq - math.sqrt(math.pi / 2)) < 1e-13


def test_section_truncation_error():
    with pytest.raises(TruncationError) as info:
        ex.gaussian_section(0.0, 10)
    assert info.value.defect > 1e-10
    ex.gaussian_section(0.0, 10, tol=math.inf)


def test_section_mass_defect_decreases():
    defects = [ex.section_mass_defect(1.5, K) for K in (8, 16, 24, 32)]
    assert all(b < a for a, b in zip(defects, defects[1:]))


def test_section_width_variant():
    f = ex.gaussian_section_width(0.5, 48, width=0.8)
    ref = oracles.project(lambda y: np.exp(-((y - 0.5) / 0.8) ** 2), 10)
    np.testing.assert_allclose(f.coeffs[:11], ref, atol=1e-13)


# indistinguishability -----------------------------------------------------


def test_indistinguishable(rng):
    f = hm.random_schwartz(rng, 1, 6)
    assert ex.indistinguishable(f, f)
    assert ex.indistinguishable(f, np.exp(0.7j) * f * 3.0)
    assert not ex.indistinguishable(hm.basis(0), (hm.basis(0) + hm.basis(1)))


def test_indistinguishable_is_symmetric(rng):
    for _ in range(10):
        f, g = hm.random_schwartz(rng, 1, 4), hm.random_schwartz(rng, 1, 4)
        assert ex.indistinguishable(f, g) == ex.indistinguishable(g, f)


# differential -------------------------------------------------------------


def test_dqbar_between_ground_and_first_state():
    # ( <h0,Qh1> + <h1,Qh0> ) / <h0,h0> = 2 / sqrt2
    assert abs(ex.d_expectation(hm.basis(0), hm.basis(1))[0] - SQRT2) < 1e-15
    t = 1e-6
    fd = (ex.expectation(hm.basis(0) + t * hm.basis(1)) - ex.expectation(hm.basis(0) - t * hm.basis(1))) / (2 * t)
    assert abs(fd - SQRT2) < 1e-9


def test_dqbar_along_f0_vanishes(rng):
    f0 = hm.random_schwartz(rng, 2, 5)
    np.testing.assert_allclose(ex.d_expectation(f0, f0), 0.0, atol=1e-14)
    np.testing.assert_allclose(ex.d_expectation(f0, 1j * f0), 0.0, atol=1e-14)


def test_dqbar_matches_finite_differences(rng):
    for _ in range(20):
        f0, f = unit(hm.random_schwartz(rng, 1, 10)), unit(hm.random_schwartz(rng, 1, 10))
        h = 1e-5
        fd = (ex.position_expectation(f0 + h * f) - ex.position_expectation(f0 - h * f)) / (2 * h)
        an = ex.d_expectation(f0, f)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(np.linalg.norm(an), 1e-3)


def test_dqbar_is_real_linear(rng):
    f0, f, g = (hm.random_schwartz(rng, 2, 4) for _ in range(3))
    lhs = ex.d_expectation(f0, 2.0 * f - 0.5 * g)
    np.testing.assert_allclose(lhs, 2.0 * ex.d_expectation(f0, f) - 0.5 * ex.d_expectation(f0, g), atol=1e-13)


def test_remainder_is_quadratic(rng):
    for _ in range(10):
        rep = ex.tangent_slope(ex.expectation_remainder(unit(hm.random_schwartz(rng, 1, 10))),
                               unit(hm.random_schwartz(rng, 1, 10)))
        assert rep.passed and rep.status == "pass" and rep.fitted_slope >= 1.9


def test_linear_remainder_rejected():
    rep = ex.tangent_slope(lambda t, f: t * f, hm.basis(0), norm="l2")
    assert not rep.passed and rep.status == "fail"
    assert abs(rep.fitted_slope - 1.0) < 1e-12


def test_zero_remainder_is_vacuous():
    rep = ex.tangent_slope(lambda t, f: 0.0 * t, hm.basis(0))
    assert rep.vacuous and rep.status == "vacuous" and math.isnan(rep.fitted_slope)


@pytest.mark.parametrize("grid", [[1e-1, 1e-2, 1e-3], [1e-1, 1e-2, 1e-3, 1e-3],
                                  [1e-1, 5e-2, 2e-2, 1.1e-2], [2.0, 1e-1, 1e-2, 1e-3],
                                  [1e-3, 1e-2, 1e-1, 1.0]])
def test_tangent_slope_validates_grid(grid):
    with pytest.raises(PreconditionError):
        ex.tangent_slope(lambda t, f: t * t, None, t_grid=grid)


def test_tangent_slope_norms():
    f = hm.basis(2)
    rep = ex.tangent_slope(lambda t, g: t ** 3 * g, f, norm="nuclear1")
    assert abs(rep.fitted_slope - 3.0) < 1e-10
    rep = ex.tangent_slope(lambda t, g: (np.array([t * t]), t * t * g), f)
    assert abs(rep.fitted_slope - 2.0) < 1e-10
    with pytest.raises(ValueError):
        ex.tangent_slope(lambda t, g: g, f, norm="sup")


def test_product_norm():
    assert ex.product_norm(np.array([3.0, 4.0]), hm.basis(0)) == 5.0
    assert ex.product_norm(np.array([0.1]), hm.basis(0)) == math.sqrt(2)


# continuity estimate and norm bounds ----------------------------------------


def test_continuity_bound_holds_on_samples(rng):
    for _ in range(100):
        f0 = hm.random_schwartz(rng, 1, 10)
        f = unit(hm.random_schwartz(rng, 1, 10)) * (rng.uniform(0, 0.499) * f0.norm)
        b = ex.continuity_bound_check(f0, f)
        assert b.holds and b.lhs <= b.rhs


def test_continuity_bound_domain():
    with pytest.raises(PreconditionError):
        ex.continuity_bound_check(hm.basis(0), 0.5 * hm.basis(1))
    b = ex.continuity_bound_check(hm.basis(0), hm.zeros(1, 0))
    assert b.holds and b.lhs == 0.0


@given(st.integers(0, 10_000))
def test_norm_bounds(seed):
    f = hm.random_schwartz(np.random.default_rng(seed), 2, 5, decay=0.1)
    a, b = ex.norm_bounds(f)
    assert a >= -1e-12 and b >= -1e-12
