"""Closed-form Gaussian kernel moments against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import klmskit as kk
from klmskit.errors import (
    DimensionMismatchError,
    IllConditionedError,
    SingularMatrixError,
)
from oracles import (
    mc_mgf_iid,
    quad_kernel_product_adaptive,
    quad_mgf_adaptive,
)

EXP1_R = 0.25 * np.array([[1.0, 0.5], [0.5, 1.0]])


def exp1_input():
    return kk.InputModel(2, EXP1_R)


# ---------------------------------------------------------------------------
# kernel basics
# ---------------------------------------------------------------------------

def test_kernel_self_similarity_is_one():
    ker = kk.GaussianKernel(0.25)
    x = np.array([0.3, -1.2])
    assert ker(x, x) == 1.0


def test_kernel_rejects_nonpositive_bandwidth():
    with pytest.raises(ValueError):
        kk.GaussianKernel(0.0)
    with pytest.raises(ValueError):
        kk.GaussianKernel(-1.0)


@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    st.floats(0.5, 3.0),
)
@settings(max_examples=50, deadline=None)
def test_kernel_bounds_and_symmetry(x, y, bandwidth):
    # ranges keep the exponent above float64 underflow
    ker = kk.GaussianKernel(bandwidth)
    v = ker(np.array(x), np.array(y))
    assert 0.0 < v <= 1.0
    assert v == ker(np.array(y), np.array(x))


# ---------------------------------------------------------------------------
# input model
# ---------------------------------------------------------------------------

def test_input_model_ar1_embedding():
    im = kk.InputModel.ar1(rho=0.5, sigma_x=0.5)
    np.testing.assert_allclose(im.autocorrelation, EXP1_R, rtol=0, atol=0)


def test_input_model_rejects_indefinite():
    with pytest.raises(SingularMatrixError):
        kk.InputModel(2, np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_input_model_rejects_huge_condition_number():
    with pytest.raises(IllConditionedError):
        kk.InputModel(2, np.diag([1.0, 1e-14]))


def test_input_model_rejects_asymmetric():
    with pytest.raises(ValueError):
        kk.InputModel(2, np.array([[1.0, 0.2], [0.3, 1.0]]))


# ---------------------------------------------------------------------------
# moment generating function
# ---------------------------------------------------------------------------

def test_mgf_zero_form_is_one():
    spec = kk.QuadraticFormSpec(H=np.zeros((2, 2)), b=np.zeros(2), s=3.7)
    assert kk.mgf_quadratic(spec, EXP1_R) == pytest.approx(1.0, abs=1e-14)


def test_mgf_scalar_closed_form():
    # E{exp(-x^2/sigma^2)} = (1 + 2 r / sigma^2)^(-1/2)
    sigma2 = 0.25**2
    r = 0.49
    spec = kk.QuadraticFormSpec(H=np.array([[1.0]]), b=np.array([0.0]), s=-1.0 / sigma2)
    expected = (1.0 + 2.0 * r / sigma2) ** -0.5
    assert kk.mgf_quadratic(spec, np.array([[r]])) == pytest.approx(expected, rel=1e-14)


def test_mgf_against_iid_monte_carlo():
    # frozen oracle: mean of exp(s(||x||^2 + b'x)) over 4e6 i.i.d. draws, seed 7
    spec = kk.QuadraticFormSpec(H=np.eye(2), b=np.array([1.0, 1.0]), s=-1.0 / 0.25**2)
    oracle_value = 1.997090678635e02
    closed = kk.mgf_quadratic(spec, EXP1_R)
    assert closed == pytest.approx(oracle_value, rel=0.01)


def test_mgf_oracle_value_reproduces():
    spec = kk.QuadraticFormSpec(H=np.eye(2), b=np.array([1.0, 1.0]), s=-1.0 / 0.25**2)
    assert mc_mgf_iid(spec, exp1_input(), 100_000, seed=7) == pytest.approx(
        kk.mgf_quadratic(spec, EXP1_R), rel=0.02
    )


def test_mgf_nonexistent_expectation_raises():
    # s > 0 with H = I and strong input power: I - 2sHR loses positivity
    spec = kk.QuadraticFormSpec(H=np.eye(2), b=np.zeros(2), s=4.0)
    with pytest.raises(SingularMatrixError):
        kk.mgf_quadratic(spec, EXP1_R)


@given(st.floats(-4.0, 0.0), st.floats(0.1, 1.0), st.floats(0.05, 2.0))
@settings(max_examples=40, deadline=None)
def test_mgf_zero_b_reduces_to_determinant(s, h, r):
    spec = kk.QuadraticFormSpec(H=np.array([[h]]), b=np.array([0.0]), s=s)
    expected = (1.0 - 2.0 * s * h * r) ** -0.5
    assert kk.mgf_quadratic(spec, np.array([[r]])) == pytest.approx(expected, rel=1e-12)


@given(st.floats(-3.0, -0.05), st.floats(-1.5, 1.5), st.floats(0.1, 0.8))
@settings(max_examples=20, deadline=None)
def test_mgf_matches_adaptive_quadrature_1d(s, b, r):
    spec = kk.QuadraticFormSpec(H=np.array([[1.0]]), b=np.array([b]), s=s)
    im = kk.InputModel(1, np.array([[r]]))
    closed = kk.mgf_quadratic(spec, im.autocorrelation)
    assert abs(closed - quad_mgf_adaptive(spec, im)) < 1e-6


def test_mgf_matches_adaptive_quadrature_2d():
    spec = kk.QuadraticFormSpec(
        H=np.array([[1.0, 0.2], [0.2, 0.6]]), b=np.array([0.4, -0.7]), s=-1.8
    )
    im = exp1_input()
    closed = kk.mgf_quadratic(spec, im.autocorrelation)
    assert abs(closed - quad_mgf_adaptive(spec, im)) < 1e-6


def test_weighted_norm_identity():
    v = np.array([1.5, -2.0, 0.25])
    assert kk.weighted_norm_sq(v, np.eye(3)) == pytest.approx(float(v @ v), rel=1e-15)


# ---------------------------------------------------------------------------
# second-order kernel moments
# ---------------------------------------------------------------------------

def test_correlation_entry_point_mass_limit(exp1_setup):
    # nearly deterministic zero input: entry -> kappa(0, xi) kappa(0, xj)
    d, ker, _ = exp1_setup
    tiny = kk.InputModel(2, 1e-12 * np.eye(2))
    i, j = 3, 17
    expected = ker(np.zeros(2), d.centers[i]) * ker(np.zeros(2), d.centers[j])
    got = kk.kernel_correlation_entry(i, j, d, ker, tiny)
    assert got == pytest.approx(expected, rel=1e-9)


def test_correlation_entry_center_at_origin():
    ker = kk.GaussianKernel(0.25)
    d = kk.Dictionary(np.zeros((1, 2)))
    expected = np.linalg.det(np.eye(2) + (2 / 0.25**2) * EXP1_R) ** -0.5
    got = kk.kernel_correlation_entry(0, 0, d, ker, exp1_input())
    assert got == pytest.approx(expected, rel=1e-13)


def test_correlation_entries_frozen_oracle_values(exp1_setup):
    # seeded Sobol importance-sampling oracle values, 2^20 draws (seed 101)
    d, ker, im = exp1_setup
    oracle = {
        (0, 0): 1.058061107864e-02,
        (0, 24): 1.570796412499e-15,
        (12, 12): 1.240347345752e-01,
        (4, 20): 1.570796412499e-15,
        (6, 12): 1.439261878143e-02,
    }
    for (i, j), value in oracle.items():
        assert kk.kernel_correlation_entry(i, j, d, ker, im) == pytest.approx(value, rel=0.01)


def test_correlation_matrix_single_center_at_origin():
    ker = kk.GaussianKernel(0.25)
    d = kk.Dictionary(np.zeros((1, 2)))
    r = kk.kernel_correlation_matrix(d, ker, exp1_input())
    expected = np.linalg.det(np.eye(2) + (2 / 0.25**2) * EXP1_R) ** -0.5
    assert r.shape == (1, 1)
    assert r[0, 0] == pytest.approx(expected, rel=1e-13)


def test_correlation_matrix_bitwise_symmetric(exp1_setup):
    d, ker, im = exp1_setup
    r = kk.kernel_correlation_matrix(d, ker, im)
    assert np.array_equal(r, r.T)


def test_correlation_matrix_agrees_with_entries(exp1_setup):
    d, ker, im = exp1_setup
    r = kk.kernel_correlation_matrix(d, ker, im)
    rng = np.random.default_rng(0)
    for i, j in rng.integers(0, d.size, size=(10, 2)):
        assert r[i, j] == pytest.approx(
            kk.kernel_correlation_entry(int(i), int(j), d, ker, im), rel=1e-14
        )


def test_correlation_matrix_positive_semidefinite(exp1_setup, exp2_setup):
    for d, ker, im in (exp1_setup, exp2_setup):
        r = kk.kernel_correlation_matrix(d, ker, im)
        evals = np.linalg.eigvalsh(r)
        assert evals[0] >= -1e-10 * evals[-1]


@given(st.integers(0, 24), st.integers(0, 24))
@settings(max_examples=30, deadline=None)
def test_correlation_entry_symmetric_in_indices(i, j):
    d = kk.experiment1_dictionary()
    ker = kk.GaussianKernel(0.25)
    im = exp1_input()
    a = kk.kernel_correlation_entry(i, j, d, ker, im)
    b = kk.kernel_correlation_entry(j, i, d, ker, im)
    assert a == pytest.approx(b, rel=1e-14)
    assert 0.0 < a <= 1.0


def test_correlation_entry_matches_adaptive_quadrature(exp1_setup):
    d, ker, im = exp1_setup
    for i, j in [(0, 0), (12, 12), (0, 24), (6, 13)]:
        closed = kk.kernel_correlation_entry(i, j, d, ker, im)
        quad = quad_kernel_product_adaptive([d.centers[i], d.centers[j]], ker, im)
        assert abs(closed - quad) < 1e-6


def test_correlation_entry_matches_adaptive_quadrature_1d():
    ker = kk.GaussianKernel(0.5)
    im = kk.InputModel(1, np.array([[0.36]]))
    d = kk.Dictionary(np.array([[0.3], [-0.8]]))
    closed = kk.kernel_correlation_entry(0, 1, d, ker, im)
    quad = quad_kernel_product_adaptive([d.centers[0], d.centers[1]], ker, im)
    assert abs(closed - quad) < 1e-6


# ---------------------------------------------------------------------------
# fourth-order kernel moments
# ---------------------------------------------------------------------------

def test_fourth_moment_all_centers_at_origin():
    ker = kk.GaussianKernel(0.25)
    d = kk.Dictionary(np.array([[0.0, 0.0], [2.0, 2.0]]))
    expected = np.linalg.det(np.eye(2) + (4 / 0.25**2) * EXP1_R) ** -0.5
    got = kk.fourth_moment_entry(0, 0, 0, 0, d, ker, exp1_input())
    assert got == pytest.approx(expected, rel=1e-13)


def test_fourth_moment_point_mass_limit(exp1_setup):
    d, ker, _ = exp1_setup
    tiny = kk.InputModel(2, 1e-12 * np.eye(2))
    idx = (1, 7, 19, 22)
    expected = np.exp(
        -sum(d.centers[k] @ d.centers[k] for k in idx) / (2 * ker.bandwidth**2)
    )
    got = kk.fourth_moment_entry(*idx, d, ker, tiny)
    assert got == pytest.approx(expected, rel=1e-9)


def test_fourth_moment_frozen_oracle_values(exp1_setup):
    # seeded Sobol importance-sampling oracle, 2^20 draws (seed 101)
    d, ker, im = exp1_setup
    oracle = {
        (12, 12, 12, 12): 6.666666648614e-02,
        (0, 12, 24, 12): 8.442777009867e-16,
        (6, 7, 8, 9): 1.069787849350e-06,
        (0, 0, 24, 24): 1.069207257470e-29,
    }
    for idx, value in oracle.items():
        assert kk.fourth_moment_entry(*idx, d, ker, im) == pytest.approx(value, rel=0.01)


@given(st.permutations([3, 11, 17, 24]))
@settings(max_examples=24, deadline=None)
def test_fourth_moment_permutation_invariance(perm):
    d = kk.experiment1_dictionary()
    ker = kk.GaussianKernel(0.25)
    im = exp1_input()
    base = kk.fourth_moment_entry(3, 11, 17, 24, d, ker, im)
    assert kk.fourth_moment_entry(*perm, d, ker, im) == pytest.approx(base, rel=1e-13)


def test_fourth_moment_variance_inequality(exp1_setup):
    # E{(k_i k_j)^2} >= (E{k_i k_j})^2
    d, ker, im = exp1_setup
    rng = np.random.default_rng(1)
    for i, j in rng.integers(0, d.size, size=(20, 2)):
        second = kk.kernel_correlation_entry(int(i), int(j), d, ker, im)
        fourth = kk.fourth_moment_entry(int(i), int(j), int(i), int(j), d, ker, im)
        assert fourth >= second**2 - 1e-12


def test_fourth_moment_matrix_matches_entries(exp1_setup):
    d, ker, im = exp1_setup
    m = d.size
    k4 = kk.fourth_moment_matrix(d, ker, im)
    assert k4.shape == (m * m, m * m)
    assert np.array_equal(k4, k4.T)
    rng = np.random.default_rng(2)
    for i, j, l, p in rng.integers(0, m, size=(12, 4)):
        lex = k4[int(i) + int(j) * m, int(l) + int(p) * m]
        entry = kk.fourth_moment_entry(int(i), int(j), int(l), int(p), d, ker, im)
        assert lex == pytest.approx(entry, rel=1e-13)


def test_fourth_moment_matches_adaptive_quadrature(exp1_setup):
    d, ker, im = exp1_setup
    for idx in [(12, 12, 12, 12), (6, 7, 8, 9)]:
        closed = kk.fourth_moment_entry(*idx, d, ker, im)
        quad = quad_kernel_product_adaptive([d.centers[k] for k in idx], ker, im)
        assert abs(closed - quad) < 1e-6


def test_moment_index_bounds(exp1_setup):
    d, ker, im = exp1_setup
    with pytest.raises(DimensionMismatchError):
        kk.kernel_correlation_entry(0, 25, d, ker, im)
    with pytest.raises(DimensionMismatchError):
        kk.fourth_moment_entry(0, 1, 2, 99, d, ker, im)
