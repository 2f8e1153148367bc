import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heuristic_choice import (
    DegenerateWeightWarning, NoiseRealization, ParameterError, RuleSpec, SpectralProblem, UsageError,
    build_polynomial_noise, build_polynomial_problem, error_metric_curves, error_metrics,
    make_alpha_grid, psi, psi_curve, psi_gcv, psi_pms, psi_via_definition, rho, rho_curve,
    second_tikhonov, second_tikhonov_recursive, spectral_filter, tikhonov,
)

TWO = SpectralProblem([1.0, 0.25], [1.0, 1.0])
D = np.array([0.3, 0.4])
ONE = SpectralProblem([1.0], [1.0])


# ---------------------------------------------------------------- rule specs

def test_rule_spec_defaults_and_validation():
    assert RuleSpec("hd", p=0.3).q == 0.3
    assert RuleSpec("qo").kind == "QO"
    assert RuleSpec("HR", q=0.5, p=0.3).label == "HR(q=0.5)"
    with pytest.raises(ParameterError, match="q ≥ p"):
        RuleSpec("HD", q=0.1, p=0.3)
    with pytest.raises(ParameterError):
        RuleSpec("QO", q=0.2)
    with pytest.raises(ParameterError):
        RuleSpec("L-curve")
    with pytest.raises(ParameterError):
        RuleSpec("QO", p=0.7)


# ---------------------------------------------------------------- solutions

def test_tikhonov_examples():
    x = tikhonov(TWO, [0.5, 0.2], 0.5).coefficients
    np.testing.assert_allclose(x, [1 / 3, 2 / 15], rtol=1e-15)
    assert np.all(tikhonov(TWO, [0.0, 0.0], 0.3).coefficients == 0)
    limits = [tikhonov(ONE, [1.0], 10.0**-k).coefficients[0] for k in range(1, 12)]
    assert abs(limits[-1] - 1) < 1e-10
    assert np.all(np.diff(limits) > 0)
    with pytest.raises(ParameterError):
        tikhonov(ONE, [1.0], 0.0)


def test_second_tikhonov_examples():
    assert second_tikhonov(ONE, [1.0], 1.0).coefficients[0] == 0.75
    assert second_tikhonov(ONE, [1.0], 1.0).iterate == 2
    assert np.all(second_tikhonov(TWO, [0.0, 0.0], 0.4).coefficients == 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.floats(1e-8, 1.0), st.integers(0, 2**32 - 1))
def test_second_tikhonov_recursion_matches_closed_form(n, alpha, seed):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(1e-6, 1, n))[::-1]
    prob = SpectralProblem(lam, rng.standard_normal(n))
    d = rng.standard_normal(n)
    a = second_tikhonov(prob, d, alpha).coefficients
    b = second_tikhonov_recursive(prob, d, alpha).coefficients
    np.testing.assert_allclose(b, a, rtol=1e-14, atol=0)


# ---------------------------------------------------------------- psi values

def test_psi_examples():
    assert psi(RuleSpec("QO"), TWO, D, 0.5) == pytest.approx(
        math.sqrt(0.25 * 0.09 / 1.5**4 + 0.25 * 0.25 * 0.16 / 0.75**4), rel=1e-14)
    assert psi(RuleSpec("QO"), TWO, D, 0.5) == pytest.approx(0.189867, abs=5e-7)
    assert psi(RuleSpec("HD", q=0.5), TWO, D, 0.5) == pytest.approx(1 / 3, rel=1e-15)
    assert psi(RuleSpec("HR", q=0), TWO, D, 0.5) == pytest.approx(
        math.sqrt(0.25 * (0.09 / 3.375 + 0.16 / 0.421875)), rel=1e-14)
    assert psi(RuleSpec("HR", q=0), TWO, D, 0.5) == pytest.approx(0.318561, abs=1e-6)
    for kind in ("QO", "HD", "HR", "Residual"):
        assert psi(RuleSpec(kind), TWO, [0.0, 0.0], 0.5) == 0.0


def test_psi_rejects_bad_alpha_and_kind():
    with pytest.raises(ParameterError):
        psi(RuleSpec("QO"), TWO, D, 0.0)
    with pytest.raises(ParameterError):
        psi(RuleSpec("QO"), TWO, D, 1.5)
    assert psi(RuleSpec("QO"), TWO, D, 1.0) > 0
    with pytest.raises(UsageError):
        psi(RuleSpec("PMS"), TWO, D, 0.5)
    with pytest.raises(UsageError):
        spectral_filter(RuleSpec("GCV"), 1.0, 0.5)
    with pytest.raises(ParameterError):
        psi(RuleSpec("QO"), TWO, [1.0, 2.0, 3.0], 0.5)


def test_filters_match_formulas():
    lam, a, q = 0.37, 0.11, 0.3
    assert spectral_filter(RuleSpec("QO"), lam, a) == pytest.approx(a**2 * lam / (lam + a) ** 4, rel=1e-15)
    assert spectral_filter(RuleSpec("HD", q=q), lam, a) == pytest.approx(
        lam ** (2 * q) * a / (a ** (2 * q) * (lam + a) ** 2), rel=1e-14)
    assert spectral_filter(RuleSpec("HR", q=q), lam, a) == pytest.approx(
        lam ** (2 * q) * a**2 / (a ** (2 * q) * (lam + a) ** 3), rel=1e-14)
    assert spectral_filter(RuleSpec("Residual"), lam, a) == pytest.approx(a**2 / (lam + a) ** 2, rel=1e-15)


def test_definition_examples():
    hr = RuleSpec("HR", q=0)
    assert psi_via_definition(hr, TWO, D, 0.5) == pytest.approx(0.318561, abs=1e-6)
    qo = psi_via_definition(RuleSpec("QO"), ONE, [1.0], 0.5)
    assert qo == pytest.approx(0.5 / 2.25, rel=1e-5)
    for kind in ("QO", "HD", "HR"):
        assert psi_via_definition(RuleSpec(kind), TWO, [0.0, 0.0], 0.5) == 0.0
    with pytest.raises(UsageError):
        psi_via_definition(RuleSpec("GCV"), TWO, D, 0.5)


@settings(max_examples=60, deadline=None)
@given(
    gamma=st.floats(0.5, 4), n=st.integers(1, 400), mu=st.floats(0, 1), p=st.floats(0, 0.5),
    dq=st.sampled_from([0.0, 0.2, 0.7]), beta=st.floats(-1, 3), log_a=st.floats(-4, 0),
)
def test_paths_agree(gamma, n, mu, p, dq, beta, log_a):
    prob = build_polynomial_problem(gamma, n, mu, 1.5)
    noise = build_polynomial_noise(beta, 1e-4, n)
    d = prob.exact_data + noise.coefficients
    alpha = 10.0**log_a
    for rule in (RuleSpec("HD", q=p + dq, p=p), RuleSpec("HR", q=p + dq, p=p)):
        assert psi_via_definition(rule, prob, d, alpha) == pytest.approx(psi(rule, prob, d, alpha), rel=1e-8)
    qo = RuleSpec("QO")
    assert psi_via_definition(qo, prob, d, alpha) == pytest.approx(psi(qo, prob, d, alpha), rel=1e-5)


def test_definition_small_alpha():
    # data concentrated on large eigenvalues, alpha far below them
    prob = build_polynomial_problem(3.9, 852, 0.7, 1.9)
    d = prob.exact_data + build_polynomial_noise(3.7, 4e-7, 852).coefficients
    for q in (0.0, 0.7):
        rule = RuleSpec("HR", q=q)
        assert psi_via_definition(rule, prob, d, 5.5e-8) == pytest.approx(psi(rule, prob, d, 5.5e-8), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    gamma=st.floats(0.5, 3), n=st.integers(2, 300), c=st.floats(1e-6, 1e6),
    kind=st.sampled_from(["QO", "HD", "HR", "PMS", "GCV", "Residual"]),
)
def test_homogeneity(gamma, n, c, kind):
    prob = build_polynomial_problem(gamma, n, 0.5, 2)
    d = prob.exact_data + build_polynomial_noise(0.5, 1e-3, n).coefficients
    grid = make_alpha_grid(prob, 40).alphas
    rule = RuleSpec(kind, p=0.2)
    # PMS is homogeneous jointly in (d, y)
    base = psi_curve(rule, prob, d, grid, exact_data=prob.exact_data)
    scaled = psi_curve(rule, prob, c * d, grid, exact_data=c * prob.exact_data)
    np.testing.assert_allclose(scaled, c * base, rtol=1e-12)


# ---------------------------------------------------------------- PMS, rho, GCV

def test_pms_examples():
    assert psi_pms(ONE, [1.0], [1.0], 1.0) == 0.5
    small = psi_pms(TWO, TWO.exact_data, TWO.exact_data, 1e-12)
    assert small < 1e-11
    assert psi_pms(ONE, [1.0], [0.0], 1.0) == 0.5
    with pytest.raises(ParameterError):
        psi_pms(TWO, D, [1.0], 0.5)
    with pytest.raises(ParameterError):
        psi_curve(RuleSpec("PMS"), TWO, D, [0.5])


def test_rho_examples():
    assert rho(TWO, 0.5) == pytest.approx(0.5, rel=1e-15)
    assert rho(ONE, 1.0) == 0.5
    vals = [rho(TWO, 10.0**k) for k in range(0, 12)]
    assert 1 - vals[-1] < 1e-11
    with pytest.raises(ParameterError):
        rho(TWO, 0.0)


def test_gcv_examples():
    res2 = 0.09 / 9 + 4 * 0.16 / 9
    assert psi_gcv(TWO, D, 0.5) == pytest.approx(math.sqrt(res2) / 0.5, rel=1e-14)
    assert psi_gcv(TWO, D, 0.5) == pytest.approx(0.5696, abs=1e-6)
    assert psi_gcv(TWO, [0.0, 0.0], 0.5) == 0.0
    assert psi_gcv(ONE, [1.0], 1.0) == 1.0


def test_gcv_weight_underflow_is_flagged():
    # alpha / (lam + alpha) underflows to 0 for the smallest subnormal alpha
    prob = SpectralProblem([1e10], [1.0])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val = psi_gcv(prob, [1.0], 5e-324)
    assert val == math.inf
    assert any(issubclass(w.category, DegenerateWeightWarning) for w in caught)


@settings(max_examples=50, deadline=None)
@given(gamma=st.floats(0.3, 5), n=st.integers(1, 2000))
def test_rho_monotone_and_bounded(gamma, n):
    prob = build_polynomial_problem(gamma, n, 0.5, 2)
    r = rho_curve(prob, np.geomspace(1e-12, 1, 300))
    assert np.all(r > 0) and np.all(r <= 1)
    assert np.all(np.diff(r) >= 0)


# ---------------------------------------------------------------- error metrics

def test_error_metric_examples():
    prob = build_polynomial_problem(2, 50, 0.5, 2)
    m = error_metrics(prob, np.zeros(50), 0.01)
    assert m["data_err"] == 0 and m["data_err_T"] == 0
    assert m["err_x"] == pytest.approx(m["bias"], rel=1e-15)
    assert m["err_T"] == pytest.approx(m["bias_T"], rel=1e-15)
    assert error_metrics(ONE, [0.0], 1.0)["bias"] == 0.5
    zero_x = SpectralProblem([1.0], [0.0])
    assert error_metrics(zero_x, [1.0], 1.0)["data_err"] == 0.5


def test_error_metrics_match_solutions():
    prob = build_polynomial_problem(2, 300, 0.7, 1.5)
    e = build_polynomial_noise(0.5, 1e-4, 300, signs="random", seed=3)
    a = 3e-3
    xd = tikhonov(prob, prob.exact_data + e.coefficients, a).coefficients
    xa = tikhonov(prob, prob.exact_data, a).coefficients
    s = prob.singular_values
    m = error_metrics(prob, e, a)
    assert m["err_x"] == pytest.approx(np.linalg.norm(xd - prob.solution), rel=1e-12)
    assert m["data_err"] == pytest.approx(np.linalg.norm(xd - xa), rel=1e-12)
    assert m["bias"] == pytest.approx(np.linalg.norm(xa - prob.solution), rel=1e-12)
    assert m["err_T"] == pytest.approx(np.linalg.norm(s * (xd - prob.solution)), rel=1e-12)
    assert m["data_err_T"] == pytest.approx(np.linalg.norm(s * (xd - xa)), rel=1e-12)
    assert m["bias_T"] == pytest.approx(np.linalg.norm(s * xa - prob.exact_data), rel=1e-12)


def test_metric_subset_matches_full():
    prob = build_polynomial_problem(2, 500, 1, 1.1)
    e = build_polynomial_noise(0, 1e-4, 500)
    alphas = np.geomspace(1, 1e-6, 70)
    full = error_metric_curves(prob, e, alphas)
    for metrics in (("err_x",), ("err_T",), ("data_err_T", "bias"), ("bias_T",)):
        part = error_metric_curves(prob, e, alphas, metrics=metrics)
        assert set(part) == set(metrics)
        for k in metrics:
            np.testing.assert_array_equal(part[k], full[k])
    with pytest.raises(ParameterError):
        error_metric_curves(prob, e, alphas, metrics=("err_y",))


def test_monotone_error_parts():
    prob = build_polynomial_problem(2, 3000, 0.8, 1.2)
    e = build_polynomial_noise(1, 1e-2, 3000, signs="random", seed=11)
    alphas = np.geomspace(1e-8, 1, 400)
    m = error_metric_curves(prob, e, alphas)
    assert np.all(np.diff(m["data_err_T"]) <= 1e-15 * m["data_err_T"][:-1])
    assert np.all(np.diff(m["bias"]) >= 0)


def test_filter_maxima_constant_one():
    # brute force: sup_lam lam**t / (lam + a)**2 <= a**(t-2) for t in [0, 2]
    # and sup_lam lam**t a / (lam + a) <= a**t for t in [0, 1]
    lam = np.geomspace(1e-14, 1e4, 20_001)
    for a in np.geomspace(1e-10, 1, 11):
        for t in np.linspace(0, 2, 21):
            assert np.max(lam**t / (lam + a) ** 2) <= a ** (t - 2) * (1 + 1e-12)
        for t in np.linspace(0, 1, 11):
            assert np.max(lam**t * a / (lam + a)) <= a**t * (1 + 1e-12)


def test_qo_upper_bounds():
    prob = build_polynomial_problem(2, 5000, 0.6, 1.3)
    e = build_polynomial_noise(0.5, 1e-3, 5000, problem=prob, p=0.2)
    grid = make_alpha_grid(prob, 200).alphas
    m = error_metric_curves(prob, e, grid)
    qo = RuleSpec("QO")
    assert np.all(psi_curve(qo, prob, e.coefficients, grid) <= m["data_err"] * (1 + 1e-12))
    assert np.all(psi_curve(qo, prob, prob.exact_data, grid) <= m["bias"] * (1 + 1e-12))


def test_noise_argument_accepts_realization():
    prob = build_polynomial_problem(2, 10, 0.5, 2)
    e = NoiseRealization(np.full(10, 1e-3))
    assert error_metrics(prob, e, 0.1) == error_metrics(prob, e.coefficients, 0.1)
