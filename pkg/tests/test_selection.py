import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heuristic_choice import (
    AT_MAX_EDGE, AT_MIN_EDGE, INTERIOR, ParameterError, RuleSpec, SelectionFailedError,
    SpectralProblem, apriori_optimal_alpha, build_polynomial_noise, build_polynomial_problem,
    geometric_grid, make_alpha_grid, select_alpha,
)
from heuristic_choice.selection import argmin_smallest_alpha, classify, count_local_minima


def _problem(lam_n=1e-4, n=5):
    return SpectralProblem(np.geomspace(1, lam_n, n), np.ones(n))


def test_grid_examples():
    g = make_alpha_grid(_problem(), 5)
    np.testing.assert_allclose(g.alphas, [1, 1e-1, 1e-2, 1e-3, 1e-4], rtol=1e-14)
    assert make_alpha_grid(_problem(), 2).alphas.tolist() == [1.0, 1e-4]
    g = make_alpha_grid(_problem(), 7, alpha_min=1e-6)
    assert g.ratio == pytest.approx(0.1, rel=1e-12)


def test_grid_floor_and_errors():
    prob = build_polynomial_problem(4, 100_000, 0.5, 2)
    assert make_alpha_grid(prob, 10).alpha_min == 1e-12
    with pytest.raises(ParameterError):
        make_alpha_grid(_problem(), 10, alpha_min=2.0)
    with pytest.raises(ParameterError):
        make_alpha_grid(_problem(), 1)
    with pytest.raises(ParameterError):
        make_alpha_grid(_problem(), 10, alpha_max=3.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-12, -0.1), st.integers(2, 2000))
def test_grid_invariants(log_min, count):
    g = geometric_grid(1.0, 10.0**log_min, count)
    a = g.alphas
    assert len(g) == count and a[0] == 1.0 and a[-1] == 10.0**log_min
    assert np.all(np.diff(a) < 0) and np.all(a > 0)
    r = a[1:] / a[:-1]
    np.testing.assert_allclose(r, r[0], rtol=1e-12)


def test_argmin_ties_and_flags():
    assert argmin_smallest_alpha([3.0, 1.0, 2.0, 1.0, 5.0]) == 3
    assert argmin_smallest_alpha([np.nan, 2.0, np.inf]) == 1
    with pytest.raises(SelectionFailedError):
        argmin_smallest_alpha([np.nan, np.inf])
    assert classify(0, 5) == AT_MAX_EDGE
    assert classify(4, 5) == AT_MIN_EDGE
    assert classify(2, 5) == INTERIOR
    assert count_local_minima([3, 2, 1, 2, 3]) == 1
    assert count_local_minima([1, 2, 1, 2, 1]) == 3


def test_interior_minimum_selected():
    prob = build_polynomial_problem(2, 20_000, 1, 1.1)
    e = build_polynomial_noise(0, 1e-6, 20_000, problem=prob, p=0.3)
    grid = make_alpha_grid(prob, 200)
    res = select_alpha(RuleSpec("QO"), prob, prob.exact_data + e.coefficients, grid)
    assert res.boundary_flag == INTERIOR and res.interior
    assert res.psi_star == np.min(res.psi)
    assert res.alpha_star == grid.alphas[res.index]


def test_zero_noise_qo_goes_to_min_edge():
    prob = build_polynomial_problem(2, 10_000, 1, 1.1)
    res = select_alpha(RuleSpec("QO"), prob, prob.exact_data, make_alpha_grid(prob, 100))
    assert res.boundary_flag == AT_MIN_EDGE


def test_gcv_strongly_bounded_noise_goes_to_min_edge():
    prob = build_polynomial_problem(2, 100_000, 1, 1.1)
    e = build_polynomial_noise(2, 1e-6, 100_000)
    grid = make_alpha_grid(prob, 400)
    res = select_alpha(RuleSpec("GCV"), prob, prob.exact_data + e.coefficients, grid)
    assert res.boundary_flag == AT_MIN_EDGE
    assert res.alpha_star == grid.alpha_min


def test_pms_needs_exact_data():
    prob = build_polynomial_problem(2, 100, 1, 1.1)
    with pytest.raises(ParameterError):
        select_alpha(RuleSpec("PMS"), prob, prob.exact_data, make_alpha_grid(prob, 10))


@settings(max_examples=30, deadline=None)
@given(c=st.floats(1e-5, 1e5), kind=st.sampled_from(["QO", "HD", "HR", "GCV"]), beta=st.floats(0, 2))
def test_selection_scale_invariant(c, kind, beta):
    prob = build_polynomial_problem(2, 2000, 0.5, 1.5)
    d = prob.exact_data + build_polynomial_noise(beta, 1e-5, 2000).coefficients
    grid = make_alpha_grid(prob, 100)
    rule = RuleSpec(kind, p=0.1)
    assert select_alpha(rule, prob, c * d, grid).alpha_star == select_alpha(rule, prob, d, grid).alpha_star


def test_workers_do_not_change_result():
    prob = build_polynomial_problem(2, 30_000, 1, 1.1)
    d = prob.exact_data + build_polynomial_noise(0, 1e-7, 30_000).coefficients
    grid = make_alpha_grid(prob, 150)
    a = select_alpha(RuleSpec("HR", p=0.3), prob, d, grid, workers=1)
    b = select_alpha(RuleSpec("HR", p=0.3), prob, d, grid, workers=4)
    np.testing.assert_array_equal(a.psi, b.psi)
    assert a.index == b.index


def test_grid_refinement_moves_argmin_at_most_one_ratio():
    prob = build_polynomial_problem(2, 50_000, 1, 1.1)
    d = prob.exact_data + build_polynomial_noise(0, 1e-6, 50_000).coefficients
    coarse = make_alpha_grid(prob, 200)
    fine = make_alpha_grid(prob, 399)  # every coarse point is a fine point
    # QO curves on a truncated model dip again towards lambda_N; GCV is unimodal here
    rc = select_alpha(RuleSpec("GCV"), prob, d, coarse)
    rf = select_alpha(RuleSpec("GCV"), prob, d, fine)
    assert rc.unimodal and rc.interior
    assert abs(np.log(rc.alpha_star / rf.alpha_star)) <= abs(np.log(coarse.ratio)) * (1 + 1e-9)


def test_qo_linear_lower_envelope_near_zero():
    # psi_QO(alpha, y_delta) >= C alpha on the small-alpha end when T* y != 0
    prob = build_polynomial_problem(2, 20_000, 1, 1.1)
    d = prob.exact_data + build_polynomial_noise(0, 1e-10, 20_000).coefficients
    grid = make_alpha_grid(prob, 300)
    curve = select_alpha(RuleSpec("QO"), prob, d, grid).psi
    tail = slice(250, None)
    c = np.min(curve[tail] / grid.alphas[tail])
    assert c > 0
    assert np.all(curve[tail] >= c * grid.alphas[tail])


def test_apriori_examples():
    assert apriori_optimal_alpha(0.01, 0.5, 0, 1) == pytest.approx(0.01, rel=1e-15)
    assert apriori_optimal_alpha(1.0, 0.3, 0.2) == 1.0
    assert apriori_optimal_alpha(1e-4, 1, 0.5) == pytest.approx(1e-2, rel=1e-14)
    for bad in ((0, 0.5, 0), (0.1, 1.5, 0), (0.1, 0.5, 0.6), (0.1, 0.5, 0.2, 0)):
        with pytest.raises(ParameterError):
            apriori_optimal_alpha(*bad)
