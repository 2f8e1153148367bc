"""
Quasi-optimality on a diagonal model
====================================

Build a mildly ill-posed problem, add noise of known size, let the
quasi-optimality functional pick alpha and compare with the best alpha on
the same grid.  Then sweep the noise level and fit the error slope.

Run with ``python demos/quasi_optimality_walkthrough.py``.
"""

import numpy as np

from heuristic_choice import (
    NoiseSpec, ProblemSpec, RateStudyConfig, RuleSpec, build_polynomial_noise,
    build_polynomial_problem, error_metric_curves, make_alpha_grid, run_rate_study,
    scale_noise_to_eta, select_alpha,
)

# lambda_i = i**-2, smoothness mu = 1, 20k modes
prob = build_polynomial_problem(gamma=2.0, n=20_000, mu=1.0, s=1.1)
p = 0.3
noise = scale_noise_to_eta(build_polynomial_noise(0.0, 1.0, prob.size), prob, p, 1e-3)
print(f"delta = {noise.delta:.3e}   eta = {noise.eta:.3e}")

grid = make_alpha_grid(prob, 400)
sel = select_alpha(RuleSpec("QO", p=p), prob, prob.exact_data + noise.coefficients, grid)
err = error_metric_curves(prob, noise, grid.alphas, metrics=("err_x",))["err_x"]
best = grid.alphas[np.argmin(err)]
print(f"QO picks alpha = {sel.alpha_star:.3e} ({sel.boundary_flag}), best on grid {best:.3e}")
print(f"error ratio = {err[sel.index] / err.min():.3f}")

# %% noise sweep: the fitted slope should sit near 2 mu / (2 mu + 2 p + 1)
cfg = RateStudyConfig(
    problem=ProblemSpec(2.0, 20_000, 1.0, 1.1), noise=NoiseSpec(0.0, 1.0), p=p,
    rules=(RuleSpec("QO", p=p),), regularity_assumed=True, apriori=True,
)
rep = run_rate_study(cfg)
for label, summ in rep.summaries.items():
    print(f"{label:8s} slope {summ.fit_x.slope:.3f}  status {summ.status}")
print("target", 2 / 3.6)
