"""
GCV with rough and smooth noise
===============================

For white-ish noise (``beta = 0``) the GCV minimiser is interior.  Strongly
decaying noise (``beta = 2``) drives it to the bottom of the grid, which is
reported as a boundary selection instead of a usable alpha.
"""

from heuristic_choice import (
    RuleSpec, build_polynomial_noise, build_polynomial_problem, make_alpha_grid, rho_curve,
    scale_noise_to_eta, select_alpha,
)

prob = build_polynomial_problem(2.0, 50_000, 0.5, 1.1)
grid = make_alpha_grid(prob, 400)
gcv = RuleSpec("GCV", p=0.3)

for beta in (0.0, 2.0):
    noise = scale_noise_to_eta(build_polynomial_noise(beta, 1.0, prob.size), prob, 0.3, 1e-3)
    sel = select_alpha(gcv, prob, prob.exact_data + noise.coefficients, grid)
    print(f"beta={beta:g}: alpha* = {sel.alpha_star:.3e}  flag = {sel.boundary_flag}")

r = rho_curve(prob, grid.alphas)
print(f"rho ranges over [{r.min():.2e}, {r.max():.3f}] on the grid")
