"""
When does the noise condition hold?
===================================

The condition compares noise energy above and below ``alpha``.  With
``lambda_i = i**-2`` and ``e_i ~ i**(-beta/2)`` its constant settles as
``N`` grows for moderate ``beta`` and blows up once the noise is too smooth.
"""

from heuristic_choice import (
    build_polynomial_noise, build_polynomial_problem, check_noise_condition, refinement_study,
)


def constant_at(beta, nu=1.0):
    def make(n):
        prob = build_polynomial_problem(2.0, n, 1.0, 1.1)
        return check_noise_condition(build_polynomial_noise(beta, 1.0, n), prob, nu)
    return refinement_study(make, (1000, 10_000, 100_000))


for beta in (0.0, 1.0, 2.0, 3.0, 4.0):
    v = constant_at(beta)
    consts = "  ".join(f"{c:9.3g}" for c in v.constants)
    print(f"beta={beta:g}: C(N) = {consts}   satisfied={v.satisfied}")
