"""Numerical verification of noise and regularity conditions.

Every condition is an inequality between two spectral sums, one over the
modes with ``lambda_i > alpha`` and one over ``lambda_i <= alpha``.  A checker
evaluates the ratio of the two sides on a grid of ``alpha`` and reports the
best admissible constant: the supremum for "LHS <= C RHS" conditions, the
infimum for "LHS >= C RHS" ones.

The conditions are asymptotic statements about infinite sequences.  On a
truncated model they are judged by :func:`refinement_study`, which reruns a
checker at increasing ``N`` and calls the condition satisfied when the
constant is finite (or positive) and moves by less than 25% per tenfold
refinement.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .selection import geometric_grid
from .spectral_model import NoiseRealization

UPPER = "sup"   # LHS <= C * RHS, report sup LHS/RHS
LOWER = "inf"   # LHS >= C * RHS, report inf LHS/RHS

STABILITY_TOLERANCE = 0.25


@dataclass(frozen=True, eq=False)
class ConditionReport:
    condition_id: str
    parameters: dict
    alphas: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    bound: str
    estimated_constant: float
    satisfied: bool
    degenerate: bool = False
    notes: str = ""

    @property
    def alpha_range(self):
        return float(self.alphas.min()), float(self.alphas.max())

    def rows(self):
        """``(alpha, lhs, rhs, ratio)`` tuples for CSV output."""
        return list(zip(self.alphas.tolist(), self.lhs.tolist(), self.rhs.tolist(), self.ratios.tolist()))


def condition_grid(problem, count=200):
    """Default test interval ``[lambda_ceil(N/10), lambda_1)``.

    The top end is open: at ``alpha = lambda_1`` no mode lies strictly above
    ``alpha`` and every "above" sum vanishes trivially.
    """
    lam = problem.eigenvalues
    k = max(int(np.ceil(lam.size / 10)), 1)
    lo, hi = float(lam[k - 1]), float(lam[0])
    if lo >= hi:
        raise ParameterError("problem has no spectral spread to test conditions on")
    return geometric_grid(hi, lo, count + 1).alphas[1:]


def _alphas(problem, grid):
    if grid is None:
        return condition_grid(problem)
    return np.asarray(getattr(grid, "alphas", grid), dtype=float)


def _split_sums(lam, above_terms, below_terms, alphas):
    """Sums of ``above_terms`` over ``lam > alpha`` and ``below_terms`` over ``lam <= alpha``.

    Both are prefix/suffix sums of non-negative terms, so no cancellation.
    """
    k = np.searchsorted(-lam, -alphas, side="left")  # number of lam_i > alpha
    head = np.concatenate([[0.0], np.cumsum(above_terms)])
    tail = np.concatenate([np.cumsum(below_terms[::-1])[::-1], [0.0]])
    return head[k], tail[k]


def _ratio(lhs, rhs):
    out = np.zeros_like(lhs)
    pos = rhs > 0
    out[pos] = lhs[pos] / rhs[pos]
    out[~pos & (lhs > 0)] = np.inf
    return out


def _report(cid, params, alphas, lhs, rhs, bound, degenerate=False, notes=""):
    ratios = _ratio(lhs, rhs)
    if bound == UPPER:
        const = float(np.max(ratios))
        ok = bool(np.isfinite(const))
    else:
        const = float(np.min(ratios))
        ok = bool(const > 0)
    if degenerate:
        ok = False
    return ConditionReport(cid, dict(params), alphas, lhs, rhs, ratios, bound, const, ok, degenerate, notes)


def _coeffs(noise):
    if isinstance(noise, NoiseRealization):
        return noise.coefficients
    return np.asarray(noise, dtype=float)


def check_noise_condition(noise, problem, nu, grid=None):
    """``alpha**(nu+1) sum_{lam>alpha} e**2/lam <= C sum_{lam<=alpha} lam**nu e**2``.

    ``nu = 1`` for quasi-optimality, ``nu = 2q`` for HD/HR.
    """
    if nu < 0:
        raise ParameterError("nu must be >= 0")
    lam = problem.eigenvalues
    e2 = _coeffs(noise) ** 2
    alphas = _alphas(problem, grid)
    above, below = _split_sums(lam, e2 / lam, lam**nu * e2, alphas)
    lhs = alphas ** (nu + 1) * above
    return _report("N_nu", {"nu": nu}, alphas, lhs, below, UPPER)


def check_regularity_condition(problem, grid=None):
    """``alpha**2 sum_{lam>alpha} x**2/lam**2 >= C sum_{lam<=alpha} x**2``."""
    lam = problem.eigenvalues
    x2 = problem.solution**2
    alphas = _alphas(problem, grid)
    above, below = _split_sums(lam, x2 / lam**2, x2, alphas)
    return _report("regularity", {}, alphas, alphas**2 * above, below, LOWER)


def check_pms_noise_condition(noise, problem, p, epsilon, grid=None, condition_id="pms_noise"):
    """``sum_{lam>alpha} e**2 >= C eta**2 / alpha**(2p - epsilon)``.

    ``eta`` is computed with exponent ``p`` against ``problem``.  Zero noise
    makes the condition vacuous and is flagged as degenerate.
    """
    if not 0 < epsilon < 2 * p:
        raise ParameterError("need 0 < epsilon < 2p")
    lam = problem.eigenvalues
    e2 = _coeffs(noise) ** 2
    eta2 = float(np.sum(lam ** (2 * p) * e2))
    alphas = _alphas(problem, grid)
    above, _ = _split_sums(lam, e2, np.zeros_like(e2), alphas)
    params = {"p": p, "epsilon": epsilon}
    if eta2 == 0:
        zeros = np.zeros_like(alphas)
        return _report(condition_id, params, alphas, zeros, zeros, LOWER, degenerate=True,
                       notes="zero noise: condition vacuous")
    rhs = eta2 / alphas ** (2 * p - epsilon)
    return _report(condition_id, params, alphas, above, rhs, LOWER)


def check_source_tightness(problem, mu, epsilon2, grid=None, condition_id="source_tightness"):
    """``sum_{lam>alpha} lam**(2mu-1) omega**2 >= C alpha**(2mu - 1 + epsilon2)``."""
    if epsilon2 <= 0:
        raise ParameterError("epsilon2 must be > 0")
    if problem.source is None:
        raise ParameterError("source tightness needs the source element omega")
    lam = problem.eigenvalues
    w2 = problem.source**2
    alphas = _alphas(problem, grid)
    above, _ = _split_sums(lam, lam ** (2 * mu - 1) * w2, np.zeros_like(w2), alphas)
    rhs = alphas ** (2 * mu - 1 + epsilon2)
    return _report(condition_id, {"mu": mu, "epsilon2": epsilon2}, alphas, above, rhs, LOWER)


def check_gcv_noise_condition(noise, problem, p, epsilon, grid=None):
    """Discrete noise condition on the interval ``I`` (same form as the PMS one)."""
    return check_pms_noise_condition(noise, problem, p, epsilon, grid, condition_id="gcv_noise")


def check_gcv_regularity(problem, mu, epsilon2, grid=None):
    """Discrete source-tightness condition on the interval ``I``."""
    return check_source_tightness(problem, mu, epsilon2, grid, condition_id="gcv_regularity")


@dataclass(frozen=True)
class RefinementVerdict:
    """Constants of one condition at increasing truncation sizes."""

    condition_id: str
    sizes: tuple
    constants: tuple
    changes: tuple
    stable: bool
    satisfied: bool
    growth_per_decade: tuple = field(default=())


def refinement_sizes(n):
    """``(N/100, N/10, N)``, floored at 10 and deduplicated."""
    return tuple(sorted({max(int(n) // 100, 10), max(int(n) // 10, 10), int(n)}))


def refinement_study(make_report, sizes=(1000, 10000, 100000), tolerance=STABILITY_TOLERANCE):
    """Run ``make_report(N)`` for every ``N`` and judge N-stability.

    The condition counts as satisfied when every report is non-degenerate with
    a finite (sup) or positive (inf) constant, and the constant changes by
    less than ``tolerance`` (relative) between consecutive sizes.
    """
    reports = [make_report(n) for n in sizes]
    consts = np.array([r.estimated_constant for r in reports])
    with np.errstate(divide="ignore", invalid="ignore"):
        changes = np.abs(np.diff(consts)) / np.abs(consts[:-1])
        decades = np.diff(np.log10(np.asarray(sizes, dtype=float)))
        growth = (consts[1:] / consts[:-1]) ** (1.0 / decades)
    finite = bool(np.all(np.isfinite(consts)))
    stable = finite and bool(np.all(changes < tolerance))
    ok = stable and all(r.satisfied for r in reports)
    return RefinementVerdict(
        reports[0].condition_id, tuple(int(n) for n in sizes), tuple(consts.tolist()),
        tuple(changes.tolist()), stable, ok, tuple(growth.tolist()),
    )
