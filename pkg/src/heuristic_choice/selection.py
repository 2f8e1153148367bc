"""Grid minimisation of psi-functionals and the a-priori reference choice."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SelectionFailedError
from .functionals import psi_curve

INTERIOR = "interior"
AT_MIN_EDGE = "at_min_edge"
AT_MAX_EDGE = "at_max_edge"

ALPHA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class AlphaGrid:
    """Geometric, strictly decreasing grid ``alpha_max, ..., alpha_min``."""

    alphas: np.ndarray

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)

    @property
    def alpha_max(self):
        return float(self.alphas[0])

    @property
    def alpha_min(self):
        return float(self.alphas[-1])

    @property
    def count(self):
        return self.alphas.size

    @property
    def ratio(self):
        return float(self.alphas[1] / self.alphas[0])

    def __len__(self):
        return self.alphas.size


def geometric_grid(alpha_max, alpha_min, count):
    if int(count) != count or count < 2:
        raise ParameterError("grid count must be an integer >= 2")
    if not 0 < alpha_min < alpha_max:
        raise ParameterError(
            f"need 0 < alpha_min < alpha_max (got {alpha_min:g}, {alpha_max:g})"
        )
    expo = np.linspace(np.log10(alpha_max), np.log10(alpha_min), int(count))
    a = 10.0**expo
    # pin the endpoints exactly
    a[0], a[-1] = alpha_max, alpha_min
    return AlphaGrid(a)


def make_alpha_grid(problem, count=400, alpha_min=None, alpha_max=None):
    """Default grid on ``[max(lambda_N, 1e-12), lambda_1]``."""
    if alpha_max is None:
        alpha_max = problem.operator_norm_sq
    if alpha_max > problem.operator_norm_sq:
        raise ParameterError("alpha_max cannot exceed ||T||^2")
    if alpha_min is None:
        alpha_min = max(float(problem.eigenvalues[-1]), ALPHA_FLOOR)
    return geometric_grid(alpha_max, alpha_min, count)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Grid minimiser of a psi-functional with the full curve.

    ``unimodal`` records whether the curve has exactly one strict local
    minimum on the grid; it is observed, never assumed.
    """

    rule: object
    alpha_star: float
    psi_star: float
    index: int
    boundary_flag: str
    alphas: np.ndarray
    psi: np.ndarray
    unimodal: bool

    @property
    def interior(self):
        return self.boundary_flag == INTERIOR


def _curve(rule, problem, data, alphas, exact_data, workers):
    if workers is None or workers <= 1 or alphas.size < 2 * workers:
        return psi_curve(rule, problem, data, alphas, exact_data=exact_data)
    pieces = np.array_split(alphas, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda a: psi_curve(rule, problem, data, a, exact_data=exact_data), pieces))
    return np.concatenate(parts)


def count_local_minima(values):
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 1
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    edges = int(v[0] < v[1]) + int(v[-1] < v[-2])
    return int(inner.sum()) + edges


def argmin_smallest_alpha(values):
    """Index of the minimum of ``values`` on a descending grid, ties to the smallest alpha."""
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if not finite.any():
        raise SelectionFailedError("psi is non-finite at every grid point")
    best = np.min(v[finite])
    return int(np.flatnonzero(finite & (v == best))[-1])


def classify(index, count):
    if index == count - 1:
        return AT_MIN_EDGE
    if index == 0:
        return AT_MAX_EDGE
    return INTERIOR


def select_alpha(rule, problem, data, grid, exact_data=None, workers=1):
    """Minimise ``psi(alpha, data)`` over ``grid``.

    Ties go to the smallest alpha.  A minimiser at either grid end is
    reported through ``boundary_flag`` rather than silently accepted.
    PMS additionally requires ``exact_data``.
    """
    alphas = grid.alphas
    values = _curve(rule, problem, data, alphas, exact_data, workers)
    idx = argmin_smallest_alpha(values)
    return SelectionResult(
        rule=rule,
        alpha_star=float(alphas[idx]),
        psi_star=float(values[idx]),
        index=idx,
        boundary_flag=classify(idx, alphas.size),
        alphas=alphas,
        psi=values,
        unimodal=count_local_minima(values) == 1,
    )


def apriori_optimal_alpha(eta, mu, p, c=1.0):
    """Order-optimal a-priori choice ``c * eta**(2 / (2 mu + 2 p + 1))``."""
    if not eta > 0:
        raise ParameterError("eta must be > 0")
    if not 0 <= mu <= 1:
        raise ParameterError("mu must lie in [0, 1]")
    if not 0 <= p <= 0.5:
        raise ParameterError("p must lie in [0, 1/2]")
    if not c > 0:
        raise ParameterError("prefactor c must be > 0")
    return c * eta ** (2.0 / (2 * mu + 2 * p + 1))


def nearest_grid_index(grid, alpha):
    """Grid index closest to ``alpha`` in log scale."""
    return int(np.argmin(np.abs(np.log(grid.alphas) - np.log(alpha))))
