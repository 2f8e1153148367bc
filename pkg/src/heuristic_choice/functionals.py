"""Tikhonov solutions and the heuristic psi-functionals.

Each functional has a production path that sums a closed-form spectral filter
against the squared data coefficients, and an independent definitional path
(finite differences, explicit residuals, iterated Tikhonov) used to check it.

Filters, with ``lam`` an eigenvalue of ``T T*``:

====  ==========================================
QO    ``a**2 lam / (lam + a)**4``
HD    ``lam**(2q) a / (a**(2q) (lam + a)**2)``
HR    ``lam**(2q) a**2 / (a**(2q) (lam + a)**3)``
Res   ``a**2 / (lam + a)**2``   (plain residual)
====  ==========================================
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._summation import compensated_sum
from .errors import DegenerateWeightWarning, ParameterError, UsageError
from .spectral_model import NoiseRealization

RULE_KINDS = ("QO", "HD", "HR", "PMS", "GCV", "Residual")
_FILTER_KINDS = ("QO", "HD", "HR", "Residual")

# alpha rows evaluated per vectorised block; bounds peak memory at ~CHUNK * N floats
_CHUNK = 32


@dataclass(frozen=True)
class RuleSpec:
    """Which functional to minimise and its exponents.

    ``q`` is only meaningful for HD/HR and must satisfy ``q >= p``.
    """

    kind: str
    q: float = None
    p: float = 0.0

    def __post_init__(self):
        kind = _canonical_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not 0 <= self.p <= 0.5:
            raise ParameterError("p must lie in [0, 1/2]")
        if kind in ("HD", "HR"):
            if self.q is None:
                object.__setattr__(self, "q", float(self.p))
            if self.q < self.p:
                raise ParameterError(f"{kind} requires q ≥ p (got q={self.q}, p={self.p})")
        elif self.q is not None:
            raise ParameterError(f"{kind} takes no q exponent")

    @property
    def label(self):
        if self.kind in ("HD", "HR"):
            return f"{self.kind}(q={self.q:g})"
        return self.kind


def _canonical_kind(kind):
    for k in RULE_KINDS:
        if str(kind).upper() == k.upper():
            return k
    raise ParameterError(f"unknown rule {kind!r}; expected one of {', '.join(RULE_KINDS)}")


@dataclass(frozen=True, eq=False)
class RegularizedSolution:
    alpha: float
    coefficients: np.ndarray
    iterate: int = 1


def _data(d):
    if isinstance(d, NoiseRealization):
        return d.coefficients
    return np.asarray(d, dtype=float)


def _check_alpha_positive(alpha):
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0 (got {alpha})")


def _check_length(problem, d):
    if d.shape != problem.eigenvalues.shape:
        raise ParameterError(
            f"data has length {d.shape[0]}, problem has {problem.size} modes"
        )


def tikhonov(problem, data, alpha):
    """``x_alpha = (T*T + alpha)^-1 T* d`` in the eigenbasis."""
    _check_alpha_positive(alpha)
    d = _data(data)
    _check_length(problem, d)
    x = problem.singular_values * d / (problem.eigenvalues + alpha)
    return RegularizedSolution(float(alpha), x, 1)


def second_tikhonov(problem, data, alpha):
    """Second iterated Tikhonov solution via its closed form."""
    _check_alpha_positive(alpha)
    d = _data(data)
    _check_length(problem, d)
    lam = problem.eigenvalues
    x = problem.singular_values * d * (lam + 2 * alpha) / (lam + alpha) ** 2
    return RegularizedSolution(float(alpha), x, 2)


def second_tikhonov_recursive(problem, data, alpha):
    """Second iterated Tikhonov solution from ``(T*T + a) x2 = T* d + a x1``."""
    x1 = tikhonov(problem, data, alpha).coefficients
    rhs = problem.singular_values * _data(data) + alpha * x1
    return RegularizedSolution(float(alpha), rhs / (problem.eigenvalues + alpha), 2)


def spectral_filter(rule, lam, alpha):
    """Filter values ``Psi_alpha(lam)``; broadcasts over ``lam`` and ``alpha``."""
    kind = rule.kind
    inv = 1.0 / (lam + alpha)
    if kind == "QO":
        t = alpha * inv
        return t * t * lam * inv * inv
    if kind == "HD":
        return (lam ** (2 * rule.q)) * alpha ** (1 - 2 * rule.q) * inv * inv
    if kind == "HR":
        return (lam ** (2 * rule.q)) * alpha ** (2 - 2 * rule.q) * inv * inv * inv
    if kind == "Residual":
        t = alpha * inv
        return t * t
    raise UsageError(f"{kind} has a dedicated evaluator; use psi_pms or psi_gcv")


def _filtered_norms(weight, lam, d2, alphas):
    """``sqrt(sum_i weight(lam_i, a) d2_i)`` for every ``a`` in ``alphas``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    out = np.empty(alphas.shape)
    for start in range(0, alphas.size, _CHUNK):
        a = alphas[start:start + _CHUNK, None]
        out[start:start + _CHUNK] = compensated_sum(weight(lam[None, :], a) * d2[None, :])
    return np.sqrt(out)


def _check_alpha_range(problem, alphas):
    alphas = np.atleast_1d(alphas)
    if np.any(alphas <= 0) or np.any(alphas > problem.operator_norm_sq):
        raise ParameterError(
            f"alpha must lie in (0, {problem.operator_norm_sq:g}] = (0, ||T||^2]"
        )


def psi_curve(rule, problem, data, alphas, exact_data=None):
    """Evaluate the rule's functional at every ``alpha`` (vectorised)."""
    d = _data(data)
    _check_length(problem, d)
    alphas = np.asarray(alphas, dtype=float)
    lam = problem.eigenvalues
    if rule.kind == "PMS":
        if exact_data is None:
            raise ParameterError("PMS needs the exact data")
        y = np.asarray(exact_data, dtype=float)
        _check_length(problem, y)
        return _pms_curve(lam, d, y, alphas)
    if rule.kind == "GCV":
        return _gcv_curve(lam, d, alphas)
    _check_alpha_range(problem, alphas)
    return _filtered_norms(lambda l, a: spectral_filter(rule, l, a), lam, d**2, alphas)


def psi(rule, problem, data, alpha):
    """Spectral-filter evaluation of ``psi(alpha, d)`` for QO, HD, HR and Residual."""
    if rule.kind not in _FILTER_KINDS:
        raise UsageError(f"{rule.kind} is evaluated by psi_pms / psi_gcv")
    _check_alpha_range(problem, alpha)
    return float(psi_curve(rule, problem, data, [alpha])[0])


def psi_via_definition(rule, problem, data, alpha, fd_step=1e-6):
    """Evaluate ``psi`` from its defining formula instead of the filter.

    * QO: ``alpha * ||dx_alpha/dalpha||`` with a central difference of relative
      step ``fd_step``.  Rounding error scales like ``1e-16 / fd_step`` times
      ``||T||^2 / alpha``, so keep ``alpha`` well above ``1e-5 ||T||^2``.
    * HD: scaled, smoothed residual of the Tikhonov solution.
    * HR: inner product of the first and second iterated Tikhonov residuals.

    The residuals ``r_k = T x_k - y`` come from the normal equations of the
    iteration mapped into data space, ``(TT* + alpha) r_k = alpha r_{k-1}``
    with ``r_0 = -y``.  Forming ``T x_k - y`` by subtraction instead loses
    ``(||T||^2 / alpha)**k`` ulps and is useless for small ``alpha``.
    """
    if rule.kind not in ("QO", "HD", "HR"):
        raise UsageError(f"no definitional path for {rule.kind}")
    _check_alpha_range(problem, alpha)
    d = _data(data)
    lam = problem.eigenvalues
    if rule.kind == "QO":
        h = fd_step * alpha
        xp = tikhonov(problem, d, alpha + h).coefficients
        xm = tikhonov(problem, d, alpha - h).coefficients
        deriv = (xp - xm) / (2 * h)
        return float(alpha * np.sqrt(compensated_sum(deriv**2)))
    r1 = alpha * -d / (lam + alpha)
    smooth = lam ** rule.q
    if rule.kind == "HD":
        return float(np.sqrt(compensated_sum((smooth * r1) ** 2)) / alpha ** (rule.q + 0.5))
    r2 = alpha * r1 / (lam + alpha)
    inner = compensated_sum((smooth * r2) * (smooth * r1))
    return float(np.sqrt(max(inner, 0.0)) / alpha ** (rule.q + 0.5))


def _pms_curve(lam, d, y, alphas):
    alphas = np.atleast_1d(alphas)
    out = np.empty(alphas.shape)
    for start in range(0, alphas.size, _CHUNK):
        a = alphas[start:start + _CHUNK, None]
        r = lam[None, :] * d[None, :] / (lam[None, :] + a) - y[None, :]
        out[start:start + _CHUNK] = compensated_sum(r**2)
    return np.sqrt(out)


def psi_pms(problem, data, exact_data, alpha):
    """Predictive mean-square error ``||T x_alpha - y||``; needs the exact data."""
    _check_alpha_positive(alpha)
    d = _data(data)
    y = np.asarray(exact_data, dtype=float)
    _check_length(problem, d)
    _check_length(problem, y)
    return float(_pms_curve(problem.eigenvalues, d, y, [alpha])[0])


def _rho_curve(lam, alphas):
    alphas = np.atleast_1d(alphas)
    out = np.empty(alphas.shape)
    for start in range(0, alphas.size, _CHUNK):
        a = alphas[start:start + _CHUNK, None]
        out[start:start + _CHUNK] = compensated_sum(a / (lam[None, :] + a))
    return out / lam.size


def rho(problem, alpha):
    """GCV weight ``(alpha / n) tr (T T* + alpha)^-1`` with ``n = N``."""
    _check_alpha_positive(alpha)
    return float(_rho_curve(problem.eigenvalues, [alpha])[0])


def rho_curve(problem, alphas):
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0):
        raise ParameterError("alpha must be > 0")
    return _rho_curve(problem.eigenvalues, alphas)


def _gcv_curve(lam, d, alphas):
    res = _filtered_norms(lambda l, a: (a / (l + a)) ** 2, lam, d**2, alphas)
    weight = _rho_curve(lam, alphas)
    out = np.full(res.shape, np.inf)
    ok = weight > 0
    if not np.all(ok):
        warnings.warn(
            "GCV weight rho(alpha) underflowed; psi_GCV reported as inf there",
            DegenerateWeightWarning,
            stacklevel=3,
        )
    out[ok] = res[ok] / weight[ok]
    return out


def psi_gcv(problem, data, alpha):
    """``||T x_alpha - d|| / rho(alpha)``; ``inf`` (with a warning) if ``rho`` underflows."""
    _check_alpha_positive(alpha)
    d = _data(data)
    _check_length(problem, d)
    return float(_gcv_curve(problem.eigenvalues, d, [alpha])[0])


ERROR_METRICS = ("err_x", "data_err", "bias", "err_T", "data_err_T", "bias_T")


def error_metrics(problem, noise, alpha):
    """Total, propagated-noise and approximation errors in the X- and T-norms.

    Returns a dict with keys ``err_x, data_err, bias, err_T, data_err_T, bias_T``.
    """
    _check_alpha_positive(alpha)
    return {k: float(v[0]) for k, v in error_metric_curves(problem, noise, [alpha]).items()}


def error_metric_curves(problem, noise, alphas, metrics=ERROR_METRICS):
    """Vectorised :func:`error_metrics` over a sequence of ``alphas``.

    ``metrics`` restricts the computation to a subset of the six keys.
    """
    e = _data(noise)
    _check_length(problem, e)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any(alphas <= 0):
        raise ParameterError("alpha must be > 0")
    unknown = set(metrics) - set(ERROR_METRICS)
    if unknown:
        raise ParameterError(f"unknown metrics {sorted(unknown)}")
    lam = problem.eigenvalues
    sigma_e = problem.singular_values * e
    x = problem.solution
    e2 = lam * e**2
    x2 = x**2
    out = {k: np.empty(alphas.shape) for k in metrics}
    for start in range(0, alphas.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        a = alphas[sl, None]
        inv2 = 1.0 / (lam[None, :] + a) ** 2
        parts = {}
        if "err_x" in out or "err_T" in out:
            # total error coefficients are (sigma e - a x) / (lam + a)
            parts["err"] = (sigma_e - a * x) ** 2 * inv2
        if "data_err" in out or "data_err_T" in out:
            parts["data_err"] = e2 * inv2
        if "bias" in out or "bias_T" in out:
            parts["bias"] = a**2 * x2 * inv2
        for key in out:
            base = key[:-2] if key.endswith("_T") else key
            terms = parts["err" if base == "err_x" else base]
            out[key][sl] = compensated_sum(lam * terms if key.endswith("_T") else terms)
    return {k: np.sqrt(v) for k, v in out.items()}
