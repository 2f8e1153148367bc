"""Convergence-rate studies: sweep the noise level, select, fit log-log slopes."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import conditions as cond
from .errors import FitDegenerateError, ParameterError, SaturationError, UsageError
from .functionals import RuleSpec, error_metric_curves, error_metrics, rho_curve
from .selection import (
    AT_MAX_EDGE, AT_MIN_EDGE, INTERIOR, apriori_optimal_alpha, make_alpha_grid, select_alpha,
)
from .spectral_model import (
    NoiseRealization, build_polynomial_noise, build_polynomial_problem, scale_noise_to_eta,
)

APRIORI = "apriori"
RECORD_COLUMNS = ("rule", "eta", "alpha_star", "boundary_flag", "err_x", "err_T", "psi_star", "alpha_opt")
MIN_FIT_POINTS = 4
MAX_BOUNDARY_FRACTION = 0.25


def optimal_exponent(mu, p):
    """Exponent of ``eta`` in the order-optimal X-norm rate."""
    return 2 * mu / (2 * mu + 2 * p + 1)


def t_norm_exponent(mu, p):
    """Exponent of ``eta`` in the order-optimal T-norm rate."""
    return (2 * mu + 1) / (2 * mu + 2 * p + 1)


def theoretical_exponent(rule, mu, p, q=None, regularity=False, epsilon=None):
    """Exponent of ``eta`` in the X-norm error bound a rule is guaranteed.

    For QO/HD/HR this is the suboptimal rate, or the optimal one when
    ``regularity`` is set.  PMS returns the pair of exponents for the two
    cases ``alpha_* >= alpha_opt`` and ``alpha_* <= alpha_opt`` (the second
    needs ``epsilon``).

    Raises
    ------
    SaturationError
        When ``mu``, ``p`` or ``q`` leave the range the bound is proven for.
    """
    kind = rule.kind if isinstance(rule, RuleSpec) else RuleSpec(rule, q=q, p=p).kind
    if isinstance(rule, RuleSpec) and q is None:
        q = rule.q
    if not 0 <= p <= 0.5:
        raise SaturationError("p must lie in [0, 1/2]")
    opt = optimal_exponent(mu, p)
    if kind == "QO":
        if not 0 <= mu <= 1:
            raise SaturationError("QO rate needs 0 <= mu <= 1")
        return opt if regularity else opt * mu
    if kind == "HD":
        _need(p <= q <= p + 1, "HD rate needs p <= q <= p + 1")
        _need(q <= 0.5 - mu, "HD rate needs q <= 1/2 - mu (saturation at mu = 1/2 - q)")
        return opt if regularity else opt * 2 * mu / (1 - 2 * q)
    if kind == "HR":
        _need(p <= q <= p + 1.5, "HR rate needs p <= q <= p + 3/2")
        _need(q <= 1 - mu, "HR rate needs q <= 1 - mu (saturation at mu = 1 - q)")
        return opt if regularity else opt * mu / (1 - q)
    if kind == "PMS":
        _need(mu <= 0.5, "PMS rate needs mu <= 1/2 (saturation at mu = 1/2)")
        first = opt * (2 * mu + 1) / 2
        if epsilon is None:
            return first, None
        if not 0 < epsilon < 2 * p:
            raise ParameterError("PMS second-case exponent needs 0 < epsilon < 2p")
        second = opt - epsilon * (2 * p + 1) / ((2 * p - epsilon) * (2 * mu + 2 * p + 1))
        return first, second
    raise UsageError(f"no rate statement for {kind}")


def _need(ok, message):
    if not ok:
        raise SaturationError(message)


def is_saturated(rule, mu):
    """True when ``mu`` sits exactly at the rule's saturation index."""
    kind = rule.kind
    if kind == "QO":
        return math.isclose(mu, 1.0)
    if kind == "HD":
        return math.isclose(mu, 0.5 - rule.q)
    if kind == "HR":
        return math.isclose(mu, 1.0 - rule.q)
    return False


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    stderr: float
    count: int


def fit_loglog_slope(points):
    """Least-squares line through ``(log eta, log err)``.

    ``stderr`` is the standard error of the slope (0 for two points).
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise FitDegenerateError("need at least two points for a slope")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ParameterError("slope fit needs positive, finite values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise FitDegenerateError("all eta values coincide")
    res = stats.linregress(x, y)
    stderr = float(res.stderr) if pts.shape[0] > 2 else 0.0
    return LogLogFit(float(res.slope), float(res.intercept), stderr, pts.shape[0])


@dataclass(frozen=True)
class ProblemSpec:
    gamma: float = 2.0
    n: int = 100_000
    mu: float = 1.0
    s: float = 1.1

    def build(self):
        return build_polynomial_problem(self.gamma, self.n, self.mu, self.s)


@dataclass(frozen=True)
class NoiseSpec:
    beta: float = 0.0
    tau: float = 1.0
    signs: str = "alternating"
    seed: int = 0

    def build(self, problem, p, seed_offset=0):
        if self.tau == 0:
            return NoiseRealization(np.zeros(problem.size), p=p, eigenvalues=problem.eigenvalues)
        return build_polynomial_noise(
            self.beta, self.tau, problem.size, self.signs, self.seed + seed_offset, problem=problem, p=p
        )


@dataclass(frozen=True)
class RateStudyConfig:
    """Everything a rate study needs; see :func:`run_rate_study`."""

    problem: ProblemSpec = field(default_factory=ProblemSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    p: float = 0.3
    rules: tuple = (RuleSpec("QO", p=0.3),)
    eta_max: float = 1e-1
    eta_min: float = 1e-4
    eta_count: int = 8
    grid_count: int = 400
    alpha_min: float = None
    regularity_assumed: bool = False
    apriori: bool = False
    apriori_c: float = 1.0
    redraw: bool = False
    epsilon: float = None
    epsilon2: float = None
    tolerance: float = 0.1
    t_norm_tolerance: float = 0.15

    def __post_init__(self):
        if self.eta_count < MIN_FIT_POINTS:
            raise ParameterError(f"need at least {MIN_FIT_POINTS} eta levels")
        if not self.eta_max > self.eta_min > 0:
            raise ParameterError("need eta_max > eta_min > 0")
        if not 0 <= self.p <= 0.5:
            raise ParameterError("p must lie in [0, 1/2]")
        for r in self.rules:
            if r.p != self.p:
                raise ParameterError(f"rule {r.label} carries p={r.p}, study uses p={self.p}")

    @property
    def etas(self):
        return np.geomspace(self.eta_max, self.eta_min, self.eta_count)


@dataclass(frozen=True)
class Record:
    rule: str
    eta: float
    delta: float
    alpha_star: float
    boundary_flag: str
    err_x: float
    err_T: float
    psi_star: float
    alpha_opt: float
    efficiency: float

    def row(self):
        return [getattr(self, c) for c in RECORD_COLUMNS]


@dataclass(frozen=True)
class Criterion:
    """Slope check: ``within`` -> ``|slope - exponent| <= tol``; ``at_least`` -> ``slope >= exponent - tol``."""

    metric: str
    mode: str
    exponent: float
    tolerance: float

    def check(self, slope):
        if self.mode == "within":
            return abs(slope - self.exponent) <= self.tolerance
        return slope >= self.exponent - self.tolerance


@dataclass
class RuleSummary:
    rule: str
    fit_x: LogLogFit = None
    fit_T: LogLogFit = None
    fit_error: str = ""
    criterion: Criterion = None
    status: str = "no-criterion"
    boundary_fraction: float = 0.0
    efficiency_max: float = float("nan")
    spearman_alpha_eta: float = float("nan")
    note: str = ""

    @property
    def passed(self):
        return self.status in ("pass", "no-criterion", "refused")


@dataclass
class RateStudyReport:
    config: RateStudyConfig
    records: list
    summaries: dict
    conditions: dict
    problem: object = field(repr=False, default=None)
    grid: object = field(repr=False, default=None)

    def records_for(self, rule):
        return [r for r in self.records if r.rule == rule]

    @property
    def passed(self):
        return all(s.passed for s in self.summaries.values())


def _criterion_for(rule_label, rule, config):
    mu, p = config.problem.mu, config.p
    if rule_label == APRIORI:
        return Criterion("err_x", "within", optimal_exponent(mu, p), config.tolerance)
    kind = rule.kind
    if kind in ("QO", "HD", "HR"):
        exponent = theoretical_exponent(rule, mu, p, regularity=config.regularity_assumed)
        exact = config.regularity_assumed or is_saturated(rule, mu)
        return Criterion("err_x", "within" if exact else "at_least", exponent, config.tolerance)
    if kind == "PMS":
        theoretical_exponent(rule, mu, p)  # raises past saturation
        return Criterion("err_T", "within", t_norm_exponent(mu, p), config.t_norm_tolerance)
    return None


def _attach_conditions(config, problem, noise):
    """Refinement verdicts for the conditions the configured rules rely on."""
    sizes = cond.refinement_sizes(problem.size)
    spec = config.problem
    mu = spec.mu

    def prob_at(m):
        return build_polynomial_problem(spec.gamma, m, mu, spec.s)

    def noise_at(m):
        return config.noise.build(prob_at(m), config.p)

    out = {}
    if config.noise.tau == 0:
        return out
    nus = set()
    for r in config.rules:
        if r.kind == "QO":
            nus.add(1.0)
        elif r.kind in ("HD", "HR"):
            nus.add(2 * r.q)
    for nu in sorted(nus):
        out[f"N_nu(nu={nu:g})"] = cond.refinement_study(
            lambda m, nu=nu: cond.check_noise_condition(noise_at(m), prob_at(m), nu), sizes)
    if any(r.kind in ("QO", "HD", "HR") for r in config.rules):
        out["regularity"] = cond.refinement_study(
            lambda m: cond.check_regularity_condition(prob_at(m)), sizes)
    if config.epsilon is not None and any(r.kind in ("PMS", "GCV") for r in config.rules):
        out["pms_noise"] = cond.refinement_study(
            lambda m: cond.check_pms_noise_condition(noise_at(m), prob_at(m), config.p, config.epsilon), sizes)
    if config.epsilon2 is not None and any(r.kind in ("PMS", "GCV") for r in config.rules):
        out["source_tightness"] = cond.refinement_study(
            lambda m: cond.check_source_tightness(prob_at(m), mu, config.epsilon2), sizes)
    return out


def _level(config, problem, grid, base_noise, level_index, eta):
    """All rule selections at one noise level."""
    p = config.p
    if config.noise.tau == 0:
        noise = base_noise
    else:
        if config.redraw:
            base_noise = config.noise.build(problem, p, seed_offset=level_index)
        noise = scale_noise_to_eta(base_noise, problem, p, eta)
    data = problem.exact_data + noise.coefficients
    err_grid = error_metric_curves(problem, noise, grid.alphas, metrics=("err_x",))["err_x"]
    best = float(np.min(err_grid))
    mu = config.problem.mu
    a_opt = apriori_optimal_alpha(eta, mu, p, config.apriori_c) if eta > 0 else float("nan")

    out = []
    for rule in config.rules:
        sel = select_alpha(rule, problem, data, grid, exact_data=problem.exact_data)
        m = error_metrics(problem, noise, sel.alpha_star)
        out.append(Record(rule.label, float(eta), noise.delta, sel.alpha_star, sel.boundary_flag,
                          m["err_x"], m["err_T"], sel.psi_star, a_opt, m["err_x"] / best))
    if config.apriori and eta > 0:
        a = min(max(a_opt, grid.alpha_min), grid.alpha_max)
        flag = INTERIOR if a == a_opt else (AT_MIN_EDGE if a < a_opt else AT_MAX_EDGE)
        m = error_metrics(problem, noise, a)
        out.append(Record(APRIORI, float(eta), noise.delta, a, flag, m["err_x"], m["err_T"],
                          float("nan"), a_opt, m["err_x"] / best))
    return out


def _summarise(label, rule, records, config):
    s = RuleSummary(label)
    if not records:
        return s
    interior = [r for r in records if r.boundary_flag == INTERIOR]
    s.boundary_fraction = 1 - len(interior) / len(records)
    s.efficiency_max = max(r.efficiency for r in records)
    try:
        s.criterion = _criterion_for(label, rule, config)
    except SaturationError as exc:
        s.status, s.note = "refused", str(exc)
    if len({r.eta for r in records}) < 2 or all(r.eta == 0 for r in records):
        s.fit_error = "no noise sweep"
        if s.status != "refused":
            s.status = "no-fit" if s.criterion is None else "fail"
        return s
    if len(interior) >= 2:
        s.spearman_alpha_eta = float(stats.spearmanr(
            np.log([r.eta for r in interior]), np.log([r.alpha_star for r in interior])).statistic)
    try:
        if len(interior) < MIN_FIT_POINTS:
            raise FitDegenerateError(
                f"only {len(interior)} interior selections (need {MIN_FIT_POINTS})")
        s.fit_x = fit_loglog_slope([(r.eta, r.err_x) for r in interior])
        s.fit_T = fit_loglog_slope([(r.eta, r.err_T) for r in interior])
    except FitDegenerateError as exc:
        s.fit_error = str(exc)
    if s.status == "refused" or s.criterion is None:
        return s
    if s.fit_x is None:
        s.status = "fail"
    elif s.boundary_fraction > MAX_BOUNDARY_FRACTION:
        s.status = "fail"
        s.note = f"{s.boundary_fraction:.0%} of levels selected a grid edge"
    else:
        fit = s.fit_x if s.criterion.metric == "err_x" else s.fit_T
        s.status = "pass" if s.criterion.check(fit.slope) else "fail"
    return s


def run_rate_study(config, workers=1, attach_conditions=True):
    """Sweep ``eta`` over ``config.etas``, select with every rule and fit slopes.

    The noise realisation is built once and rescaled to each level (or redrawn
    per level with ``config.redraw``).  Selections at a grid edge are recorded
    but left out of the slope fits.  Results do not depend on ``workers``.
    """
    problem = config.problem.build()
    grid = make_alpha_grid(problem, config.grid_count, alpha_min=config.alpha_min)
    base_noise = config.noise.build(problem, config.p)
    etas = [0.0] if config.noise.tau == 0 else list(config.etas)

    def task(args):
        i, eta = args
        return _level(config, problem, grid, base_noise, i, eta)

    jobs = list(enumerate(etas))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_level = list(pool.map(task, jobs))
    else:
        per_level = [task(j) for j in jobs]

    labels = [r.label for r in config.rules] + ([APRIORI] if config.apriori else [])
    rules = {r.label: r for r in config.rules}
    records = []
    for label in labels:
        recs = sorted((r for level in per_level for r in level if r.rule == label),
                      key=lambda r: -r.eta)
        records.extend(recs)
    summaries = {lab: _summarise(lab, rules.get(lab), [r for r in records if r.rule == lab], config)
                 for lab in labels}
    conds = _attach_conditions(config, problem, base_noise) if attach_conditions else {}
    return RateStudyReport(config, records, summaries, conds, problem, grid)


@dataclass
class GCVBoundDiagnostic:
    applicable: bool
    reason: str = ""
    etas: tuple = ()
    lower_constants: tuple = ()
    upper_constants: dict = field(default_factory=dict)
    lower_spread: float = float("nan")
    upper_spread: dict = field(default_factory=dict)
    in_sandwich: bool = False


def _spread(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return float("inf")
    return float(v.max() / v.min())


def gcv_bound_check(report, p, epsilon, mu, epsilon2=None, rule_label="GCV"):
    """Check the GCV selections against the two-sided bound on ``alpha_*``.

    Lower shape ``L = (eta / delta_n)**(2 / (2p - eps))``; upper shape
    ``U_t = [min_{alpha <= alpha_*} (alpha**(2 mu + 1) + delta_n**2) / rho(alpha)]**(1/t)``
    with ``t = 2`` and, given ``epsilon2``, ``t = 2 mu + 1 + epsilon2``.
    Per level the fitted constants are ``alpha_* / L`` and ``alpha_* / U_t``;
    the sandwich holds with ``C_lo = min(alpha_*/L)`` and
    ``C_hi = max(alpha_*/U_t)``, and the spreads (max/min) measure how
    stable those constants are across levels.
    """
    if not 0 < epsilon < 2 * p:
        raise ParameterError("need 0 < epsilon < 2p")
    recs = [r for r in report.records if r.rule == rule_label]
    if not recs:
        return GCVBoundDiagnostic(False, "no GCV selections in report")
    if any(r.boundary_flag != INTERIOR for r in recs):
        return GCVBoundDiagnostic(False, "GCV selected a grid edge: sandwich inapplicable")
    if any(r.eta <= 0 or r.delta <= 0 for r in recs):
        return GCVBoundDiagnostic(False, "zero noise")
    expo = 2.0 / (2 * p - epsilon)
    alphas = report.grid.alphas
    rho = rho_curve(report.problem, alphas)
    ts = {"t=2": 2.0}
    if epsilon2 is not None:
        ts[f"t={2 * mu + 1 + epsilon2:g}"] = 2 * mu + 1 + epsilon2
    lower, upper = [], {k: [] for k in ts}
    for r in recs:
        lower.append(r.alpha_star / (r.eta / r.delta) ** expo)
        below = alphas <= r.alpha_star
        inner = np.min((alphas[below] ** (2 * mu + 1) + r.delta**2) / rho[below])
        for key, t in ts.items():
            upper[key].append(r.alpha_star / inner ** (1.0 / t))
    lower_ok = all(np.isfinite(c) and c > 0 for c in lower)
    return GCVBoundDiagnostic(
        applicable=True,
        etas=tuple(r.eta for r in recs),
        lower_constants=tuple(lower),
        upper_constants={k: tuple(v) for k, v in upper.items()},
        lower_spread=_spread(lower),
        upper_spread={k: _spread(v) for k, v in upper.items()},
        in_sandwich=lower_ok,
    )
