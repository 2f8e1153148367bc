"""Command-line front end: ``heuristic-choice <command> [config.toml] [flags]``.

Exit status: 0 success, 1 invalid input, 2 a pass/fail check failed.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import conditions as cond
from .documents import (
    CONDITION_CHECKS, PROBLEM_SECTIONS, STUDY_SECTIONS, DocumentError, build_from_document,
    csv_text, dump_document, header_lines, merge, parse_rule, problem_document,
    rate_study_config, read_document, resolve,
)
from .errors import (
    DegenerateInputError, ParameterError, SaturationError, SelectionFailedError, UsageError,
)
from .experiments import RECORD_COLUMNS, run_rate_study
from .functionals import RuleSpec, error_metric_curves, psi_curve, rho_curve
from .selection import make_alpha_grid, select_alpha

WORKERS_ENV = "HEURISTIC_CHOICE_WORKERS"

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

# (flag, section, key, type, help).  Help strings carry the symbol used in the formulas.
_FLAGS = {
    "gamma": ("--gamma", "problem", "gamma", float, "γ: eigenvalue decay, lambda_i = i^-γ"),
    "n": ("--n", "problem", "N", int, "N: number of retained modes"),
    "mu": ("--mu", "problem", "mu", float, "μ: source exponent, x = lambda^μ omega"),
    "s": ("--s", "problem", "s", float, "s: source decay, omega_i = i^(-s/2), s > 1"),
    "beta": ("--beta", "noise", "beta", float, "β: noise decay, e_i^2 = τ i^-β"),
    "tau": ("--tau", "noise", "tau", float, "τ: noise amplitude (0 = exact data)"),
    "p": ("--p", "noise", "p", float, "p: weak-norm exponent, η = ||(TT*)^p e||, 0 <= p <= 1/2"),
    "seed": ("--seed", "noise", "seed", int, "seed for random sign mode"),
    "signs": ("--signs", "noise", "signs", str, "noise signs: alternating | positive | random"),
    "rule": ("--rule", "rule", "kind", str, "rule: QO | HD | HR | PMS | GCV | Residual"),
    "q": ("--q", "rule", "q", float, "q: HD/HR smoothing exponent, q ≥ p (default q = p)"),
    "grid_count": ("--grid-count", "grid", "count", int, "number of α grid points"),
    "alpha_min": ("--alpha-min", "grid", "alpha_min", float, "smallest α (default max(lambda_N, 1e-12))"),
    "alpha_max": ("--alpha-max", "grid", "alpha_max", float, "largest α (default lambda_1)"),
    "checks": ("--checks", "conditions", "checks", list,
               "comma list of " + ", ".join(CONDITION_CHECKS)),
    "nu": ("--nu", "conditions", "nu", float, "ν: noise-condition exponent (1 for QO, 2q for HD/HR)"),
    "c_epsilon": ("--epsilon", "conditions", "epsilon", float, "ε: PMS/GCV noise-condition slack, 0 < ε < 2p"),
    "c_epsilon2": ("--epsilon2", "conditions", "epsilon2", float, "ε₂: source-tightness slack, ε₂ > 0"),
    "c_count": ("--condition-count", "conditions", "count", int, "number of α test points"),
    "refine": ("--refine", "conditions", "refine", bool, "rerun at N/100, N/10, N and judge stability"),
    "rules": ("--rules", "study", "rules", list, "comma list of rules, e.g. QO,HD(q=0.3),apriori"),
    "eta_max": ("--eta-max", "study", "eta_max", float, "largest η level"),
    "eta_min": ("--eta-min", "study", "eta_min", float, "smallest η level"),
    "eta_count": ("--eta-count", "study", "eta_count", int, "number of η levels (>= 4)"),
    "regularity_assumed": ("--regularity-assumed", "study", "regularity_assumed", bool,
                           "compare against the optimal instead of the suboptimal exponent"),
    "apriori": ("--apriori", "study", "apriori", bool, "add the a-priori choice α = c η^(2/(2μ+2p+1))"),
    "apriori_c": ("--apriori-c", "study", "apriori_c", float, "prefactor c of the a-priori choice"),
    "redraw": ("--redraw", "study", "redraw", bool, "redraw noise per η level instead of rescaling"),
    "s_epsilon": ("--epsilon", "study", "epsilon", float, "ε: PMS/GCV noise-condition slack, 0 < ε < 2p"),
    "s_epsilon2": ("--epsilon2", "study", "epsilon2", float, "ε₂: source-tightness slack, ε₂ > 0"),
    "tolerance": ("--tolerance", "study", "tolerance", float, "slope tolerance for X-norm criteria"),
    "t_norm_tolerance": ("--t-norm-tolerance", "study", "t_norm_tolerance", float,
                         "slope tolerance for T-norm criteria"),
}

_PROBLEM_FLAGS = ("gamma", "n", "mu", "s", "beta", "tau", "p", "seed", "signs")
_GRID_FLAGS = ("grid_count", "alpha_min", "alpha_max")

COMMANDS = {
    "problem": (PROBLEM_SECTIONS, _PROBLEM_FLAGS, "csv",
                "generate a problem and noise; CSV of coefficients"),
    "psi-curve": (PROBLEM_SECTIONS + ("rule", "grid"), _PROBLEM_FLAGS + ("q",) + _GRID_FLAGS, "csv",
                  "evaluate every functional on the α grid"),
    "select": (PROBLEM_SECTIONS + ("rule", "grid"), _PROBLEM_FLAGS + ("rule", "q") + _GRID_FLAGS, "text",
               "minimise one functional over the α grid"),
    "conditions": (PROBLEM_SECTIONS + ("conditions",),
                   _PROBLEM_FLAGS + ("checks", "nu", "c_epsilon", "c_epsilon2", "c_count", "refine"),
                   "text", "check noise and regularity conditions"),
    "rate-study": (STUDY_SECTIONS,
                   _PROBLEM_FLAGS + ("grid_count", "alpha_min", "rules", "eta_max", "eta_min", "eta_count",
                                     "regularity_assumed", "apriori", "apriori_c", "redraw",
                                     "s_epsilon", "s_epsilon2", "tolerance", "t_norm_tolerance"),
                   "text", "sweep η, select with each rule, fit error slopes"),
}

PSI_COLUMNS = ("alpha", "psi_QO", "psi_HD", "psi_HR", "psi_PMS", "psi_GCV", "rho", "err_x")


def _list_arg(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def default_workers():
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV} must be an integer (got {raw!r})") from None
    if value < 1:
        raise ParameterError(f"{WORKERS_ENV} must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heuristic-choice",
        description="Heuristic Tikhonov parameter choice on diagonal (sequence-space) problems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (sections, flags, fmt, summary) in COMMANDS.items():
        p = sub.add_parser(name, help=summary, description=summary)
        p.add_argument("config", nargs="?", help="TOML document; flags override its values")
        for key in flags:
            flag, _, _, kind, text = _FLAGS[key]
            if kind is bool:
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None, help=text)
            elif kind is list:
                p.add_argument(flag, dest=key, type=_list_arg, default=None, help=text)
            else:
                p.add_argument(flag, dest=key, type=kind, default=None, help=text)
        p.add_argument("--format", choices=("csv", "text"), default=fmt,
                       help=f"what goes to the main output (default {fmt})")
        p.add_argument("-o", "--output", help="main output file (default stdout)")
        p.add_argument("--csv", dest="csv_path", help="also write the CSV table to this file")
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker threads (default ${WORKERS_ENV} or 1); results do not depend on it")
        if name == "problem":
            p.add_argument("--save", help="write the problem document (with coefficient arrays) here")
    return parser


def _resolved(args, sections, flags):
    given = read_document(args.config, sections) if args.config else {}
    overrides = {}
    for key in flags:
        _, section, name, _, _ = _FLAGS[key]
        overrides.setdefault(section, {})[name] = getattr(args, key)
    doc = resolve(merge(given, overrides), sections)
    if "coefficients" in doc and all(v is None for v in doc["coefficients"].values()):
        del doc["coefficients"]
    return doc


def _rule_from(doc):
    r = doc["rule"]
    return RuleSpec(r["kind"], q=r["q"], p=doc["noise"]["p"])


def _emit(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(args, table):
    if args.csv_path:
        with open(args.csv_path, "w", encoding="utf-8") as fh:
            fh.write(table)


def _text(header, body):
    return "\n".join(header) + "\n" + dump_document(body)


def cmd_problem(args, doc, header, workers):
    problem, noise = build_from_document(doc)
    cols = ("i", "lambda", "x", "omega", "y", "e", "y_delta")
    omega = problem.source if problem.source is not None else np.full(problem.size, np.nan)
    y = problem.exact_data
    rows = zip(range(1, problem.size + 1), problem.eigenvalues, problem.solution, omega, y,
               noise.coefficients, y + noise.coefficients)
    table = csv_text(cols, rows, header)
    if args.save:
        with open(args.save, "w", encoding="utf-8") as fh:
            fh.write(dump_document(problem_document(problem, noise, include_coefficients=True)))
    summary = {"summary": {"N": problem.size, "delta": noise.delta, "eta": noise.eta,
                           "operator_norm_sq": problem.operator_norm_sq}}
    _write_csv(args, table)
    _emit(args, table if args.format == "csv" else _text(header, summary))
    return EXIT_OK


def _grid(problem, doc):
    g = doc["grid"]
    return make_alpha_grid(problem, g["count"], alpha_min=g["alpha_min"], alpha_max=g["alpha_max"])


def cmd_psi_curve(args, doc, header, workers):
    problem, noise = build_from_document(doc)
    grid = _grid(problem, doc)
    p, q = doc["noise"]["p"], doc["rule"]["q"]
    y = problem.exact_data
    data = y + noise.coefficients
    a = grid.alphas
    curves = [a]
    for kind in ("QO", "HD", "HR", "PMS", "GCV"):
        rule = RuleSpec(kind, q=q if kind in ("HD", "HR") else None, p=p)
        curves.append(psi_curve(rule, problem, data, a, exact_data=y))
    curves.append(rho_curve(problem, a))
    curves.append(error_metric_curves(problem, noise, a, metrics=("err_x",))["err_x"])
    table = csv_text(PSI_COLUMNS, zip(*curves), header)
    _write_csv(args, table)
    if args.format == "csv":
        _emit(args, table)
    else:
        summary = {"grid": {"count": grid.count, "alpha_max": grid.alpha_max, "alpha_min": grid.alpha_min}}
        _emit(args, _text(header, summary))
    return EXIT_OK


def cmd_select(args, doc, header, workers):
    problem, noise = build_from_document(doc)
    grid = _grid(problem, doc)
    rule = _rule_from(doc)
    y = problem.exact_data
    res = select_alpha(rule, problem, y + noise.coefficients, grid, exact_data=y, workers=workers)
    err = error_metric_curves(problem, noise, [res.alpha_star], metrics=("err_x", "err_T"))
    record = {"selection": {
        "rule": rule.label, "alpha_star": res.alpha_star, "psi_star": res.psi_star,
        "index": res.index, "boundary_flag": res.boundary_flag, "unimodal": res.unimodal,
        "err_x": float(err["err_x"][0]), "err_T": float(err["err_T"][0]),
        "delta": noise.delta, "eta": noise.eta,
    }}
    table = csv_text(("alpha", "psi"), zip(res.alphas, res.psi), header)
    _write_csv(args, table)
    _emit(args, table if args.format == "csv" else _text(header, record))
    return EXIT_OK


def _condition_maker(check, doc, grid_count):
    c, nz, pr = doc["conditions"], doc["noise"], doc["problem"]

    def need(key, symbol):
        if c[key] is None:
            raise ParameterError(f"check {check!r} needs {symbol} (conditions.{key})")
        return c[key]

    def make(problem, noise):
        grid = cond.condition_grid(problem, grid_count)
        if check == "noise":
            return cond.check_noise_condition(noise, problem, c["nu"], grid)
        if check == "regularity":
            return cond.check_regularity_condition(problem, grid)
        if check in ("pms_noise", "gcv_noise"):
            fn = cond.check_pms_noise_condition if check == "pms_noise" else cond.check_gcv_noise_condition
            return fn(noise, problem, nz["p"], need("epsilon", "ε"), grid)
        if check in ("source_tightness", "gcv_regularity"):
            fn = cond.check_source_tightness if check == "source_tightness" else cond.check_gcv_regularity
            return fn(problem, pr["mu"], need("epsilon2", "ε₂"), grid)
        raise ParameterError(f"unknown check {check!r}; choose from {', '.join(CONDITION_CHECKS)}")

    return make


def cmd_conditions(args, doc, header, workers):
    problem, noise = build_from_document(doc)
    c = doc["conditions"]
    explicit = "coefficients" in doc
    body, rows, failed = {}, [], False
    for check in c["checks"]:
        make = _condition_maker(check, doc, c["count"])
        report = make(problem, noise)
        entry = {
            "condition_id": report.condition_id, "bound": report.bound,
            "estimated_constant": report.estimated_constant, "satisfied": report.satisfied,
            "degenerate": report.degenerate, "alpha_min": report.alpha_range[0],
            "alpha_max": report.alpha_range[1],
        }
        entry.update({f"param_{k}": v for k, v in report.parameters.items()})
        if report.notes:
            entry["notes"] = report.notes
        ok = report.satisfied
        if c["refine"] and not explicit:
            sizes = cond.refinement_sizes(problem.size)

            def at(n, make=make):
                sub_doc = dict(doc, problem=dict(doc["problem"], N=n))
                return make(*build_from_document(sub_doc))

            verdict = cond.refinement_study(at, sizes)
            entry.update({"refine_sizes": list(verdict.sizes), "refine_constants": list(verdict.constants),
                          "refine_stable": verdict.stable, "refine_satisfied": verdict.satisfied})
            ok = verdict.satisfied
        failed |= not ok
        body[f"condition.{check}"] = entry
        rows.extend((check, *r) for r in report.rows())
    table = csv_text(("condition", "alpha", "lhs", "rhs", "ratio"), rows, header)
    _write_csv(args, table)
    _emit(args, table if args.format == "csv" else _text(header, body))
    return EXIT_FAILED if failed else EXIT_OK


def study_summary(report):
    """Structured summary of a :class:`RateStudyReport` as a document dict."""
    cfg = report.config
    body = {"study": {"passed": report.passed, "levels": cfg.eta_count}}
    for label, s in report.summaries.items():
        entry = {"status": s.status, "boundary_fraction": s.boundary_fraction,
                 "efficiency_max": s.efficiency_max, "spearman_log_alpha_log_eta": s.spearman_alpha_eta}
        for name, fit in (("err_x", s.fit_x), ("err_T", s.fit_T)):
            if fit is not None:
                entry[f"slope_{name}"] = fit.slope
                entry[f"stderr_{name}"] = fit.stderr
                entry[f"points_{name}"] = fit.count
        if s.criterion is not None:
            entry.update({"criterion_metric": s.criterion.metric, "criterion_mode": s.criterion.mode,
                          "theoretical_exponent": s.criterion.exponent, "tolerance": s.criterion.tolerance})
        if s.fit_error:
            entry["fit_error"] = s.fit_error
        if s.note:
            entry["note"] = s.note
        body[f'rule."{label}"'] = entry
    for cid, v in report.conditions.items():
        body[f'condition."{cid}"'] = {"sizes": list(v.sizes), "constants": list(v.constants),
                                      "stable": v.stable, "satisfied": v.satisfied}
    return body


def cmd_rate_study(args, doc, header, workers):
    config = rate_study_config(doc)
    report = run_rate_study(config, workers=workers)
    rows = [r.row() for r in report.records]
    table = csv_text(RECORD_COLUMNS, rows, header)
    _write_csv(args, table)
    _emit(args, table if args.format == "csv" else _text(header, study_summary(report)))
    return EXIT_OK if report.passed else EXIT_FAILED


_HANDLERS = {
    "problem": cmd_problem, "psi-curve": cmd_psi_curve, "select": cmd_select,
    "conditions": cmd_conditions, "rate-study": cmd_rate_study,
}

_INVALID = (ParameterError, UsageError, DocumentError, SaturationError, DegenerateInputError,
            SelectionFailedError, OSError)


def dispatch(argv=None):
    """Parse ``argv``, run the command and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    sections, flags, _, _ = COMMANDS[args.command]
    try:
        workers = args.workers if args.workers is not None else default_workers()
        if workers < 1:
            raise ParameterError("--workers must be >= 1")
        doc = _resolved(args, sections, flags)
        if args.command == "rate-study":
            # validate rule labels early so bad q/p combinations exit with status 1
            for label in doc["study"]["rules"]:
                if label.lower() != "apriori":
                    parse_rule(label, doc["noise"]["p"])
        header = header_lines(doc, __version__, args.command)
        return _HANDLERS[args.command](args, doc, header, workers)
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
