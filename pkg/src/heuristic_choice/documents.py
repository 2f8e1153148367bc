"""Config and problem documents (TOML) plus CSV/record output.

Documents are TOML files with the sections listed in :data:`SCHEMA`.  Reading
uses ``tomli``; writing uses a small emitter that prints floats with up to 17
significant digits, so a written document reads back bit-exactly.
"""

import csv
import io
import math
import re

import numpy as np
import tomli

from .errors import ParameterError
from .experiments import NoiseSpec, ProblemSpec, RateStudyConfig
from .functionals import RuleSpec
from .spectral_model import NoiseRealization, SpectralProblem

# One table of every key, its type and its default.  ``None`` means "derived
# from the problem" (grid ends) or "not used" (epsilons).
SCHEMA = {
    "problem": {
        "gamma": (float, 2.0),
        "N": (int, 100_000),
        "mu": (float, 1.0),
        "s": (float, 1.1),
    },
    "noise": {
        "beta": (float, 0.0),
        "tau": (float, 1.0),
        "p": (float, 0.3),
        "seed": (int, 0),
        "signs": (str, "alternating"),
    },
    "rule": {
        "kind": (str, "QO"),
        "q": (float, None),
    },
    "grid": {
        "count": (int, 400),
        "alpha_min": (float, None),
        "alpha_max": (float, None),
    },
    "conditions": {
        "checks": (list, ["noise", "regularity"]),
        "nu": (float, 1.0),
        "epsilon": (float, None),
        "epsilon2": (float, None),
        "count": (int, 200),
        "refine": (bool, True),
    },
    "study": {
        "rules": (list, ["QO"]),
        "eta_max": (float, 1e-1),
        "eta_min": (float, 1e-4),
        "eta_count": (int, 8),
        "regularity_assumed": (bool, False),
        "apriori": (bool, False),
        "apriori_c": (float, 1.0),
        "redraw": (bool, False),
        "epsilon": (float, None),
        "epsilon2": (float, None),
        "tolerance": (float, 0.1),
        "t_norm_tolerance": (float, 0.15),
    },
    "coefficients": {
        "eigenvalues": (list, None),
        "solution": (list, None),
        "source": (list, None),
        "noise": (list, None),
    },
}

CONDITION_CHECKS = ("noise", "regularity", "pms_noise", "source_tightness", "gcv_noise", "gcv_regularity")


class DocumentError(ParameterError):
    """Malformed document; the message carries the offending line when known."""


# ---------------------------------------------------------------- reading

def _line_of(text, section, key):
    """1-based line of ``key =`` inside ``[section]`` (or of the header itself)."""
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", stripped)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return no
    return None


def _where(text, section, key=None):
    no = _line_of(text, section, key) if text else None
    return f"line {no}: " if no else ""


def _coerce(kind, value, name):
    if value is None:
        return None
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise DocumentError(f"{name} must be true or false")
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise DocumentError(f"{name} must be an integer")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DocumentError(f"{name} must be a number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise DocumentError(f"{name} must be a string")
        return value
    if kind is list:
        if not isinstance(value, (list, tuple, np.ndarray)):
            raise DocumentError(f"{name} must be an array")
        return list(value)
    raise AssertionError(kind)


def validate(raw, sections, text=None):
    """Check ``raw`` against :data:`SCHEMA` restricted to ``sections``.

    Unknown sections and keys are rejected; values are coerced to the schema
    type.  Returns ``{section: {key: value}}`` with only the keys present.
    """
    out = {}
    for section, body in raw.items():
        if section not in sections:
            raise DocumentError(f"{_where(text, section)}unknown section [{section}]")
        if not isinstance(body, dict):
            raise DocumentError(f"{_where(text, section)}[{section}] must be a table")
        schema = SCHEMA[section]
        out[section] = {}
        for key, value in body.items():
            if key not in schema:
                raise DocumentError(f"{_where(text, section, key)}unknown key {section}.{key}")
            try:
                out[section][key] = _coerce(schema[key][0], value, f"{section}.{key}")
            except DocumentError as exc:
                raise DocumentError(f"{_where(text, section, key)}{exc}") from None
    return out


def parse_document(text, sections):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise DocumentError(str(exc)) from None
    return validate(raw, sections, text)


def read_document(path, sections):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_document(text, sections)
    except DocumentError as exc:
        raise DocumentError(f"{path}: {exc}") from None


def resolve(values, sections):
    """Fill every key of ``sections`` with its default where ``values`` lacks it."""
    out = {}
    for section in sections:
        given = values.get(section, {})
        out[section] = {k: given.get(k, default) for k, (_, default) in SCHEMA[section].items()}
    return out


def merge(base, overrides):
    """``overrides`` (``{section: {key: value}}``, ``None`` = not given) on top of ``base``."""
    out = {s: dict(v) for s, v in base.items()}
    for section, body in overrides.items():
        for key, value in body.items():
            if value is not None:
                out.setdefault(section, {})[key] = value
    return out


# ---------------------------------------------------------------- writing

def format_value(value):
    """TOML literal; floats get the fewest of 15, 16 or 17 digits that round-trip."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        text = next(t for t in ("%.15g" % v, "%.16g" % v, "%.17g" % v) if float(t) == v)
        if re.fullmatch(r"-?\d+", text):
            text += ".0"
        return text
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {type(value).__name__}")


def dump_document(doc):
    """``{section: {key: value}}`` to TOML text; ``None`` values are omitted."""
    lines = []
    for section, body in doc.items():
        items = [(k, v) for k, v in body.items() if v is not None]
        if not items:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {format_value(v)}" for k, v in items)
    return "\n".join(lines) + "\n"


def header_lines(doc, version, command):
    """Comment block echoing the version and every resolved setting."""
    lines = [f"# heuristic-choice {version}", f"# command = {command}"]
    for section, body in doc.items():
        if section == "coefficients":
            continue
        for key, value in body.items():
            shown = "auto" if value is None else format_value(value)
            lines.append(f"# {section}.{key} = {shown}")
    return lines


def csv_text(columns, rows, header=()):
    """CSV with ``header`` comment lines; floats as shortest round-trip repr."""
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- problem documents

PROBLEM_SECTIONS = ("problem", "noise", "coefficients")


def problem_document(problem, noise, include_coefficients=False):
    """Document for ``problem`` and ``noise`` (generation parameters plus, optionally, arrays)."""
    doc = {
        "problem": {
            "gamma": problem.params.get("gamma"),
            "N": problem.size,
            "mu": problem.mu,
            "s": problem.params.get("s"),
        },
        "noise": {
            "beta": noise.params.get("beta"),
            "tau": noise.params.get("tau"),
            "p": noise.p,
            "seed": noise.params.get("seed"),
            "signs": noise.params.get("signs"),
        },
    }
    if include_coefficients:
        doc["coefficients"] = {
            "eigenvalues": problem.eigenvalues,
            "solution": problem.solution,
            "source": problem.source,
            "noise": noise.coefficients,
        }
    return doc


def build_from_document(doc):
    """Problem and noise from a resolved problem document.

    Explicit ``[coefficients]`` arrays take precedence over generation
    parameters.  ``tau = 0`` gives the zero-noise realisation.
    """
    from .spectral_model import build_polynomial_noise, build_polynomial_problem

    pr, nz = doc["problem"], doc["noise"]
    co = doc.get("coefficients", {})
    if co.get("eigenvalues") is not None:
        if co.get("solution") is None:
            raise DocumentError("coefficients.eigenvalues given without coefficients.solution")
        source = co.get("source")
        problem = SpectralProblem(
            np.asarray(co["eigenvalues"], float), np.asarray(co["solution"], float),
            source=None if source is None else np.asarray(source, float),
            mu=pr["mu"] if source is not None else None,
            params={k: pr[k] for k in ("gamma", "mu", "s") if pr.get(k) is not None},
        )
    else:
        problem = build_polynomial_problem(pr["gamma"], pr["N"], pr["mu"], pr["s"])
    if co.get("noise") is not None:
        params = {k: nz[k] for k in ("beta", "tau", "seed", "signs") if nz.get(k) is not None}
        noise = NoiseRealization(np.asarray(co["noise"], float), p=nz["p"],
                                 eigenvalues=problem.eigenvalues, params=params)
    elif nz["tau"] == 0:
        noise = NoiseRealization(np.zeros(problem.size), p=nz["p"], eigenvalues=problem.eigenvalues,
                                 params={"beta": nz["beta"], "tau": 0.0, "signs": nz["signs"],
                                         "seed": nz["seed"]})
    else:
        noise = build_polynomial_noise(nz["beta"], nz["tau"], problem.size, nz["signs"], nz["seed"],
                                       problem=problem, p=nz["p"])
    if noise.coefficients.size != problem.size:
        raise DocumentError("noise and eigenvalue arrays differ in length")
    return problem, noise


def save_problem(path, problem, noise, include_coefficients=True):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_document(problem_document(problem, noise, include_coefficients)))


def load_problem(path):
    doc = resolve(read_document(path, PROBLEM_SECTIONS), PROBLEM_SECTIONS)
    return build_from_document(doc)


# ---------------------------------------------------------------- rate-study documents

STUDY_SECTIONS = ("problem", "noise", "grid", "study")

_LABEL = re.compile(r"^\s*([A-Za-z]+)\s*(?:\(\s*q\s*=\s*([^)]+?)\s*\))?\s*$")


def parse_rule(label, p, q=None):
    """``"QO"``, ``"HD"``, ``"HR(q=0.4)"`` ... to a :class:`RuleSpec` with exponent ``p``."""
    m = _LABEL.match(label)
    if not m:
        raise DocumentError(f"cannot parse rule {label!r}")
    kind, q_text = m.groups()
    if q_text is not None:
        try:
            q = float(q_text)
        except ValueError:
            raise DocumentError(f"bad q in rule {label!r}") from None
    if kind.upper() not in ("HD", "HR"):
        q = None
    return RuleSpec(kind, q=q, p=p)


def rate_study_config(doc):
    """:class:`RateStudyConfig` from a resolved study document."""
    pr, nz, gr, st = doc["problem"], doc["noise"], doc["grid"], doc["study"]
    if gr.get("alpha_max") is not None:
        raise DocumentError("grid.alpha_max is fixed to lambda_1 in rate studies")
    rules = tuple(parse_rule(r, nz["p"]) for r in st["rules"] if r.lower() != "apriori")
    apriori = st["apriori"] or any(r.lower() == "apriori" for r in st["rules"])
    return RateStudyConfig(
        problem=ProblemSpec(pr["gamma"], pr["N"], pr["mu"], pr["s"]),
        noise=NoiseSpec(nz["beta"], nz["tau"], nz["signs"], nz["seed"]),
        p=nz["p"],
        rules=rules,
        eta_max=st["eta_max"], eta_min=st["eta_min"], eta_count=st["eta_count"],
        grid_count=gr["count"], alpha_min=gr["alpha_min"],
        regularity_assumed=st["regularity_assumed"],
        apriori=apriori, apriori_c=st["apriori_c"], redraw=st["redraw"],
        epsilon=st["epsilon"], epsilon2=st["epsilon2"],
        tolerance=st["tolerance"], t_norm_tolerance=st["t_norm_tolerance"],
    )


def study_document(config):
    """Inverse of :func:`rate_study_config`."""
    rules = [r.label for r in config.rules]
    return {
        "problem": {"gamma": config.problem.gamma, "N": config.problem.n,
                    "mu": config.problem.mu, "s": config.problem.s},
        "noise": {"beta": config.noise.beta, "tau": config.noise.tau, "p": config.p,
                  "seed": config.noise.seed, "signs": config.noise.signs},
        "grid": {"count": config.grid_count, "alpha_min": config.alpha_min, "alpha_max": None},
        "study": {
            "rules": rules, "eta_max": config.eta_max, "eta_min": config.eta_min,
            "eta_count": config.eta_count, "regularity_assumed": config.regularity_assumed,
            "apriori": config.apriori, "apriori_c": config.apriori_c, "redraw": config.redraw,
            "epsilon": config.epsilon, "epsilon2": config.epsilon2,
            "tolerance": config.tolerance, "t_norm_tolerance": config.t_norm_tolerance,
        },
    }


def load_rate_study(path):
    return rate_study_config(resolve(read_document(path, STUDY_SECTIONS), STUDY_SECTIONS))


def save_rate_study(path, config):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_document(study_document(config)))
