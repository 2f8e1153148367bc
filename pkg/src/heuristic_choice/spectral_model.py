"""Diagonalised (sequence-space) ill-posed problems and noise.

Everything is expressed in the singular system of the forward operator:
``eigenvalues`` are the eigenvalues of ``T T*`` sorted in decreasing order,
the solution lives in the matching eigenbasis of ``T* T``, and data/noise
coefficients are taken against the eigenvectors of ``T T*``.  Working in the
range basis makes the data attainable by construction.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInputError, ParameterError


def _frozen(values):
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpectralProblem:
    """Forward operator, exact solution and (optionally) its source element.

    Attributes
    ----------
    eigenvalues : ndarray
        ``lambda_1 >= ... >= lambda_N > 0``.
    solution : ndarray
        Coefficients of the exact solution ``x_dagger``.
    source : ndarray or None
        ``omega`` with ``x_dagger = lambda**mu * omega``.
    mu : float or None
        Source exponent belonging to ``source``.
    params : dict
        Generation parameters (echoed into serialised output).
    """

    eigenvalues: np.ndarray
    solution: np.ndarray
    source: np.ndarray = None
    mu: float = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = _frozen(self.eigenvalues)
        x = _frozen(self.solution)
        if lam.ndim != 1 or lam.size == 0:
            raise ParameterError("eigenvalues must be a non-empty 1-d sequence")
        if not np.all(lam > 0):
            raise ParameterError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) > 0):
            raise ParameterError("eigenvalues must be non-increasing")
        if x.shape != lam.shape:
            raise ParameterError("solution and eigenvalues differ in length")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "solution", x)
        if self.source is not None:
            w = _frozen(self.source)
            if w.shape != lam.shape:
                raise ParameterError("source and eigenvalues differ in length")
            if self.mu is None or not 0 <= self.mu <= 1:
                raise ParameterError("a source element needs mu in [0, 1]")
            object.__setattr__(self, "source", w)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def size(self):
        return self.eigenvalues.size

    @property
    def singular_values(self):
        return np.sqrt(self.eigenvalues)

    @property
    def exact_data(self):
        """``y_i = sigma_i * x_dagger_i``."""
        return self.singular_values * self.solution

    @property
    def operator_norm_sq(self):
        return float(self.eigenvalues[0])

    @property
    def source_norm(self):
        if self.source is None:
            raise ParameterError("problem carries no source element")
        return float(np.sqrt(np.sum(self.source**2)))


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """Noise coefficients ``e_i = <y_delta - y, u_i>`` with derived norms.

    ``eta`` is the weak norm ``||(T T*)^p e||``; it is only defined once the
    eigenvalues are known, so it is ``nan`` for noise built without a problem
    (unless ``p == 0``, where it equals ``delta``).
    """

    coefficients: np.ndarray
    p: float = 0.0
    delta: float = field(init=False)
    eta: float = field(init=False)
    eigenvalues: np.ndarray = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        e = _frozen(self.coefficients)
        if e.ndim != 1:
            raise ParameterError("noise coefficients must be 1-d")
        if not 0 <= self.p <= 0.5:
            raise ParameterError("p must lie in [0, 1/2]")
        object.__setattr__(self, "coefficients", e)
        object.__setattr__(self, "delta", delta_of(e))
        if self.eigenvalues is not None:
            lam = _frozen(self.eigenvalues)
            if lam.shape != e.shape:
                raise ParameterError("noise and eigenvalues differ in length")
            object.__setattr__(self, "eigenvalues", lam)
            object.__setattr__(self, "eta", _eta(e, lam, self.p))
        else:
            object.__setattr__(self, "eta", self.delta if self.p == 0 else float("nan"))
        object.__setattr__(self, "params", dict(self.params))


def build_polynomial_problem(gamma, n, mu, s):
    """Polynomially ill-posed problem ``lambda_i = i**-gamma``.

    The source element is ``omega_i = i**(-s/2)`` so that ``||omega||**2`` is a
    truncated zeta sum, finite for ``s > 1``; the solution is
    ``x_i = lambda_i**mu * omega_i``.

    Examples
    --------
    >>> prob = build_polynomial_problem(2, 3, 0, 2)
    >>> prob.eigenvalues.tolist()
    [1.0, 0.25, 0.1111111111111111]
    """
    if gamma <= 0:
        raise ParameterError("gamma must be > 0")
    if int(n) != n or n < 1:
        raise ParameterError("N must be a positive integer")
    if not 0 <= mu <= 1:
        raise ParameterError("mu must lie in [0, 1]")
    if s <= 1:
        raise ParameterError("s must be > 1 for a finite source norm")
    i = np.arange(1, int(n) + 1, dtype=float)
    lam = i ** (-float(gamma))
    omega = i ** (-float(s) / 2)
    x = lam**mu * omega
    return SpectralProblem(
        lam, x, source=omega, mu=float(mu),
        params={"gamma": float(gamma), "N": int(n), "mu": float(mu), "s": float(s)},
    )


def sign_pattern(n, signs="alternating", seed=None):
    """Deterministic ``+,-,+,...``, all ``+``, or seeded random signs."""
    if signs == "alternating":
        return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    if signs == "positive":
        return np.ones(n)
    if signs == "random":
        rng = np.random.default_rng(seed)
        return rng.choice(np.array([-1.0, 1.0]), size=n)
    raise ParameterError(f"unknown sign mode {signs!r}")


def build_polynomial_noise(beta, tau, n, signs="alternating", seed=None, problem=None, p=0.0):
    """Noise with ``|e_i|**2 = tau * i**-beta``.

    Pass ``problem`` (and ``p``) to have ``eta`` computed against its
    eigenvalues.
    """
    if tau <= 0:
        raise ParameterError("tau must be > 0")
    if int(n) != n or n < 1:
        raise ParameterError("N must be a positive integer")
    i = np.arange(1, int(n) + 1, dtype=float)
    e = sign_pattern(int(n), signs, seed) * np.sqrt(tau) * i ** (-float(beta) / 2)
    lam = None if problem is None else problem.eigenvalues
    params = {"beta": float(beta), "tau": float(tau), "signs": signs}
    if seed is not None:
        params["seed"] = int(seed)
    return NoiseRealization(e, p=p, eigenvalues=lam, params=params)


def _eta(e, lam, p):
    return float(np.sqrt(np.sum(lam ** (2 * p) * e**2)))


def eta_of(noise, problem, p):
    """Weak noise level ``(sum lambda_i**(2p) e_i**2) ** 0.5``."""
    if not 0 <= p <= 0.5:
        raise ParameterError("p must lie in [0, 1/2]")
    e = noise.coefficients if isinstance(noise, NoiseRealization) else np.asarray(noise, float)
    return _eta(e, problem.eigenvalues, p)


def delta_of(noise):
    """Strong noise level ``||e||``."""
    e = noise.coefficients if isinstance(noise, NoiseRealization) else np.asarray(noise, float)
    return float(np.sqrt(np.sum(e**2)))


def with_problem(noise, problem, p=None):
    """Attach ``problem``'s eigenvalues (and optionally a new ``p``) to ``noise``."""
    return replace(noise, eigenvalues=problem.eigenvalues, p=noise.p if p is None else p)


def scale_noise_to_eta(noise, problem, p, eta_target):
    """Rescale ``noise`` so that its weak norm with exponent ``p`` equals ``eta_target``."""
    if not 0 <= p <= 0.5:
        raise ParameterError("p must lie in [0, 1/2]")
    if eta_target <= 0:
        raise ParameterError("eta_target must be > 0")
    current = eta_of(noise, problem, p)
    if current == 0:
        raise DegenerateInputError("cannot rescale all-zero noise")
    factor = eta_target / current
    return NoiseRealization(
        noise.coefficients * factor, p=p, eigenvalues=problem.eigenvalues, params=noise.params
    )
