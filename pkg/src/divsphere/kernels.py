"""Smooth radial kernels, Hessian radial factors, and Mercer expansion
coefficients on the sphere.

Four kernels are supported (shape parameter eps > 0):

    mq   multiquadric          (1 + (eps r)^2)^(1/2)
    imq  inverse multiquadric  (1 + (eps r)^2)^(-1/2)
    iq   inverse quadratic     (1 + (eps r)^2)^(-1)
    ga   Gaussian              exp(-(eps r)^2)

Each kernel restricted to the sphere has the zonal expansion

    phi(|x - y|) = sum_mu sum'_nu c_{mu,eps} eps^(2 mu) Y_mu^nu(y) Y_mu^nu(x)

with the nu = 0 term halved.  The closed forms for c_{mu,eps} are evaluated
without subtractive cancellation for any eps in (0, 10] and mu <= 300: the
Gaussian case runs through the power series of the modified Bessel function
with the eps^-(2 mu + 1) prefactor absorbed term by term, and the inverse
quadratic hypergeometric factor through its defining (all-positive) series.

Note the multiquadric coefficients are positive at mu = 0 but negative for
every mu >= 1; interpolation systems built on it are sign-definite rather
than positive definite (see the direct-solver module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KERNELS = ("mq", "imq", "iq", "ga")

_FOUR_PI = 4.0 * math.pi

# Per-series tail cutoffs: relative to the running maximum term.
_SERIES_CAP = 100_000
_LOG_TAIL = 60.0  # exp(-60) ~ 9e-27, far below double rounding


class SeriesConvergenceError(RuntimeError):
    """A coefficient series failed to converge within its term cap."""


class TruncationCapError(RuntimeError):
    """No truncation degree below the cap meets the tolerance."""


@dataclass(frozen=True)
class KernelConfig:
    """Radial kernel choice plus shape parameter."""

    kind: str
    epsilon: float

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNELS}")
        if not (self.epsilon > 0.0) or not math.isfinite(self.epsilon):
            raise ValueError("shape parameter must be a finite positive number")


def phi(config, r):
    """Kernel value phi(r); vectorized over r >= 0."""
    r = np.asarray(r, dtype=float)
    u = (config.epsilon * r) ** 2
    if config.kind == "mq":
        return np.sqrt(1.0 + u)
    if config.kind == "imq":
        return 1.0 / np.sqrt(1.0 + u)
    if config.kind == "iq":
        return 1.0 / (1.0 + u)
    return np.exp(-u)


def radial_factors(config, r):
    """Radial factors (F, G2) of the kernel Hessian.

    The Hessian of phi(|x - y|) with respect to x factors as
    F(r) I + G2(r) d d^T with d = x - y, where F = phi'(r)/r and
    G2 = (phi'' - phi'/r)/r^2.  Both are returned in analytically
    simplified closed form, finite at r = 0:

        mq :  F =  e^2 (1+u)^(-1/2),  G2 = -e^4 (1+u)^(-3/2)
        imq:  F = -e^2 (1+u)^(-3/2),  G2 = 3 e^4 (1+u)^(-5/2)
        iq :  F = -2 e^2 (1+u)^(-2),  G2 = 8 e^4 (1+u)^(-3)
        ga :  F = -2 e^2 exp(-u),     G2 = 4 e^4 exp(-u)

    with u = (eps r)^2 and e = eps.
    """
    r = np.asarray(r, dtype=float)
    e2 = config.epsilon ** 2
    u = e2 * r * r
    if config.kind == "mq":
        w = 1.0 / np.sqrt(1.0 + u)
        return e2 * w, -(e2 * e2) * w ** 3
    if config.kind == "imq":
        w = 1.0 / np.sqrt(1.0 + u)
        return -e2 * w ** 3, 3.0 * e2 * e2 * w ** 5
    if config.kind == "iq":
        w = 1.0 / (1.0 + u)
        return -2.0 * e2 * w ** 2, 8.0 * e2 * e2 * w ** 3
    w = np.exp(-u)
    return -2.0 * e2 * w, 4.0 * e2 * e2 * w


def _log_power_series(log_terms):
    """Sum exp(log t_k) of an all-positive series, scaled by its max term.

    Returns (log_scale, plain_sum) with total = exp(log_scale) * plain_sum.
    """
    m = max(log_terms)
    return m, math.fsum(math.exp(t - m) for t in log_terms)


def _ga_log_coeff(mu, eps):
    """log of c_{mu,eps} * eps^(2 mu) for the Gaussian kernel.

    Fused series: the prefactor eps^-(2 mu + 1) of the modified Bessel
    function I_{mu+1/2}(2 eps^2) cancels term by term, leaving

        c eps^(2 mu) = 4 pi^(3/2) e^(-2 eps^2)
                       sum_k eps^(4k + 2 mu) / (k! Gamma(mu + 3/2 + k)).

    All terms are positive; no significant digits are lost at any eps.
    """
    le = math.log(eps)
    logs = []
    k = 0
    peak = -math.inf
    while True:
        t = 4.0 * k * le - math.lgamma(k + 1.0) - math.lgamma(mu + 1.5 + k)
        logs.append(t)
        peak = max(peak, t)
        if k > 4.0 * eps * eps + 10 and t < peak - _LOG_TAIL:
            break
        if k >= _SERIES_CAP:
            raise SeriesConvergenceError(
                f"Gaussian coefficient series did not settle (mu={mu}, eps={eps})"
            )
        k += 1
    log_scale, total = _log_power_series(logs)
    return (
        math.log(4.0) + 1.5 * math.log(math.pi) - 2.0 * eps * eps
        + 2.0 * mu * le + log_scale + math.log(total)
    )


def _iq_hyp2f1_series(mu, w):
    """2F1(mu+1, mu+1; 2 mu + 2; w) by its defining series (all positive)."""
    term = 1.0
    total = 1.0
    for k in range(_SERIES_CAP):
        term *= (mu + 1.0 + k) ** 2 / ((2.0 * mu + 2.0 + k) * (k + 1.0)) * w
        total += term
        if term < total * 1e-17:
            return total
    raise SeriesConvergenceError(
        f"hypergeometric series for iq did not converge (mu={mu}, w={w}); "
        "shape parameter too large for this degree"
    )


def expansion_coeff(config, mu):
    """Expansion coefficient c_{mu,eps} of the kernel's zonal series."""
    if mu < 0:
        raise ValueError("degree must be nonnegative")
    eps = config.epsilon
    if config.kind in ("mq", "imq"):
        q = 2.0 / (1.0 + math.sqrt(4.0 * eps * eps + 1.0))
        if config.kind == "imq":
            return _FOUR_PI / (mu + 0.5) * q ** (2 * mu + 1)
        num = -2.0 * math.pi * (2.0 * eps * eps + 1.0 + (mu + 0.5) * math.sqrt(1.0 + 4.0 * eps * eps))
        den = (mu + 1.5) * (mu + 0.5) * (mu - 0.5)
        return num / den * q ** (2 * mu + 1)
    if config.kind == "iq":
        w = 4.0 * eps * eps / (1.0 + 4.0 * eps * eps)
        logpre = (
            math.log(4.0) + 1.5 * math.log(math.pi)
            + math.lgamma(mu + 1.0) - math.lgamma(mu + 1.5)
            - (mu + 1.0) * math.log1p(4.0 * eps * eps)
        )
        return math.exp(logpre) * _iq_hyp2f1_series(mu, w)
    return math.exp(_ga_log_coeff(mu, eps) - 2.0 * mu * math.log(eps))


def scaled_expansion_coeff(config, mu):
    """c_{mu,eps} * eps^(2 mu), without forming large/small intermediates.

    This is the quantity that actually enters the zonal expansion; for the
    Gaussian it is evaluated through the fused series so that no division
    by a small eps power ever occurs.  May underflow to zero for tiny eps
    at high degree, which is the analytically correct limit.
    """
    if config.kind == "ga":
        try:
            return math.exp(_ga_log_coeff(mu, config.epsilon))
        except OverflowError:  # pragma: no cover - eps <= 10 keeps this finite
            raise SeriesConvergenceError(f"Gaussian coefficient overflow (mu={mu})")
    c = expansion_coeff(config, mu)
    le = 2.0 * mu * math.log(config.epsilon)
    if le < -700.0:
        # representable route: move the power into log space
        sign = -1.0 if c < 0 else 1.0
        lc = math.log(abs(c)) if c != 0.0 else -math.inf
        v = lc + le
        return sign * math.exp(v) if v > -745.0 else 0.0
    return c * config.epsilon ** (2 * mu)


@dataclass(frozen=True)
class CoefficientTable:
    """Expansion coefficients c_{mu,eps} for mu = 0..mu_max, plus the
    eps^(2 mu)-scaled values used in truncated expansions."""

    config: KernelConfig
    values: np.ndarray = field(repr=False)
    scaled: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, config, mu_max):
        vals = np.array([expansion_coeff(config, mu) for mu in range(mu_max + 1)])
        scl = np.array([scaled_expansion_coeff(config, mu) for mu in range(mu_max + 1)])
        return cls(config=config, values=vals, scaled=scl)

    def __len__(self):
        return len(self.values)


def minimum_degree(n):
    """Smallest degree whose harmonic count mu (mu + 2) covers 2 n unknowns:
    ceil(sqrt(2 n + 1) - 1), computed in exact integer arithmetic."""
    if n < 1:
        raise ValueError("need at least one node")
    t = math.isqrt(2 * n + 1)
    return t - 1 if t * t == 2 * n + 1 else t


@dataclass(frozen=True)
class TruncationPlan:
    """Truncation degrees for the stable-basis expansion.

    mu0 covers the 2 n unknowns, mu_eps reaches machine-precision tails per
    the term-magnitude bound, and mu_trunc = max(mu0, mu_eps) is the working
    degree.  ``degree_of_column`` maps enumerated harmonic positions (degree
    >= 1 ordering) to their degree.
    """

    config: KernelConfig
    n: int
    tol: float
    mu0: int
    mu_eps: int
    mu_trunc: int
    m: int
    degree_of_column: np.ndarray = field(repr=False)


def _term_bound(table_value, mu):
    """Magnitude bound on a whole degree's contribution to the expansion:
    |c eps^(2 mu)| * mu (mu + 1) * (2 mu + 1) / (8 pi), using |P_mu| <= 1
    and the vector-harmonic size factor mu (mu + 1)."""
    return abs(table_value) * mu * (mu + 1.0) * (2.0 * mu + 1.0) / (8.0 * math.pi)


def build_truncation_plan(config, n, tol=1e-16, mu_max=300):
    """Choose truncation degrees for n nodes at the given tail tolerance.

    Raises
    ------
    TruncationCapError
        If no degree <= mu_max drives the bound below tol times the largest
        term (shape parameter too large for machine-precision truncation).
    """
    if n < 1:
        raise ValueError("need at least one node")
    if not (0.0 < tol <= 1e-8):
        raise ValueError("tolerance must be in (0, 1e-8]")
    mu0 = minimum_degree(n)
    if mu0 > mu_max:
        raise TruncationCapError(f"mu0={mu0} already exceeds the cap {mu_max}")

    scaled = [scaled_expansion_coeff(config, mu) for mu in range(mu0 + 2)]
    t_max = max(_term_bound(scaled[mu], mu) for mu in range(1, mu0 + 1))
    mu_eps = mu0
    while True:
        t_next = _term_bound(scaled[mu_eps + 1], mu_eps + 1)
        if t_next == 0.0 or t_next < tol * t_max:
            break
        mu_eps += 1
        if mu_eps > mu_max:
            raise TruncationCapError(
                f"tail bound never fell below tol={tol} before degree {mu_max} "
                f"({config.kind}, eps={config.epsilon})"
            )
        t_max = max(t_max, t_next)
        scaled.append(scaled_expansion_coeff(config, mu_eps + 1))

    mu_trunc = max(mu0, mu_eps)
    m = mu_trunc * (mu_trunc + 2)
    degrees = np.repeat(
        np.arange(1, mu_trunc + 1), [2 * mu + 1 for mu in range(1, mu_trunc + 1)]
    )
    return TruncationPlan(
        config=config, n=n, tol=tol, mu0=mu0, mu_eps=mu_eps,
        mu_trunc=mu_trunc, m=m, degree_of_column=degrees,
    )
