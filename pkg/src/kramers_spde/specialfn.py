"""Special functions for the near-bifurcation transition-time formulas.

Everything here is scalar double precision. The two crossover families are

    psi(+, a)  = sqrt(a(1+a)/(8 pi)) exp(a^2/16) K_{1/4}(a^2/16)
    psi(-, a)  = sqrt(pi a(1+a)/32) exp(-a^2/64) [I_{-1/4} + I_{1/4}](a^2/64)
    theta(+, a) = sqrt(pi/2) (1+a) exp(a^2/8) Phi(-a/2)
    theta(-, a) = sqrt(pi/2) Phi(a/2)

evaluated through scaled Bessel / scaled-erfc kernels so the exponential
factors cancel analytically and nothing overflows.  All four are defined on
a >= 0, are bounded between positive constants, share the value at a = 0, and
tend to (1, 2, 1, sqrt(pi/2)) respectively as a -> +infinity.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .errors import DomainError

SQRT_PI = math.sqrt(math.pi)
GAMMA_QUARTER = math.gamma(0.25)

# shared a -> 0 endpoint values
PSI_AT_ZERO = GAMMA_QUARTER / (2.0**1.25 * SQRT_PI)
THETA_AT_ZERO = math.sqrt(math.pi / 8.0)

_I_SERIES_SWITCH = 15.0
_K_SERIES_MAX = 2.0
_K_ASYMPTOTIC_MIN = 30.0
_K_QUAD_NODES = 256


def erfcx(x: float) -> float:
    """Scaled complementary error function exp(x^2) erfc(x) for x >= 0.

    Stdlib erfc carries the accuracy up to x = 20; beyond that the classical
    continued fraction sqrt(pi) erfcx(x) = 1/(x + (1/2)/(x + 1/(x + ...)))
    takes over.  Relative accuracy ~1e-14 on the whole half line.
    """
    if x < 0.0:
        raise DomainError(f"erfcx defined here for x >= 0, got {x}")
    if x <= 20.0:
        return math.exp(x * x) * math.erfc(x)
    cf = 0.0
    for n in range(60, 0, -1):
        cf = (0.5 * n) / (x + cf)
    return 1.0 / (SQRT_PI * (x + cf))


def normal_cdf(y: float) -> float:
    """Standard Gaussian distribution function Phi(y)."""
    return 0.5 * math.erfc(-y / math.sqrt(2.0))


def _iv_scaled_series(nu: float, x: float) -> float:
    # e^{-x} sum_k (x/2)^{2k+nu} / (k! Gamma(k+nu+1)); all terms positive.
    term = (0.5 * x) ** nu / math.gamma(1.0 + nu) if x > 0.0 else (1.0 if nu == 0.0 else 0.0)
    if x == 0.0:
        return math.inf if nu < 0.0 else term
    q = 0.25 * x * x
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term < 1e-18 * total or k > 400:
            break
    return total * math.exp(-x)


def _asymptotic_sum(nu: float, x: float) -> tuple[float, float]:
    """Large-x series sum_k s_k a_k(nu)/x^k with a_k = prod(4 nu^2-(2j-1)^2)/(8^k k!).

    Returns (alternating sum for I, same-sign sum for K); truncates at the
    smallest term.
    """
    mu = 4.0 * nu * nu
    term = 1.0
    alt, pos = 1.0, 1.0
    prev = abs(term)
    for k in range(1, 60):
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        prev = abs(term)
        alt += term if k % 2 == 0 else -term
        pos += term
        if prev < 1e-18:
            break
    return alt, pos


def bessel_iv_scaled(nu: float, x: float) -> float:
    """Scaled modified Bessel function e^{-x} I_nu(x) for nu = +-1/4, x >= 0."""
    if x < 0.0:
        raise DomainError(f"bessel_iv_scaled requires x >= 0, got {x}")
    if abs(abs(nu) - 0.25) > 1e-12:
        raise DomainError(f"only nu = +-1/4 supported, got {nu}")
    if x < _I_SERIES_SWITCH:
        return _iv_scaled_series(nu, x)
    alt, _ = _asymptotic_sum(nu, x)
    val = alt / math.sqrt(2.0 * math.pi * x)
    if nu < 0.0:
        # I_{-nu} = I_nu + (2/pi) sin(nu pi) K_nu; exact, exponentially small here
        val += (2.0 / math.pi) * math.sin(0.25 * math.pi) * math.exp(-2.0 * x) \
            * bessel_k_scaled(0.25, x)
    return val


@functools.lru_cache(maxsize=4)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _kv_scaled_quadrature(nu: float, x: float) -> float:
    # e^{x} K_nu(x) = int_0^T e^{-x(cosh t - 1)} cosh(nu t) dt, integrand
    # analytic and below 1e-20 of its peak beyond T.
    t_max = math.acosh(1.0 + 50.0 / x)
    nodes, weights = _gauss_legendre(_K_QUAD_NODES)
    t = 0.5 * t_max * (nodes + 1.0)
    w = 0.5 * t_max * weights
    vals = np.exp(-x * (np.cosh(t) - 1.0)) * np.cosh(nu * t)
    return float(np.sum(w * vals))


def bessel_k_scaled(nu: float, x: float) -> float:
    """Scaled modified Bessel function e^{x} K_{1/4}(x) for x > 0."""
    if x < 0.0:
        raise DomainError(f"bessel_k_scaled requires x >= 0, got {x}")
    if abs(nu - 0.25) > 1e-12:
        raise DomainError(f"only nu = 1/4 supported, got {nu}")
    if x == 0.0:
        return math.inf
    if x < _K_SERIES_MAX:
        # K_nu = pi (I_{-nu} - I_nu) / (2 sin(nu pi)); <2 digits cancellation here
        diff = _iv_scaled_series(-nu, x) - _iv_scaled_series(nu, x)
        return math.pi * diff * math.exp(2.0 * x) / (2.0 * math.sin(nu * math.pi))
    if x < _K_ASYMPTOTIC_MIN:
        return _kv_scaled_quadrature(nu, x)
    _, pos = _asymptotic_sum(nu, x)
    return math.sqrt(math.pi / (2.0 * x)) * pos


def psi(branch: str, alpha: float) -> float:
    """Crossover function Psi_+ / Psi_- evaluated at alpha >= 0.

    branch is "+" or "-".  Continuous at alpha = 0 with the shared value
    Gamma(1/4) / (2^{5/4} sqrt(pi)).
    """
    if alpha < 0.0:
        raise DomainError(f"psi defined on alpha >= 0, got {alpha}")
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    if alpha == 0.0:
        return PSI_AT_ZERO
    if branch == "+":
        x = alpha * alpha / 16.0
        return math.sqrt(alpha * (1.0 + alpha) / (8.0 * math.pi)) * bessel_k_scaled(0.25, x)
    x = alpha * alpha / 64.0
    pair = bessel_iv_scaled(-0.25, x) + bessel_iv_scaled(0.25, x)
    return math.sqrt(math.pi * alpha * (1.0 + alpha) / 32.0) * pair


def theta(branch: str, alpha: float) -> float:
    """Crossover function Theta_+ / Theta_- evaluated at alpha >= 0."""
    if alpha < 0.0:
        raise DomainError(f"theta defined on alpha >= 0, got {alpha}")
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    z = alpha / (2.0 * math.sqrt(2.0))
    if branch == "+":
        # (1+alpha) e^{a^2/8} Phi(-a/2) = (1+alpha) erfcx(a/(2 sqrt 2)) / 2
        return math.sqrt(math.pi / 2.0) * (1.0 + alpha) * 0.5 * erfcx(z)
    return math.sqrt(math.pi / 2.0) * (1.0 - 0.5 * math.erfc(z))
