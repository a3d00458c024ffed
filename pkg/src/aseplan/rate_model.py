"""Mean per-user rate and area spectral efficiency of a Poisson ZF MU-MIMO downlink.

The network is a homogeneous PPP of base stations with M antennas serving K
single-antenna users per cell per slot through zero-forcing precoding, with
nearest-BS association, Rayleigh fading, path-loss exponent alpha > 2 and
thermal noise neglected.  The typical user's mean rate has a closed
semi-infinite integral form whose denominator involves the incomplete Beta
function; a Jensen-type lower bound replaces it with an incomplete Gamma
denominator and depends on (M, K) only through the loading ratio u = K/M.

All rates are in nats/s/Hz; ASE is rate density in nats/s/Hz/km^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_QUADRATURE,
    DomainError,
    QuadratureSpec,
    incomplete_beta,
    integrate_semi_infinite_detailed,
    lower_incomplete_gamma,
)


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment point: BS density (per km^2), antennas, active users, path loss.

    M and K may be non-integral reals in relaxed mode (the lower-bound family
    is defined for real arguments); the exact-rate family needs integer K.
    """

    lambda_b: float
    M: float
    K: float
    alpha: float

    def __post_init__(self):
        if not self.lambda_b > 0:
            raise DomainError(f"lambda_b must be positive, got {self.lambda_b}")
        if not self.alpha > 2:
            raise DomainError(f"alpha must exceed 2, got {self.alpha}")
        if not 1 <= self.K <= self.M:
            raise DomainError(f"need 1 <= K <= M, got K={self.K}, M={self.M}")


@dataclass(frozen=True)
class RateResult:
    mean_rate: float                  # nats/s/Hz per user
    is_lower_bound: bool
    quadrature_error_estimate: float


def _check_alpha(alpha: float):
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")


def _check_integer_k(K) -> int:
    k = float(K)
    if not (k >= 1 and k.is_integer()):
        raise DomainError(
            f"the exact rate family needs a positive integer K, got {K}")
    return int(k)


def exact_rate_denominator(z, K: int, alpha: float):
    """Denominator of the exact rate integrand: inter-cell interference kernel.

    (1+z)^-K + z^(2/alpha) K B(z/(1+z); 1 - 2/alpha, K + 2/alpha), vectorized
    over z.
    """
    z = np.asarray(z, dtype=np.float64)
    a = 1.0 - 2.0 / alpha
    b = K + 2.0 / alpha
    return np.exp(-K * np.log1p(z)) + z ** (2.0 / alpha) * K * incomplete_beta(
        z / (1.0 + z), a, b)


def lower_bound_denominator(z, alpha: float):
    """Denominator of the lower-bound integrand: e^-z + z^(2/alpha) gamma(1-2/alpha, z)."""
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-z) + z ** (2.0 / alpha) * lower_incomplete_gamma(1.0 - 2.0 / alpha, z)


def _integrate(f, quad: QuadratureSpec | None):
    return integrate_semi_infinite_detailed(f, quad or DEFAULT_QUADRATURE)


def _mean_rate_exact(M: float, K: int, alpha: float, quad) -> tuple[float, float]:
    m_exp = M + 1.0 - K

    def integrand(z):
        # (1 - (1+z)^-(M+1-K)) / z, stable at small z via expm1/log1p
        num = -np.expm1(-m_exp * np.log1p(z)) / z
        return num / exact_rate_denominator(z, K, alpha)

    return _integrate(integrand, quad)


def mean_rate_exact(M: float, K, alpha: float,
                    quad: QuadratureSpec | None = None) -> float:
    """Mean rate of the typical user (nats/s/Hz), exact expression.

    Independent of BS density and transmit power by construction.  K must be
    a positive integer; M may be real with M >= K - 1 (the planner's antenna
    relaxation), and the result is strictly positive for K < M + 1.
    """
    _check_alpha(alpha)
    k = _check_integer_k(K)
    if M < k - 1:
        raise DomainError(f"need M >= K - 1, got M={M}, K={k}")
    return _mean_rate_exact(float(M), k, alpha, quad)[0]


def _rate_lb_of_ratio(u: float, alpha: float, quad) -> tuple[float, float]:
    """Lower-bound mean rate as a function of the loading ratio u = K/M."""
    if u >= 1.0:
        return 0.0, 0.0
    c = 1.0 / u - 1.0

    def integrand(z):
        return -np.expm1(-c * z) / z / lower_bound_denominator(z, alpha)

    return _integrate(integrand, quad)


def mean_rate_lower_bound(M: float, K: float, alpha: float,
                          quad: QuadratureSpec | None = None) -> float:
    """Jensen lower bound on the mean rate (nats/s/Hz); real M, K accepted.

    Depends on (M, K) only through u = K/M and vanishes at K = M.
    """
    _check_alpha(alpha)
    if not 0 < K <= M:
        raise DomainError(f"need 0 < K <= M, got K={K}, M={M}")
    return _rate_lb_of_ratio(K / M, alpha, quad)[0]


def ase_exact(cfg: NetworkConfig, quad: QuadratureSpec | None = None) -> float:
    """Area spectral efficiency lambda_b * K * E[R] (nats/s/Hz/km^2)."""
    return cfg.lambda_b * cfg.K * mean_rate_exact(cfg.M, cfg.K, cfg.alpha, quad)


def ase_lower_bound(cfg: NetworkConfig, quad: QuadratureSpec | None = None) -> float:
    """Lower bound of the ASE: lambda_b * K * lower-bound rate."""
    return cfg.lambda_b * cfg.K * mean_rate_lower_bound(cfg.M, cfg.K, cfg.alpha, quad)


def mean_rate_result(cfg: NetworkConfig, lower_bound: bool = False,
                     quad: QuadratureSpec | None = None) -> RateResult:
    """Mean rate plus the quadrature error estimate, as a RateResult."""
    if lower_bound:
        val, err = _rate_lb_of_ratio(cfg.K / cfg.M, cfg.alpha, quad)
    else:
        k = _check_integer_k(cfg.K)
        val, err = _mean_rate_exact(float(cfg.M), k, cfg.alpha, quad)
    return RateResult(mean_rate=val, is_lower_bound=lower_bound,
                      quadrature_error_estimate=err)


def d_mean_rate_exact_dM(M: float, K, alpha: float,
                         quad: QuadratureSpec | None = None) -> float:
    """d E[R] / dM at integer K: only the (1+z)^-(M+1-K) term carries M.

    Strictly positive, decreasing in M, and -> 0 as M -> inf.
    """
    _check_alpha(alpha)
    k = _check_integer_k(K)
    if M < k - 1:
        raise DomainError(f"need M >= K - 1, got M={M}, K={k}")
    m_exp = float(M) + 1.0 - k

    def integrand(z):
        lz = np.log1p(z)
        return lz * np.exp(-m_exp * lz) / z / exact_rate_denominator(z, k, alpha)

    return _integrate(integrand, quad)[0]


def d_k_rate_lb_dK(M: float, K: float, alpha: float,
                   quad: QuadratureSpec | None = None) -> float:
    """d (K * lower-bound rate) / dK; equals the loading-gain slope at u = K/M.

    Positive as K -> 0+ and negative toward K = M, with its root at the
    optimal loading fraction times M.  At K = M the integrand degenerates to
    -1/D(z) whose tail is non-integrable, so the slope is -inf there.
    """
    _check_alpha(alpha)
    if not 0 < K <= M:
        raise DomainError(f"need 0 < K <= M, got K={K}, M={M}")
    if K == M:
        return -math.inf
    c = float(M) / float(K) - 1.0  # exponent scale (M-K)/K
    zm = float(M) / float(K)

    def integrand(z):
        e = np.exp(-c * z)
        return (-np.expm1(-c * z) - zm * z * e) / z / lower_bound_denominator(z, alpha)

    return _integrate(integrand, quad)[0]


def d_rate_lb_dM(M: float, K: float, alpha: float,
                 quad: QuadratureSpec | None = None) -> float:
    """d (lower-bound rate) / dM: (1/K) int e^(-z(M-K)/K) / D(z) dz.

    Strictly positive and decreasing in M.  The integral diverges as M -> K+
    (the tail decays only like z^(-2/alpha)), so K = M returns +inf.
    """
    _check_alpha(alpha)
    if not 0 < K <= M:
        raise DomainError(f"need 0 < K <= M, got K={K}, M={M}")
    if K == M:
        return math.inf
    c = (float(M) - float(K)) / float(K)
    inv_k = 1.0 / float(K)

    def integrand(z):
        return inv_k * np.exp(-c * z) / lower_bound_denominator(z, alpha)

    return _integrate(integrand, quad)[0]
