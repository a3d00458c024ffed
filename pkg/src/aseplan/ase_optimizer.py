"""ASE-maximizing user loading: gain per antenna, its optimum, and optimal K.

The lower-bound ASE at density lambda_b factors as lambda_b * M * G(u) with
u = K/M, so the optimal loading fraction u* is the root of G'(u) and is
independent of M and lambda_b.  G(u*) is the gain on ASE per antenna (GAPA):
ASE grows linearly in M when K tracks u* M.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from .numerics import (
    DEFAULT_BISECTION,
    BisectionSpec,
    DomainError,
    QuadratureSpec,
    bisect,
)
from .rate_model import (
    _rate_lb_of_ratio,
    d_k_rate_lb_dK,
    mean_rate_exact,
    mean_rate_lower_bound,
)

# endpoint inset for the u* bracket: the gain-derivative integrand degenerates
# at u = 0 (boundary layer at z ~ u) and at u = 1
_U_BRACKET_INSET = 1e-4


@dataclass(frozen=True)
class LoadingSolution:
    u_star: float   # ASE-optimal K/M, in (0, 1)
    gapa: float     # gain on ASE per antenna at u*, nats/s/Hz
    alpha: float


def gain_function(u: float, alpha: float,
                  quad: QuadratureSpec | None = None) -> float:
    """Per-antenna ASE gain G(u) = u * (lower-bound rate at loading u).

    G(0+) = 0 and G(1) = 0, with a unique interior maximum.
    """
    if not 0 < u <= 1:
        raise DomainError(f"need 0 < u <= 1, got u={u}")
    return u * _rate_lb_of_ratio(float(u), alpha, quad)[0]


def gain_derivative(u: float, alpha: float,
                    quad: QuadratureSpec | None = None) -> float:
    """G'(u); strictly decreasing in u, positive near 0 and negative near 1."""
    if not 0 < u < 1:
        raise DomainError(f"need 0 < u < 1, got u={u}")
    # d(K E_lb)/dK at (M, K) = (1, u) is exactly G'(u)
    return d_k_rate_lb_dK(1.0, float(u), alpha, quad)


@functools.lru_cache(maxsize=64)
def _solve_loading(alpha: float, quad: QuadratureSpec | None,
                   bisection: BisectionSpec | None) -> LoadingSolution:
    u = bisect(lambda x: gain_derivative(x, alpha, quad),
               _U_BRACKET_INSET, 1.0 - _U_BRACKET_INSET,
               bisection or DEFAULT_BISECTION)
    return LoadingSolution(u_star=u, gapa=gain_function(u, alpha, quad),
                           alpha=alpha)


def optimal_user_fraction(alpha: float, quad: QuadratureSpec | None = None,
                          bisection: BisectionSpec | None = None,
                          cache: bool = True) -> LoadingSolution:
    """ASE-optimal loading fraction u* and the GAPA G(u*) for a path loss alpha.

    Results are memoized per (alpha, specs) since sweeps re-request the same
    environment constantly; pass cache=False to bypass.
    """
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    if cache:
        return _solve_loading(alpha, quad, bisection)
    return _solve_loading.__wrapped__(alpha, quad, bisection)


def _rounded_candidates(target: float, M: int) -> list[int]:
    lo = min(max(math.floor(target), 1), M)
    hi = min(max(math.ceil(target), 1), M)
    return sorted({lo, hi})


def optimal_k_lower_bound(M: int, alpha: float,
                          quad: QuadratureSpec | None = None) -> int:
    """Integer K maximizing K * (lower-bound rate) at fixed M.

    The continuous maximizer is u* M; the better of its two integer
    neighbours is returned (ties to the smaller K).
    """
    if M < 1 or int(M) != M:
        raise DomainError(f"M must be a positive integer, got {M}")
    M = int(M)
    u = optimal_user_fraction(alpha, quad).u_star
    best_k, best_val = 0, -math.inf
    for k in _rounded_candidates(u * M, M):
        val = k * mean_rate_lower_bound(M, k, alpha, quad)
        if val > best_val:
            best_k, best_val = k, val
    return best_k


def optimal_k_exact(M: int, alpha: float,
                    quad: QuadratureSpec | None = None) -> int:
    """Integer K maximizing K * E[R] at fixed M, by exhaustive search over 1..M."""
    if M < 1 or int(M) != M:
        raise DomainError(f"M must be a positive integer, got {M}")
    M = int(M)
    best_k, best_val = 0, -math.inf
    for k in range(1, M + 1):
        val = k * mean_rate_exact(M, k, alpha, quad)
        if val > best_val:
            best_k, best_val = k, val
    return best_k


def ase_at_optimal_loading(lambda_b: float, M: float, alpha: float,
                           quad: QuadratureSpec | None = None) -> float:
    """Lower-bound ASE at the optimal loading: lambda_b * M * GAPA (linear in M)."""
    if not lambda_b >= 0:
        raise DomainError(f"lambda_b must be non-negative, got {lambda_b}")
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    return lambda_b * M * optimal_user_fraction(alpha, quad).gapa
