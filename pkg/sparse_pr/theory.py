"""Closed-form performance predictions for greedy support recovery.

σ is expressed in units of the support extent (points uniform on an
interval of length 1).
"""
from __future__ import annotations

import math
import sys
from typing import Iterable, List, Tuple

from scipy.optimize import brentq

from .errors import InvalidArgumentError
from .models import SuccessModel, n_differences

_FPMIN = 1e-300
_MAX_ITER = 1000
_EPS = 1e-15
_LOG_MAX = math.log(sys.float_info.max)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _ibeta_parts(a: float, b: float, x: float) -> Tuple[float, float]:
    """(I_x(a, b), 1 − I_x(a, b)), each evaluated without cancellation where possible."""
    if x <= 0.0:
        return 0.0, 1.0
    if x >= 1.0:
        return 1.0, 0.0
    ln_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - ln_beta)
    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _betacf(a, b, x) / a
        return lower, 1.0 - lower
    upper = front * _betacf(b, a, 1.0 - x) / b
    return 1.0 - upper, upper


def regularized_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise InvalidArgumentError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise InvalidArgumentError("x must lie in [0, 1]")
    return _ibeta_parts(a, b, x)[0]


def _check_dof(k1: int, k2: int) -> None:
    if k1 < 1 or k2 < 1:
        raise InvalidArgumentError(f"degrees of freedom must be ≥ 1, got ({k1}, {k2})")


def f_cdf(x: float, k1: int, k2: int) -> float:
    """CDF of the F(k1, k2) distribution: I_{k1x/(k1x+k2)}(k1/2, k2/2)."""
    _check_dof(k1, k2)
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    z = k1 * x / (k1 * x + k2)
    return _ibeta_parts(k1 / 2, k2 / 2, z)[0]


def f_sf(x: float, k1: int, k2: int) -> float:
    """Survival function 1 − F_cdf, from the complementary beta tail."""
    _check_dof(k1, k2)
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    # 1 − I_z(a, b) = I_{1−z}(b, a) with 1 − z = k2/(k1x + k2)
    return _ibeta_parts(k2 / 2, k1 / 2, k2 / (k1 * x + k2))[0]


def success_probability(K: int, sigma: float) -> float:
    """Predicted probability that greedy recovery places every point correctly.

    P = Π_{k=2}^{K−1} [1 − (1 − F(x; k, k)^E_k)^{K−k}] with
    x = (3σ² + ½)/(3σ²) and E_k = N^k·(K−1)², computed in the log domain.
    """
    model = SuccessModel(K=K, sigma=sigma)
    if model.sigma == 0:
        return 1.0
    N = n_differences(model.K)
    var = 3 * model.sigma**2
    x = (var + 0.5) / var
    log_p = 0.0
    for k in range(2, model.K):
        q = f_sf(x, k, k)
        if q <= 0.0:
            continue
        if q >= 1.0:
            return 0.0
        # 1 − F^E = 1 − exp(−e^t) with t = log E + log(−log(1 − q))
        t = k * math.log(N) + 2 * math.log(model.K - 1) + math.log(-math.log1p(-q))
        miss = 1.0 if t > _LOG_MAX else -math.expm1(-math.exp(t))
        if miss <= 0.0:
            continue
        if miss >= 1.0:
            return 0.0
        p_k = -math.expm1((model.K - k) * math.log(miss))
        if p_k <= 0.0:
            return 0.0
        log_p += math.log(p_k)
    return min(1.0, max(0.0, math.exp(log_p)))


def expected_mse(K: int, sigma: float) -> float:
    """E[‖X − X̂‖²] = (K − 1)σ² for a successful recovery."""
    if K < 2:
        raise InvalidArgumentError(f"K must be at least 2, got {K}")
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be non-negative, got {sigma}")
    return (K - 1) * sigma**2


def theory_surface(k_grid: Iterable[int], sigma_grid: Iterable[float]) -> List[Tuple[int, float, float]]:
    sigmas = list(sigma_grid)
    return [(K, s, success_probability(K, s)) for K in k_grid for s in sigmas]


def transition_sigma(K: int, level: float = 0.5, lo: float = 1e-8, hi: float = 10.0) -> float:
    """σ at which the predicted success probability crosses ``level``."""
    if not 0.0 < level < 1.0:
        raise InvalidArgumentError(f"level must lie in (0, 1), got {level}")

    def gap(log_sigma: float) -> float:
        return success_probability(K, math.exp(log_sigma)) - level

    a, b = math.log(lo), math.log(hi)
    if gap(a) * gap(b) > 0:
        raise InvalidArgumentError(f"level {level} is not crossed on [{lo}, {hi}] for K={K}")
    return math.exp(brentq(gap, a, b, xtol=1e-12))
