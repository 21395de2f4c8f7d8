"""Separation, off-bound and threshold conditions for clustering-based recovery.

Every quantity works on a :class:`~kmedian_cpe.signal_models.CorrelationProfile`
and only uses cumulative ratios, so the (unscaled) discrete cumulative sum is
interchangeable with its continuous counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .signal_models import CorrelationProfile, inverse_cumulative


class BoundName(str, Enum):
    T2_SEPARATION = "T2_separation"
    T2_OFFBOUND = "T2_offbound"
    T3_SEPARATION = "T3_separation"
    T3_THRESHOLD_FEASIBILITY = "T3_threshold_feasibility"


@dataclass(frozen=True)
class BoundReport:
    name: BoundName
    required: float
    observed: float
    satisfied: bool
    inputs: dict = field(default_factory=dict)


class InfeasibleBound(ValueError):
    """The bound has no finite value for the given inputs."""


def _clustering_argument(profile: CorrelationProfile, sigma: float, denominator: float):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam0 = profile.at_zero
    ratio = float(profile.at(sigma)) / lam0
    if ratio < 1 - 1e-12:
        raise InfeasibleBound(f"Lambda(sigma)/Lambda(0) = {ratio} < 1")
    arg = 2 * lam0 * (1 - (ratio - 1) / denominator)
    if arg < -1e-12 * profile.total or arg > profile.total * (1 + 1e-12):
        raise InfeasibleBound(f"argument {arg} outside [0, {profile.total}]")
    return min(max(arg, 0.0), profile.total)


def t2_min_separation(profile: CorrelationProfile, sigma: float, K: int, r: float) -> float:
    """Minimum separation guaranteeing per-component error ``sigma`` (Φ = I, no threshold).

    ``2 Λ⁻¹(2Λ(0)(1 - (Λ(σ)/Λ(0) - 1) / ((2K-2)r + 1))) + 2σ``
    """
    arg = _clustering_argument(profile, sigma, (2 * K - 2) * r + 1)
    return 2 * inverse_cumulative(profile, arg) + 2 * sigma


def t2_min_offbound(profile: CorrelationProfile, sigma: float, K: int, r: float) -> float:
    """``Λ⁻¹(2Λ(0)(1 - (Λ(σ)/Λ(0) - 1) / (2Kr)))``"""
    arg = _clustering_argument(profile, sigma, 2 * K * r)
    return inverse_cumulative(profile, arg)


def t3_min_separation(a: float, t: float, r: float, c_min: float, sigma: float) -> float:
    """Separation needed with a thresholded proxy and ``exp(-a|w|)`` correlation."""
    if a <= 0:
        raise ValueError("decay rate a must be positive")
    denom = t ** 2 / (r * c_min) ** 2 - math.exp(-2 * a * sigma)
    if denom <= 0:
        raise InfeasibleBound(
            f"t^2/(r c_min)^2 = {t ** 2 / (r * c_min) ** 2} does not exceed exp(-2 a sigma)")
    return math.log(math.sqrt(8 * r ** 2 / denom) + 1) / a


def t3_threshold_floor(a: float, zeta: float, r: float, c_max: float) -> float:
    """Smallest threshold for which the thresholded balance equations are solvable."""
    if a <= 0 or zeta <= 0:
        raise ValueError("a and zeta must be positive")
    x = a * zeta
    # 1/sqrt(e^x - 1) written so that large x underflows to 0 instead of overflowing
    return 2 * c_max * math.sqrt(r + r ** 2) * math.exp(-x / 2) / math.sqrt(-math.expm1(-x))


def t3_threshold_feasible(a: float, zeta: float, r: float, c_max: float, t: float) -> bool:
    return t >= t3_threshold_floor(a, zeta, r, c_max)


def fit_decay(profile: CorrelationProfile, floor: float = 0.0) -> float:
    """Largest ``a`` with ``exp(-a|w|) >= λ(w)/λ(0)`` at every sampled offset.

    This is the tightest exponential envelope. Samples whose normalized
    correlation is at most ``floor`` (zero by default) impose no constraint.
    """
    peak = profile.peak
    if peak <= 0:
        raise ValueError("correlation at zero offset must be positive")
    lam = profile.lam / peak
    w = np.abs(profile.offsets)
    mask = (w > 0) & (lam > floor)
    if not np.any(mask):
        return math.inf
    rates = -np.log(np.minimum(lam[mask], 1.0)) / w[mask]
    return float(rates.min())


def _report(name, required, observed, **inputs):
    return BoundReport(BoundName(name), float(required), float(observed),
                       bool(observed >= required - 1e-12), inputs)


def check_t2_separation(profile, sigma, K, r, zeta) -> BoundReport:
    return _report("T2_separation", t2_min_separation(profile, sigma, K, r), zeta,
                   K=K, r=r, sigma=sigma)


def check_t2_offbound(profile, sigma, K, r, epsilon) -> BoundReport:
    return _report("T2_offbound", t2_min_offbound(profile, sigma, K, r), epsilon,
                   K=K, r=r, sigma=sigma)


def check_t3_separation(a, t, r, c_min, sigma, zeta) -> BoundReport:
    return _report("T3_separation", t3_min_separation(a, t, r, c_min, sigma), zeta,
                   a=a, t=t, r=r, c_min=c_min, sigma=sigma)


def check_t3_threshold(a, zeta, r, c_max, t) -> BoundReport:
    return _report("T3_threshold_feasibility", t3_threshold_floor(a, zeta, r, c_max), t,
                   a=a, r=r, c_max=c_max, t=t)
