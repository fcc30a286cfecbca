"""Linear stability of the uniform state: Z_k, Gamma_k and critical curves.

A perturbation ``exp(ikr)`` of the uniform state grows like
``exp(Gamma_k t)``.  All of the dependence on transport costs enters through
the trade-cost index ``Z_k`` which rises monotonically from 0 to 1 with
``alpha * rho``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .equilibrium import ModelParams

__all__ = [
    "ModelVariant",
    "SpectralPoint",
    "CriticalCurve",
    "z_index",
    "eigenvalue",
    "growth_rates",
    "critical_curve",
    "heatmap",
    "unstable_modes",
    "POLE_TOL",
]

POLE_TOL = 1e-12
SCAN_SAMPLES = 2000
ROOT_XTOL = 1e-10


class ModelVariant(str, enum.Enum):
    QLLU_AD = "QLLU_AD"
    QLLU_R = "QLLU_R"
    CP_AD = "CP_AD"
    CP_R = "CP_R"

    @classmethod
    def parse(cls, name) -> "ModelVariant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown variant {name!r}; choose from {[v.value for v in cls]}"
            ) from None

    @property
    def is_cp(self) -> bool:
        return self in (ModelVariant.CP_AD, ModelVariant.CP_R)

    @property
    def is_advection_diffusion(self) -> bool:
        return self in (ModelVariant.QLLU_AD, ModelVariant.CP_AD)


@dataclass(frozen=True)
class SpectralPoint:
    """One evaluation of the dispersion relation.

    ``pole`` is set (and ``gamma`` is NaN) when the CP denominator vanishes.
    """

    variant: ModelVariant
    k: int
    z: float
    gamma: float
    pole: bool = False


@dataclass
class CriticalCurve:
    variant: ModelVariant
    k: int
    sigma: float
    roots: list = field(default_factory=list)
    poles: list = field(default_factory=list)


def z_index(k, alpha, rho: float = 1.0):
    """Trade-cost index ``Z_k``; broadcasts over ``k`` and ``alpha``."""
    k = np.asarray(k)
    if np.any(k == 0):
        raise ValueError("Z_k is undefined for k = 0")
    x = np.asarray(alpha, dtype=float) * rho
    if np.any(x < 0):
        raise ValueError("alpha * rho must be non-negative")
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        base = x * x / (k * k + x * x)
        # odd k: divide by (1 - e^{-pi x}) / x, which tends to pi, so tiny x cannot give 0/0
        reach = np.where(x == 0, np.pi, -np.expm1(-np.pi * x) / np.where(x == 0, 1.0, x))
        odd = x / (k * k + x * x) * (1.0 + np.exp(-np.pi * x)) / reach
        z = np.where(k % 2 == 0, base, odd)
    return float(z) if z.ndim == 0 else z


def _cp_bracket(z, mu, sigma):
    den = 1.0 - mu * z / sigma - (sigma - 1.0) * z * z / sigma
    num = (1.0 - mu * z) * (-z * z / sigma + mu * z / sigma)
    with np.errstate(invalid="ignore", divide="ignore"):
        bracket = num / den + mu * z / (sigma - 1.0)
    return bracket, den


def _cp_price_index(alpha, sigma, params: ModelParams):
    x = alpha * params.rho * np.pi
    with np.errstate(invalid="ignore", divide="ignore"):
        reach = np.where(x == 0, params.rho * np.pi, -np.expm1(-x) / np.where(alpha == 0, 1.0, alpha))
    return (2.0 * params.lambda_bar * reach) ** (1.0 / (1.0 - sigma))


def growth_rates(variant, k, tau, sigma, params: ModelParams):
    """Vectorised ``(z, gamma, denominator)`` over broadcastable ``k, tau, sigma``.

    ``denominator`` is only meaningful for the CP variants (ones otherwise).
    """
    variant = ModelVariant.parse(variant)
    k = np.asarray(k)
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 1.0):
        raise ValueError("sigma must exceed 1")
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    alpha = (sigma - 1.0) * tau
    z = z_index(k, alpha, params.rho)
    mu, rho = params.mu, params.rho
    wave = k * k / (rho * rho)
    den = np.ones(np.broadcast(z, sigma).shape)
    if variant is ModelVariant.QLLU_AD:
        ratio = (params.phi_bar + params.lambda_bar) / params.lambda_bar
        gamma = wave * (params.a * mu * z * (-ratio / sigma * z + (2 * sigma - 1) / (sigma * (sigma - 1)))
                        - params.d)
    elif variant is ModelVariant.QLLU_R:
        ratio = (params.phi_bar + params.lambda_bar) / params.lambda_bar
        gamma = params.v * mu / sigma * (-ratio * z * z + (2 * sigma - 1) / (sigma - 1) * z)
    else:
        bracket, den = _cp_bracket(z, mu, sigma)
        scale = _cp_price_index(alpha, sigma, params) ** (-mu)
        if variant is ModelVariant.CP_R:
            gamma = params.v * scale * bracket
        else:
            gamma = wave * (params.a * scale * bracket - params.d)
        gamma = np.where(np.abs(den) < POLE_TOL, np.nan, gamma)
    gamma = np.asarray(gamma, dtype=float)
    return z, (float(gamma) if gamma.ndim == 0 else gamma), den


def eigenvalue(variant, k: int, params: ModelParams) -> SpectralPoint:
    """Growth rate of mode ``k`` at ``(params.tau, params.sigma)``."""
    variant = ModelVariant.parse(variant)
    if k == 0:
        raise ValueError("mode k = 0 carries no mass perturbation")
    z, gamma, den = growth_rates(variant, k, params.tau, params.sigma, params)
    pole = bool(variant.is_cp and abs(float(den)) < POLE_TOL)
    return SpectralPoint(variant, int(k), float(z), math.nan if pole else float(gamma), pole)


def critical_curve(variant, k: int, sigma: float, params: ModelParams,
                   tau_range=(0.01, 5.0), samples: int = SCAN_SAMPLES) -> CriticalCurve:
    """Locate every zero crossing of ``tau -> Gamma_k`` inside ``tau_range``.

    The range is scanned on ``samples`` uniform points and each sign change
    is refined by bisection.  Sign changes caused by a CP pole are reported
    in ``poles`` instead of ``roots``.
    """
    variant = ModelVariant.parse(variant)
    lo, hi = map(float, tau_range)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"tau range must satisfy 0 < lo < hi, got {tau_range!r}")
    if sigma <= 1.01:
        raise ValueError(f"sigma must exceed 1.01, got {sigma}")
    if k == 0:
        raise ValueError("k must be non-zero")

    def gamma_at(t):
        return growth_rates(variant, k, t, sigma, params)[1]

    def den_at(t):
        return growth_rates(variant, k, t, sigma, params)[2]

    taus = np.linspace(lo, hi, samples)
    _, gammas, dens = growth_rates(variant, k, taus, sigma, params)
    curve = CriticalCurve(variant, int(k), float(sigma))
    signs = np.sign(gammas)
    for i in range(samples - 1):
        a, b = taus[i], taus[i + 1]
        if signs[i] == 0:
            curve.roots.append(float(a))
            continue
        if signs[i + 1] == 0 or signs[i] == signs[i + 1] or np.isnan(signs[i + 1]):
            continue
        if variant.is_cp and np.sign(dens[i]) != np.sign(dens[i + 1]):
            curve.poles.append(float(bisect(den_at, a, b, xtol=ROOT_XTOL)))
            continue
        curve.roots.append(float(bisect(gamma_at, a, b, xtol=ROOT_XTOL)))
    if signs[-1] == 0:
        curve.roots.append(float(taus[-1]))
    return curve


def heatmap(variant, k: int, tau_grid, sigma_grid, params: ModelParams) -> np.ndarray:
    """``Gamma_k`` on the product grid; rows follow ``sigma_grid``, columns ``tau_grid``."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    for name, g in (("tau", tau_grid), ("sigma", sigma_grid)):
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
            raise ValueError(f"{name} grid must be a non-empty strictly increasing 1-D array")
    return growth_rates(variant, k, tau_grid[None, :], sigma_grid[:, None], params)[1]


def unstable_modes(variant, params: ModelParams, k_max: int = 32) -> frozenset:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    ks = np.arange(1, k_max + 1)
    gammas = growth_rates(variant, ks, params.tau, params.sigma, params)[1]
    return frozenset(int(k) for k, g in zip(ks, gammas) if g > 0)
