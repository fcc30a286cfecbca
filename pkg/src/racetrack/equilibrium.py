"""Market equilibrium of the quasi-linear log utility (QLLU) racetrack model.

Given the mobile density ``lam`` (and the immobile density ``phi``) the price
index, nominal wage and real wage are explicit:

    G     = [ (1/F) K lam ] ** (1 / (1 - sigma))
    w     = mu / (sigma F) * K [ (phi + lam) G ** (sigma - 1) ]
    omega = w - mu ln G

where ``K`` is the transport-kernel quadrature from :mod:`racetrack.kernel`.
Fields are plain ``numpy`` arrays holding one value per grid node.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .kernel import Grid, TransportKernel, build_kernel, convolve

__all__ = [
    "ModelParams",
    "HomogeneousState",
    "price_index",
    "nominal_wage",
    "real_wage",
    "equilibrium",
    "homogeneous_state",
    "uniform_field",
]


@dataclass(frozen=True)
class ModelParams:
    """Economic and dynamical constants.  Defaults are the baseline experiment."""

    mu: float = 0.6
    sigma: float = 5.0
    tau: float = 0.25
    F: float = 1.0
    Lambda: float = 1.0
    Phi: float = 10.0
    rho: float = 1.0
    a: float = 0.5
    d: float = 0.005
    v: float = 1.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if not 0.0 <= self.mu < 1.0:
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if self.sigma <= 1.0:
            raise ValueError(f"sigma must exceed 1, got {self.sigma}")
        for name in ("F", "Lambda", "Phi", "rho", "v"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("tau", "a", "d"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def alpha(self) -> float:
        return (self.sigma - 1.0) * self.tau

    @property
    def lambda_bar(self) -> float:
        return self.Lambda / (2.0 * math.pi * self.rho)

    @property
    def phi_bar(self) -> float:
        return self.Phi / (2.0 * math.pi * self.rho)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class HomogeneousState:
    lambda_bar: float
    phi_bar: float
    w_bar: float
    G_bar: float
    omega_bar: float
    G_bar_cp: float


def _kernel_for(params: ModelParams, kernel: TransportKernel) -> None:
    if not math.isclose(kernel.alpha, params.alpha, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(
            f"kernel alpha {kernel.alpha} does not match (sigma - 1) tau = {params.alpha}"
        )
    if kernel.grid.rho != params.rho:
        raise ValueError(f"kernel radius {kernel.grid.rho} does not match rho {params.rho}")


def price_index(lam, kernel: TransportKernel, params: ModelParams,
                method: str = "direct") -> np.ndarray:
    lam = kernel.grid.check(lam, "lambda")
    _kernel_for(params, kernel)
    if not np.all(np.isfinite(lam)):
        raise ValueError("lambda contains non-finite values")
    if not np.any(lam > 0):
        raise ValueError("lambda has no positive mass")
    access = convolve(kernel, lam, method) / params.F
    if np.any(access <= 0):
        raise ValueError("kernel-weighted mass is non-positive at some node")
    return np.exp(np.log(access) / (1.0 - params.sigma))


def nominal_wage(lam, phi, G, kernel: TransportKernel, params: ModelParams,
                 method: str = "direct") -> np.ndarray:
    grid = kernel.grid
    lam = grid.check(lam, "lambda")
    phi = grid.check(phi, "phi")
    G = grid.check(G, "G")
    # exp/log form avoids pow domain trouble for non-integer sigma
    spend = (phi + lam) * np.exp((params.sigma - 1.0) * np.log(G))
    return params.mu / (params.sigma * params.F) * convolve(kernel, spend, method)


def real_wage(w, G, mu: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    G = np.asarray(G, dtype=float)
    if np.any(G <= 0):
        raise ValueError("price index must be strictly positive")
    return w - mu * np.log(G)


def equilibrium(lam, phi, kernel: TransportKernel, params: ModelParams,
                method: str = "direct"):
    """Return ``(G, w, omega)`` for the given population fields."""
    G = price_index(lam, kernel, params, method)
    w = nominal_wage(lam, phi, G, kernel, params, method)
    return G, w, real_wage(w, G, params.mu)


def uniform_field(grid: Grid, density: float) -> np.ndarray:
    return np.full(grid.n_nodes, float(density))


def _cp_price_index(params: ModelParams) -> float:
    # (1 - exp(-alpha rho pi)) / alpha, continuous at alpha = 0
    x = params.alpha * params.rho * math.pi
    reach = params.rho * math.pi if x == 0 else -math.expm1(-x) / params.alpha
    return (2.0 * params.lambda_bar * reach) ** (1.0 / (1.0 - params.sigma))


def homogeneous_state(params: ModelParams, grid: Grid | None = None) -> HomogeneousState:
    """Uniform stationary state.  Requires ``tau > 0``.

    Without ``grid`` the price index uses the exact kernel integral.  With a
    grid it uses the trapezoid row sum instead, which makes the state an exact
    fixed point of the gridded maps; the two differ by O(dr^2).
    """
    if params.alpha <= 0:
        raise ValueError("homogeneous price index needs tau > 0 (alpha appears in a denominator)")
    lam, phi = params.lambda_bar, params.phi_bar
    w_bar = params.mu * (phi + lam) / (params.sigma * lam)
    if grid is None:
        x = params.alpha * params.rho * math.pi
        row_sum = 2.0 * params.rho * -math.expm1(-x) / (params.alpha * params.rho)
    else:
        row_sum = float(np.sum(kernel_for(params, grid).weights))
    G_bar = (lam * row_sum / params.F) ** (1.0 / (1.0 - params.sigma))
    return HomogeneousState(
        lambda_bar=lam,
        phi_bar=phi,
        w_bar=w_bar,
        G_bar=G_bar,
        omega_bar=w_bar - params.mu * math.log(G_bar),
        G_bar_cp=_cp_price_index(params),
    )


def kernel_for(params: ModelParams, grid: Grid) -> TransportKernel:
    """Build the kernel matching ``params`` on ``grid`` (radius taken from params)."""
    if grid.rho != params.rho:
        grid = Grid(grid.n_nodes, params.rho)
    return build_kernel(grid, params.alpha)
