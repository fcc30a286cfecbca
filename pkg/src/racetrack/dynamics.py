"""Time integration of the mobile population.

Two dynamics are provided on top of the QLLU equilibrium:

* advection-diffusion, discretised with the explicit finite-volume scheme
  (upwind advective flux, centred diffusion, forward Euler in time);
* the replicator equation, forward Euler followed by clamping at zero and
  rescaling to the prescribed mass.

``step_ad`` and ``step_replicator`` are readable numpy reference steps.
``run_to_stationary`` drives the same updates through compiled loops, which
is what makes runs of several million steps practical.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .equilibrium import ModelParams, equilibrium, kernel_for, uniform_field
from .kernel import CONVOLVE_METHODS, Grid, _convolve_recursive
from .postproc import count_urban_areas, total_mass

__all__ = [
    "Dynamics",
    "DynamicsConfig",
    "SimulationResult",
    "random_initial",
    "mode_initial",
    "upwind_fluxes",
    "step_ad",
    "step_replicator",
    "evolve",
    "run_to_stationary",
]

log = logging.getLogger(__name__)

NEGATIVITY_TOL = -1e-12
CHECKPOINT_STEPS = 1_000_000


class Dynamics(str, enum.Enum):
    ADVECTION_DIFFUSION = "advection_diffusion"
    REPLICATOR = "replicator"

    @classmethod
    def parse(cls, name) -> "Dynamics":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"ad": cls.ADVECTION_DIFFUSION, "r": cls.REPLICATOR}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown dynamics {name!r}") from None


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float = 0.01
    max_steps: int = 50_000_000
    tol: float = 1e-11
    dynamics: Dynamics = Dynamics.ADVECTION_DIFFUSION
    perturbation_amplitude: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dynamics", Dynamics.parse(self.dynamics))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps}")
        if not 0.0 <= self.perturbation_amplitude <= 0.1:
            raise ValueError("perturbation_amplitude must lie in [0, 0.1]")
        if int(self.rng_seed) != self.rng_seed or not 0 <= self.rng_seed < 2**64:
            raise ValueError(f"rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}")
        object.__setattr__(self, "max_steps", int(self.max_steps))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    def check_stability(self, params: ModelParams, grid: Grid) -> None:
        """Reject diffusion coefficients beyond the explicit-scheme limit."""
        if self.dynamics is not Dynamics.ADVECTION_DIFFUSION:
            return
        limit = 0.5 * grid.cell_length**2 / self.dt
        if params.d > limit:
            raise ValueError(
                f"d = {params.d} violates the explicit stability bound "
                f"d <= 0.5 (rho dr)^2 / dt = {limit:.6g}"
            )

    def replace(self, **changes) -> "DynamicsConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["dynamics"] = self.dynamics.value
        return out


@dataclass
class SimulationResult:
    lambda_star: np.ndarray
    omega_star: np.ndarray
    steps_taken: int
    converged: bool
    final_residual: float
    urban_count: int
    seed: int
    mass_drift: float
    blew_up: bool = False
    min_lambda: float = 0.0
    diagnostics: list = field(default_factory=list)

    def meta(self) -> dict:
        return {
            "steps_taken": self.steps_taken,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "urban_count": self.urban_count,
            "seed": self.seed,
            "mass_drift": self.mass_drift,
            "blew_up": self.blew_up,
            "min_lambda": self.min_lambda,
            "diagnostics": list(self.diagnostics),
        }


def random_initial(grid: Grid, lambda_bar: float, eps: float, seed: int) -> np.ndarray:
    """Uniform density plus de-meaned i.i.d. uniform noise of relative size ``eps``."""
    base = uniform_field(grid, lambda_bar)
    if eps == 0:
        return base
    if not 0 < eps <= 0.1:
        raise ValueError(f"eps must lie in (0, 0.1], got {eps}")
    rng = np.random.default_rng(seed)
    eta = rng.uniform(-eps * lambda_bar, eps * lambda_bar, grid.n_nodes)
    eta -= eta.mean()
    return base + eta


def mode_initial(grid: Grid, lambda_bar: float, eps: float, k: int) -> np.ndarray:
    """Uniform density plus ``eps * lambda_bar * cos(k r)``."""
    return lambda_bar + eps * lambda_bar * np.cos(k * grid.nodes)


def upwind_fluxes(lam, omega, dr: float) -> np.ndarray:
    """Numerical flux at the left face of each node.

    Entry ``j`` is the flux at ``j - 1/2`` (between nodes ``j-1`` and ``j``,
    periodically), taking the density from the side the flow leaves.
    """
    lam = np.asarray(lam, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if lam.shape != omega.shape:
        raise ValueError("lambda and omega must live on the same grid")
    grad = (omega - np.roll(omega, 1)) / dr
    upstream = np.where(grad > 0, np.roll(lam, 1), lam)
    return np.where(grad == 0, 0.0, upstream * grad)


def step_ad(lam, omega, params: ModelParams, dt: float, dr: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    flux = upwind_fluxes(lam, omega, dr)
    rho2 = params.rho**2
    new = (lam
           - params.a / rho2 * dt / dr * (np.roll(flux, -1) - flux)
           + params.d / rho2 * dt / dr**2 * (np.roll(lam, -1) - 2.0 * lam + np.roll(lam, 1)))
    if not np.all(np.isfinite(new)):
        raise FloatingPointError("advection-diffusion step produced non-finite density")
    return new


def step_replicator(lam, omega, params: ModelParams, dt: float, grid: Grid) -> np.ndarray:
    lam = grid.check(lam, "lambda")
    omega = grid.check(omega, "omega")
    mean_wage = np.sum(omega * lam) * grid.cell_length / params.Lambda
    new = np.maximum(lam * (1.0 + dt * params.v * (omega - mean_wage)), 0.0)
    return new * (params.Lambda / (np.sum(new) * grid.cell_length))


# ---------------------------------------------------------------------------
# compiled loops

@numba.njit(cache=True)
def _apply_kernel(f, q, scale, mat, dense, out):
    if dense:
        n = f.size
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += mat[i, j] * f[j]
            out[i] = acc
    else:
        _convolve_recursive(f, q, scale, out)


@numba.njit(cache=True)
def _real_wage(lam, phi, q, scale, mat, dense, mu, sigma, F, access, spend, omega):
    n = lam.size
    _apply_kernel(lam, q, scale, mat, dense, access)
    for j in range(n):
        # G**(sigma-1) == F / access exactly in the algebra
        spend[j] = (phi[j] + lam[j]) * F / access[j]
    _apply_kernel(spend, q, scale, mat, dense, omega)
    c_w = mu / (sigma * F)
    c_g = mu / (1.0 - sigma)
    for j in range(n):
        omega[j] = c_w * omega[j] - c_g * math.log(access[j] / F)


@numba.njit(cache=True)
def _advance(lam, phi, q, scale, mat, dense, mu, sigma, F, Lambda, a, d, v, rho,
             dt, dr, tol, n_steps, replicator, stop_on_tol):
    """Advance ``lam`` in place.

    Returns ``(steps, residual, status, min_lambda)`` with status 0 = ran out
    of steps, 1 = residual below ``tol``, 2 = non-finite density.
    """
    n = lam.size
    access = np.empty(n)
    spend = np.empty(n)
    omega = np.empty(n)
    flux = np.empty(n)
    new = np.empty(n)
    c_adv = a / rho**2 * dt / dr
    c_dif = d / rho**2 * dt / dr**2
    cell = rho * dr
    residual = math.inf
    min_lam = math.inf
    for step in range(n_steps):
        _real_wage(lam, phi, q, scale, mat, dense, mu, sigma, F, access, spend, omega)
        if replicator:
            mean_wage = 0.0
            for j in range(n):
                mean_wage += omega[j] * lam[j]
            mean_wage *= cell / Lambda
            total = 0.0
            for j in range(n):
                x = lam[j] * (1.0 + dt * v * (omega[j] - mean_wage))
                if x < 0.0:
                    x = 0.0
                new[j] = x
                total += x
            factor = Lambda / (total * cell)
            for j in range(n):
                new[j] *= factor
        else:
            for j in range(n):
                jm = j - 1 if j > 0 else n - 1
                g = omega[j] - omega[jm]
                if g > 0.0:
                    flux[j] = lam[jm] * g / dr
                elif g < 0.0:
                    flux[j] = lam[j] * g / dr
                else:
                    flux[j] = 0.0
            for j in range(n):
                jp = j + 1 if j < n - 1 else 0
                jm = j - 1 if j > 0 else n - 1
                new[j] = (lam[j] - c_adv * (flux[jp] - flux[j])
                          + c_dif * (lam[jp] - 2.0 * lam[j] + lam[jm]))
        residual = 0.0
        finite = True
        for j in range(n):
            x = new[j]
            if not math.isfinite(x):
                finite = False
            r = abs(x - lam[j])
            if r > residual:
                residual = r
            if x < min_lam:
                min_lam = x
            lam[j] = x
        if not finite:
            return step + 1, math.nan, 2, min_lam
        if stop_on_tol and residual < tol:
            return step + 1, residual, 1, min_lam
    return n_steps, residual, 0, min_lam


def _setup(params: ModelParams, grid: Grid, method: str):
    if method not in CONVOLVE_METHODS:
        raise ValueError(f"unknown convolution method {method!r}")
    kernel = kernel_for(params, grid)
    dense = method == "direct"
    mat = kernel.matrix() if dense else np.zeros((1, 1))
    return kernel, mat, dense


def _drive(lam, params, grid, config, n_steps, stop_on_tol, method, phi=None):
    kernel, mat, dense = _setup(params, grid, method)
    phi = uniform_field(grid, params.phi_bar) if phi is None else grid.check(phi, "phi")
    return _advance(lam, np.ascontiguousarray(phi), kernel.ratio, grid.cell_length, mat, dense,
                    params.mu, params.sigma, params.F, params.Lambda, params.a, params.d,
                    params.v, params.rho, config.dt, grid.dr, config.tol, n_steps,
                    config.dynamics is Dynamics.REPLICATOR, stop_on_tol)


def evolve(lam0, params: ModelParams, config: DynamicsConfig, grid: Grid, n_steps: int,
           method: str = "recursive") -> np.ndarray:
    """Take exactly ``n_steps`` steps (no stopping test) and return the new density."""
    lam = np.array(grid.check(lam0, "lambda"), dtype=float)
    if n_steps <= 0:
        return lam
    _, _, status, _ = _drive(lam, params, grid, config, int(n_steps), False, method)
    if status == 2:
        raise FloatingPointError("density became non-finite")
    return lam


def run_to_stationary(lam0, params: ModelParams, config: DynamicsConfig, grid: Grid | None = None,
                      method: str = "recursive", peak_factor: float = 1.5,
                      checkpoint: int = CHECKPOINT_STEPS) -> SimulationResult:
    """Iterate until ``max|lam^{n+1} - lam^n| < tol`` or ``max_steps`` is reached.

    ``method`` selects the convolution inside the compiled loop: ``"direct"``
    (dense circulant product, the reference) or ``"recursive"`` (O(N)).
    Non-convergence is returned as data; a non-finite density stops the run
    with ``blew_up`` set.
    """
    grid = Grid(len(lam0), params.rho) if grid is None else grid
    config.check_stability(params, grid)
    lam = np.array(grid.check(lam0, "lambda"), dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("initial density must be finite and non-negative")

    steps = 0
    residual = math.inf
    status = 0
    min_lam = float(lam.min())
    diagnostics = []
    while steps < config.max_steps:
        chunk = min(checkpoint, config.max_steps - steps)
        done, residual, status, chunk_min = _drive(lam, params, grid, config, chunk, True, method)
        steps += int(done)
        min_lam = min(min_lam, float(chunk_min))
        if status != 0:
            break
        log.info("step %d: residual %.3e", steps, residual)

    blew_up = status == 2
    if blew_up:
        diagnostics.append(f"non-finite density at step {steps}")
        log.error("blow-up at step %d", steps)
    if min_lam < NEGATIVITY_TOL:
        diagnostics.append(f"density dipped to {min_lam:.3e} during the run")
        log.warning("negative density %.3e observed", min_lam)
    converged = status == 1

    if blew_up:
        omega = np.full(grid.n_nodes, math.nan)
        urban = 0
    else:
        lam = np.maximum(lam, 0.0)
        kernel = kernel_for(params, grid)
        omega = equilibrium(lam, uniform_field(grid, params.phi_bar), kernel, params)[2]
        urban = count_urban_areas(lam, params.lambda_bar, peak_factor, grid).count
    mass = total_mass(lam, grid) if not blew_up else math.nan
    return SimulationResult(
        lambda_star=lam,
        omega_star=omega,
        steps_taken=steps,
        converged=converged,
        final_residual=float(residual),
        urban_count=urban,
        seed=config.rng_seed,
        mass_drift=abs(mass - params.Lambda) / params.Lambda,
        blew_up=blew_up,
        min_lambda=min_lam,
        diagnostics=diagnostics,
    )


def simulate(params: ModelParams, config: DynamicsConfig, grid: Grid | None = None,
             method: str = "recursive", peak_factor: float = 1.5) -> SimulationResult:
    """Seeded random start followed by :func:`run_to_stationary`."""
    grid = Grid(256, params.rho) if grid is None else grid
    lam0 = random_initial(grid, params.lambda_bar, config.perturbation_amplitude, config.rng_seed)
    return run_to_stationary(lam0, params, config, grid, method=method, peak_factor=peak_factor)
