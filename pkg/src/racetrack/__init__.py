"""Core-periphery racetrack economy with QLLU market equilibrium.

Linear stability of the uniform state and large-time simulation of the
advection-diffusion and replicator population dynamics.
"""

from .dynamics import (
    Dynamics,
    DynamicsConfig,
    SimulationResult,
    evolve,
    mode_initial,
    random_initial,
    run_to_stationary,
    simulate,
    step_ad,
    step_replicator,
    upwind_fluxes,
)
from .equilibrium import (
    HomogeneousState,
    ModelParams,
    equilibrium,
    homogeneous_state,
    kernel_for,
    nominal_wage,
    price_index,
    real_wage,
    uniform_field,
)
from .kernel import (
    Grid,
    TransportKernel,
    build_kernel,
    circle_distance,
    closed_form_fourier,
    convolve,
    rotate,
)
from .postproc import (
    UrbanArea,
    UrbanAreaReport,
    count_urban_areas,
    growth_rate,
    max_norm,
    mode_amplitude,
    total_mass,
)
from .spectral import (
    CriticalCurve,
    ModelVariant,
    SpectralPoint,
    critical_curve,
    eigenvalue,
    growth_rates,
    heatmap,
    unstable_modes,
    z_index,
)

__all__ = [
    "Dynamics",
    "DynamicsConfig",
    "SimulationResult",
    "evolve",
    "mode_initial",
    "random_initial",
    "run_to_stationary",
    "simulate",
    "step_ad",
    "step_replicator",
    "upwind_fluxes",
    "HomogeneousState",
    "ModelParams",
    "equilibrium",
    "homogeneous_state",
    "kernel_for",
    "nominal_wage",
    "price_index",
    "real_wage",
    "uniform_field",
    "Grid",
    "TransportKernel",
    "build_kernel",
    "circle_distance",
    "closed_form_fourier",
    "convolve",
    "rotate",
    "UrbanArea",
    "UrbanAreaReport",
    "count_urban_areas",
    "growth_rate",
    "max_norm",
    "mode_amplitude",
    "total_mass",
    "CriticalCurve",
    "ModelVariant",
    "SpectralPoint",
    "critical_curve",
    "eigenvalue",
    "growth_rates",
    "heatmap",
    "unstable_modes",
    "z_index",
]

__version__ = "0.1.0"
