"""Fast invariant checks run by ``racetrack validate``."""

from __future__ import annotations

import numpy as np

from .dynamics import DynamicsConfig, evolve, random_initial, run_to_stationary
from .equilibrium import ModelParams, equilibrium, homogeneous_state, kernel_for, uniform_field
from .kernel import Grid, build_kernel, closed_form_fourier, convolve, rotate
from .postproc import total_mass
from .spectral import ModelVariant, eigenvalue, unstable_modes, z_index


def _kernel_oracle():
    worst = 0.0
    for n_nodes, bound in ((256, 5e-3), (2048, 1e-4)):
        grid = Grid(n_nodes)
        for alpha in (0.5, 1.0, 2.0):
            kernel = build_kernel(grid, alpha)
            for k in range(1, 9):
                mode = np.exp(1j * k * grid.nodes)
                got = kernel.matrix() @ mode
                want = closed_form_fourier(k, alpha) * mode
                err = np.max(np.abs(got - want)) / np.max(np.abs(want))
                worst = max(worst, err / bound)
    return worst <= 1.0, f"worst error / bound = {worst:.3f}"


def _circulant():
    grid = Grid(64)
    kernel = build_kernel(grid, 1.3)
    f = np.random.default_rng(0).random(64)
    err = max(np.max(np.abs(convolve(kernel, rotate(f, m)) - rotate(convolve(kernel, f), m)))
              for m in range(64))
    return err <= 1e-12, f"max rotation defect {err:.2e}"


def _homogeneous_fixed_point():
    params = ModelParams(sigma=5.0, tau=0.25)
    grid = Grid(256)
    state = homogeneous_state(params, grid)
    G, w, omega = equilibrium(uniform_field(grid, state.lambda_bar),
                              uniform_field(grid, state.phi_bar), kernel_for(params, grid), params)
    err = max(np.max(np.abs(G / state.G_bar - 1)), np.max(np.abs(w / state.w_bar - 1)),
              np.max(np.abs(omega / state.omega_bar - 1)))
    return err <= 1e-10, f"relative defect {err:.2e}"


def _dispersion_limits():
    params = ModelParams(tau=1e-8)
    err = max(abs(eigenvalue(ModelVariant.QLLU_AD, k, params).gamma + k * k * params.d)
              for k in range(1, 7))
    sym = 0.0
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = ModelParams(sigma=float(rng.uniform(1.05, 10)), tau=float(rng.uniform(0.01, 2)))
        for v in ModelVariant:
            k = int(rng.integers(1, 10))
            sym = max(sym, abs(eigenvalue(v, k, p).gamma - eigenvalue(v, -k, p).gamma))
    even = max(abs(z_index(k, a) / (a * a / (k * k + a * a)) - 1)
               for k in (2, 4, 6, 8) for a in (0.1, 1.0, 3.0))
    ok = err <= 1e-6 and sym <= 1e-12 and even <= 1e-14
    return ok, f"tau->0 defect {err:.1e}, symmetry {sym:.1e}, even-k {even:.1e}"


def _cascade():
    params = ModelParams(sigma=6.4)
    phases = []
    for tau in np.arange(1.0, 0.01 - 1e-12, -1e-3):
        modes = unstable_modes(ModelVariant.QLLU_AD, params.replace(tau=float(tau)))
        if not phases or phases[-1] != modes:
            phases.append(modes)
    want = []
    for k in range(6, 0, -1):
        want += [frozenset({k}), frozenset()]
    start = phases.index(frozenset({6})) if frozenset({6}) in phases else -1
    ok = start >= 0 and phases[start:] == want
    return ok, f"{len(phases)} phases"


def _conservation():
    params = ModelParams(sigma=5.0, tau=0.45)
    grid = Grid(256)
    lam = random_initial(grid, params.lambda_bar, 1e-2, 7)
    out = evolve(lam, params, DynamicsConfig(), grid, 20_000)
    drift = abs(total_mass(out, grid) - params.Lambda) / params.Lambda
    return drift <= 1e-9, f"mass drift {drift:.1e} after 20000 steps"


def _uniform_start():
    params = ModelParams(sigma=5.0, tau=0.15)
    grid = Grid(256)
    res = run_to_stationary(uniform_field(grid, params.lambda_bar), params, DynamicsConfig(), grid)
    ok = res.converged and res.steps_taken == 1 and res.final_residual < 1e-14
    return ok, f"steps {res.steps_taken}, residual {res.final_residual:.1e}"


CHECKS = {
    "kernel quadrature vs closed form": _kernel_oracle,
    "circulant rotation equivariance": _circulant,
    "homogeneous state is a fixed point": _homogeneous_fixed_point,
    "dispersion limits and symmetry": _dispersion_limits,
    "instability cascade at sigma=6.4": _cascade,
    "mass conservation": _conservation,
    "uniform start converges at step 1": _uniform_start,
}


def run_checks(echo=print) -> bool:
    all_ok = True
    for name, check in CHECKS.items():
        try:
            ok, detail = check()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok

