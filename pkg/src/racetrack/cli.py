"""Command-line front end.

Exit codes: 0 success, 1 failed validation, 2 invalid input, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .dynamics import random_initial, run_to_stationary
from .postproc import count_urban_areas
from .spectral import critical_curve, growth_rates

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_BLOWUP = 0, 1, 2, 3

log = logging.getLogger("racetrack")

EIGEN_HEADER = ["variant", "k", "tau", "sigma", "z", "gamma"]
CRITICAL_HEADER = ["variant", "k", "sigma", "root_index", "tau_root"]
SOLUTION_HEADER = ["node_index", "r", "lambda_star", "omega_star"]
SUMMARY_HEADER = ["sigma", "tau", "seed", "urban_count", "converged", "steps"]
SUMMARY_MAX_HEADER = ["sigma", "tau", "max_urban_count"]


def fmt(x) -> str:
    """Lossless decimal text for floats; ints and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(rows, header, path=None):
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    finally:
        if path:
            handle.close()


def _linspace(bounds, name):
    lo, hi, n = bounds
    if not (n >= 2 and lo < hi):
        raise ConfigError(f"{name} range must be LO HI N with LO < HI and N >= 2")
    return [float(x) for x in np.linspace(lo, hi, int(n))]


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _hint(csv_name, using):
    print(f"gnuplot -p -e \"set datafile separator ','; plot '{csv_name}' every ::1 using {using} with lines\"",
          file=sys.stderr)


# ---------------------------------------------------------------------------
# spectral commands

def _spectral_axes(cfg: RunConfig, args):
    taus = args.tau or cfg.spectral_tau or [cfg.params.tau]
    sigmas = args.sigma or cfg.spectral_sigma or [cfg.params.sigma]
    if getattr(args, "tau_range", None):
        taus = _linspace(args.tau_range, "tau")
    if getattr(args, "sigma_range", None):
        sigmas = _linspace(args.sigma_range, "sigma")
    for s in sigmas:
        if s <= 1:
            raise ConfigError(f"sigma must exceed 1, got {s}")
    for t in taus:
        if t < 0:
            raise ConfigError(f"tau must be non-negative, got {t}")
    return sorted(taus), sorted(sigmas)


def eigen_rows(cfg: RunConfig, k_list, taus, sigmas):
    """Rows ``variant,k,tau,sigma,z,gamma`` in lexicographic (k, sigma, tau) order."""
    rows = []
    tau_arr = np.asarray(taus, dtype=float)
    for k in sorted(k_list):
        for sigma in sigmas:
            z, gamma, _ = growth_rates(cfg.variant, k, tau_arr, sigma, cfg.params)
            for t, zz, g in zip(tau_arr, np.atleast_1d(z), np.atleast_1d(gamma)):
                rows.append([cfg.variant.value, k, float(t), float(sigma), float(zz), float(g)])
    return rows


def cmd_eigen(cfg: RunConfig, args, name="eigen"):
    k_list = args.k or cfg.k_list
    taus, sigmas = _spectral_axes(cfg, args)
    rows = eigen_rows(cfg, k_list, taus, sigmas)
    path = None
    if args.out:
        path = _out_dir(cfg) / f"{name}.csv"
    write_csv(rows, EIGEN_HEADER, path)
    if args.figures and args.out and len(taus) > 1 and len(sigmas) > 1:
        from .plotting import plot_heatmap
        gam = {k: np.array([r[5] for r in rows if r[1] == k]).reshape(len(sigmas), len(taus))
               for k in k_list}
        for k, grid in gam.items():
            plot_heatmap(taus, sigmas, grid, _out_dir(cfg) / f"{name}_k{k}.png",
                         title=f"{cfg.variant.value}  k={k}")
    if args.gnuplot_hint:
        _hint(path or f"{name}.csv", "3:6")
    return EXIT_OK


def cmd_heatmap(cfg: RunConfig, args):
    if not args.tau_range and not (args.tau or cfg.spectral_tau):
        args.tau_range = [0.01, 1.0, 100]
    if not args.sigma_range and not (args.sigma or cfg.spectral_sigma):
        args.sigma_range = [1.01, 10.0, 100]
    return cmd_eigen(cfg, args, name="heatmap")


def cmd_critical(cfg: RunConfig, args):
    k_list = sorted(args.k or cfg.k_list)
    sigmas = args.sigma or cfg.spectral_sigma or [cfg.params.sigma]
    if args.sigma_range:
        sigmas = _linspace(args.sigma_range, "sigma")
    tau_range = tuple(args.tau_bounds) if args.tau_bounds else cfg.tau_range
    if not 0 < tau_range[0] < tau_range[1]:
        raise ConfigError("tau range must satisfy 0 < LO < HI")
    rows, poles = [], []
    for k in k_list:
        for sigma in sorted(sigmas):
            if sigma <= 1.01:
                raise ConfigError(f"critical curves need sigma > 1.01, got {sigma}")
            curve = critical_curve(cfg.variant, k, sigma, cfg.params, tau_range)
            for i, root in enumerate(curve.roots):
                rows.append([cfg.variant.value, k, float(sigma), i, root])
            poles += [{"k": k, "sigma": sigma, "tau": p} for p in curve.poles]
    path = None
    if args.out:
        path = _out_dir(cfg) / "critical.csv"
        if poles:
            (_out_dir(cfg) / "critical_poles.json").write_text(json.dumps(poles, indent=2))
    for p in poles:
        log.warning("pole of the CP bracket at k=%d sigma=%g tau=%.10g", p["k"], p["sigma"], p["tau"])
    write_csv(rows, CRITICAL_HEADER, path)
    if args.figures and args.out:
        from .plotting import plot_critical
        plot_critical([dict(k=r[1], sigma=r[2], tau_root=r[4]) for r in rows],
                      _out_dir(cfg) / "critical.png", title=cfg.variant.value)
    if args.gnuplot_hint:
        _hint(path or "critical.csv", "5:3")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulation commands

def run_dir_name(sigma, tau, seed) -> str:
    return f"sigma{sigma:g}_tau{tau:g}_seed{seed}"


def execute_run(run_cfg: RunConfig, out_dir: str | None, figures: bool = False) -> dict:
    """One seeded simulation; writes ``solution.csv`` and ``meta.json`` when ``out_dir`` is set."""
    params, grid, dyn = run_cfg.params, run_cfg.grid, run_cfg.dynamics
    lam0 = random_initial(grid, params.lambda_bar, dyn.perturbation_amplitude, dyn.rng_seed)
    result = run_to_stationary(lam0, params, dyn, grid, method=run_cfg.method,
                               peak_factor=run_cfg.peak_factor)
    meta = result.meta()
    if not result.blew_up:
        report = count_urban_areas(result.lambda_star, params.lambda_bar, run_cfg.peak_factor, grid)
        meta["urban_areas"] = [vars(a) for a in report.areas]
    meta.update(sigma=params.sigma, tau=params.tau, variant=run_cfg.variant.value,
                config=run_cfg.to_dict())
    if out_dir is not None:
        run_path = Path(out_dir) / run_dir_name(params.sigma, params.tau, dyn.rng_seed)
        run_path.mkdir(parents=True, exist_ok=True)
        rows = ([i, r, l, w] for i, (r, l, w) in
                enumerate(zip(grid.nodes, result.lambda_star, result.omega_star)))
        write_csv(rows, SOLUTION_HEADER, run_path / "solution.csv")
        (run_path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        if result.blew_up:
            (run_path / "blowup.json").write_text(json.dumps(
                {"sigma": params.sigma, "tau": params.tau, "seed": dyn.rng_seed,
                 "steps_taken": result.steps_taken, "diagnostics": result.diagnostics}, indent=2))
        if figures and not result.blew_up:
            from .plotting import plot_solution
            plot_solution(grid.nodes, result.lambda_star, result.omega_star, params.lambda_bar,
                          run_path / "solution.png",
                          title=f"{run_cfg.variant.value}  sigma={params.sigma:g} tau={params.tau:g}")
        meta["path"] = str(run_path)
    return meta


def _failed(job, exc) -> dict:
    log.error("run sigma=%g tau=%g seed=%d failed: %s", job.params.sigma, job.params.tau,
              job.dynamics.rng_seed, exc)
    return {"error": f"{type(exc).__name__}: {exc}", "sigma": job.params.sigma,
            "tau": job.params.tau, "seed": job.dynamics.rng_seed}


def _run_all(jobs, out_dir, workers, figures):
    """Run every job; a failing run becomes an ``error`` record and the rest continue."""
    out = []
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            try:
                out.append(execute_run(job, out_dir, figures))
            except (ValueError, ArithmeticError) as exc:
                out.append(_failed(job, exc))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(execute_run, j, out_dir, figures) for j in jobs]
        for job, fut in zip(jobs, futures):
            try:
                out.append(fut.result())
            except Exception as exc:  # worker errors arrive re-raised here
                out.append(_failed(job, exc))
    return out


def cmd_simulate(cfg: RunConfig, args):
    cfg.check_simulation()
    out_dir = _out_dir(cfg)
    jobs = [cfg.for_run(cfg.params.sigma, cfg.params.tau, s) for s in cfg.seeds]
    metas = _run_all(jobs, str(out_dir), cfg.workers, args.figures)
    status = EXIT_OK
    for m in metas:
        if "error" in m:
            status = EXIT_INVALID if status == EXIT_OK else status
            print(json.dumps({"error": m["error"], "seed": m["seed"]}), file=sys.stderr)
        elif m.get("blew_up"):
            status = EXIT_BLOWUP
            print(json.dumps({"error": "numerical blow-up", "seed": m["seed"],
                              "steps_taken": m["steps_taken"], "diagnostics": m["diagnostics"]}),
                  file=sys.stderr)
        else:
            log.info("seed %d: converged=%s steps=%d urban_count=%d", m["seed"], m["converged"],
                     m["steps_taken"], m["urban_count"])
    print(json.dumps({"runs": len(metas),
                      "max_urban_count": max((m.get("urban_count", 0) for m in metas), default=0),
                      "converged": sum(bool(m.get("converged")) for m in metas)}))
    if args.gnuplot_hint and metas and "path" in metas[0]:
        _hint(Path(metas[0]["path"]) / "solution.csv", "2:3")
    return status


def summarize(metas):
    """Per-run summary rows and the max-over-seeds statistic per (sigma, tau)."""
    summary, best = [], {}
    for m in metas:
        failed = "error" in m or m.get("blew_up")
        count = -1 if failed else m["urban_count"]
        summary.append([m["sigma"], m["tau"], m["seed"], count,
                        bool(m.get("converged")) and not failed, m.get("steps_taken", 0)])
        key = (m["sigma"], m["tau"])
        best.setdefault(key, -1)
        if not failed:
            best[key] = max(best[key], count)
    summary_max = [[s, t, c] for (s, t), c in best.items()]
    return summary, summary_max


def cmd_sweep(cfg: RunConfig, args):
    cfg.check_simulation()
    sigmas = cfg.sigma_axis or [cfg.params.sigma]
    taus = cfg.tau_axis or [cfg.params.tau]
    out_dir = _out_dir(cfg)
    jobs = [cfg.for_run(s, t, seed) for s in sigmas for t in taus for seed in cfg.seeds]
    metas = _run_all(jobs, str(out_dir), cfg.workers, args.figures)
    summary, summary_max = summarize(metas)
    write_csv(summary, SUMMARY_HEADER, out_dir / "summary.csv")
    write_csv(summary_max, SUMMARY_MAX_HEADER, out_dir / "summary_max.csv")
    errors = [m for m in metas if "error" in m or m.get("blew_up")]
    if errors:
        (out_dir / "failures.json").write_text(json.dumps(
            [{k: m.get(k) for k in ("sigma", "tau", "seed", "error", "diagnostics")} for m in errors],
            indent=2))
    if args.figures:
        from .plotting import plot_sweep
        plot_sweep(summary_max, out_dir / "summary_max.png", title=cfg.variant.value)
    write_csv(summary_max, SUMMARY_MAX_HEADER)
    if args.gnuplot_hint:
        _hint(out_dir / "summary_max.csv", "2:3")
    return EXIT_BLOWUP if any(m.get("blew_up") for m in metas) else EXIT_OK


def cmd_validate(cfg: RunConfig, args):
    from .validation import run_checks
    return EXIT_OK if run_checks() else EXIT_FAILED


COMMANDS = {
    "eigen": cmd_eigen,
    "heatmap": cmd_heatmap,
    "critical": cmd_critical,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (a meta.json echo also works)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key; repeatable")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="base RNG seed (unsigned 64-bit)")
    common.add_argument("--seeds", type=int, help="number of seeded runs per parameter pair")
    common.add_argument("--workers", type=int, help="parallel worker processes for sweeps")
    common.add_argument("--variant", help="QLLU_AD, QLLU_R, CP_AD or CP_R")
    common.add_argument("--peak-factor", type=float, help="urban-area peak threshold in units of lambda_bar")
    common.add_argument("--gnuplot-hint", action="store_true", help="print a plotting one-liner for the CSV")
    common.add_argument("--figures", action="store_true", help="also render PNG figures into --out")
    common.add_argument("-v", "--verbose", action="count", default=0)

    spectral = argparse.ArgumentParser(add_help=False)
    spectral.add_argument("--k", type=int, nargs="+", help="spatial frequencies")
    spectral.add_argument("--tau", type=float, nargs="+", help="transport-cost values")
    spectral.add_argument("--sigma", type=float, nargs="+", help="elasticity values")
    spectral.add_argument("--sigma-range", type=float, nargs=3, metavar=("LO", "HI", "N"))

    parser = argparse.ArgumentParser(
        prog="racetrack",
        description="Linear stability and large-time simulation of the racetrack QLLU economy.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("eigen", "heatmap"):
        p = sub.add_parser(name, parents=[common, spectral],
                           help="growth rates on a (k, sigma, tau) lattice")
        p.add_argument("--tau-range", type=float, nargs=3, metavar=("LO", "HI", "N"))
    p = sub.add_parser("critical", parents=[common, spectral], help="zero crossings of Gamma_k along tau")
    p.add_argument("--tau-range", dest="tau_bounds", type=float, nargs=2, metavar=("LO", "HI"))
    sub.add_parser("simulate", parents=[common], help="seeded runs to a stationary state")
    sub.add_parser("sweep", parents=[common], help="simulate over sigma/tau axes and summarise")
    sub.add_parser("validate", parents=[common], help="run the invariant checks")
    return parser


def resolve_config(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"dynamics.rng_seed={args.seed}")
    if args.seeds is not None:
        overrides.append(f"seeds={args.seeds}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    if args.variant is not None:
        overrides.append(f"variant={json.dumps(args.variant)}")
    if args.peak_factor is not None:
        overrides.append(f"peak_factor={args.peak_factor}")
    if args.out is not None:
        overrides.append(f"out={json.dumps(args.out)}")
    return RunConfig.from_dict(load_config(args.config, overrides))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("k", "tau", "sigma", "tau_range", "sigma_range", "tau_bounds"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(json.dumps({"error": "invalid input", "detail": str(exc)}), file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(json.dumps({"error": "invalid input", "detail": str(exc)}), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
