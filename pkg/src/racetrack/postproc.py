"""Measurements on nodal fields: urban areas, Fourier amplitudes, growth rates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import Grid

__all__ = [
    "UrbanArea",
    "UrbanAreaReport",
    "count_urban_areas",
    "mode_amplitude",
    "growth_rate",
    "max_norm",
    "total_mass",
]


@dataclass(frozen=True)
class UrbanArea:
    start: int
    end: int
    peak: float
    mass: float


@dataclass
class UrbanAreaReport:
    areas: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.areas)


def count_urban_areas(lam, lambda_bar: float, peak_factor: float = 1.5,
                      grid: Grid | None = None) -> UrbanAreaReport:
    """Arcs where ``lam > lambda_bar`` whose peak reaches ``peak_factor * lambda_bar``.

    Arcs are periodic; ``start``/``end`` are inclusive node indices, and an
    arc wrapping past the last node has ``end < start``.
    """
    lam = np.asarray(lam, dtype=float)
    if peak_factor <= 1:
        raise ValueError("peak_factor must exceed 1")
    n = lam.size
    cell = grid.cell_length if grid is not None else 2 * np.pi / n
    above = lam > lambda_bar
    report = UrbanAreaReport()
    if not above.any():
        return report
    if above.all():
        if lam.max() >= peak_factor * lambda_bar:
            report.areas.append(UrbanArea(0, n - 1, float(lam.max()), float(lam.sum() * cell)))
        return report
    # walk once around the circle starting just after a node below threshold
    origin = int(np.argmin(above))
    run = []
    for t in range(1, n + 1):
        j = (origin + t) % n
        if above[j]:
            run.append(j)
        elif run:
            peak = float(lam[run].max())
            if peak >= peak_factor * lambda_bar:
                report.areas.append(UrbanArea(run[0], run[-1], peak, float(lam[run].sum() * cell)))
            run = []
    report.areas.sort(key=lambda area: area.start)
    return report


def mode_amplitude(values, k: int, grid: Grid | None = None) -> float:
    """``|sum_j (f_j - mean f) exp(-i k r_j) dr|``."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if not abs(k) < n / 2:
        raise ValueError(f"|k| = {abs(k)} aliases on {n} nodes")
    grid = Grid(n) if grid is None else grid
    r = grid.nodes
    coef = np.sum((values - values.mean()) * np.exp(-1j * k * r)) * grid.dr
    return float(abs(coef))


def growth_rate(times, amplitudes, lambda_bar: float | None = None,
                linear_threshold: float = 1e-2) -> float:
    """Least-squares slope of ``log(amplitude)`` against time.

    With ``lambda_bar`` given, only samples with ``amplitude / lambda_bar``
    below ``linear_threshold`` are used.
    """
    t = np.asarray(times, dtype=float)
    amp = np.asarray(amplitudes, dtype=float)
    if t.shape != amp.shape:
        raise ValueError("times and amplitudes differ in length")
    if lambda_bar is not None:
        keep = amp / lambda_bar < linear_threshold
        t, amp = t[keep], amp[keep]
    if t.size < 10:
        raise ValueError(f"need at least 10 samples in the fitting window, got {t.size}")
    if np.any(amp <= 0):
        raise ValueError("amplitudes must be strictly positive")
    slope, _ = np.polyfit(t, np.log(amp), 1)
    return float(slope)


def max_norm(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("fields live on different grids")
    return float(np.max(np.abs(a - b)))


def total_mass(values, grid: Grid) -> float:
    return float(np.sum(values) * grid.cell_length)
