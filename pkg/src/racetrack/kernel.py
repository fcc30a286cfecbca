"""Circle geometry and the exponential transport kernel.

The racetrack is the circle of radius ``rho`` parametrised by the angle
``r`` in ``[-pi, pi)``.  Integrals of the form

    int_{-pi}^{pi} h(rho s) exp(-alpha D(rho r, rho s)) rho ds

are discretised with the periodic trapezoidal rule, which turns them into
a symmetric circulant matrix-vector product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import circulant

__all__ = [
    "Grid",
    "TransportKernel",
    "circle_distance",
    "build_kernel",
    "convolve",
    "closed_form_fourier",
    "rotate",
]

CONVOLVE_METHODS = ("direct", "recursive")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the circle.

    Node ``i`` (zero-based) sits at angle ``-pi + i * dr``.
    """

    n_nodes: int = 256
    rho: float = 1.0

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 8 or self.n_nodes % 2:
            raise ValueError(f"n_nodes must be an even integer >= 8, got {self.n_nodes!r}")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive and finite, got {self.rho!r}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @property
    def dr(self) -> float:
        return 2.0 * math.pi / self.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        return -math.pi + self.dr * np.arange(self.n_nodes)

    @property
    def cell_length(self) -> float:
        """Arc length ``rho * dr`` carried by one node in the quadrature."""
        return self.rho * self.dr

    def check(self, values: np.ndarray, name: str = "field") -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_nodes,):
            raise ValueError(
                f"{name} has shape {values.shape}, grid expects ({self.n_nodes},)"
            )
        return values


def circle_distance(r, s, rho: float = 1.0):
    """Shorter arc length between the points at angles ``r`` and ``s``."""
    gap = np.abs(np.asarray(r, dtype=float) - np.asarray(s, dtype=float))
    out = rho * np.minimum(gap, 2.0 * math.pi - gap)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TransportKernel:
    """Circulant generator ``K_m = exp(-alpha D(rho r_1, rho r_{1+m})) rho dr``."""

    grid: Grid
    alpha: float
    weights: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> float:
        """Geometric ratio between neighbouring weights, ``exp(-alpha rho dr)``."""
        return math.exp(-self.alpha * self.grid.cell_length)

    def matrix(self) -> np.ndarray:
        # weights are symmetric so row/column orientation of circulant() is moot
        return circulant(self.weights)


def build_kernel(grid: Grid, alpha: float) -> TransportKernel:
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha!r}")
    m = np.arange(grid.n_nodes)
    # index form keeps K_m == K_{N-m} bit for bit
    dist = grid.cell_length * np.minimum(m, grid.n_nodes - m)
    weights = np.exp(-alpha * dist) * grid.cell_length
    weights.setflags(write=False)
    return TransportKernel(grid=grid, alpha=float(alpha), weights=weights)


@numba.njit(cache=True)
def _convolve_recursive(f, q, scale, out):
    # out_i = scale * sum_j q**dist(i, j) f_j with dist the circular index
    # distance; forward window m = 0..H and backward window m = 1..H-1 are
    # each updated in O(1) per node.
    n = f.size
    h = n // 2
    q_h = q**h
    q_h1 = q_h * q
    fwd = 0.0
    for m in range(h, -1, -1):
        fwd = fwd * q + f[(n - 1 + m) % n]
    out[n - 1] = fwd
    # split at the wrap point so the inner loops need no modulo
    for i in range(n - 2, n - h - 2, -1):
        fwd = f[i] + q * fwd - q_h1 * f[i + h + 1 - n]
        out[i] = fwd
    for i in range(n - h - 2, -1, -1):
        fwd = f[i] + q * fwd - q_h1 * f[i + h + 1]
        out[i] = fwd
    bwd = 0.0
    for m in range(h - 1, 0, -1):
        bwd = (bwd + f[n - m]) * q
    out[0] = scale * (out[0] + bwd)
    for i in range(1, h):
        bwd = q * (f[i - 1] + bwd) - q_h * f[i - h + n]
        out[i] = scale * (out[i] + bwd)
    for i in range(h, n):
        bwd = q * (f[i - 1] + bwd) - q_h * f[i - h]
        out[i] = scale * (out[i] + bwd)


def convolve(kernel: TransportKernel, values, method: str = "direct") -> np.ndarray:
    """Apply the kernel quadrature: ``out_i = sum_j K_{(j-i) mod N} values_j``.

    ``method="direct"`` is the dense circulant product and serves as the
    reference.  ``method="recursive"`` exploits the geometric decay of the
    weights and costs O(N); it agrees with the direct path to round-off.
    """
    values = kernel.grid.check(values)
    if method == "direct":
        return kernel.matrix() @ values
    if method == "recursive":
        out = np.empty_like(values)
        _convolve_recursive(np.ascontiguousarray(values), kernel.ratio,
                            kernel.grid.cell_length, out)
        return out
    raise ValueError(f"unknown convolution method {method!r}; choose from {CONVOLVE_METHODS}")


def closed_form_fourier(k: int, alpha: float, rho: float = 1.0) -> float:
    """Exact eigenvalue of the continuous kernel operator on the mode ``exp(iks)``."""
    if k == 0 and alpha == 0:
        return 2.0 * math.pi * rho
    sign = -1.0 if k % 2 else 1.0
    x = alpha * rho
    return 2.0 * alpha * rho**2 * (1.0 - sign * math.exp(-x * math.pi)) / (k * k + x * x)


def rotate(values, shift: int) -> np.ndarray:
    """Cyclic shift of a nodal field by ``shift`` nodes."""
    return np.roll(np.asarray(values), shift)
