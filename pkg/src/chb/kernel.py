"""Interaction kernel J and the domain-restricted convolutions J*phi, (grad J)*phi.

Convolutions are the midpoint quadrature ``h^2 sum_c' J(x_c - x_c') phi_c'``
evaluated with a zero-padded FFT on a ``(2 nx, 2 ny)`` grid, so that the
circular product reproduces the linear (non-periodic) sum over the domain
exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import AssumptionError, ConfigError, GridMismatch
from .grid import Grid2D, ScalarField, StaggeredVectorField, cell_to_interior_faces

KINDS = ("gaussian", "bump")


def kernel_values(kind, amplitude, eps, zx, zy):
    """J and its analytic gradient at offsets ``(zx, zy)``."""
    zx = np.asarray(zx, dtype=float)
    zy = np.asarray(zy, dtype=float)
    s = (zx * zx + zy * zy) / eps ** 2
    if kind == "gaussian":
        J = amplitude * np.exp(-s)
        dJ_ds = -J
    elif kind == "bump":
        inside = s < 1.0
        J = np.zeros_like(s)
        dJ_ds = np.zeros_like(s)
        si = s[inside]
        J[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - si))
        dJ_ds[inside] = -J[inside] / (1.0 - si) ** 2
    else:
        raise ConfigError(f"unknown kernel {kind!r}; expected one of {KINDS}")
    gx = dJ_ds * 2.0 * zx / eps ** 2
    gy = dJ_ds * 2.0 * zy / eps ** 2
    return J, gx, gy


@dataclass(eq=False)
class Kernel:
    grid: Grid2D
    kind: str
    amplitude: float
    eps: float
    samples: np.ndarray = field(repr=False)
    grad_x: np.ndarray = field(repr=False)
    grad_y: np.ndarray = field(repr=False)
    l1_norm: float = 0.0
    grad_l1_norm: float = 0.0  # estimated sup_x int |grad J(x - y)| dy over the domain
    _spectra: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def offsets(self):
        """Integer offsets ``(i, j)`` matching ``samples[i + nx - 1, j + ny - 1]``."""
        g = self.grid
        return np.meshgrid(np.arange(-g.nx + 1, g.nx), np.arange(-g.ny + 1, g.ny), indexing="ij")

    def a(self) -> np.ndarray:
        if "a" not in self._cache:
            self._cache["a"] = _conv(self, "J", np.ones(self.grid.shape))
        return self._cache["a"]

    def grad_a_cells(self):
        if "grad_a" not in self._cache:
            ones = np.ones(self.grid.shape)
            self._cache["grad_a"] = (_conv(self, "gx", ones), _conv(self, "gy", ones))
        return self._cache["grad_a"]


def _circular(grid, table):
    nx, ny = grid.nx, grid.ny
    pad = np.zeros((2 * nx, 2 * ny))
    i = np.arange(-nx + 1, nx) % (2 * nx)
    j = np.arange(-ny + 1, ny) % (2 * ny)
    pad[np.ix_(i, j)] = table
    return sfft.rfft2(pad)


def _conv(kernel, which, values):
    g = kernel.grid
    pad = np.zeros((2 * g.nx, 2 * g.ny))
    pad[: g.nx, : g.ny] = values
    out = sfft.irfft2(sfft.rfft2(pad) * kernel._spectra[which], s=pad.shape)
    return g.h ** 2 * out[: g.nx, : g.ny]


def build(grid: Grid2D, kind="gaussian", amplitude=1.0, eps=0.1) -> Kernel:
    if not eps > 0:
        raise ConfigError(f"kernel width must be positive, got {eps!r}")
    if amplitude < 0:
        raise ConfigError("kernel amplitude must be nonnegative")
    h = grid.h
    I, Jx = np.meshgrid(np.arange(-grid.nx + 1, grid.nx), np.arange(-grid.ny + 1, grid.ny), indexing="ij")
    J, gx, gy = kernel_values(kind, amplitude, eps, I * h, Jx * h)
    # even J: enforce exact symmetry of the tables against roundoff in s
    J = 0.5 * (J + J[::-1, ::-1])
    gx = 0.5 * (gx - gx[::-1, ::-1])
    gy = 0.5 * (gy - gy[::-1, ::-1])
    k = Kernel(grid, kind, float(amplitude), float(eps), J, gx, gy)
    k._spectra = {
        "J": _circular(grid, J),
        "gx": _circular(grid, gx),
        "gy": _circular(grid, gy),
        "absgrad": _circular(grid, np.hypot(gx, gy)),
    }
    k.l1_norm = float(h * h * np.sum(np.abs(J)))
    k.grad_l1_norm = float(np.max(_conv(k, "absgrad", np.ones(grid.shape)))) if amplitude > 0 else 0.0
    return k


def build_gaussian(grid, amplitude, eps) -> Kernel:
    return build(grid, "gaussian", amplitude, eps)


def build_bump(grid, amplitude, eps) -> Kernel:
    return build(grid, "bump", amplitude, eps)


def _check(kernel, phi):
    if phi.grid != kernel.grid:
        raise GridMismatch("kernel and field are on different grids")


def convolve(kernel: Kernel, phi: ScalarField) -> ScalarField:
    _check(kernel, phi)
    return ScalarField(phi.grid, _conv(kernel, "J", phi.values))


def a_field(kernel: Kernel) -> ScalarField:
    a = kernel.a()
    if np.min(a) < -1e-12:
        raise AssumptionError(f"a(x) = int J(x-y) dy is negative somewhere (min {np.min(a)!r})")
    return ScalarField(kernel.grid, a.copy())


def convolve_grad_cells(kernel: Kernel, values):
    return _conv(kernel, "gx", values), _conv(kernel, "gy", values)


def convolve_grad(kernel: Kernel, phi: ScalarField) -> StaggeredVectorField:
    """(grad J)*phi at cell centres, averaged onto interior faces; wall faces are zero."""
    _check(kernel, phi)
    fx, fy = cell_to_interior_faces(*convolve_grad_cells(kernel, phi.values))
    return StaggeredVectorField(phi.grid, fx, fy)


def convolve_all(kernel: Kernel, values, which=("J", "gx", "gy")):
    """J*phi and both components of (grad J)*phi at cell centres from one forward FFT."""
    g = kernel.grid
    pad = np.zeros((2 * g.nx, 2 * g.ny))
    pad[: g.nx, : g.ny] = values
    hat = sfft.rfft2(pad)
    h2 = g.h ** 2
    out = []
    for w in which:
        full = sfft.irfft2(hat * kernel._spectra[w], s=pad.shape)
        out.append(h2 * full[: g.nx, : g.ny])
    return tuple(out)


def grad_a_inf(kernel: Kernel) -> float:
    gx, gy = kernel.grad_a_cells()
    return float(np.max(np.hypot(gx, gy)))


def zero_kernel(grid: Grid2D) -> Kernel:
    return build(grid, "gaussian", 0.0, grid.h)
