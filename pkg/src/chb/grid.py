"""Uniform cell-centred grid on a rectangle with a MAC layout for velocities.

Array conventions used throughout the package:

* scalar fields have shape ``(nx, ny)``; index ``[i, j]`` is the cell whose
  centre is ``((i + 1/2) h, (j + 1/2) h)``.
* x-face arrays have shape ``(nx + 1, ny)``; face ``i`` separates cells
  ``i - 1`` and ``i``.  Faces ``0`` and ``nx`` lie on the walls.
* y-face arrays have shape ``(nx, ny + 1)`` with the analogous layout.

All reductions go through :func:`numpy.sum`, whose pairwise summation is
deterministic for a given array, so results do not depend on BLAS threading.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, GridMismatch

CHBF_MAGIC = b"CHBF"
CHBF_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ConfigError(f"grid needs at least 4 cells per axis, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigError("side lengths must be positive")
        hx, hy = self.lx / self.nx, self.ly / self.ny
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ConfigError(f"cells must be square: lx/nx={hx!r} != ly/ny={hy!r}")

    @property
    def h(self) -> float:
        return self.lx / self.nx

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self):
        return (self.nx, self.ny)

    def cell_centers(self):
        h = self.h
        x = (np.arange(self.nx) + 0.5) * h
        y = (np.arange(self.ny) + 0.5) * h
        return np.meshgrid(x, y, indexing="ij")

    def xface_centers(self):
        h = self.h
        x = np.arange(self.nx + 1) * h
        y = (np.arange(self.ny) + 0.5) * h
        return np.meshgrid(x, y, indexing="ij")

    def yface_centers(self):
        h = self.h
        x = (np.arange(self.nx) + 0.5) * h
        y = np.arange(self.ny + 1) * h
        return np.meshgrid(x, y, indexing="ij")

    def scalar(self, values=0.0) -> "ScalarField":
        arr = np.broadcast_to(np.asarray(values, dtype=float), self.shape).copy()
        return ScalarField(self, arr)

    def zero_vector(self) -> "StaggeredVectorField":
        return StaggeredVectorField(
            self, np.zeros((self.nx + 1, self.ny)), np.zeros((self.nx, self.ny + 1))
        )


@dataclass
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(f"values of shape {self.values.shape} on grid {self.grid.shape}")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def _other(self, other):
        if isinstance(other, ScalarField):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__


@dataclass
class StaggeredVectorField:
    grid: Grid2D
    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        g = self.grid
        if self.ux.shape != (g.nx + 1, g.ny) or self.uy.shape != (g.nx, g.ny + 1):
            raise GridMismatch("face arrays do not match the grid")

    def copy(self):
        return StaggeredVectorField(self.grid, self.ux.copy(), self.uy.copy())

    def boundary_max(self) -> float:
        return float(max(np.abs(self.ux[[0, -1], :]).max(), np.abs(self.uy[:, [0, -1]]).max()))

    def max_abs(self) -> float:
        return float(max(np.abs(self.ux).max(), np.abs(self.uy).max()))

    def _pair(self, other):
        if isinstance(other, StaggeredVectorField):
            check_same_grid(self, other)
            return other.ux, other.uy
        return other, other

    def __add__(self, other):
        ox, oy = self._pair(other)
        return StaggeredVectorField(self.grid, self.ux + ox, self.uy + oy)

    __radd__ = __add__

    def __sub__(self, other):
        ox, oy = self._pair(other)
        return StaggeredVectorField(self.grid, self.ux - ox, self.uy - oy)

    def __neg__(self):
        return StaggeredVectorField(self.grid, -self.ux, -self.uy)

    def __mul__(self, scalar):
        return StaggeredVectorField(self.grid, self.ux * scalar, self.uy * scalar)

    __rmul__ = __mul__


def check_same_grid(*fields):
    grids = {f.grid for f in fields}
    if len(grids) > 1:
        raise GridMismatch(f"fields live on different grids: {grids}")
    return fields[0].grid


# -- array kernels -------------------------------------------------------------

def grad_arrays(values, h):
    """Two-point face gradient with zero flux on the walls."""
    nx, ny = values.shape
    gx = np.zeros((nx + 1, ny))
    gy = np.zeros((nx, ny + 1))
    gx[1:-1, :] = (values[1:, :] - values[:-1, :]) / h
    gy[:, 1:-1] = (values[:, 1:] - values[:, :-1]) / h
    return gx, gy


def div_arrays(fx, fy, h):
    return (fx[1:, :] - fx[:-1, :] + fy[:, 1:] - fy[:, :-1]) / h


def face_average_arrays(values):
    """Arithmetic mean of neighbouring cells on interior faces; wall faces copy the adjacent cell."""
    nx, ny = values.shape
    ax = np.empty((nx + 1, ny))
    ay = np.empty((nx, ny + 1))
    ax[1:-1, :] = 0.5 * (values[1:, :] + values[:-1, :])
    ax[0, :] = values[0, :]
    ax[-1, :] = values[-1, :]
    ay[:, 1:-1] = 0.5 * (values[:, 1:] + values[:, :-1])
    ay[:, 0] = values[:, 0]
    ay[:, -1] = values[:, -1]
    return ax, ay


def cell_to_interior_faces(cx, cy):
    """Average cell-centred vector components onto faces; wall faces are set to zero."""
    nx, ny = cx.shape
    fx = np.zeros((nx + 1, ny))
    fy = np.zeros((nx, ny + 1))
    fx[1:-1, :] = 0.5 * (cx[1:, :] + cx[:-1, :])
    fy[:, 1:-1] = 0.5 * (cy[:, 1:] + cy[:, :-1])
    return fx, fy


# -- field-level operations ---------------------------------------------------

def integrate(f: ScalarField) -> float:
    return float(f.grid.h ** 2 * np.sum(f.values))


def inner(f: ScalarField, g: ScalarField) -> float:
    check_same_grid(f, g)
    return float(f.grid.h ** 2 * np.sum(f.values * g.values))


def face_inner(F: StaggeredVectorField, G: StaggeredVectorField) -> float:
    check_same_grid(F, G)
    h2 = F.grid.h ** 2
    return float(h2 * (np.sum(F.ux * G.ux) + np.sum(F.uy * G.uy)))


def grad_cc_to_face(f: ScalarField) -> StaggeredVectorField:
    gx, gy = grad_arrays(f.values, f.grid.h)
    return StaggeredVectorField(f.grid, gx, gy)


def div_face_to_cc(F: StaggeredVectorField) -> ScalarField:
    return ScalarField(F.grid, div_arrays(F.ux, F.uy, F.grid.h))


def face_average(f: ScalarField) -> StaggeredVectorField:
    ax, ay = face_average_arrays(f.values)
    return StaggeredVectorField(f.grid, ax, ay)


def face_l2(F: StaggeredVectorField) -> float:
    return float(np.sqrt(face_inner(F, F)))


def norms(f: ScalarField):
    """Return ``(l1, l2, linf, h1semi)`` of a cell field."""
    h2 = f.grid.h ** 2
    v = f.values
    l1 = float(h2 * np.sum(np.abs(v)))
    l2 = float(np.sqrt(h2 * np.sum(v * v)))
    linf = float(np.max(np.abs(v)))
    h1semi = face_l2(grad_cc_to_face(f))
    return l1, l2, linf, h1semi


# -- snapshot I/O ---------------------------------------------------------------

def write_chbf(path, f: ScalarField):
    """Write a field as CHBF: 32-byte header then float64 rows of constant y."""
    g = f.grid
    header = _HEADER.pack(CHBF_MAGIC, CHBF_VERSION, g.nx, g.ny, g.lx, g.ly)
    body = np.ascontiguousarray(f.values.T, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_chbf(path) -> ScalarField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated CHBF header")
    magic, version, nx, ny, lx, ly = _HEADER.unpack_from(raw)
    if magic != CHBF_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CHBF_VERSION:
        raise ValueError(f"{path}: unsupported CHBF version {version}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {data.size}")
    return ScalarField(Grid2D(nx, ny, lx, ly), data.reshape(ny, nx).T.astype(float))


def write_field_csv(path, f: ScalarField):
    """One CSV row per grid row (constant y), x increasing along the row."""
    lines = [",".join(repr(float(v)) for v in row) for row in f.values.T]
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path, grid: Grid2D) -> ScalarField:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return ScalarField(grid, rows.T)
