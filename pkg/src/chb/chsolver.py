"""Semi-implicit time stepping of the nonlocal Cahn-Hilliard equation with transport.

The flux ``m(phi) grad(mu)`` is never formed from ``F'`` directly.  It is
assembled in the regularised form

    (m a + lambda) grad(phi) + m F2'' grad(phi) + m (phi grad(a) - (grad J)*phi)

whose diffusive coefficient ``m (F'' + a)`` stays bounded below by ``alpha1``
and bounded above as phi approaches the pure phases.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernel as kern
from . import material as mat
from .cg import NeumannHelmholtz, pcg
from .errors import AbortRun, AssumptionError, GuardBandError
from .grid import (ScalarField, StaggeredVectorField, cell_to_interior_faces, div_arrays,
                   face_average_arrays, grad_arrays)

TRANSPORTS = ("upwind", "central", "none")


@dataclass
class ChState:
    phi: ScalarField
    t: float = 0.0


@dataclass(frozen=True)
class StepControl:
    dt: float
    dt_min: float
    dt_max: float
    shrink_factor: float = 0.5
    guard_band: float = 1e-9
    streak: int = 0
    grow_after: int = 10

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt <= self.dt_max:
            raise ValueError(f"need 0 < dt_min <= dt <= dt_max, got {self.dt_min}, {self.dt}, {self.dt_max}")
        if not 0 < self.shrink_factor < 1:
            raise ValueError("shrink_factor must lie in (0, 1)")


def adapt_dt(ctl: StepControl, success: bool) -> StepControl:
    """Shrink after a rejected step, grow after ``grow_after`` consecutive accepted ones."""
    if not success:
        if ctl.dt <= ctl.dt_min:
            raise AbortRun(f"time step floor dt_min={ctl.dt_min!r} reached")
        return replace(ctl, dt=max(ctl.dt * ctl.shrink_factor, ctl.dt_min), streak=0)
    streak = ctl.streak + 1
    if streak >= ctl.grow_after:
        return replace(ctl, dt=min(ctl.dt / ctl.shrink_factor, ctl.dt_max), streak=0)
    return replace(ctl, streak=streak)


def ensure_validated(model, kernel):
    """Return ``model`` carrying alpha0/alpha1 measured against this kernel's a-field."""
    if model.validated:
        return model
    key = ("validated", model)
    if key not in kernel._cache:
        a = kern.a_field(kernel).values
        report = mat.validate_assumptions(model, float(a.min()), float(a.max()))
        if not report.passed:
            raise AssumptionError("model fails its assumptions:\n" + report.summary())
        kernel._cache[key] = model.with_constants(report)
    return kernel._cache[key]


def chemical_potential(phi: ScalarField, kernel, model) -> ScalarField:
    """mu = a phi - J*phi + F'(phi)."""
    Jphi = kern.convolve(kernel, phi).values
    v = phi.values
    return ScalarField(phi.grid, kernel.a() * v - Jphi + mat.f_prime(model, v))


class _Parts:
    """Face quantities of one state shared by the flux and the implicit operator."""

    def __init__(self, phi, kernel, model):
        self.h = kernel.grid.h
        a = kernel.a()
        m = mat.mobility(model, phi)
        c = mat.lambda_(model, phi) + m * (a + mat.f2_double_prime(model))
        self.cx, self.cy = face_average_arrays(c)
        self.cx[[0, -1], :] = 0.0
        self.cy[:, [0, -1]] = 0.0
        mx, my = face_average_arrays(m)
        # phi grad(a) - (grad J)*phi is evaluated on phi - phi_ref, which is the
        # same quantity but vanishes exactly (not just to FFT roundoff) for constants
        d = phi - phi.flat[0]
        px, py = face_average_arrays(d)
        jx, jy = kern.convolve_all(kernel, d, ("gx", "gy"))
        jfx, jfy = cell_to_interior_faces(jx, jy)
        gax, gay = cell_to_interior_faces(*kernel.grad_a_cells())
        self.kx = mx * (px * gax - jfx)
        self.ky = my * (py * gay - jfy)
        self.c_min = min(float(self.cx[1:-1, :].min()), float(self.cy[:, 1:-1].min()))


def transport_flux(phi, ux, uy, scheme="upwind"):
    """Face values of u phi (donor cell or centred); zero on the walls."""
    fx = np.zeros_like(ux)
    fy = np.zeros_like(uy)
    if scheme == "none":
        return fx, fy
    vx, vy = ux[1:-1, :], uy[:, 1:-1]
    left, right = phi[:-1, :], phi[1:, :]
    down, up = phi[:, :-1], phi[:, 1:]
    if scheme == "upwind":
        fx[1:-1, :] = np.where(vx > 0, vx * left, vx * right)
        fy[:, 1:-1] = np.where(vy > 0, vy * down, vy * up)
    elif scheme == "central":
        fx[1:-1, :] = vx * 0.5 * (left + right)
        fy[:, 1:-1] = vy * 0.5 * (down + up)
    else:
        raise ValueError(f"unknown transport scheme {scheme!r}")
    return fx, fy


def _check_coefficient(parts, model):
    if parts.c_min < model.alpha1 - 1e-12:
        raise AssumptionError(
            f"diffusive face coefficient {parts.c_min!r} below alpha1={model.alpha1!r}")


def regularized_flux(phi: ScalarField, u: StaggeredVectorField | None, kernel, model,
                     transport="upwind") -> StaggeredVectorField:
    """Total face flux m grad(mu) - u phi in regularised form."""
    model = ensure_validated(model, kernel)
    v = phi.values
    parts = _Parts(v, kernel, model)
    _check_coefficient(parts, model)
    gx, gy = grad_arrays(v, parts.h)
    fx = parts.cx * gx + parts.kx
    fy = parts.cy * gy + parts.ky
    if u is not None:
        tx, ty = transport_flux(v, u.ux, u.uy, transport)
        fx -= tx
        fy -= ty
    fx[[0, -1], :] = 0.0
    fy[:, [0, -1]] = 0.0
    return StaggeredVectorField(phi.grid, fx, fy)


_HELMHOLTZ = {}


def _helmholtz(grid):
    if grid not in _HELMHOLTZ:
        _HELMHOLTZ[grid] = NeumannHelmholtz(grid.nx, grid.ny, grid.h)
    return _HELMHOLTZ[grid]


def guard_distance(model, values) -> float:
    lo, hi = model.domain
    return float(min(np.min(values - lo), np.min(hi - values)))


def step(state: ChState, u: StaggeredVectorField | None, kernel, model, ctl: StepControl,
         transport="upwind", source=None, rtol=1e-10, maxiter=5000, dt=None) -> ChState:
    """Advance one IMEX Euler step of length ``dt`` (default ``ctl.dt``).

    The diffusive part uses the coefficient frozen at the old state and is
    implicit; kernel terms, transport and the optional ``source(t)`` (a cell
    array evaluated at the new time) are explicit.  The update is written back in
    conservative form ``phi + dt div(flux)``, so the mass changes only through
    the source.
    """
    model = ensure_validated(model, kernel)
    dt = ctl.dt if dt is None else float(dt)
    v = state.phi.values
    h = state.phi.grid.h
    parts = _Parts(v, kernel, model)
    _check_coefficient(parts, model)
    ex_x, ex_y = parts.kx.copy(), parts.ky.copy()
    if u is not None and transport != "none":
        umax = u.max_abs()
        if umax * dt > h:
            raise GuardBandError(f"CFL violated: |u| dt / h = {umax * dt / h:.3g}")
        tx, ty = transport_flux(v, u.ux, u.uy, transport)
        ex_x -= tx
        ex_y -= ty
    ex_x[[0, -1], :] = 0.0
    ex_y[:, [0, -1]] = 0.0
    explicit = div_arrays(ex_x, ex_y, h)
    src = 0.0 if source is None else np.asarray(source(state.t + dt), dtype=float)

    cx, cy = parts.cx, parts.cy

    def apply_A(x):
        gx, gy = grad_arrays(x, h)
        return x - dt * div_arrays(cx * gx, cy * gy, h)

    c_in = np.concatenate([cx[1:-1, :].ravel(), cy[:, 1:-1].ravel()])
    c_ref = float(np.sqrt(c_in.min() * c_in.max()))
    precond = _helmholtz(state.phi.grid).solver(dt * c_ref)
    rhs = v + dt * (explicit + src)
    x, _, _ = pcg(apply_A, rhs, x0=v, precond=precond, rtol=rtol, maxiter=maxiter)
    gx, gy = grad_arrays(x, h)
    new = v + dt * (div_arrays(cx * gx + ex_x, cy * gy + ex_y, h) + src)

    dist = guard_distance(model, new)
    if not dist >= ctl.guard_band:
        raise GuardBandError(f"phi came within {dist!r} of the pure phases", distance=dist)
    return ChState(ScalarField(state.phi.grid, new), state.t + dt)
