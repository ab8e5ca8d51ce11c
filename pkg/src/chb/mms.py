"""Manufactured-solution convergence studies for the two solvers.

Brinkman: nu = eta = 1 on the unit square, velocity the curl of the stream
function sin^2(pi x) sin^2(pi y) (no-slip on every wall), pressure
cos(pi x) cos(pi y).  Forcing is derived symbolically.

Cahn-Hilliard: zero kernel, logarithmic potential, constant mobility, so the
equation is the nonlinear diffusion phi_t = div(F''(phi) grad phi) + S with
phi = 0.3 cos(pi x) cos(pi y) exp(-t).  The spatial error is isolated at fixed
dt by Richardson extrapolation in time (2 phi_{dt/2} - phi_dt), which removes
the first-order temporal error of the IMEX Euler step.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from . import brinkman as br
from . import chsolver as chs
from . import kernel as kern
from . import material as mat
from .grid import Grid2D, ScalarField

_x, _y, _t = sp.symbols("x y t", real=True)


@dataclass(frozen=True)
class Study:
    name: str
    ns: tuple
    errors: tuple

    @property
    def ratios(self):
        e = self.errors
        return tuple(e[i] / e[i + 1] for i in range(len(e) - 1))

    def to_dict(self):
        return {"name": self.name, "n": list(self.ns), "errors": list(self.errors),
                "ratios": list(self.ratios)}


@lru_cache(maxsize=None)
def brinkman_exact():
    psi = sp.sin(sp.pi * _x) ** 2 * sp.sin(sp.pi * _y) ** 2
    ux, uy = sp.diff(psi, _y), -sp.diff(psi, _x)
    p = sp.cos(sp.pi * _x) * sp.cos(sp.pi * _y)
    lap = lambda f: sp.diff(f, _x, 2) + sp.diff(f, _y, 2)  # noqa: E731
    fx = -lap(ux) + ux + sp.diff(p, _x)
    fy = -lap(uy) + uy + sp.diff(p, _y)
    f = lambda e: sp.lambdify((_x, _y), e, "numpy")  # noqa: E731
    return f(ux), f(uy), f(p), f(fx), f(fy)


def _sample(fn, X, Y):
    return np.broadcast_to(fn(X, Y), X.shape).astype(float)


def brinkman_error(n, viscous_form="divgrad", tol=1e-10):
    ux, uy, _, fx, fy = brinkman_exact()
    g = Grid2D(n, n)
    force = g.zero_vector()
    Xx, Yx = g.xface_centers()
    Xy, Yy = g.yface_centers()
    force.ux[1:-1, :] = _sample(fx, Xx, Yx)[1:-1, :]
    force.uy[:, 1:-1] = _sample(fy, Xy, Yy)[:, 1:-1]
    prob = br.BrinkmanProblem(g.scalar(1.0), g.scalar(1.0), force, viscous_form)
    sol = br.solve(prob, tol=tol)
    ex, ey = _sample(ux, Xx, Yx), _sample(uy, Xy, Yy)
    return float(np.sqrt(g.h ** 2 * (np.sum((sol.u.ux - ex) ** 2) + np.sum((sol.u.uy - ey) ** 2))))


def brinkman_study(ns=(32, 64, 128), viscous_form="divgrad") -> Study:
    return Study(f"brinkman-{viscous_form}", tuple(ns), tuple(brinkman_error(n, viscous_form) for n in ns))


@lru_cache(maxsize=None)
def ch_exact(theta=1.0):
    phi = sp.Rational(3, 10) * sp.cos(sp.pi * _x) * sp.cos(sp.pi * _y) * sp.exp(-_t)
    f2 = 2 * theta / (1 - phi ** 2)
    src = sp.diff(phi, _t) - (sp.diff(f2 * sp.diff(phi, _x), _x) + sp.diff(f2 * sp.diff(phi, _y), _y))
    return (sp.lambdify((_x, _y, _t), phi, "numpy"),
            sp.lambdify((_x, _y, _t), sp.simplify(src), "numpy"))


def ch_solve(n, dt, t_end, theta=1.0):
    phi_fn, src_fn = ch_exact(theta)
    g = Grid2D(n, n)
    X, Y = g.cell_centers()
    model = mat.make_model("log", "constant", theta, 1.0)
    kernel = kern.zero_kernel(g)
    steps = int(round(t_end / dt))
    ctl = chs.StepControl(dt, dt, dt)
    state = chs.ChState(ScalarField(g, phi_fn(X, Y, 0.0)), 0.0)

    def source(t):
        return src_fn(X, Y, t)

    for _ in range(steps):
        state = chs.step(state, None, kernel, model, ctl, transport="none", source=source)
    return state.phi.values, phi_fn(X, Y, steps * dt), g


def ch_error(n, dt=2e-3, t_end=0.1, extrapolate=True):
    coarse, exact, g = ch_solve(n, dt, t_end)
    if extrapolate:
        fine, _, _ = ch_solve(n, dt / 2, t_end)
        approx = 2.0 * fine - coarse
    else:
        approx = coarse
    return float(np.sqrt(g.h ** 2 * np.sum((approx - exact) ** 2)))


def ch_study(ns=(16, 32, 64), dt=2e-3, t_end=0.1) -> Study:
    return Study("cahn-hilliard", tuple(ns), tuple(ch_error(n, dt, t_end) for n in ns))


def run_preset(name):
    if name == "mms-brinkman":
        return [brinkman_study()]
    if name == "mms-ch":
        return [ch_study()]
    raise ValueError(f"unknown MMS preset {name!r}")
