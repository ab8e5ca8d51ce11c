"""Steady Brinkman flow with variable viscosity on the MAC grid.

    -div(nu grad u) + eta u + grad pi = f,   div u = 0,   u = 0 on the walls.

Unknowns are the interior face velocities; wall faces carry the no-slip value
zero strongly.  The viscous operator is assembled from its energy
``sum_k w_k nu_k (D u)_k^2``: normal derivatives live at cell centres, shear
derivatives at cell corners.  On a wall corner the tangential velocity has the
mirrored ghost value, so the derivative there is ``2 u / h`` with weight 1/2.
This keeps the operator symmetric and makes the discrete energy identity exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigError, GridMismatch, SolverError
from .grid import Grid2D, ScalarField, StaggeredVectorField, face_average_arrays, grad_arrays

VISCOUS_FORMS = ("divgrad", "symgrad")
FORCES = ("zero", "constant", "vortex")


def viscosity_of_phi(phi: ScalarField, nu0, nu1) -> ScalarField:
    """Affine law nu0 + (nu1 - nu0)(1 + clamp(phi, -1, 1))/2."""
    if not nu0 > 0:
        raise ConfigError(f"nu0 must be positive, got {nu0!r}")
    if nu1 < nu0:
        raise ConfigError(f"need nu1 >= nu0, got nu0={nu0!r}, nu1={nu1!r}")
    s = np.clip(phi.values, -1.0, 1.0)
    return ScalarField(phi.grid, nu0 + (nu1 - nu0) * 0.5 * (1.0 + s))


def body_force(grid: Grid2D, kind="zero", amp=0.0) -> StaggeredVectorField:
    """Named body-force presets sampled on faces (walls zero)."""
    f = grid.zero_vector()
    if kind == "zero":
        return f
    if kind == "constant":
        f.ux[1:-1, :] = amp
    elif kind == "vortex":
        # curl of sin^2(pi x / lx) sin^2(pi y / ly), divergence free and zero on the walls
        kx, ky = np.pi / grid.lx, np.pi / grid.ly
        x, y = grid.xface_centers()
        f.ux[:] = amp * np.sin(kx * x) ** 2 * ky * np.sin(2 * ky * y)
        x, y = grid.yface_centers()
        f.uy[:] = -amp * kx * np.sin(2 * kx * x) * np.sin(ky * y) ** 2
    else:
        raise ConfigError(f"unknown body force {kind!r}; expected one of {FORCES}")
    f.ux[[0, -1], :] = 0.0
    f.uy[:, [0, -1]] = 0.0
    return f


def assemble_forcing(mu: ScalarField, phi: ScalarField, h=None) -> StaggeredVectorField:
    """faceavg(mu) grad(phi) + h on faces."""
    if mu.grid != phi.grid or (h is not None and h.grid != phi.grid):
        raise GridMismatch("mu, phi and the body force must share a grid")
    gx, gy = grad_arrays(phi.values, phi.grid.h)
    mx, my = face_average_arrays(mu.values)
    fx, fy = mx * gx, my * gy
    if h is not None:
        fx = fx + h.ux
        fy = fy + h.uy
    fx[[0, -1], :] = 0.0
    fy[:, [0, -1]] = 0.0
    return StaggeredVectorField(phi.grid, fx, fy)


@dataclass
class BrinkmanProblem:
    nu: ScalarField
    eta: ScalarField
    force: StaggeredVectorField
    viscous_form: str = "divgrad"

    def __post_init__(self):
        if not (self.nu.grid == self.eta.grid == self.force.grid):
            raise GridMismatch("nu, eta and force must share a grid")
        if not np.min(self.nu.values) > 0:
            raise ConfigError("viscosity must be positive")
        if np.min(self.eta.values) < 0:
            raise ConfigError("eta must be nonnegative")
        if self.viscous_form not in VISCOUS_FORMS:
            raise ConfigError(f"unknown viscous form {self.viscous_form!r}")

    @property
    def grid(self):
        return self.nu.grid


@dataclass(frozen=True)
class FlowSolution:
    u: StaggeredVectorField
    pi: ScalarField
    residual: float
    div_max: float
    iterations: int = 0
    trace: tuple = field(default=(), repr=False)


# -- operators -------------------------------------------------------------------

class _Ops:
    """Difference matrices over the interior face unknowns ``[ux; uy]``."""

    def __init__(self, grid: Grid2D):
        nx, ny, h = grid.nx, grid.ny, grid.h
        self.grid = grid
        self.nux = (nx - 1) * ny
        self.nuy = nx * (ny - 1)
        n = self.nux + self.nuy
        ix = np.full((nx + 1, ny), -1)
        ix[1:-1, :] = np.arange(self.nux).reshape(nx - 1, ny)
        iy = np.full((nx, ny + 1), -1)
        iy[:, 1:-1] = self.nux + np.arange(self.nuy).reshape(nx, ny - 1)
        self.ix, self.iy = ix, iy

        def mat(rows, cols, vals, nrows):
            rows, cols, vals = (np.concatenate(a) for a in (rows, cols, vals))
            keep = cols >= 0
            return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(nrows, n))

        cell = np.arange(nx * ny).reshape(nx, ny)
        one = np.ones((nx, ny)) / h
        self.Bx = mat([cell.ravel()] * 2, [ix[1:, :].ravel(), ix[:-1, :].ravel()],
                      [one.ravel(), -one.ravel()], nx * ny)
        self.By = mat([cell.ravel()] * 2, [iy[:, 1:].ravel(), iy[:, :-1].ravel()],
                      [one.ravel(), -one.ravel()], nx * ny)

        corner = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
        # d(ux)/dy at corners: interior rows use neighbours, wall rows use the ghost
        rows, cols, vals = [], [], []
        c = corner[:, 1:-1]
        rows += [c.ravel(), c.ravel()]
        cols += [ix[:, 1:].ravel(), ix[:, :-1].ravel()]
        vals += [np.full(c.size, 1 / h), np.full(c.size, -1 / h)]
        rows += [corner[:, 0], corner[:, -1]]
        cols += [ix[:, 0], ix[:, -1]]
        vals += [np.full(nx + 1, 2 / h), np.full(nx + 1, -2 / h)]
        self.Cyx = mat(rows, cols, vals, corner.size)
        rows, cols, vals = [], [], []
        c = corner[1:-1, :]
        rows += [c.ravel(), c.ravel()]
        cols += [iy[1:, :].ravel(), iy[:-1, :].ravel()]
        vals += [np.full(c.size, 1 / h), np.full(c.size, -1 / h)]
        rows += [corner[0, :], corner[-1, :]]
        cols += [iy[0, :], iy[-1, :]]
        vals += [np.full(ny + 1, 2 / h), np.full(ny + 1, -2 / h)]
        self.Cxy = mat(rows, cols, vals, corner.size)

        w = np.ones((nx + 1, ny + 1))
        w[[0, -1], :] = 0.5
        w[:, [0, -1]] = 0.5
        self.corner_weight = w.ravel()
        self.div = (self.Bx + self.By).tocsr()
        self.divT = self.div.T.tocsr()
        self.n = n
        self._maps = {}
        ones = np.ones(nx * ny)
        self.laplace = self.assemble(ones, self.corner_values(np.ones((nx, ny))), np.zeros(n), "divgrad")

    def corner_values(self, nu):
        nx, ny = nu.shape
        s = np.zeros((nx + 1, ny + 1))
        k = np.zeros((nx + 1, ny + 1))
        for di in (0, 1):
            for dj in (0, 1):
                s[di:di + nx, dj:dj + ny] += nu
                k[di:di + nx, dj:dj + ny] += 1.0
        return (s / k).ravel()

    def _weight_map(self, form):
        """Sparse map from weights [nu_cell, nu_corner, eta_face] to the CSR data of A.

        Every term of A is ``R^T diag(w) R`` for a difference matrix R with a few
        entries per row, so A depends linearly on the weights through a fixed
        sparsity pattern.
        """
        n, nc = self.n, self.Bx.shape[0]
        nk = self.Cyx.shape[0]
        if form == "divgrad":
            terms = [(self.Bx, 0, 1.0), (self.By, 0, 1.0), (self.Cyx, nc, 1.0), (self.Cxy, nc, 1.0)]
        else:
            terms = [(self.Bx, 0, 2.0), (self.By, 0, 2.0), ((self.Cyx + self.Cxy).tocsr(), nc, 1.0)]
        I, J, coef, widx = [], [], [], []
        for R, off, scale in terms:
            R = R.tocsr()
            R.sort_indices()
            cnt = np.diff(R.indptr)
            rows = np.arange(R.shape[0])
            for a in range(cnt.max()):
                for b in range(cnt.max()):
                    r = rows[cnt > max(a, b)]
                    pa, pb = R.indptr[r] + a, R.indptr[r] + b
                    I.append(R.indices[pa])
                    J.append(R.indices[pb])
                    coef.append(scale * R.data[pa] * R.data[pb])
                    widx.append(off + r)
        diag = np.arange(n)
        I.append(diag)
        J.append(diag)
        coef.append(np.ones(n))
        widx.append(nc + nk + diag)
        I, J, coef, widx = (np.concatenate(x) for x in (I, J, coef, widx))
        key = I.astype(np.int64) * n + J
        ukey, pos = np.unique(key, return_inverse=True)
        P = sp.csr_matrix((coef, (pos, widx)), shape=(ukey.size, nc + nk + n))
        rows = ukey // n
        indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
        return P, (ukey % n).astype(np.int32), indptr.astype(np.int32)

    def assemble(self, nu_cell, nu_corner, eta_face, form):
        if form not in self._maps:
            self._maps[form] = self._weight_map(form)
        P, indices, indptr = self._maps[form]
        w = np.concatenate([nu_cell, self.corner_weight * nu_corner, eta_face])
        return sp.csr_matrix((P @ w, indices, indptr), shape=(self.n, self.n))

    def pack(self, v: StaggeredVectorField):
        return np.concatenate([v.ux[1:-1, :].ravel(), v.uy[:, 1:-1].ravel()])

    def unpack(self, x):
        g = self.grid
        v = g.zero_vector()
        v.ux[1:-1, :] = x[: self.nux].reshape(g.nx - 1, g.ny)
        v.uy[:, 1:-1] = x[self.nux:].reshape(g.nx, g.ny - 1)
        return v


@lru_cache(maxsize=8)
def operators(grid: Grid2D) -> _Ops:
    return _Ops(grid)


def _eta_faces(problem):
    ex, ey = face_average_arrays(problem.eta.values)
    return np.concatenate([ex[1:-1, :].ravel(), ey[:, 1:-1].ravel()])


def velocity_operator(problem: BrinkmanProblem):
    """Symmetric positive definite velocity block as CSR."""
    ops = operators(problem.grid)
    nu = problem.nu.values
    return ops.assemble(nu.ravel(), ops.corner_values(nu), _eta_faces(problem), problem.viscous_form)


def _factor(A):
    # A is symmetric: its CSR arrays read as CSC describe the same matrix
    csc = sp.csc_matrix((A.data, A.indices, A.indptr), shape=A.shape)
    return splu(csc, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True))


def _mean_free(p):
    return p - np.mean(p)


def solve(problem: BrinkmanProblem, tol=1e-8, max_iter=500, pi0=None, method="cg") -> FlowSolution:
    """Uzawa iteration on the pressure with exact (sparse LU) velocity solves.

    ``method="cg"`` accelerates the iteration by conjugate gradients on the
    Schur complement ``div A^{-1} div^T`` preconditioned by the cell viscosity;
    ``method="richardson"`` is the plain update ``pi <- pi - rho div u`` with
    ``rho = mean(nu)``.  Stops when both the divergence and the momentum
    residual are below ``tol`` in the max norm.  The momentum residual is
    scaled by ``max(1, |f|_inf)`` since the entries of the velocity block grow
    like ``h^-2`` and its absolute roundoff floor grows with them.
    """
    grid = problem.grid
    ops = operators(grid)
    f = ops.pack(problem.force)
    nu = problem.nu.values.ravel()
    A = velocity_operator(problem)
    lu = _factor(A)
    pi = np.zeros(grid.nx * grid.ny) if pi0 is None else _mean_free(np.asarray(pi0, dtype=float).ravel())
    u = lu.solve(f + ops.divT @ pi)
    trace = []
    fscale = max(1.0, float(np.max(np.abs(f), initial=0.0)))

    def residuals(u, pi):
        mom = float(np.max(np.abs(A @ u - ops.divT @ pi - f), initial=0.0)) / fscale
        return mom, float(np.max(np.abs(ops.div @ u), initial=0.0))

    def done(it):
        mom, dv = residuals(u, pi)
        trace.append(max(mom, dv))
        if max(mom, dv) <= tol:
            return FlowSolution(ops.unpack(u), ScalarField(grid, _mean_free(pi).reshape(grid.shape)),
                                mom, dv, it, tuple(trace))
        return None

    sol = done(0)
    if sol is not None:
        return sol
    if method == "richardson":
        rho = float(np.mean(nu))
        for it in range(1, max_iter + 1):
            pi = _mean_free(pi - rho * (ops.div @ u))
            u = lu.solve(f + ops.divT @ pi)
            sol = done(it)
            if sol is not None:
                return sol
    elif method == "cg":
        r = _mean_free(-(ops.div @ u))
        z = _mean_free(nu * r)
        p = z.copy()
        rz = float(np.sum(r * z))
        for it in range(1, max_iter + 1):
            q = lu.solve(ops.divT @ p)
            Sp = ops.div @ q
            pSp = float(np.sum(p * Sp))
            if not pSp > 0:
                raise SolverError(f"Schur complement CG breakdown (p.Sp = {pSp!r})", trace)
            alpha = rz / pSp
            pi += alpha * p
            u += alpha * q
            r = _mean_free(r - alpha * Sp)
            sol = done(it)
            if sol is not None:
                return sol
            z = _mean_free(nu * r)
            rz_new = float(np.sum(r * z))
            p = z + (rz_new / rz) * p
            rz = rz_new
    else:
        raise ConfigError(f"unknown Uzawa method {method!r}")
    raise SolverError(f"Brinkman solve did not reach tol={tol:g} in {max_iter} iterations", trace[-20:])


def velocity_grad_sq(u: StaggeredVectorField) -> float:
    """Discrete ||grad u||^2 including the no-slip wall contributions."""
    ops = operators(u.grid)
    x = ops.pack(u)
    return float(u.grid.h ** 2 * np.sum(x * (ops.laplace @ x)))


def energy_check(problem: BrinkmanProblem, sol: FlowSolution):
    """Return ``(nu0 ||grad u||^2 + <eta u, u>, <force, u>)`` with nu0 = min(nu)."""
    ops = operators(problem.grid)
    h2 = problem.grid.h ** 2
    x = ops.pack(sol.u)
    eta = _eta_faces(problem)
    nu0 = float(np.min(problem.nu.values))
    lhs = nu0 * velocity_grad_sq(sol.u) + h2 * float(np.sum(eta * x * x))
    rhs = h2 * float(np.sum(ops.pack(problem.force) * x))
    return lhs, rhs
