"""Preconditioned conjugate gradients with deterministic reductions."""
import numpy as np
from scipy import fft as sfft

from .errors import SolverError


def _dot(a, b):
    return float(np.sum(a * b))


def pcg(apply_A, b, x0=None, precond=None, rtol=1e-10, atol=0.0, maxiter=2000):
    """Solve ``A x = b`` for SPD ``A`` given as a callable on arrays of ``b.shape``.

    ``precond`` is an SPD approximation of ``A^{-1}`` given as a callable, or
    ``None``.

    Stops when ``||r|| <= max(rtol * ||b||, atol)``.  Returns ``(x, iterations,
    residual_norm)``; raises :class:`SolverError` if ``maxiter`` is exhausted or
    the iteration breaks down.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    r = b - apply_A(x)
    bnorm = np.sqrt(_dot(b, b))
    target = max(rtol * bnorm, atol)
    rnorm = np.sqrt(_dot(r, r))
    if rnorm <= target:
        return x, 0, rnorm
    z = r if precond is None else precond(r)
    p = z.copy()
    rz = _dot(r, z)
    trace = []
    for it in range(1, maxiter + 1):
        Ap = apply_A(p)
        pAp = _dot(p, Ap)
        if not pAp > 0:
            raise SolverError(f"CG breakdown: p.Ap = {pAp!r} (operator not SPD?)", trace)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.sqrt(_dot(r, r))
        trace.append(rnorm)
        if rnorm <= target:
            return x, it, rnorm
        z = r if precond is None else precond(r)
        rz_new = _dot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise SolverError(f"CG did not reach {target:.3e} in {maxiter} iterations (last {rnorm:.3e})", trace[-20:])


class NeumannHelmholtz:
    """Exact inverse of ``I - s * Laplacian`` with homogeneous Neumann walls.

    The 5-point Neumann Laplacian on a cell-centred grid is diagonalised by
    the type-II DCT, so the solve costs two transforms.
    """

    def __init__(self, nx, ny, h):
        kx = (2.0 - 2.0 * np.cos(np.pi * np.arange(nx) / nx)) / h ** 2
        ky = (2.0 - 2.0 * np.cos(np.pi * np.arange(ny) / ny)) / h ** 2
        self.eig = kx[:, None] + ky[None, :]

    def solver(self, s):
        denom = 1.0 + s * self.eig

        def solve(r):
            return sfft.idctn(sfft.dctn(r, type=2, norm="ortho") / denom, type=2, norm="ortho")

        return solve
