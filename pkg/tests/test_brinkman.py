import numpy as np
import pytest

from chb import brinkman as br
from chb import material as mat
from chb.errors import ConfigError, GridMismatch, SolverError
from chb.grid import (Grid2D, ScalarField, div_face_to_cc, face_l2, grad_cc_to_face, norms)


def random_force(g, rng):
    f = g.zero_vector()
    f.ux[1:-1, :] = rng.standard_normal((g.nx - 1, g.ny))
    f.uy[:, 1:-1] = rng.standard_normal((g.nx, g.ny - 1))
    return f


def problem(g, force, rng=None, form="divgrad"):
    nu = g.scalar(1.0) if rng is None else ScalarField(g, rng.uniform(1.0, 2.0, g.shape))
    return br.BrinkmanProblem(nu, g.scalar(0.5), force, form)


def test_viscosity_law():
    g = Grid2D(4, 4)
    assert np.all(br.viscosity_of_phi(g.scalar(-1.0), 1.0, 3.0).values == 1.0)
    assert np.all(br.viscosity_of_phi(g.scalar(1.0), 1.0, 3.0).values == 3.0)
    assert np.all(br.viscosity_of_phi(g.scalar(0.3), 2.0, 2.0).values == 2.0)
    s = np.linspace(-2, 2, 4001).reshape(4001, 1) * np.ones((1, 4))
    nu = br.viscosity_of_phi(ScalarField(Grid2D(4001, 4, 4001.0, 4.0), s), 1.0, 3.0).values[:, 0]
    assert np.max(np.abs(np.diff(nu) / np.diff(s[:, 0]))) == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ConfigError):
        br.viscosity_of_phi(g.scalar(0.0), 0.0, 1.0)


def test_forcing_examples(rng):
    g = Grid2D(8, 8)
    h = br.body_force(g, "vortex", 2.0)
    assert br.assemble_forcing(g.scalar(3.0), g.scalar(0.1)).max_abs() == 0.0
    F = br.assemble_forcing(ScalarField(g, rng.standard_normal(g.shape)), g.scalar(0.1), h)
    assert (F - h).max_abs() == 0.0
    mu, phi = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    F = br.assemble_forcing(ScalarField(g, mu), ScalarField(g, phi), h)
    ox = np.zeros((9, 8))
    oy = np.zeros((8, 9))
    for i in range(1, 8):
        for j in range(8):
            ox[i, j] = 0.5 * (mu[i, j] + mu[i - 1, j]) * (phi[i, j] - phi[i - 1, j]) / g.h + h.ux[i, j]
    for i in range(8):
        for j in range(1, 8):
            oy[i, j] = 0.5 * (mu[i, j] + mu[i, j - 1]) * (phi[i, j] - phi[i, j - 1]) / g.h + h.uy[i, j]
    assert np.allclose(F.ux, ox, atol=1e-12) and np.allclose(F.uy, oy, atol=1e-12)
    with pytest.raises(GridMismatch):
        br.assemble_forcing(Grid2D(4, 4).scalar(0.0), g.scalar(0.0))


def test_vortex_force_divergence_free():
    g = Grid2D(32, 32)
    f = br.body_force(g, "vortex", 1.0)
    assert f.boundary_max() == 0.0
    assert np.max(np.abs(div_face_to_cc(f).values)) < 1e-12


def test_zero_forcing():
    g = Grid2D(16, 16)
    sol = br.solve(problem(g, g.zero_vector()))
    assert sol.u.max_abs() == 0.0 and np.all(sol.pi.values == 0.0)
    assert br.energy_check(problem(g, g.zero_vector()), sol) == (0.0, 0.0)


@pytest.mark.parametrize("form", br.VISCOUS_FORMS)
def test_gradient_forcing_is_pressure(rng, form):
    g = Grid2D(16, 16)
    psi = rng.standard_normal(g.shape)
    sol = br.solve(problem(g, grad_cc_to_face(ScalarField(g, psi)), rng, form), tol=1e-10)
    assert sol.u.max_abs() <= 1e-9
    assert np.max(np.abs(sol.pi.values - (psi - psi.mean()))) <= 1e-8


@pytest.mark.parametrize("form", br.VISCOUS_FORMS)
@pytest.mark.parametrize("method", ["cg", "richardson"])
def test_solution_contract(rng, form, method):
    g = Grid2D(16, 16)
    prob = problem(g, random_force(g, rng), rng, form)
    tol = 1e-8
    sol = br.solve(prob, tol=tol, method=method, max_iter=2000)
    assert sol.div_max <= tol and sol.residual <= tol
    assert np.max(np.abs(div_face_to_cc(sol.u).values)) <= tol
    assert abs(np.mean(sol.pi.values)) <= 1e-14
    assert sol.u.boundary_max() == 0.0
    lhs, rhs = br.energy_check(prob, sol)
    assert lhs <= rhs + 1e-6


def test_methods_agree(rng):
    g = Grid2D(16, 16)
    prob = problem(g, random_force(g, rng), rng)
    a = br.solve(prob, tol=1e-11)
    b = br.solve(prob, tol=1e-11, method="richardson", max_iter=5000)
    assert (a.u - b.u).max_abs() <= 1e-9


def test_linearity(rng):
    g = Grid2D(16, 16)
    tol = 1e-8
    for _ in range(5):
        f1, f2 = random_force(g, rng), random_force(g, rng)
        p = problem(g, f1, rng)
        u1 = br.solve(p, tol=tol).u
        u2 = br.solve(br.BrinkmanProblem(p.nu, p.eta, f2), tol=tol).u
        u12 = br.solve(br.BrinkmanProblem(p.nu, p.eta, f1 + f2), tol=tol).u
        assert (u12 - u1 - u2).max_abs() <= 10 * tol * max(1.0, u12.max_abs())


def test_doubling(rng):
    g = Grid2D(16, 16)
    f = random_force(g, rng)
    p1, p2 = problem(g, f), problem(g, f * 2.0)
    s1, s2 = br.solve(p1, tol=1e-11), br.solve(p2, tol=1e-11)
    assert (s2.u - s1.u * 2.0).max_abs() <= 1e-9
    l1, _ = br.energy_check(p1, s1)
    l2, _ = br.energy_check(p2, s2)
    assert l2 == pytest.approx(4 * l1, rel=1e-8)


def test_energy_identity_exact_for_constant_viscosity(rng):
    g = Grid2D(16, 16)
    p = problem(g, random_force(g, rng))
    lhs, rhs = br.energy_check(p, br.solve(p, tol=1e-12))
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_solver_error_carries_trace(rng):
    g = Grid2D(16, 16)
    with pytest.raises(SolverError) as info:
        br.solve(problem(g, random_force(g, rng), rng), tol=1e-14, max_iter=2, method="richardson")
    assert len(info.value.trace) > 0


def test_problem_validation():
    g = Grid2D(8, 8)
    with pytest.raises(ConfigError):
        br.BrinkmanProblem(g.scalar(0.0), g.scalar(1.0), g.zero_vector())
    with pytest.raises(ConfigError):
        br.BrinkmanProblem(g.scalar(1.0), g.scalar(-1.0), g.zero_vector())
    with pytest.raises(ConfigError):
        br.BrinkmanProblem(g.scalar(1.0), g.scalar(1.0), g.zero_vector(), "curlcurl")


def korn_ratio(n):
    g = Grid2D(n, n)
    x, y = g.cell_centers()
    phi = ScalarField(g, 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y) + 0.2 * np.sin(2 * np.pi * x))
    model = mat.make_model()
    mu = ScalarField(g, mat.f_prime(model, phi.values))
    h = br.body_force(g, "vortex", 1.0)
    nu = br.viscosity_of_phi(phi, 1.0, 2.0)
    sol = br.solve(br.BrinkmanProblem(nu, g.scalar(1.0), br.assemble_forcing(mu, phi, h)), tol=1e-10)
    h1 = np.sqrt(face_l2(sol.u) ** 2 + br.velocity_grad_sq(sol.u))
    return h1 / (norms(phi)[3] + face_l2(h))


def test_korn_constant_stable_under_refinement():
    c = [korn_ratio(n) for n in (32, 64, 128)]
    assert max(c) <= 1.2 * min(c), c
