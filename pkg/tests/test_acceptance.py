"""The twelve acceptance criteria, one test each, each reporting a PASS/FAIL line."""
import io
import math
import time

import numpy as np
import pytest

from chb import brinkman as br
from chb import chsolver as chs
from chb import config as cfgmod
from chb import degiorgi as dg
from chb import diagnostics as diag
from chb import kernel as kern
from chb import material as mat
from chb import mms, run
from chb.grid import Grid2D, ScalarField

from conftest import ACCEPTANCE, direct_convolution


def report(n, ok, detail):
    ok = bool(ok)
    ACCEPTANCE.append((n, ok, detail))
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def spinodal():
    t0 = time.perf_counter()
    res = run.run(cfgmod.preset("spinodal"))
    return res, time.perf_counter() - t0


def test_01_mass_conservation():
    cfg = cfgmod.preset("spinodal", stepping={"t_end": 100.0}, degiorgi={"enabled": False})
    t0 = time.perf_counter()
    res = run.run(cfg, stop_after=2000)
    elapsed = time.perf_counter() - t0
    m = res.trajectory.column("mass")
    drift = float(np.max(np.abs(m - m[0])) / abs(m[0] + 1.0))
    report(1, res.steps == 2000 and drift <= 1e-12 and elapsed < 180,
           f"2000 steps at 64^2, max relative mass drift {drift:.2e} (<= 1e-12), {elapsed:.0f} s (< 180 s)")


def test_02_constant_steady_state():
    cfg = cfgmod.preset("constant", degiorgi={"enabled": False}, stepping={"snapshot_every": 1})
    res = run.run(cfg)
    phi0 = res.trajectory.snapshots[0][1].values
    change = max(float(np.max(np.abs(f.values - phi0))) for _, f in res.trajectory.snapshots)
    s = run.setup(cfg)
    phi = s.grid.scalar(0.2)
    mu = chs.chemical_potential(phi, s.kernel, s.model)
    f = cfg.flow
    prob = br.BrinkmanProblem(br.viscosity_of_phi(phi, f.nu0, f.nu1), s.grid.scalar(f.eta),
                              br.assemble_forcing(mu, phi, s.body), f.viscous_form)
    umax = br.solve(prob, tol=f.brinkman_tol).u.max_abs()
    report(2, res.steps == 100 and change <= 1e-12 and umax <= 10 * f.brinkman_tol,
           f"{res.steps} steps, max cell change {change:.1e} (<= 1e-12), |u|_inf {umax:.1e} (<= 10 tol)")


def test_03_convolution_oracle():
    g = Grid2D(16, 16)
    rng = np.random.default_rng(2024)
    k = kern.build(g, "gaussian", 3.0, 0.2)
    worst = 0.0
    for _ in range(50):
        v = rng.standard_normal(g.shape)
        fast = kern.convolve(k, ScalarField(g, v)).values
        slow = direct_convolution(k.samples, v, g.h)
        worst = max(worst, float(np.linalg.norm(fast - slow) / np.linalg.norm(slow)))
    report(3, worst <= 1e-10, f"50 random 16x16 fields, worst relative L2 error {worst:.1e} (<= 1e-10)")


def test_04_manufactured_solutions():
    t0 = time.perf_counter()
    b = mms.brinkman_study((32, 64, 128))
    c = mms.ch_study((16, 32, 64))
    elapsed = time.perf_counter() - t0
    ok = all(3.2 <= r <= 4.8 for r in b.ratios + c.ratios) and elapsed < 300
    report(4, ok, f"Brinkman ratios {', '.join(f'{r:.3f}' for r in b.ratios)}; "
                  f"CH ratios {', '.join(f'{r:.3f}' for r in c.ratios)} (in [3.2, 4.8]); {elapsed:.0f} s")


def test_05_assumption_validators():
    good = mat.validate_assumptions(mat.make_model("log", "degenerate"), 0.0)
    bad = mat.validate_assumptions(mat.make_model("flory", "reciprocal"), 0.0)
    ok = (good.passed and abs(good.alpha0 - 2) <= 1e-9 and abs(good.alpha1 - 2) <= 1e-9
          and not bad.passed and "A2" in bad.failures)
    report(5, ok, f"log+degenerate alpha0={good.alpha0!r} alpha1={good.alpha1!r}; "
                  f"flory+reciprocal failures {bad.failures}")


def test_06_entropy_identity():
    model = mat.make_model("log", "degenerate")
    r = np.linspace(-1, 1, 100_002)[1:-1]
    err = float(np.max(np.abs(mat.mobility(model, r) * mat.entropy_m_dprime(model, r) - 1.0)))
    at0 = (mat.entropy_m(model, 0.0), mat.entropy_m_prime(model, 0.0))
    report(6, r.size == 100_000 and err <= 1e-10 and at0 == (0.0, 0.0),
           f"max |m M'' - 1| = {err:.1e} over 1e5 points; M(0), M'(0) = {at0}")


def test_07_lemma_checker():
    rng = np.random.default_rng(7)
    violations = disagreements = 0
    for _ in range(1000):
        C = math.exp(rng.uniform(-3, 3))
        b = 1 + math.exp(rng.uniform(-3, 2))
        eps = rng.uniform(0.2, 2.0)
        y0 = dg.lemma32_threshold(C, b, eps) * rng.uniform(0, 1)
        y = [y0]
        for n in range(30):
            y.append(C * b ** n * y[-1] ** (1 + eps))
        violations += any(y[n] > y0 * b ** (-n / eps) * (1 + 1e-12) for n in range(31))
        disagreements += not dg.lemma32_verify(y, C, b, eps)
    report(7, violations == 0 and disagreements == 0,
           f"1000 draws, {violations} recursion violations, {disagreements} checker disagreements")


def _rk4(c, beta, g0, t_end=10.0, n=20000):
    h = t_end / n
    g, out = g0, np.empty(n + 1)
    out[0] = g0
    f = lambda x: c * c - beta * beta * x * x  # noqa: E731
    for i in range(n):
        k1 = f(g)
        k2 = f(g + 0.5 * h * k1)
        k3 = f(g + 0.5 * h * k2)
        k4 = f(g + h * k3)
        g += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        out[i + 1] = g
    return np.linspace(0, t_end, n + 1), out


def test_08_riccati_bound():
    worst = math.inf
    for c in np.linspace(0.2, 2.0, 5):
        for beta in np.linspace(0.2, 2.0, 5):
            for frac in np.linspace(0.0, 0.9, 5):
                g0 = frac * c / beta
                t, g = _rk4(c, beta, g0)
                worst = min(worst, float(np.min(dg.riccati_bound(c, beta, g0, t) - g)))
    t = np.linspace(0, 10, 101)
    tanh_err = max(float(np.max(np.abs(dg.riccati_bound(c, b, 0.0, t) - (c / b) * np.tanh(c * b * t))))
                   for c in (0.5, 1.0, 2.0) for b in (0.5, 1.0, 2.0))
    report(8, worst >= -1e-6 and tanh_err <= 1e-9,
           f"min(bound - RK4) = {worst:.1e} (>= -1e-6) on 125 cases; g0 = 0 tanh error {tanh_err:.1e}")


def test_09_dissipative_windows(spinodal):
    res, _ = spinodal
    tr = res.trajectory
    wins = diag.dissipativity_windows(tr, spacing=0.25)
    early = max(w.total for w in wins if w.t0 <= 1.0 + 1e-12)
    late = max(w.total for w in wins if w.t0 > 1.0 + 1e-12)
    sup_l2 = float(np.max(tr.column("l2_phi") ** 2))
    report(9, math.isfinite(sup_l2) and late <= 1.05 * early,
           f"sup ||phi||^2 = {sup_l2:.4f}; windows after t=1 max {late:.3f} <= 1.05 x {early:.3f}")


def test_10_uniform_f1_bound(spinodal):
    res, _ = spinodal
    tr = res.trajectory
    t, f1 = tr.times, tr.column("f1_l1")
    late = float(np.max(f1[t >= 1.0]))
    ref = float(np.max(f1[(t >= 1.0) & (t <= 2.0)]))
    logs_finite = bool(np.all(np.isfinite(tr.column("log_plus"))) and np.all(np.isfinite(tr.column("log_minus"))))
    mean0 = tr.records[0].mass / res.kernel.grid.area
    omega_ok = bool(np.all(tr.column("omega1_frac") >= (1 + mean0) / 4))
    report(10, late <= 1.05 * ref and logs_finite and omega_ok,
           f"max_(t>=1) ||F'||_L1 = {late:.4f} <= 1.05 x {ref:.4f}; logs finite {logs_finite}; "
           f"omega1 on all {len(tr.records)} records {omega_ok}")


def test_11_separation(spinodal):
    res, elapsed = spinodal
    tr, scan = res.trajectory, res.scan
    t = tr.times
    gap = float(np.min(tr.column("sep_gap")[(t >= 9.0 - 1e-12) & (t <= 10.0 + 1e-12)]))
    cert = res.certificate
    delta = scan.delta if scan.delta is not None else 0.0
    zero = cert is not None and not any(cert.y) and not any(cert.y_minus)
    mono = all(r["y_monotone"] for r in scan.rows)
    report(11, delta >= 1e-3 and gap >= delta and zero and mono and elapsed < 600,
           f"delta = {delta:.4f} ({scan.flag}), min sep_gap on [9,10] = {gap:.4f}, all y_n = 0 {zero}, "
           f"y_n monotone for all {len(scan.rows)} tested deltas {mono}, {elapsed:.0f} s")


def test_12_determinism():
    cfg = cfgmod.preset("spinodal", stepping={"t_end": 0.3}, degiorgi={"enabled": False})
    a = diag.write_csv(io.StringIO(), run.run(cfg).trajectory)
    b = diag.write_csv(io.StringIO(), run.run(cfg).trajectory)
    report(12, a == b and len(a) > 0, f"two runs, {len(a.splitlines()) - 1} rows, byte-identical {a == b}")
