"""The coupled run loop, the delta scan and file emission."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import brinkman as br
from . import chsolver as chs
from . import degiorgi as dg
from . import diagnostics as diag
from . import kernel as kern
from . import material as mat
from .config import SimConfig
from .errors import ConfigError, GuardBandError, GridMismatch
from .grid import Grid2D, ScalarField, read_chbf, read_field_csv, write_chbf


@dataclass
class Setup:
    grid: Grid2D
    model: mat.MaterialModel
    kernel: kern.Kernel
    body: object


def setup(cfg: SimConfig) -> Setup:
    g = cfg.grid
    grid = Grid2D(g.nx, g.ny, g.lx, g.ly)
    m = cfg.material
    model = mat.make_model(m.potential, m.mobility, m.theta, m.m0, m.theta_c)
    k = cfg.kernel
    kernel = kern.build(grid, k.kernel, k.kernel_amp, k.kernel_eps)
    model = chs.ensure_validated(model, kernel)
    body = br.body_force(grid, cfg.flow.force, cfg.flow.force_amp)
    return Setup(grid, model, kernel, body)


def initial_condition(cfg: SimConfig, grid: Grid2D, rng=None) -> ScalarField:
    ic = cfg.initial
    if ic.ic == "constant":
        return grid.scalar(ic.mean)
    if ic.ic == "spinodal":
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        noise = rng.uniform(-1.0, 1.0, grid.shape)
        noise -= np.mean(noise)
        peak = np.max(np.abs(noise))
        noise *= ic.amp / peak if peak > 0 else 0.0
        return ScalarField(grid, ic.mean + np.clip(noise, -ic.amp, ic.amp))
    if ic.ic == "stripe":
        x, _ = grid.cell_centers()
        d = 0.5 * ic.width - np.abs(x - 0.5 * grid.lx)
        return ScalarField(grid, ic.mean + ic.amp * np.tanh(d / (2.0 * grid.h)))
    if ic.ic == "file":
        path = Path(ic.path)
        f = read_field_csv(path, grid) if path.suffix == ".csv" else read_chbf(path)
        if f.grid != grid:
            raise GridMismatch(f"{path}: field grid {f.grid} differs from the configured grid")
        return f
    raise ConfigError(f"unknown initial condition {ic.ic!r}")


def _check_initial(phi, model):
    lo, hi = model.domain
    v = phi.values
    if not (np.min(v) > lo and np.max(v) < hi):
        raise ConfigError("initial data must lie strictly inside the potential domain")
    mean = float(np.mean(diag.symmetric_values(model, v)))
    if not abs(mean) < 1:
        raise ConfigError("initial mean must lie strictly inside the domain")


@dataclass
class ScanResult:
    delta: float
    flag: str                      # "conditions-met" | "conditions-not-met"
    empirical_delta: float
    window: tuple                  # (delta_lo, delta_hi) where both conditions hold, or ()
    rows: list = field(default_factory=list)
    certificate: object = None

    def to_dict(self):
        return {"delta": self.delta, "flag": self.flag, "empirical_delta": self.empirical_delta,
                "window": list(self.window), "rows": self.rows}


@dataclass
class RunResult:
    config: SimConfig
    trajectory: diag.Trajectory
    status: str = "completed"
    reason: str = ""
    certificate: object = None
    scan: ScanResult | None = None
    steps: int = 0
    rejected: int = 0
    model: object = None
    kernel: object = None
    windows: list = field(default_factory=list)


def _flow(state, mu, s: Setup, cfg, pi0):
    f = cfg.flow
    nu = br.viscosity_of_phi(state.phi, f.nu0, f.nu1)
    eta = s.grid.scalar(f.eta)
    force = br.assemble_forcing(mu, state.phi, s.body)
    prob = br.BrinkmanProblem(nu, eta, force, f.viscous_form)
    return br.solve(prob, tol=f.brinkman_tol, max_iter=f.brinkman_max_iter, pi0=pi0)


def run(cfg: SimConfig, progress=None, stop_after=None) -> RunResult:
    """Integrate the coupled system.  ``stop_after`` caps the number of accepted steps."""
    s = setup(cfg)
    st = cfg.stepping
    phi0 = initial_condition(cfg, s.grid)
    _check_initial(phi0, s.model)
    state = chs.ChState(phi0, 0.0)
    ctl = chs.StepControl(st.dt, st.dt_min, st.dt_max, st.shrink_factor, st.guard_band)
    traj = diag.Trajectory()
    res = RunResult(cfg, traj, model=s.model, kernel=s.kernel)

    d = cfg.degiorgi
    landmarks = [st.t_end]
    win_lo, win_hi, cadence = math.inf, -math.inf, math.inf
    if d.enabled:
        win_lo, win_hi = d.T - 3.0 * d.tau_tilde, d.T
        cadence = d.tau_tilde / 2.0 ** (d.n_max + 1)
        landmarks += [win_lo, win_hi]
    landmarks = sorted(set(x for x in landmarks if x > 0))

    def in_window(t):
        return win_lo - 1e-12 <= t <= win_hi + 1e-12

    def measure(state, step, dt, pi0):
        mu = chs.chemical_potential(state.phi, s.kernel, s.model)
        sol = _flow(state, mu, s, cfg, pi0) if cfg.flow.enabled else None
        traj.append(diag.record(state, sol, mu, s.kernel, s.model, step=step, dt=dt))
        if in_window(state.t) or (st.snapshot_every and step % st.snapshot_every == 0):
            traj.add_snapshot(state.t, state.phi)
        return sol

    sol = measure(state, 0, 0.0, None)
    step = 0
    limit = st.max_steps if stop_after is None else min(st.max_steps, stop_after)
    while state.t < st.t_end - 1e-12 and step < limit:
        dt = ctl.dt
        if in_window(state.t) and state.t < win_hi - 1e-12:
            dt = min(dt, cadence)
        u = sol.u if sol is not None else None
        if u is not None and st.transport != "none":
            umax = u.max_abs()
            if umax > 0:
                dt = min(dt, 0.5 * s.grid.h / umax)
        target = next(x for x in landmarks if x > state.t + 1e-12)
        if state.t + dt >= target - 1e-9 * max(1.0, target):
            dt = target - state.t
            land = target
        else:
            land = None
        try:
            new = chs.step(state, u, s.kernel, s.model, ctl, transport=st.transport, dt=dt)
        except GuardBandError:
            res.rejected += 1
            ctl = chs.adapt_dt(replace(ctl, dt=max(min(dt, ctl.dt), st.dt_min)), False)
            continue
        if land is not None:
            new = chs.ChState(new.phi, land)
        state = new
        step += 1
        ctl = chs.adapt_dt(ctl, True)
        sol = measure(state, step, dt, None if sol is None else sol.pi.values)
        if progress is not None:
            progress(step, state.t, dt)
    res.steps, res.trajectory = step, traj
    if state.t < st.t_end - 1e-12:
        res.status, res.reason = "stopped", f"step limit {limit} reached at t={state.t!r}"
    if d.enabled and state.t >= d.T - 1e-12:
        c_tilde = _c_tilde(traj, d)
        consts = dg.DeGiorgiConstants.measure(s.model, s.kernel, d.tau_tilde)
        if d.delta == "scan":
            res.scan = scan_delta(traj, d, s.model, consts, c_tilde)
            res.certificate = res.scan.certificate
        else:
            params = dg.DeGiorgiParams(d.T, d.tau_tilde, d.delta, d.n_max)
            res.certificate = dg.certify(traj, params, s.model, consts, c_tilde)
    return res


def _c_tilde(traj, d):
    t = traj.times
    sel = (t >= d.T - 3 * d.tau_tilde - 1e-12) & (t <= d.T + 1e-12)
    return float(np.max(traj.column("f1_l1")[sel]))


def zero_level_delta(window: dg.SnapshotWindow):
    """Largest delta whose lowest level 1 - 2 delta lies strictly above max |phi| on the window,
    so that every super-level set is empty."""
    peak = float(np.max(np.abs(window.values)))
    return 0.5 * (1.0 - peak) * (1.0 - 1e-9)


def _scan_pass(cert):
    if cert.mode == "lemma":
        return True
    return cert.mode == "empirical" and not any(cert.y) and not any(cert.y_minus)


def scan_delta(traj, d, model, consts, c_tilde, n=120) -> ScanResult:
    """Dense scan of delta over (1e-4, 1/4).

    A delta passes when its certificate passes, where the empirical route is
    taken strictly: every level set must be empty on both sides.  Returns the
    largest passing delta that also satisfies both admissibility conditions,
    else the largest passing delta with the flag ``conditions-not-met``.
    ``empirical_delta`` is the observed gap min(1 - |phi|) on [T - tau, T].
    """
    base = dg.DeGiorgiParams(d.T, d.tau_tilde, 0.1, d.n_max)
    win = dg.SnapshotWindow(traj, base, model)
    late = win.t >= d.T - d.tau_tilde - 1e-12
    emp = float(1.0 - np.max(np.abs(win.values[late])))
    grid = list(np.geomspace(1e-4, 0.25, n + 1)[:-1])
    z = zero_level_delta(win)
    if 1e-4 <= z < 0.25:
        grid = sorted(grid + [z])
    rows, ok = [], []
    for delta in grid:
        p = dg.DeGiorgiParams(d.T, d.tau_tilde, float(delta), d.n_max)
        cert = dg.certify(traj, p, model, consts, c_tilde, window=win)
        mono = bool(np.all(np.diff(cert.y) <= 0) and np.all(np.diff(cert.y_minus) <= 0))
        rows.append({"delta": float(delta), "cond_308": cert.cond_308, "cond_d4": cert.cond_d4,
                     "mode": cert.mode, "passed": _scan_pass(cert), "y_monotone": mono,
                     "y_zero": not any(cert.y) and not any(cert.y_minus)})
        if cert.cond_308 and cert.cond_d4:
            ok.append(float(delta))
    window = (min(ok), max(ok)) if ok else ()
    both = [r["delta"] for r in rows if r["passed"] and r["cond_308"] and r["cond_d4"]]
    passing = [r["delta"] for r in rows if r["passed"]]
    if both:
        delta, flag = max(both), "conditions-met"
    elif passing:
        delta, flag = max(passing), "conditions-not-met"
    else:
        delta, flag = None, "no-separation"
    final = None
    if delta is not None:
        p = dg.DeGiorgiParams(d.T, d.tau_tilde, delta, d.n_max)
        final = dg.certify(traj, p, model, consts, c_tilde, window=win)
        final.notes.append(f"delta from scan: {flag}")
    return ScanResult(delta, flag, emp, window, rows, final)


def certify_directory(trajdir, T, tau, delta="scan", n_max=None):
    """Re-run the analysis on an emitted output directory."""
    from .config import parse_text

    trajdir = Path(trajdir)
    cfg = parse_text((trajdir / "config.ini").read_text(), origin=str(trajdir / "config.ini"))
    s = setup(cfg)
    traj = diag.read_csv(trajdir / "diagnostics.csv")
    for line in (trajdir / "snapshots" / "index.csv").read_text().splitlines()[1:]:
        name, t = line.split(",")
        traj.snapshots.append((float(t), read_chbf(trajdir / "snapshots" / name)))
    n_max = cfg.degiorgi.n_max if n_max is None else n_max
    d = cfg.degiorgi.__class__(True, float(T), float(tau), delta, n_max)
    consts = dg.DeGiorgiConstants.measure(s.model, s.kernel, d.tau_tilde)
    c_tilde = _c_tilde(traj, d)
    if delta == "scan":
        scan = scan_delta(traj, d, s.model, consts, c_tilde)
        return scan.certificate, scan
    params = dg.DeGiorgiParams(d.T, d.tau_tilde, float(delta), n_max)
    return dg.certify(traj, params, s.model, consts, c_tilde), None


# -- output ----------------------------------------------------------------------------

def _write_dat(path, rows, header):
    lines = [f"# {header}"] + [" ".join(str(v) if isinstance(v, int) else repr(float(v)) for v in r)
                               for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def emit(res: RunResult, outdir) -> list:
    """Write diagnostics.csv, snapshots/, certificate.json, config.ini and plots/*.dat."""
    out = Path(outdir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(exist_ok=True)
    written = []
    diag.write_csv(out / "diagnostics.csv", res.trajectory)
    written.append(out / "diagnostics.csv")
    (out / "config.ini").write_text(res.config.to_ini())
    written.append(out / "config.ini")
    for old in (out / "snapshots").glob("*.chbf"):
        old.unlink()
    index = ["file,t"]
    for k, (t, f) in enumerate(res.trajectory.snapshots):
        name = f"snap_{k:06d}.chbf"
        write_chbf(out / "snapshots" / name, f)
        index.append(f"{name},{t!r}")
    (out / "snapshots" / "index.csv").write_text("\n".join(index) + "\n")
    written.append(out / "snapshots" / "index.csv")

    traj = res.trajectory
    t = traj.times
    _write_dat(out / "plots" / "sep_gap.dat", zip(t, traj.column("sep_gap")), "t sep_gap")
    _write_dat(out / "plots" / "f1_l1.dat", zip(t, traj.column("f1_l1")), "t f1_l1")
    try:
        wins = diag.dissipativity_windows(traj)
    except Exception:
        wins = []
    _write_dat(out / "plots" / "energy_windows.dat", [(w.t0, w.total) for w in wins], "t0 window_integral")
    written += [out / "plots" / n for n in ("sep_gap.dat", "f1_l1.dat", "energy_windows.dat")]
    cert = res.certificate
    if cert is not None:
        (out / "certificate.json").write_text(cert.to_json())
        _write_dat(out / "plots" / "y_n.dat", enumerate(cert.y), "n y_n")
        written += [out / "certificate.json", out / "plots" / "y_n.dat"]
    if res.scan is not None:
        (out / "scan.json").write_text(json.dumps(res.scan.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(out / "scan.json")
    status = {"status": res.status, "reason": res.reason, "steps": res.steps, "rejected": res.rejected,
              "viscosity_law": "affine nu0 + (nu1 - nu0)(1 + phi)/2 (default choice)"}
    (out / "status.json").write_text(json.dumps(status, indent=2, sort_keys=True) + "\n")
    written.append(out / "status.json")
    return written
