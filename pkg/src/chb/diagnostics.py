"""Per-step measurements and time-windowed checks of the dissipative estimates.

Quantities that are defined on the symmetric interval (separation gap, the two
logarithmic integrals, the measure of Omega_1) are evaluated on ``psi = 2 phi - 1``
when the model lives on ``(0, 1)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import brinkman as br
from . import chsolver as chs
from . import material as mat
from .errors import DomainError, WindowError
from .grid import ScalarField, face_l2, integrate, norms


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    l2_phi: float
    h1_phi: float
    linf_phi: float
    sep_gap: float
    u_h1: float
    mmu_l2: float
    f1_l1: float
    log_plus: float
    log_minus: float
    omega1_frac: float
    step: int = 0
    dt: float = 0.0


FIELDS = [f.name for f in fields(DiagnosticsRecord)]
CSV_COLUMNS = ["step", "t", "dt"] + [n for n in FIELDS if n not in ("step", "t", "dt")]


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, ScalarField)

    def append(self, rec: DiagnosticsRecord):
        if self.records and not rec.t > self.records[-1].t:
            raise ValueError(f"record times must increase: {rec.t!r} after {self.records[-1].t!r}")
        self.records.append(rec)

    def add_snapshot(self, t, phi: ScalarField):
        if self.snapshots and not t > self.snapshots[-1][0]:
            raise ValueError(f"snapshot times must increase: {t!r}")
        self.snapshots.append((float(t), phi.copy()))

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def times(self):
        return self.column("t")


def symmetric_values(model, values):
    lo, hi = model.domain
    if (lo, hi) == (-1.0, 1.0):
        return values
    return (2.0 * values - (lo + hi)) / (hi - lo)


def omega1_check(phi, phi_bar0):
    """Fraction of cells with phi >= -(1 - phi_bar0)/2 and whether it is >= (1 + phi_bar0)/4."""
    if not abs(phi_bar0) < 1:
        raise DomainError(f"mean must lie in (-1, 1), got {phi_bar0!r}")
    v = phi.values if isinstance(phi, ScalarField) else np.asarray(phi)
    frac = float(np.count_nonzero(v >= -(1.0 - phi_bar0) / 2.0)) / v.size
    return frac, frac >= (1.0 + phi_bar0) / 4.0


def record(state, sol, mu, kernel, model, step=0, dt=0.0) -> DiagnosticsRecord:
    """Measure one state.  ``sol`` is a FlowSolution or None (no flow); ``mu`` is unused
    by the norms but checked for finiteness."""
    phi = state.phi
    g = phi.grid
    v = phi.values
    lo, hi = model.domain
    if not (np.min(v) > lo and np.max(v) < hi):
        raise DomainError("state has left the open potential domain")
    if mu is not None and not np.all(np.isfinite(mu.values)):
        raise DomainError("non-finite chemical potential")
    model = chs.ensure_validated(model, kernel)
    _, l2, _, h1 = norms(phi)
    s = symmetric_values(model, v)
    area = g.area
    linf = float(np.max(np.abs(s)))
    h2 = g.h ** 2
    lp = float(h2 * np.sum(-np.log1p(s) + np.log(2.0)))   # |log((1+s)/2)| = log 2 - log(1+s)
    lm = float(h2 * np.sum(-np.log1p(-s) + np.log(2.0)))
    f1 = float(h2 * np.sum(np.abs(mat.f_prime(model, v))))
    flux = chs.regularized_flux(phi, None, kernel, model)
    u_h1 = 0.0 if sol is None else float(np.sqrt(max(br.velocity_grad_sq(sol.u), 0.0)))
    frac, _ = omega1_check(s, float(h2 * np.sum(s)) / area)
    return DiagnosticsRecord(
        t=float(state.t), mass=integrate(phi), l2_phi=l2, h1_phi=h1, linf_phi=linf,
        sep_gap=1.0 - linf, u_h1=u_h1, mmu_l2=face_l2(flux), f1_l1=f1,
        log_plus=lp, log_minus=lm, omega1_frac=frac, step=int(step), dt=float(dt))


def write_csv(path_or_buf, traj: Trajectory):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in traj.records:
        d = asdict(r)
        w.writerow([int(d[c]) if c == "step" else repr(float(d[c])) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> Trajectory:
    traj = Trajectory()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {k: (int(v) if k == "step" else float(v)) for k, v in row.items()}
            traj.records.append(DiagnosticsRecord(**kw))
    return traj


# -- time windows ------------------------------------------------------------------

def window_integral(t, v, a, b):
    """Integral over [a, b] of the piecewise-linear interpolant of (t, v)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    tol = 1e-12 * max(1.0, abs(b))
    if t.size < 2 or t[0] > a + tol or t[-1] < b - tol or b < a:
        raise WindowError(f"samples on [{t[0] if t.size else None}, {t[-1] if t.size else None}] "
                          f"do not cover [{a}, {b}]")
    inner = (t > a) & (t < b)
    tt = np.concatenate([[a], t[inner], [b]])
    vv = np.concatenate([[np.interp(a, t, v)], v[inner], [np.interp(b, t, v)]])
    return float(np.sum(0.5 * (vv[1:] + vv[:-1]) * np.diff(tt)))


@dataclass(frozen=True)
class WindowReport:
    t0: float
    grad_phi: float
    grad_u: float
    mmu: float
    sup_l2: float
    running_max: float

    @property
    def total(self):
        return self.grad_phi + self.grad_u + self.mmu


def _window(traj, t0, length, running):
    t = traj.times
    vals = [window_integral(t, traj.column(c) ** 2, t0, t0 + length) for c in ("h1_phi", "u_h1", "mmu_l2")]
    sel = (t >= t0) & (t <= t0 + length)
    sup = float(np.max(traj.column("l2_phi")[sel] ** 2, initial=0.0))
    total = sum(vals)
    return WindowReport(float(t0), *vals, sup, max(running, total))


def dissipativity_window(traj: Trajectory, t0, length=1.0) -> WindowReport:
    return _window(traj, t0, length, 0.0)


def dissipativity_windows(traj: Trajectory, spacing=0.25, length=1.0):
    """Windows [t0, t0 + length] for t0 = t_start, t_start + spacing, ...; running max accumulated."""
    t = traj.times
    if t.size < 2 or t[-1] - t[0] < length:
        raise WindowError("trajectory shorter than one window")
    out, running = [], 0.0
    n = int(np.floor((t[-1] - t[0] - length) / spacing + 1e-9))
    for k in range(n + 1):
        rep = _window(traj, t[0] + k * spacing, length, running)
        running = rep.running_max
        out.append(rep)
    return out


def poincare_ratio(traj: Trajectory, area):
    """max_t ||phi - mean|| / ||grad phi|| over the recorded states."""
    l2 = traj.column("l2_phi")
    mean = traj.column("mass") / area
    dev = np.sqrt(np.maximum(l2 ** 2 - area * mean ** 2, 0.0))
    h1 = traj.column("h1_phi")
    ok = h1 > 1e-14
    return float(np.max(dev[ok] / h1[ok])) if np.any(ok) else 0.0


@dataclass(frozen=True)
class F1Bound:
    sup_val: float
    riccati_cap: float
    passed: bool
    c: float
    beta: float
    first_quarter_max: float
    last_quarter_max: float


def f1_uniform_bound(traj: Trajectory, tau, alpha1, area) -> F1Bound:
    """Late-time bound on ||F'(phi)||_{L1} with a Riccati cap from measured constants.

    ``S = log_plus + log_minus`` dominates ``f1_l1`` pointwise.  The quadratic
    coefficient is ``beta^2 = alpha1 |Omega| / (32 C_P^2)`` with the measured
    Poincare ratio ``C_P``; ``c^2`` is the largest value of ``S' + beta^2 S^2``
    seen after ``tau`` (forward differences), and the cap is ``c / beta``.
    """
    t = traj.times
    if t.size < 2 or t[-1] <= tau:
        raise WindowError(f"trajectory ends at {t[-1] if t.size else None}, before tau={tau!r}")
    f1 = traj.column("f1_l1")
    late = t >= tau
    sup_val = float(np.max(f1[late]))
    S = traj.column("log_plus") + traj.column("log_minus")
    cp = poincare_ratio(traj, area)
    beta = np.sqrt(alpha1 * area / (32.0 * cp ** 2)) if cp > 0 else np.inf
    idx = np.nonzero(late)[0]
    c, cap = 0.0, np.inf
    if np.isfinite(beta) and idx.size >= 2:
        dS = np.diff(S[idx]) / np.diff(t[idx])
        c2 = float(np.max(dS + beta ** 2 * S[idx][:-1] ** 2))
        c = float(np.sqrt(max(c2, 0.0)))
        cap = c / beta
    tl = t[late]
    span = tl[-1] - tl[0]
    first = f1[late][tl <= tl[0] + 0.25 * span]
    last = f1[late][tl >= tl[-1] - 0.25 * span]
    fq, lq = float(np.max(first)), float(np.max(last))
    passed = bool(np.isfinite(sup_val) and lq <= 1.05 * fq)
    return F1Bound(sup_val, float(cap), passed, c, float(beta), fq, lq)
