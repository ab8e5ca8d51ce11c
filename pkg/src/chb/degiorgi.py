"""De Giorgi level-set analysis of a stored trajectory.

Super-level sets ``A_n(t) = {phi(t) >= k_n}`` with rising levels
``k_n = 1 - delta - delta/2^n`` are measured over shrinking time intervals
``I_n = [t_{n-1}, T]``.  If ``y_n = int_{I_n} |A_n(t)| dt`` obeys the
superlinear recursion ``y_{n+1} <= C b^n y_n^{1+eps}`` and ``y_0`` is small,
then ``y_n -> 0`` and ``phi <= 1 - delta`` on ``[T - tau, T]``.  Everything
here is evaluated on the symmetric variable; models on ``(0, 1)`` are mapped
by ``psi = 2 phi - 1`` first.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import material as mat
from .diagnostics import Trajectory, symmetric_values, window_integral
from .errors import ConfigError, CoverageError
from .grid import ScalarField

SCHEMA = "chb.separation-certificate/1"
B_REC = 2.0 ** 4.5
EPS_REC = 0.75


@dataclass(frozen=True)
class DeGiorgiParams:
    T: float
    tau_tilde: float
    delta: float
    n_max: int = 6

    def __post_init__(self):
        if not self.tau_tilde > 0 or not self.T >= 3 * self.tau_tilde:
            raise ConfigError(f"need T >= 3 tau_tilde > 0, got T={self.T!r}, tau_tilde={self.tau_tilde!r}")
        if not 0 < self.delta < 0.25:
            raise ConfigError(f"delta must lie in (0, 1/4), got {self.delta!r}")
        if self.n_max < 3:
            raise ConfigError("n_max must be at least 3")

    @property
    def cadence(self):
        """Largest snapshot spacing allowed inside [T - 3 tau, T]."""
        return self.tau_tilde / 2.0 ** (self.n_max + 1)


@dataclass(frozen=True)
class LevelSetSeries:
    y: tuple
    t_levels: tuple
    k_levels: tuple
    sign: int = 1

    def monotone(self) -> bool:
        y = np.asarray(self.y)
        return bool(np.all(y[1:] <= y[:-1]))


def time_levels(T, tau_tilde, n_max):
    """``[t_{-1}, t_0, ..., t_{n_max}]`` with ``t_{-1} = T - 3 tau`` and ``t_n = t_{n-1} + tau/2^n``."""
    if not tau_tilde > 0 or not T >= 3 * tau_tilde:
        raise ConfigError(f"need T >= 3 tau_tilde > 0, got T={T!r}, tau_tilde={tau_tilde!r}")
    out = [T - 3.0 * tau_tilde]
    for n in range(n_max + 1):
        out.append(out[-1] + tau_tilde / 2.0 ** n)
    return out


def thresholds(delta, n_max):
    if not 0 < delta < 0.25:
        raise ConfigError(f"delta must lie in (0, 1/4), got {delta!r}")
    return [1.0 - delta * (1.0 + 2.0 ** -n) for n in range(n_max + 1)]


def truncate(phi: ScalarField, k) -> ScalarField:
    return ScalarField(phi.grid, np.maximum(phi.values - k, 0.0))


# -- snapshots -------------------------------------------------------------------------

class SnapshotWindow:
    """Snapshots inside [T - 3 tau, T] on the symmetric variable, sorted per time for fast counting."""

    def __init__(self, traj: Trajectory, params: DeGiorgiParams, model=None):
        lo_t = params.T - 3.0 * params.tau_tilde
        slack = 1e-9 * max(1.0, abs(params.T))
        snaps = [(t, f) for t, f in traj.snapshots if lo_t - slack <= t <= params.T + slack]
        if not snaps:
            raise CoverageError(f"no snapshots in [{lo_t}, {params.T}]")
        t = np.array([s[0] for s in snaps])
        if t[0] > lo_t + slack or t[-1] < params.T - slack:
            raise CoverageError(f"snapshots span [{t[0]}, {t[-1]}], need [{lo_t}, {params.T}]")
        gap = float(np.max(np.diff(t), initial=0.0))
        if gap > params.cadence * (1 + 1e-9):
            raise CoverageError(f"snapshot spacing {gap:.4g} exceeds tau/2^(n_max+1) = {params.cadence:.4g}")
        self.t = t
        self.grid = snaps[0][1].grid
        vals = np.stack([f.values for _, f in snaps])
        if model is not None:
            vals = symmetric_values(model, vals)
        self.values = vals
        self._sorted = {}

    def signed(self, sign):
        return self.values if sign > 0 else -self.values

    def sorted_rows(self, sign):
        if sign not in self._sorted:
            self._sorted[sign] = np.sort(self.signed(sign).reshape(len(self.t), -1), axis=1)
        return self._sorted[sign]

    def level_measure(self, k, sign=1):
        """|{phi(t) >= k}| for every stored time."""
        rows = self.sorted_rows(sign)
        n = rows.shape[1]
        counts = np.array([n - np.searchsorted(r, k, side="left") for r in rows], dtype=float)
        return self.grid.h ** 2 * counts


def y_sequence(traj, params: DeGiorgiParams, model=None, sign=1, window=None) -> LevelSetSeries:
    win = window or SnapshotWindow(traj, params, model)
    tl = time_levels(params.T, params.tau_tilde, params.n_max)
    kl = thresholds(params.delta, params.n_max)
    y = [window_integral(win.t, win.level_measure(kl[n], sign), tl[n], params.T)
         for n in range(params.n_max + 1)]
    return LevelSetSeries(tuple(y), tuple(tl), tuple(kl), sign)


# -- recursion lemma -------------------------------------------------------------------

def lemma32_threshold(C, b, eps):
    """Largest y_0 for which y_{n+1} <= C b^n y_n^(1+eps) forces y_n <= y_0 b^(-n/eps)."""
    return float(math.exp(-math.log(C) / eps - math.log(b) / eps ** 2))


def lemma32_verify(y, C, b, eps, rtol=1e-9) -> bool:
    """True iff y_0 <= threshold and y_n <= y_0 b^(-n/eps) for every n (compared in logs)."""
    y = [float(v) for v in y]
    if any(v < 0 for v in y):
        return False
    log_thr = -math.log(C) / eps - math.log(b) / eps ** 2
    if y[0] == 0.0:
        return all(v == 0.0 for v in y)
    if math.log(y[0]) > log_thr + rtol:
        return False
    ly0 = math.log(y[0])
    for n, v in enumerate(y):
        if v > 0 and math.log(v) > ly0 - n * math.log(b) / eps + rtol:
            return False
    return True


def recursion_constant(C_gen, delta, tau_tilde, area):
    """C = 2^(33/4) C_gen^(3/2) delta^-3 (tau/|Omega|)^(3/4)."""
    return 2.0 ** 8.25 * C_gen ** 1.5 / delta ** 3 * (tau_tilde / area) ** 0.75


# -- admissibility of delta ------------------------------------------------------------

@dataclass(frozen=True)
class DeGiorgiConstants:
    K: float
    lam_ma_inf: float
    m_inf: float
    grad_a_inf: float
    grad_J_l1: float
    tau_tilde: float
    area: float

    @classmethod
    def measure(cls, model, kernel, tau_tilde):
        from . import kernel as kern

        r = mat.scan_points(model, 20_000)
        a = kernel.a()
        m = mat.mobility(model, r)
        lam = mat.lambda_(model, r)
        lam_ma = max(float(np.max(np.abs(lam + m * float(np.min(a))))),
                     float(np.max(np.abs(lam + m * float(np.max(a))))))
        return cls(K=mat.entropy_bound_k(model), lam_ma_inf=lam_ma, m_inf=float(np.max(m)),
                   grad_a_inf=kern.grad_a_inf(kernel), grad_J_l1=float(kernel.grad_l1_norm),
                   tau_tilde=float(tau_tilde), area=float(kernel.grid.area))


def _symmetric_point(model, s):
    """Model variable at symmetric coordinate ``s`` and the Jacobian d(phi)/d(psi)."""
    lo, hi = model.domain
    half = 0.5 * (hi - lo)
    return 0.5 * (lo + hi) + half * s, half


def inv_f2_at(model, delta):
    """1 / F''(1 - 2 delta) in the symmetric variable; ``inf`` if F'' <= 0 there."""
    r, jac = _symmetric_point(model, 1.0 - 2.0 * delta)
    f2 = mat.f_double_prime(model, r) * jac ** 2
    return 1.0 / f2 if f2 > 0 else math.inf


def cond_308_rhs(c: DeGiorgiConstants):
    terms = [
        1.0 / (8.0 * c.lam_ma_inf * c.K) if c.lam_ma_inf * c.K > 0 else math.inf,
        c.tau_tilde / (4.0 * c.area),
    ]
    den = (2.0 + c.K ** 2) * c.tau_tilde * c.m_inf ** 2 * (c.grad_a_inf ** 2 + c.grad_J_l1 ** 2)
    terms.append(2.0 / den if den > 0 else math.inf)
    return max(terms)


def cond_308(delta, model, constants: DeGiorgiConstants) -> bool:
    lhs = inv_f2_at(model, delta)
    return bool(math.isfinite(lhs) and lhs <= cond_308_rhs(constants))


def d4_lhs(delta, model):
    """1 / (|F'(1 - 2 delta)| delta^4) in the symmetric variable."""
    r, jac = _symmetric_point(model, 1.0 - 2.0 * delta)
    fp = abs(mat.f_prime(model, r) * jac)
    return math.inf if fp == 0 else 1.0 / (fp * delta ** 4)


def d4_rhs(C, C_tilde, tau_tilde, area):
    den = 2.0 ** 19 * 3.0 * C ** 2 * C_tilde * tau_tilde ** 2
    return math.inf if den == 0 else area / den


def d4_holds(delta, model, bound) -> bool:
    return bool(d4_lhs(delta, model) <= bound)


def cond_d4(delta, model, C, C_tilde, tau_tilde, area) -> bool:
    return d4_holds(delta, model, d4_rhs(C, C_tilde, tau_tilde, area))


def riccati_bound(c, beta, g0, t):
    """Comparison bound for g' + beta^2 g^2 <= c^2, g(0) = g0.

    For ``g0 < c/beta`` this is ``(c/beta) tanh(c beta t + atanh(beta g0 / c))``;
    for ``g0 > c/beta`` the comparison solution decreases as a coth.  The form
    ``0.5 log R`` with ``R = |(c + beta g0)/(c - beta g0)|`` is used for both.
    At ``g0 = c/beta`` the ratio is singular and the asymptote is returned with
    a warning.
    """
    if not (c > 0 and beta > 0):
        raise ValueError("c and beta must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    cap = c / beta
    num, den = c + beta * g0, c - beta * g0
    if den == 0:
        warnings.warn("riccati_bound: g0 = c/beta, returning the asymptote", RuntimeWarning)
        return cap + 0.0 * t if t.ndim else float(cap)
    s = c * beta * t + 0.5 * math.log(abs(num / den))
    out = cap * np.tanh(s) if den > 0 else cap / np.tanh(s)
    return out if t.ndim else float(out)


# -- certificate ------------------------------------------------------------------------

@dataclass
class SeparationCertificate:
    delta: float
    T: float
    tau_tilde: float
    n_max: int
    b: float
    eps: float
    C_fit: float
    C_formula: float
    C_gen_fit: float
    C_gen_formula: float
    y0: float
    y0_threshold: float
    cond_308: bool
    cond_d4: bool
    decay_verified: bool
    delta_obs_min: float
    mode: str
    y: list
    y_minus: list
    K: float = 0.0
    C_tilde: float = 0.0
    t_levels: list = field(default_factory=list)
    k_levels: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    schema: str = SCHEMA

    @property
    def passed(self) -> bool:
        return self.mode != "fail"

    def to_json(self):
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _fit_generic_constant(win, series, params, model, sign):
    """Smallest C with max(sup_t ||phi_n||^2, (F''(1-2 delta)/8) int ||grad phi_n||^2) <= C 2^(n+1) y_n."""
    inv = inv_f2_at(model, params.delta)
    weight = 1.0 / (8.0 * inv) if math.isfinite(inv) else 0.0
    h2 = win.grid.h ** 2
    vals = win.signed(sign)
    best = 0.0
    for n, yn in enumerate(series.y):
        if yn <= 0:
            continue
        p = np.maximum(vals - series.k_levels[n], 0.0)
        sq = h2 * np.sum(p * p, axis=(1, 2))
        dx = np.diff(p, axis=1)
        dy = np.diff(p, axis=2)
        g2 = np.sum(dx * dx, axis=(1, 2)) + np.sum(dy * dy, axis=(1, 2))  # h^2 |grad|^2 summed, h^2 cancels
        lo = series.t_levels[n]
        inside = win.t >= lo - 1e-12
        sup2 = max(float(np.max(sq[inside], initial=0.0)), float(np.interp(lo, win.t, sq)))
        q = max(sup2, weight * window_integral(win.t, g2, lo, params.T))
        best = max(best, q / (2.0 ** (n + 1) * yn))
    return best


def certify(traj: Trajectory, params: DeGiorgiParams, model, constants: DeGiorgiConstants,
            C_tilde=0.0, window=None) -> SeparationCertificate:
    win = window or SnapshotWindow(traj, params, model)
    plus = y_sequence(traj, params, sign=1, window=win)
    minus = y_sequence(traj, params, sign=-1, window=win)
    area, tau = constants.area, params.tau_tilde
    C_gen_formula = 2.0 * (1.0 + constants.K) / tau
    C_gen_fit = max(_fit_generic_constant(win, plus, params, model, 1),
                    _fit_generic_constant(win, minus, params, model, -1))
    C_formula = recursion_constant(C_gen_formula, params.delta, tau, area)
    C_fit = recursion_constant(C_gen_fit, params.delta, tau, area)
    notes = []
    y0 = max(plus.y[0], minus.y[0])
    if C_fit > 0:
        thr = lemma32_threshold(C_fit, B_REC, EPS_REC)
        decay = (lemma32_verify(plus.y, C_fit, B_REC, EPS_REC)
                 and lemma32_verify(minus.y, C_fit, B_REC, EPS_REC))
    else:
        thr = math.inf
        decay = y0 == 0.0
        notes.append("all level sets empty; recursion constant not identifiable")
    rec_t = traj.times
    late = (rec_t >= params.T - tau - 1e-12) & (rec_t <= params.T + 1e-12)
    if np.any(late):
        delta_obs = float(np.min(traj.column("sep_gap")[late]))
    else:
        late_snaps = win.t >= params.T - tau - 1e-12
        delta_obs = float(1.0 - np.max(np.abs(win.values[late_snaps])))
    c308 = cond_308(params.delta, model, constants)
    cd4 = cond_d4(params.delta, model, C_gen_formula, C_tilde, tau, area)
    if decay and y0 > 0:
        mode = "lemma"
    elif plus.y[-1] == 0 and minus.y[-1] == 0 and delta_obs >= params.delta:
        mode = "empirical"
    else:
        mode = "fail"
    if not (plus.monotone() and minus.monotone()):
        notes.append("y_n not monotone")
    return SeparationCertificate(
        delta=params.delta, T=params.T, tau_tilde=tau, n_max=params.n_max, b=B_REC, eps=EPS_REC,
        C_fit=C_fit, C_formula=C_formula, C_gen_fit=C_gen_fit, C_gen_formula=C_gen_formula,
        y0=y0, y0_threshold=thr, cond_308=c308, cond_d4=cd4, decay_verified=bool(decay),
        delta_obs_min=delta_obs, mode=mode, y=list(plus.y), y_minus=list(minus.y),
        K=constants.K, C_tilde=float(C_tilde), t_levels=list(plus.t_levels),
        k_levels=list(plus.k_levels), notes=notes)
