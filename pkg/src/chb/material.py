"""Potentials, mobilities and the quantities derived from them.

Two singular potentials are provided, each optionally shifted by a concave
quadratic ``-theta_c/2 (r - c)^2`` (``c`` the midpoint of the domain), which is
the smooth part ``F2`` of the splitting ``F = F1 + F2``:

* ``log``   : ``theta [(1+r) log(1+r) + (1-r) log(1-r)]`` on ``(-1, 1)``
* ``flory`` : ``theta [r log r + (1-r) log(1-r)]`` on ``(0, 1)``

``lambda_`` is always built from the singular part ``F1`` only, so that for the
pair (log, degenerate) it is identically ``2 theta`` whatever ``theta_c`` is.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError
from .grid import ScalarField

POTENTIALS = ("log", "flory")
MOBILITIES = ("degenerate", "reciprocal", "logistic", "constant")

_DOMAINS = {"log": (-1.0, 1.0), "flory": (0.0, 1.0)}


@dataclass(frozen=True)
class PotentialSpec:
    variant: str = "log"
    theta: float = 1.0
    theta_c: float = 0.0

    def __post_init__(self):
        if self.variant not in POTENTIALS:
            raise ConfigError(f"unknown potential {self.variant!r}; expected one of {POTENTIALS}")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if self.theta_c < 0:
            raise ConfigError("theta_c must be nonnegative")

    @property
    def domain(self):
        return _DOMAINS[self.variant]

    @property
    def center(self):
        lo, hi = self.domain
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MobilitySpec:
    variant: str = "degenerate"
    m0: float = 1.0

    def __post_init__(self):
        if self.variant not in MOBILITIES:
            raise ConfigError(f"unknown mobility {self.variant!r}; expected one of {MOBILITIES}")
        if self.variant == "constant" and not self.m0 > 0:
            raise ConfigError("constant mobility needs m0 > 0")

    @property
    def degenerate(self) -> bool:
        return self.variant != "constant"


@dataclass(frozen=True)
class MaterialModel:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    mobility: MobilitySpec = field(default_factory=MobilitySpec)
    alpha0: float | None = None
    alpha1: float | None = None
    eps0: float | None = None

    @property
    def domain(self):
        return self.potential.domain

    @property
    def validated(self) -> bool:
        return self.alpha1 is not None

    def with_constants(self, report: "ValidationReport") -> "MaterialModel":
        return replace(self, alpha0=report.alpha0, alpha1=report.alpha1, eps0=report.eps0)


def make_model(potential="log", mobility="degenerate", theta=1.0, m0=1.0, theta_c=0.0):
    return MaterialModel(PotentialSpec(potential, float(theta), float(theta_c)),
                         MobilitySpec(mobility, float(m0)))


def _interior(model, r):
    r = np.asarray(r, dtype=float)
    lo, hi = model.domain
    if not np.all((r > lo) & (r < hi)):
        bad = r[~((r > lo) & (r < hi))]
        raise DomainError(f"{bad.ravel()[:3]} outside the open interval ({lo}, {hi})")
    return r


def _out(r, val):
    return float(val) if np.ndim(r) == 0 else val


# -- potential ------------------------------------------------------------------

def f_value(model, r):
    r = _interior(model, r)
    p = model.potential
    if p.variant == "log":
        val = p.theta * ((1 + r) * np.log1p(r) + (1 - r) * np.log1p(-r))
    else:
        val = p.theta * (r * np.log(r) + (1 - r) * np.log1p(-r))
    return _out(r, val - 0.5 * p.theta_c * (r - p.center) ** 2)


def f_prime(model, r):
    r = _interior(model, r)
    p = model.potential
    if p.variant == "log":
        val = p.theta * (np.log1p(r) - np.log1p(-r))
    else:
        val = p.theta * (np.log(r) - np.log1p(-r))
    return _out(r, val - p.theta_c * (r - p.center))


def f1_double_prime(model, r):
    """Second derivative of the singular part only."""
    r = _interior(model, r)
    p = model.potential
    if p.variant == "log":
        val = 2.0 * p.theta / ((1 - r) * (1 + r))
    else:
        val = p.theta / (r * (1 - r))
    return _out(r, val)


def f_double_prime(model, r):
    return f1_double_prime(model, r) - model.potential.theta_c


def f2_double_prime(model):
    return -model.potential.theta_c


# -- mobility ---------------------------------------------------------------------

def mobility(model, r):
    """Mobility on the closed domain (``inf`` where it is unbounded)."""
    r = np.asarray(r, dtype=float)
    mb = model.mobility
    with np.errstate(divide="ignore"):
        if mb.variant == "degenerate":
            val = (1 - r) * (1 + r)
        elif mb.variant == "logistic":
            val = r * (1 - r)
        elif mb.variant == "reciprocal":
            val = 1.0 / (r * (1 - r))
        else:
            val = np.full_like(r, mb.m0)
    return _out(r, val)


def _cancelling(model):
    key = (model.potential.variant, model.mobility.variant)
    if key == ("log", "degenerate"):
        return 2.0 * model.potential.theta
    if key == ("flory", "logistic"):
        return model.potential.theta
    return None


def lambda_(model, r):
    """Continuous extension of ``m F1''`` to the closed domain."""
    r = np.asarray(r, dtype=float)
    lo, hi = model.domain
    if np.any((r < lo) | (r > hi)):
        raise DomainError(f"lambda evaluated outside [{lo}, {hi}]")
    const = _cancelling(model)
    if const is not None:
        return _out(r, np.full_like(r, const))
    out = np.empty_like(r)
    inner = (r > lo) & (r < hi)
    out[inner] = mobility(model, r[inner]) * f1_double_prime(model, r[inner])
    lim = _endpoint_limits(model, 0.0)
    out[r == lo] = lim["lambda"][0]
    out[r == hi] = lim["lambda"][1]
    return _out(r, out)


def diffusion_coefficient(model, r, a):
    """``m (F'' + a) = lambda + m (a + F2'')``, the coefficient multiplying grad(phi)."""
    return lambda_(model, r) + mobility(model, r) * (np.asarray(a) + f2_double_prime(model))


# -- entropy M with m M'' = 1 ------------------------------------------------------
# Each mobility gets a closed-form particular antiderivative pair (M0, M0'); the
# entropy is normalised so that M(c) = M'(c) = 0 at the domain midpoint c.

def _m0_funcs(variant, m0):
    if variant == "degenerate":
        return (lambda r: r * np.arctanh(r) + 0.5 * np.log1p(-r * r),
                lambda r: np.arctanh(r),
                lambda r: 1.0 / ((1 - r) * (1 + r)),
                lambda r: 2.0 * r / ((1 - r) * (1 + r)) ** 2)
    if variant == "logistic":
        return (lambda r: r * np.log(r) + (1 - r) * np.log1p(-r),
                lambda r: np.log(r) - np.log1p(-r),
                lambda r: 1.0 / (r * (1 - r)),
                lambda r: (2 * r - 1) / (r * (1 - r)) ** 2)
    if variant == "reciprocal":
        return (lambda r: r ** 3 / 6 - r ** 4 / 12,
                lambda r: r ** 2 / 2 - r ** 3 / 3,
                lambda r: r * (1 - r),
                lambda r: 1 - 2 * r)
    return (lambda r: r * r / (2 * m0),
            lambda r: r / m0,
            lambda r: np.full_like(r, 1.0 / m0),
            lambda r: np.zeros_like(r))


def _entropy_parts(model, r):
    r = _interior(model, r)
    c = model.potential.center
    funcs = _m0_funcs(model.mobility.variant, model.mobility.m0)
    cc = np.float64(c)
    return r, funcs, float(funcs[0](cc)), float(funcs[1](cc)), c


def entropy_m(model, r):
    r, (M, dM, _, _), Mc, dMc, c = _entropy_parts(model, r)
    return _out(r, M(r) - Mc - dMc * (r - c))


def entropy_m_prime(model, r):
    r, (_, dM, _, _), _, dMc, _ = _entropy_parts(model, r)
    return _out(r, dM(r) - dMc)


def entropy_m_dprime(model, r):
    r, (_, _, d2M, _), _, _, _ = _entropy_parts(model, r)
    return _out(r, d2M(r))


def entropy_m_tprime(model, r):
    r, (_, _, _, d3M), _, _, _ = _entropy_parts(model, r)
    return _out(r, d3M(r))


def entropy_bound_k(model, n=20001):
    """max |M|, |M'|, |M''|, |M'''| on the quarter-width interval right of the midpoint.

    For the symmetric domain this is ``[0, 1/2]``.
    """
    lo, hi = model.domain
    c = model.potential.center
    r = np.linspace(c, c + 0.25 * (hi - lo), n)
    vals = [entropy_m(model, r), entropy_m_prime(model, r),
            entropy_m_dprime(model, r), entropy_m_tprime(model, r)]
    return float(max(np.max(np.abs(v)) for v in vals))


# -- symbolic endpoint limits ------------------------------------------------------

@lru_cache(maxsize=64)
def _limits_cached(pot, theta, theta_c, mob, m0, a_min):
    import sympy as sp

    r = sp.Symbol("r", real=True)
    th, tc = sp.nsimplify(theta), sp.nsimplify(theta_c)
    if pot == "log":
        lo, hi, c = -1, 1, 0
        f1 = th * (sp.log(1 + r) - sp.log(1 - r))
        f1pp = 2 * th / (1 - r ** 2)
    else:
        lo, hi, c = 0, 1, sp.Rational(1, 2)
        f1 = th * (sp.log(r) - sp.log(1 - r))
        f1pp = th / (r * (1 - r))
    fp = f1 - tc * (r - c)
    m = {"degenerate": 1 - r ** 2, "logistic": r * (1 - r),
         "reciprocal": 1 / (r * (1 - r)), "constant": sp.nsimplify(m0)}[mob]
    exprs = {
        "m": m,
        "lambda": sp.cancel(m * f1pp),
        "fprime": fp,
        "coef": sp.cancel(m * (f1pp - tc + sp.nsimplify(a_min))),
    }

    def num(v):
        if v in (sp.oo, -sp.oo):
            return float(v)
        if v.is_finite:
            return float(v)
        return float("nan")

    out = {}
    for name, e in exprs.items():
        out[name] = (num(sp.limit(e, r, lo, dir="+")), num(sp.limit(e, r, hi, dir="-")))
    return out


def _endpoint_limits(model, a_min):
    p, mb = model.potential, model.mobility
    return _limits_cached(p.variant, p.theta, p.theta_c, mb.variant, mb.m0, float(a_min))


# -- assumption validator --------------------------------------------------------

@dataclass
class CheckResult:
    passed: bool
    detail: str
    applicable: bool = True


@dataclass
class ValidationReport:
    checks: dict
    alpha0: float
    alpha1: float
    eps0: float
    lambda_max: float
    m_max: float
    coef_max: float
    a_min: float
    a_max: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def failures(self):
        return [k for k, c in self.checks.items() if not c.passed]

    def summary(self) -> str:
        lines = []
        for k, c in self.checks.items():
            tag = "PASS" if c.passed else "FAIL"
            if not c.applicable:
                tag = "n/a "
            lines.append(f"[{k}] {tag} {c.detail}")
        lines.append(f"alpha0={self.alpha0!r} alpha1={self.alpha1!r} eps0={self.eps0!r}")
        return "\n".join(lines)


def scan_points(model, n=100_000):
    """Chebyshev points of the open domain plus its midpoint; clustered at the endpoints."""
    lo, hi = model.domain
    k = np.arange(n)
    x = np.cos(np.pi * (2 * k + 1) / (2 * n))[::-1]
    r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    return np.unique(np.append(r, 0.5 * (lo + hi)))


def _monotone_margin(r, v, increasing_toward_end, at_hi, tol):
    """Length of the largest endpoint-adjacent interval where ``v`` is monotone."""
    d = np.diff(v)
    if at_hi:
        ok = d >= -tol if increasing_toward_end else d <= tol
        bad = np.nonzero(~ok)[0]
        start = bad[-1] + 1 if bad.size else 0
        return r[-1] - r[start]
    ok = d <= tol if increasing_toward_end else d >= -tol
    bad = np.nonzero(~ok)[0]
    stop = bad[0] if bad.size else len(r) - 1
    return r[stop] - r[0]


def validate_assumptions(model, a_min, a_max=None, n_scan=100_000) -> ValidationReport:
    """Check [A1]-[A4] on a dense scan of the domain plus symbolic endpoint limits.

    Failed checks are reported in the returned object; nothing is raised.
    Constant mobility is treated as the non-degenerate regime: the degeneracy
    part of [A1] and the closed-interval continuity part of [A2] do not apply.
    """
    if a_max is None:
        a_max = a_min
    if a_min > a_max:
        raise ConfigError("a_min must not exceed a_max")
    lo, hi = model.domain
    half = 0.5 * (hi - lo)
    r = scan_points(model, n_scan)
    lim = _endpoint_limits(model, a_min)
    lim_max = _endpoint_limits(model, a_max)
    checks = {}

    m = mobility(model, r)
    m_ends = lim["m"]
    m_max = float(max(np.max(m), *m_ends))
    if model.mobility.degenerate:
        nonneg = bool(np.all(m > 0))
        vanish = all(np.isfinite(v) and abs(v) <= 1e-12 for v in m_ends)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(m[np.isfinite(m)]))))
        eps_m = min(_monotone_margin(r, m, False, True, tol),
                    _monotone_margin(r, m, False, False, tol), half)
        ok = nonneg and vanish and eps_m > 0
        detail = (f"m>0 inside: {nonneg}; m(endpoints)={m_ends}; "
                  f"monotone margin={eps_m:.3g}")
        checks["A1"] = CheckResult(ok, detail)
    else:
        eps_m = half
        checks["A1"] = CheckResult(True, "constant mobility: non-degenerate regime", False)

    lam = lambda_(model, r)
    lam_ends = lim["lambda"]
    lam_all = np.concatenate([lam, np.asarray(lam_ends)])
    alpha0 = float(np.nanmin(lam_all))
    lam_sup = float(np.nanmax(lam_all))
    bounded = bool(np.all(np.isfinite(lam_all)))
    if model.mobility.degenerate:
        ok = bounded and alpha0 > 0
        detail = f"inf lambda={alpha0!r}; sup lambda={lam_sup!r}; bounded on closed domain: {bounded}"
        if not bounded:
            detail += " (m F1'' is unbounded)"
        checks["A2"] = CheckResult(ok, detail)
    else:
        checks["A2"] = CheckResult(alpha0 > 0, f"inf lambda={alpha0!r} (continuity at endpoints not required)")

    fp_ends = lim["fprime"]
    blowup = fp_ends[0] == -np.inf and fp_ends[1] == np.inf
    fpp = f_double_prime(model, r)
    tol = 1e-12 * float(np.max(np.abs(fpp)))
    eps_f = min(_monotone_margin(r, fpp, True, True, tol),
                _monotone_margin(r, fpp, True, False, tol), half)
    checks["A3"] = CheckResult(blowup and eps_f > 0,
                               f"F'(endpoints)={fp_ends}; F'' monotone margin={eps_f:.3g}")

    coef = diffusion_coefficient(model, r, a_min)
    coef_all = np.concatenate([coef, np.asarray(lim["coef"])])
    alpha1 = float(np.nanmin(coef_all))
    checks["A4"] = CheckResult(alpha1 > 0, f"inf m(F''+a_min)={alpha1!r} with a_min={a_min!r}")
    coef_hi = np.concatenate([diffusion_coefficient(model, r, a_max), np.asarray(lim_max["coef"])])
    coef_max = float(np.nanmax(coef_hi))

    return ValidationReport(checks=checks, alpha0=alpha0, alpha1=alpha1, eps0=float(min(eps_m, eps_f)),
                            lambda_max=lam_sup, m_max=m_max, coef_max=coef_max,
                            a_min=float(a_min), a_max=float(a_max))


# -- symmetric transformation -----------------------------------------------------

def transform_to_symmetric(phi: ScalarField) -> ScalarField:
    v = phi.values
    if not np.all((v > 0) & (v < 1)):
        raise DomainError("transform_to_symmetric needs values in (0, 1)")
    return ScalarField(phi.grid, 2.0 * v - 1.0)


def transform_from_symmetric(psi: ScalarField) -> ScalarField:
    v = psi.values
    if not np.all((v > -1) & (v < 1)):
        raise DomainError("transform_from_symmetric needs values in (-1, 1)")
    return ScalarField(psi.grid, 0.5 * (v + 1.0))
