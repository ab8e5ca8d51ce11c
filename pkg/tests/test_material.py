import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from chb import material as mat
from chb.errors import ConfigError, DomainError
from chb.grid import Grid2D, ScalarField

LOG = mat.make_model("log", "degenerate")
FLORY_RECIP = mat.make_model("flory", "reciprocal")

_r = sp.Symbol("r")
_F_LOG = (1 + _r) * sp.log(1 + _r) + (1 - _r) * sp.log(1 - _r)
_FP = sp.lambdify(_r, sp.diff(_F_LOG, _r))
_FPP = sp.lambdify(_r, sp.diff(_F_LOG, _r, 2))


def test_f_prime_examples():
    assert mat.f_prime(LOG, 0.0) == 0.0
    assert mat.f_prime(LOG, 0.5) == pytest.approx(np.log(3.0), rel=1e-15)
    assert mat.f_prime(mat.make_model("flory", "logistic"), 0.5) == 0.0


def test_f_double_prime_examples():
    assert mat.f_double_prime(LOG, 0.0) == 2.0
    assert mat.f_double_prime(LOG, 0.5) == pytest.approx(8.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize("r", [-0.9, 0.0, 0.5, 0.9])
def test_central_differences(r):
    e = 1e-5
    fd1 = (mat.f_value(LOG, r + e) - mat.f_value(LOG, r - e)) / (2 * e)
    fd2 = (mat.f_prime(LOG, r + e) - mat.f_prime(LOG, r - e)) / (2 * e)
    assert fd1 == pytest.approx(mat.f_prime(LOG, r), abs=1e-6)
    assert fd2 == pytest.approx(mat.f_double_prime(LOG, r), rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.99, 0.99))
def test_log_potential_against_symbolic_oracle(r):
    assert mat.f_prime(LOG, r) == pytest.approx(_FP(r), rel=1e-12, abs=1e-14)
    assert mat.f_double_prime(LOG, r) == pytest.approx(_FPP(r), rel=1e-12)
    # odd F', even F''
    assert mat.f_prime(LOG, -r) == -mat.f_prime(LOG, r)
    assert mat.f_double_prime(LOG, -r) == mat.f_double_prime(LOG, r)


def test_concave_shift():
    m = mat.make_model("log", "degenerate", theta_c=3.0)
    assert mat.f_prime(m, 0.5) == pytest.approx(np.log(3.0) - 1.5)
    assert mat.f_double_prime(m, 0.0) == pytest.approx(-1.0)
    # lambda is built from the singular part only
    assert np.all(mat.lambda_(m, np.linspace(-1, 1, 11)) == 2.0)


@pytest.mark.parametrize("r", [-1.0, 1.0, 1.5])
def test_domain_errors(r):
    with pytest.raises(DomainError):
        mat.f_prime(LOG, r)
    with pytest.raises(DomainError):
        mat.entropy_m(LOG, r)


def test_lambda_examples():
    r = np.linspace(-1, 1, 101)
    assert np.all(mat.lambda_(LOG, r) == 2.0)
    assert mat.lambda_(mat.make_model("log", "constant"), 0.5) == pytest.approx(8.0 / 3.0)
    inner = mat.lambda_(LOG, np.array([-1 + 1e-9, 1 - 1e-9]))
    assert np.all(np.abs(inner - mat.lambda_(LOG, np.array([-1.0, 1.0]))) <= 1e-12)


def test_entropy_examples():
    assert mat.entropy_m(LOG, 0.0) == 0.0
    assert mat.entropy_m_prime(LOG, 0.0) == 0.0
    for r in (-0.9, -0.5, 0.0, 0.5, 0.9):
        assert abs(mat.mobility(LOG, r) * mat.entropy_m_dprime(LOG, r) - 1.0) <= 1e-12
    assert mat.entropy_m(LOG, 0.5) == pytest.approx(0.130812, abs=5e-7)


def test_entropy_against_quadrature():
    # M(r) = int_0^r int_0^s 1/(1 - q^2) dq ds = int_0^r (r - q)/(1 - q^2) dq
    from scipy.integrate import quad
    for r in (0.3, 0.5, 0.8):
        oracle = quad(lambda q: (r - q) / (1 - q * q), 0.0, r, epsabs=1e-14)[0]
        assert mat.entropy_m(LOG, r) == pytest.approx(oracle, rel=1e-10)


def test_entropy_bound_k():
    # on [0, 1/2] the largest of |M|, |M'|, |M''|, |M'''| is M'''(1/2) = 16/9
    assert mat.entropy_bound_k(LOG) == pytest.approx(16.0 / 9.0, rel=1e-12)


@pytest.mark.parametrize("mob", ["logistic", "constant"])
def test_entropy_identity_other_mobilities(mob):
    pot = "flory" if mob == "logistic" else "log"
    m = mat.make_model(pot, mob, m0=2.0)
    r = mat.scan_points(m, 1000)
    assert np.max(np.abs(mat.mobility(m, r) * mat.entropy_m_dprime(m, r) - 1.0)) <= 1e-12
    c = m.potential.center
    assert mat.entropy_m(m, c) == 0.0 and mat.entropy_m_prime(m, c) == 0.0


def test_validator_log_degenerate():
    rep = mat.validate_assumptions(LOG, 0.0, 0.0)
    assert rep.passed
    assert abs(rep.alpha0 - 2.0) <= 1e-9 and abs(rep.alpha1 - 2.0) <= 1e-9
    assert rep.eps0 > 0


def test_validator_log_constant():
    rep = mat.validate_assumptions(mat.make_model("log", "constant"), 0.0)
    assert rep.passed
    assert rep.alpha0 == pytest.approx(2.0, abs=1e-9) and rep.alpha1 == pytest.approx(2.0, abs=1e-9)


def test_validator_reports_reciprocal_failure():
    rep = mat.validate_assumptions(FLORY_RECIP, 0.0)
    assert not rep.passed
    assert "A2" in rep.failures
    assert "FAIL" in rep.summary()


def test_validator_flory_logistic_passes():
    assert mat.validate_assumptions(mat.make_model("flory", "logistic"), 0.0).passed


def test_validator_detects_nonconvex_coefficient():
    # a large concave part with a = 0 makes m (F'' + a) negative near the centre
    rep = mat.validate_assumptions(mat.make_model("log", "degenerate", theta_c=5.0), 0.0)
    assert "A4" in rep.failures


def test_validator_rejects_bad_bounds():
    with pytest.raises(ConfigError):
        mat.validate_assumptions(LOG, 1.0, 0.0)


def test_symmetric_transform():
    g = Grid2D(4, 4)
    assert np.all(mat.transform_to_symmetric(g.scalar(0.5)).values == 0.0)
    assert mat.transform_to_symmetric(g.scalar(0.9)).values[0, 0] == pytest.approx(0.8)
    v = np.random.default_rng(1).uniform(0.01, 0.99, g.shape)
    back = mat.transform_from_symmetric(mat.transform_to_symmetric(ScalarField(g, v)))
    assert np.allclose(back.values, v, rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        mat.transform_to_symmetric(g.scalar(1.0))


def test_spec_errors():
    with pytest.raises(ConfigError):
        mat.make_model("quartic")
    with pytest.raises(ConfigError):
        mat.make_model("log", "degenerate", theta=0.0)
