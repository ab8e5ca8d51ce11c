import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from chb.errors import ConfigError, GridMismatch
from chb.grid import (
    Grid2D, ScalarField, StaggeredVectorField, div_face_to_cc, face_inner, grad_cc_to_face, inner,
    integrate, norms, read_chbf, read_field_csv, write_chbf, write_field_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def zero_walls(F):
    F.ux[[0, -1], :] = 0.0
    F.uy[:, [0, -1]] = 0.0
    return F


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid2D(3, 8)
    with pytest.raises(ConfigError):
        Grid2D(8, 8, 1.0, 2.0)
    with pytest.raises(ConfigError):
        Grid2D(8, 8, -1.0, -1.0)
    g = Grid2D(8, 16, 1.0, 2.0)
    assert g.h == 0.125 and g.area == 2.0


def test_integrate_examples():
    assert integrate(Grid2D(16, 16).scalar(1.0)) == 1.0
    assert integrate(Grid2D(8, 16, 1.0, 2.0).scalar(3.0)) == pytest.approx(6.0, rel=1e-15)
    g = Grid2D(32, 32)
    x, _ = g.cell_centers()
    assert integrate(ScalarField(g, x)) == pytest.approx(0.5, abs=1e-15)


def test_grad_examples(g8):
    F = grad_cc_to_face(g8.scalar(2.5))
    assert F.max_abs() == 0.0
    x, _ = g8.cell_centers()
    F = grad_cc_to_face(ScalarField(g8, x))
    assert np.allclose(F.ux[1:-1, :], 1.0, atol=1e-13)
    assert F.boundary_max() == 0.0 and np.all(F.uy == 0.0)


def test_div_of_grad_constant(g8):
    assert np.all(div_face_to_cc(grad_cc_to_face(g8.scalar(7.0))).values == 0.0)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (9, 8), elements=finite), arrays(float, (8, 9), elements=finite),
       arrays(float, (8, 8), elements=finite))
def test_integration_by_parts(ux, uy, f):
    g = Grid2D(8, 8)
    F = zero_walls(StaggeredVectorField(g, ux, uy))
    phi = ScalarField(g, f)
    lhs = inner(div_face_to_cc(F), phi)
    rhs = -face_inner(F, grad_cc_to_face(phi))
    scale = 1.0 + np.abs(ux).sum() * np.abs(f).max() + np.abs(uy).sum() * np.abs(f).max()
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(arrays(float, (9, 8), elements=finite), arrays(float, (8, 9), elements=finite))
def test_divergence_has_zero_integral(ux, uy):
    g = Grid2D(8, 8)
    F = zero_walls(StaggeredVectorField(g, ux, uy))
    scale = 1.0 + np.abs(ux).sum() + np.abs(uy).sum()
    assert abs(integrate(div_face_to_cc(F))) <= 1e-13 * scale


@settings(max_examples=30, deadline=None)
@given(arrays(float, (8, 8), elements=finite), arrays(float, (8, 8), elements=finite), finite, finite)
def test_linearity(f, g_, a, b):
    g = Grid2D(8, 8)
    F, G = ScalarField(g, f), ScalarField(g, g_)
    lhs = grad_cc_to_face(F * a + G * b)
    rhs = grad_cc_to_face(F) * a + grad_cc_to_face(G) * b
    tol = 1e-9 * (1 + abs(a) + abs(b)) * (1 + np.abs(f).max() + np.abs(g_).max())
    assert (lhs - rhs).max_abs() <= tol


def test_norms_examples(g8):
    assert norms(Grid2D(8, 8).scalar(1.0)) == (1.0, 1.0, 1.0, 0.0)
    i, j = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    chk = ScalarField(g8, np.where((i + j) % 2 == 0, 1.0, -1.0))
    l1, l2, linf, _ = norms(chk)
    assert (l1, l2, linf) == (1.0, 1.0, 1.0)
    assert norms(-chk) == norms(chk)


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        inner(Grid2D(8, 8).scalar(1.0), Grid2D(16, 16).scalar(1.0))
    with pytest.raises(GridMismatch):
        ScalarField(Grid2D(8, 8), np.zeros((4, 4)))


def test_chbf_layout(tmp_path):
    g = Grid2D(4, 5, 0.8, 1.0)
    v = np.arange(20.0).reshape(4, 5)
    write_chbf(tmp_path / "f.chbf", ScalarField(g, v))
    raw = (tmp_path / "f.chbf").read_bytes()
    assert len(raw) == 32 + 8 * 20
    assert raw[:4] == b"CHBF"
    assert np.frombuffer(raw[4:16], "<u4").tolist() == [1, 4, 5]
    assert np.frombuffer(raw[16:32], "<f8").tolist() == [0.8, 1.0]
    body = np.frombuffer(raw[32:], "<f8")
    # row-major over rows of constant y
    assert body[:4].tolist() == v[:, 0].tolist()


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 12), st.integers(4, 12), st.data())
def test_chbf_roundtrip(tmp_path_factory, nx, ny, data):
    g = Grid2D(nx, ny, nx / 8, ny / 8)
    v = data.draw(arrays(float, (nx, ny), elements=finite))
    p = tmp_path_factory.mktemp("chbf") / "f.chbf"
    write_chbf(p, ScalarField(g, v))
    back = read_chbf(p)
    assert back.grid == g and np.array_equal(back.values, v)


def test_chbf_rejects_bad_magic(tmp_path):
    (tmp_path / "bad.chbf").write_bytes(b"XXXX" + bytes(28))
    with pytest.raises(ValueError):
        read_chbf(tmp_path / "bad.chbf")


def test_field_csv_roundtrip(tmp_path, rng):
    g = Grid2D(6, 4, 1.5, 1.0)
    f = ScalarField(g, rng.standard_normal(g.shape))
    write_field_csv(tmp_path / "f.csv", f)
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert len(lines) == 4 and len(lines[0].split(",")) == 6
    assert np.array_equal(read_field_csv(tmp_path / "f.csv", g).values, f.values)
