import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftori import grid as gc
from conftori.errors import ConfigurationError, DimensionError
from conftori.grid import Lattice, PeriodicGrid


def skew_grid(n1=32, n2=32):
    return PeriodicGrid(Lattice(2.0 + 0.0j, 0.7 + 1.5j), n1, n2)


def plane_wave(grid, m1, m2):
    """exp(i k.x) for the dual-lattice vector with lattice indices (m1, m2)."""
    jinv = np.linalg.inv(grid.lattice.jacobian)
    k = 2 * np.pi * (m1 * jinv[0] + m2 * jinv[1])
    return k, np.cos(k[0] * grid.x1 + k[1] * grid.x2)


@pytest.mark.parametrize("m1,m2", [(1, 0), (0, 2), (3, -1), (5, 4)])
def test_spectral_derivatives_exact_on_skew_lattice(m1, m2):
    g = skew_grid()
    k, f = plane_wave(g, m1, m2)
    phase = k[0] * g.x1 + k[1] * g.x2
    for d in (1, 2):
        assert np.allclose(gc.derivative(f, g, d), -k[d - 1] * np.sin(phase), atol=1e-11)
    assert np.allclose(gc.laplacian(f, g), -(k @ k) * f, atol=1e-10)


def test_fd2_is_second_order():
    errs = []
    for n in (16, 32, 64):
        g = skew_grid(n, n)
        k, f = plane_wave(g, 1, 1)
        exact = -k[0] * np.sin(k[0] * g.x1 + k[1] * g.x2)
        errs.append(np.max(np.abs(gc.derivative(f, g, 1, "fd2") - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)


def test_integrate_constant_and_mode():
    g = skew_grid()
    assert gc.integrate(np.ones(g.shape), g) == pytest.approx(g.lattice.area, rel=1e-14)
    _, f = plane_wave(g, 2, 1)
    assert abs(gc.integrate(f, g)) < 1e-12
    assert isinstance(gc.integrate(f + 0j, g), complex)


def test_vector_fields_integrate_componentwise():
    g = skew_grid()
    f = np.ones(g.shape + (4,)) * np.arange(4)
    assert np.allclose(gc.integrate(f, g), np.arange(4) * g.lattice.area)


def test_resample_roundtrip_bandlimited():
    g = skew_grid(16, 16)
    _, f = plane_wave(g, 2, -3)
    fine, g2 = gc.resample(f, g, 48, 32)
    back, _ = gc.resample(fine, g2, 16, 16)
    _, f_fine = plane_wave(g2, 2, -3)
    assert np.allclose(fine, f_fine, atol=1e-12)
    assert np.allclose(back, f, atol=1e-12)


@pytest.mark.parametrize("n1,n2", [(7, 8), (8, 6), (9, 10)])
def test_bad_resolution(n1, n2):
    with pytest.raises(ConfigurationError):
        PeriodicGrid(Lattice(1, 1j), n1, n2)


def test_bad_lattice_orientation():
    with pytest.raises(ConfigurationError):
        Lattice(1j, 1)
    with pytest.raises(ConfigurationError):
        Lattice(0, 1j)


def test_dimension_mismatch():
    g = skew_grid()
    with pytest.raises(DimensionError):
        gc.derivative(np.zeros((16, 16)), g, 1)


def test_unknown_scheme_and_direction():
    g = skew_grid()
    with pytest.raises(ConfigurationError):
        gc.derivative(np.zeros(g.shape), g, 1, "fd4")
    with pytest.raises(ConfigurationError):
        gc.derivative(np.zeros(g.shape), g, 3)


def test_thread_env(monkeypatch):
    monkeypatch.setenv("CTL_THREADS", "2")
    assert gc.fft_workers() == 2
    monkeypatch.setenv("CTL_THREADS", "many")
    with pytest.raises(ConfigurationError):
        gc.fft_workers()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.sampled_from(["spectral", "fd2"]))
def test_derivative_of_periodic_field_integrates_to_zero(coeffs, scheme):
    g = skew_grid(16, 16)
    f = sum(c * plane_wave(g, i % 3, i // 3 - 1)[1] for i, c in enumerate(coeffs))
    f = f + 0.3 * f ** 2
    for d in (1, 2):
        assert abs(gc.integrate(gc.derivative(f, g, d, scheme), g)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_derivative_is_linear(a, b):
    g = skew_grid(16, 16)
    _, f = plane_wave(g, 1, 2)
    _, h = plane_wave(g, -2, 1)
    lhs = gc.derivative(a * f + b * h, g, 2)
    rhs = a * gc.derivative(f, g, 2) + b * gc.derivative(h, g, 2)
    assert np.allclose(lhs, rhs, atol=1e-9)
