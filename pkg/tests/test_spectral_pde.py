import math
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings
from hypothesis import strategies as st

from mathphys.errors import InsufficientResolutionError, InvalidFieldError, InvalidInputError, InvalidModeError
from mathphys.fourier import FourierSeries, TorusGrid, fourier_coeffs
from mathphys.spectral_pde import (
    EMField,
    HeatProblem,
    WaveData,
    best_approximation,
    divergence_defect,
    heat_kernel,
    heat_line,
    heat_residual,
    heat_torus,
    maxwell_free,
    random_source_free_field,
    schroedinger_series,
    schroedinger_torus,
    tychonoff_solution,
    wave_dirichlet,
    wave_energy,
)


def torus(f, n=1, M=64):
    return TorusGrid.from_function(f, n, M)


def test_heat_single_mode_and_semigroup():
    u0 = torus(np.sin)
    p = HeatProblem(1, "torus", 1.0, u0)
    u1 = heat_torus(p, 1.0)
    assert np.max(np.abs(u1.samples - math.exp(-1) * u0.samples)) <= 1e-12
    two_step = heat_torus(HeatProblem(1, "torus", 1.0, heat_torus(p, 0.3)), 0.7)
    assert np.max(np.abs(two_step.samples - u1.samples)) <= 1e-12


def test_heat_constant_and_mass():
    c = TorusGrid(2, 16, np.full((16, 16), 3.0))
    assert np.allclose(heat_torus(HeatProblem(2, "torus", 0.5, c), 2.0).samples, 3.0, atol=1e-14)
    rng = np.random.default_rng(2)
    u0 = TorusGrid(2, 16, rng.normal(size=(16, 16)))
    u = heat_torus(HeatProblem(2, "torus", 0.5, u0), 0.4)
    assert np.sum(u.samples) == pytest.approx(np.sum(u0.samples), abs=1e-12)
    assert u.mean_square() <= u0.mean_square()
    with pytest.raises(InvalidInputError):
        heat_torus(HeatProblem(2, "torus", 0.5, u0), -0.1)
    with pytest.raises(InvalidInputError):
        HeatProblem(1, "torus", 0.0, u0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2), st.integers(0, 2**31 - 1))
def test_heat_semigroup_and_contraction(t1, t2, seed):
    rng = np.random.default_rng(seed)
    u0 = TorusGrid(1, 32, rng.normal(size=32))
    p = HeatProblem(1, "torus", 0.7, u0)
    a = heat_torus(HeatProblem(1, "torus", 0.7, heat_torus(p, t1)), t2)
    b = heat_torus(p, t1 + t2)
    assert np.max(np.abs(a.samples - b.samples)) <= 1e-12
    assert b.mean_square() <= u0.mean_square() + 1e-15


def test_heat_line_gaussian():
    u0 = lambda y: np.exp(-(y**2) / 2)  # noqa: E731
    x = np.linspace(-4, 4, 17)
    for t in (0.05, 0.5, 2.0):
        exact = (1 + 2 * t) ** -0.5 * np.exp(-(x**2) / (2 * (1 + 2 * t)))
        assert np.max(np.abs(heat_line(u0, 1.0, t, x) - exact)) <= 1e-8
    with pytest.raises(InvalidInputError):
        heat_line(u0, 1.0, 0.0, 0.0)


def test_heat_line_mass_and_semigroup():
    u0 = lambda y: np.where(np.abs(y) < 1, 1.0 - np.abs(y), 0.0)  # noqa: E731
    xs = np.linspace(-20, 20, 2001)
    u = heat_line(u0, 0.5, 1.0, xs)
    mass = trapezoid(u, xs)
    assert mass == pytest.approx(1.0, abs=1e-4)
    s, t, D = 0.3, 0.8, 1.0
    one = heat_line(lambda y: heat_kernel(D, s, y), D, t, xs[::50])
    np.testing.assert_allclose(one, heat_kernel(D, s + t, xs[::50]), atol=1e-8)


def test_heat_residuals():
    samples = [(t, x) for t in np.linspace(0, 0.5, 11) for x in np.linspace(-1, 1, 11)]
    assert heat_residual(tychonoff_solution, 1.0, samples, 1e-4) <= 1e-4
    assert heat_residual(lambda t, x: x, 1.0, samples) == 0.0
    kern_samples = [(t, x) for t in np.linspace(0.2, 1.0, 9) for x in np.linspace(-2, 2, 9)]
    assert heat_residual(lambda t, x: heat_kernel(1.0, t, x), 1.0, kern_samples) <= 1e-5


def test_schroedinger_modes():
    M, t = 64, 0.9
    psi, drift = schroedinger_torus(torus(lambda x: np.exp(1j * x), M=M), t)
    np.testing.assert_allclose(psi.samples, np.exp(-1j * t) * torus(lambda x: np.exp(1j * x), M=M).samples, atol=1e-13)
    cos2 = torus(lambda x: 2 * np.cos(x), M=M)
    psi, _ = schroedinger_torus(cos2, t)
    np.testing.assert_allclose(psi.samples, np.exp(-1j * t) * cos2.samples, atol=1e-13)
    assert drift <= 1e-12


def test_schroedinger_unitarity_random():
    rng = np.random.default_rng(42)
    for _ in range(20):
        psi0 = TorusGrid(1, 256, rng.normal(size=256) + 1j * rng.normal(size=256))
        _, drift = schroedinger_torus(psi0, rng.uniform(0, 10))
        assert drift <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31 - 1))
def test_schroedinger_group_law(t1, t2, seed):
    rng = np.random.default_rng(seed)
    psi0 = TorusGrid(1, 64, rng.normal(size=64) + 1j * rng.normal(size=64))
    a, _ = schroedinger_torus(schroedinger_torus(psi0, t1)[0], t2)
    b, drift = schroedinger_torus(psi0, t1 + t2)
    assert np.max(np.abs(a.samples - b.samples)) <= 1e-12
    assert drift <= 1e-12


def test_best_approximation_trig_polynomial():
    s = FourierSeries(1, 5, [0, 0, 1, 0, 2, 0, 0, 0, 0, 0, 0])
    N, trunc, tail = best_approximation(s, 1e-3)
    assert N == 3 and tail == 0.0
    assert trunc.norm_sq() == s.norm_sq()


def test_best_approximation_harmonic_tail():
    from scipy.special import polygamma

    R = 4000
    n = np.arange(-R, R + 1)
    c = np.where(n >= 1, 1.0 / np.maximum(n, 1), 0.0)
    s = FourierSeries(1, R, c)
    for eps in (0.3, 0.1, 0.03):
        N, _, tail = best_approximation(s, eps, tail_beyond=float(polygamma(1, R + 1)))
        # oracle: the tail sum over n > N of n^-2 is polygamma(1, N + 1)
        assert polygamma(1, N + 1) < eps**2 <= polygamma(1, N)
        assert tail == pytest.approx(math.sqrt(polygamma(1, N + 1)), rel=1e-9)
    with pytest.raises(InsufficientResolutionError):
        best_approximation(s, 1e-3, tail_beyond=float(polygamma(1, R + 1)))


def test_truncation_error_is_time_invariant():
    rng = np.random.default_rng(8)
    M = 256
    psi0 = TorusGrid(1, M, rng.normal(size=M) + 1j * rng.normal(size=M))
    psi0.samples = np.fft.ifft(np.fft.fft(psi0.samples) / (1 + np.abs(np.fft.fftfreq(M, 1 / M))) ** 2)
    series = fourier_coeffs(psi0, 127)
    N, trunc, tail = best_approximation(series, 1e-2)

    def err(t):
        full = schroedinger_series(series, t)
        part = schroedinger_series(trunc, t)
        diff = full.coeffs.copy()
        diff[127 - N : 127 + N + 1] -= part.coeffs
        return math.sqrt(np.sum(np.abs(diff) ** 2))

    assert err(0) < 1e-2
    assert abs(err(7) - err(0)) <= 1e-12
    assert err(0) == pytest.approx(tail, rel=1e-12)


def test_wave_fundamental_mode():
    L = 2.0
    w = WaveData(L, [1.0], [0.0])
    x = np.linspace(0, L, 41)
    for t in (0.0, 0.3, 1.7):
        u = wave_dirichlet(w, t, x)
        np.testing.assert_allclose(u, np.cos(math.pi * t / L) * np.sin(math.pi * x / L), atol=1e-10)
        assert abs(u[0]) <= 1e-15 and abs(u[-1]) <= 1e-12


def test_wave_initial_conditions_and_energy():
    L = 3.0
    rng = np.random.default_rng(4)
    phi = rng.normal(size=20) / np.arange(1, 21) ** 3
    psi = rng.normal(size=20) / np.arange(1, 21) ** 2
    w = WaveData(L, phi, psi)
    x = np.linspace(0, L, 31)
    u0 = wave_dirichlet(w, 0.0, x)
    n = np.arange(1, 21)
    np.testing.assert_allclose(u0, np.sin(np.outer(x, n) * math.pi / L) @ phi, atol=1e-12)
    h = 1e-3
    u = lambda s: wave_dirichlet(w, s, x)  # noqa: E731
    ut = (8 * (u(h) - u(-h)) - (u(2 * h) - u(-2 * h))) / (12 * h)  # fourth-order stencil
    np.testing.assert_allclose(ut.real, np.sin(np.outer(x, n) * math.pi / L) @ psi, atol=1e-10)
    assert np.max(np.abs(wave_dirichlet(w, 1.234, x).imag)) <= 1e-10
    energies = [wave_energy(w, t) for t in np.linspace(0, 5, 11)]
    assert max(energies) - min(energies) <= 1e-8


def test_wave_mode_validation_and_summability_warning():
    with pytest.raises(InvalidModeError):
        WaveData(1.0, {0: 1.0}, {})
    w = WaveData(1.0, {2: 1.0}, {})
    np.testing.assert_allclose(wave_dirichlet(w, 0.0, [0.25]), [1.0], atol=1e-15)
    with pytest.raises(InvalidInputError):
        wave_dirichlet(w, 0.0, [1.5])
    long = WaveData(1.0, np.ones(200), np.zeros(200))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        wave_dirichlet(long, 0.1, [0.5])
    assert any("truncated" in str(c.message) for c in caught)


def test_maxwell_zero_and_single_mode():
    M = 8
    zero = EMField(np.zeros((3, M, M, M)), np.zeros((3, M, M, M)))
    out, drift, real = maxwell_free(zero, 1.0, 0.1)
    assert np.all(out.E == 0) and drift == 0 and real == 0
    x = np.meshgrid(*([-np.pi + 2 * np.pi * np.arange(M) / M] * 3), indexing="ij")[0]
    E = np.zeros((3, M, M, M))
    E[1] = np.cos(x)
    em = EMField(E, np.zeros_like(E))
    quarter, _, _ = maxwell_free(em, math.pi / 2, 1e-3)
    # E_y = cos x cos t, H_z = -cos... ; at t = pi/2 the electric field vanishes
    assert np.max(np.abs(quarter.E)) <= 1e-6
    assert np.max(np.abs(np.abs(quarter.H[2]) - np.abs(np.sin(x)))) <= 1e-6
    full, _, _ = maxwell_free(em, 2 * math.pi, 1e-3)
    assert np.max(np.abs(full.E - E)) <= 1e-6 and np.max(np.abs(full.H)) <= 1e-6


def test_maxwell_random_field():
    em = random_source_free_field(16, np.random.default_rng(0))
    assert divergence_defect(em.E) <= 1e-12 and em.energy() == pytest.approx(1.0)
    out, drift, realness = maxwell_free(em, 1.0, 1e-3)
    assert drift <= 1e-8 and realness <= 1e-10
    assert divergence_defect(out.E) <= 1e-8 and divergence_defect(out.H) <= 1e-8


def test_maxwell_rejects_sources():
    M = 8
    x = np.meshgrid(*([-np.pi + 2 * np.pi * np.arange(M) / M] * 3), indexing="ij")[0]
    E = np.zeros((3, M, M, M))
    E[0] = np.sin(x)
    with pytest.raises(InvalidFieldError):
        maxwell_free(EMField(E, np.zeros_like(E)), 1.0, 0.1)
