"""Spectral solvers for linear evolution equations.

Heat and free Schrödinger flows on the torus act diagonally on Fourier
coefficients.  The heat equation on the line is solved by convolution with
the Gaussian kernel, the Dirichlet wave equation by sine series, and the
vacuum Maxwell equations by a Runge-Kutta step on Fourier coefficients.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np

from .errors import InsufficientResolutionError, InvalidFieldError, InvalidInputError, InvalidModeError
from .fourier import FourierSeries, TorusGrid, odd_wavenumbers, wavenumbers
from .linear_flow import simpson_weights

HEAT_LINE_PANELS = 4096
WAVE_MAX_MODE = 128


@dataclass
class HeatProblem:
    dimension: int
    domain: str
    D: float
    u0: Union[TorusGrid, Callable]

    def __post_init__(self):
        if self.domain not in ("torus", "line"):
            raise InvalidInputError(f"unknown domain {self.domain!r}")
        if not self.D > 0:
            raise InvalidInputError("diffusion constant must be positive")
        if self.domain == "torus" and not isinstance(self.u0, TorusGrid):
            raise InvalidInputError("torus problems need a TorusGrid initial datum")


def _k_squared(n: int, M: int) -> np.ndarray:
    k = wavenumbers(M)
    grids = np.meshgrid(*([k] * n), indexing="ij")
    return sum(g**2 for g in grids)


def heat_torus(p: HeatProblem, t: float) -> TorusGrid:
    """Multiply each coefficient by ``exp(-D |k|^2 t)``."""
    if t < 0:
        raise InvalidInputError("backward heat flow is not supported")
    u0 = p.u0
    factor = np.exp(-p.D * _k_squared(u0.n, u0.M) * t)
    return u0.like(np.fft.ifftn(np.fft.fftn(u0.samples) * factor))


def heat_kernel(D: float, t: float, x) -> np.ndarray:
    return np.exp(-np.asarray(x) ** 2 / (4 * D * t)) / math.sqrt(4 * math.pi * D * t)


def heat_line(u0: Callable, D: float, t: float, x, panels: int = HEAT_LINE_PANELS, R: Optional[float] = None):
    """Gaussian convolution ``(4 pi D t)^{-1/2} int exp(-(x-y)^2/4Dt) u0(y) dy``.

    The integral runs over ``y`` in ``[x - R, x + R]`` with
    ``R = 10 max(1, sqrt(2 D t))`` by composite Simpson on ``panels`` panels.
    ``x`` may be a scalar or an array.
    """
    if not t > 0:
        raise InvalidInputError("heat_line needs t > 0")
    if not D > 0:
        raise InvalidInputError("diffusion constant must be positive")
    R = 10 * max(1.0, math.sqrt(2 * D * t)) if R is None else R
    s = np.linspace(-R, R, 2 * panels + 1)
    w = simpson_weights(panels, 2 * R)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    y = xs[:, None] + s[None, :]
    vals = (heat_kernel(D, t, s)[None, :] * np.asarray(u0(y), dtype=float)) @ w
    return vals if np.ndim(x) else float(vals[0])


def heat_residual(u: Callable, D: float, sample_points: Iterable, fd_step: float = 1e-4) -> float:
    """Largest ``|d_t u - D d_xx u|`` over the ``(t, x)`` samples, by central differences."""
    h = fd_step
    worst = 0.0
    for t, x in sample_points:
        ut = (u(t + h, x) - u(t - h, x)) / (2 * h)
        uxx = (u(t, x + h) - 2 * u(t, x) + u(t, x - h)) / h**2
        worst = max(worst, abs(ut - D * uxx))
    return float(worst)


def tychonoff_solution(t, x):
    """A non-zero solution of ``u_t = u_xx`` for ``t < 1`` that grows like ``e^{x^2}``."""
    return (1 - t) ** -0.5 * np.exp(x**2 / (4 * (1 - t)))


def _torus_norm(samples: np.ndarray) -> float:
    return math.sqrt(float(np.mean(np.abs(samples) ** 2)))


def schroedinger_torus(psi0: TorusGrid, t: float) -> tuple[TorusGrid, float]:
    """Free evolution ``e^{-i n^2 t}`` per mode, with the drift of the normalized L2 norm."""
    if psi0.n != 1:
        raise InvalidInputError("Schrödinger solver works on the circle (n = 1)")
    phase = np.exp(-1j * wavenumbers(psi0.M) ** 2 * t)
    psi = np.fft.ifft(np.fft.fft(psi0.samples) * phase)
    return psi0.like(psi), abs(_torus_norm(psi) - _torus_norm(psi0.samples))


def schroedinger_series(series: FourierSeries, t: float) -> FourierSeries:
    """The same evolution on a coefficient table."""
    if series.n != 1:
        raise InvalidInputError("Schrödinger solver works on the circle (n = 1)")
    return FourierSeries(1, series.N, series.coeffs * np.exp(-1j * series.ks.astype(float) ** 2 * t))


def best_approximation(psi0: FourierSeries, eps: float, tail_beyond: float = 0.0):
    """Smallest radius ``N`` whose discarded tail has norm below ``eps``.

    ``tail_beyond`` is the squared norm of modes outside the stored radius,
    when known analytically.  Returns ``(N, truncated series, tail norm)``.
    """
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    if psi0.n != 1:
        raise InvalidInputError("best approximation is implemented on the circle")
    mag2 = np.abs(psi0.coeffs) ** 2
    c = psi0.N
    shell = mag2[c:] + mag2[: c + 1][::-1]
    shell[0] = mag2[c]
    # tails[N] = sum over |n| > N
    tails = np.concatenate([np.cumsum(shell[::-1])[::-1][1:], [0.0]]) + tail_beyond
    ok = np.nonzero(tails < eps**2)[0]
    if ok.size == 0:
        raise InsufficientResolutionError(
            f"stored radius {psi0.N} leaves a tail of norm {math.sqrt(tails[-1]):.3g} >= eps"
        )
    N = int(ok[0])
    return N, psi0.truncate(N), math.sqrt(float(tails[N]))


@dataclass
class WaveData:
    """Sine coefficients of the initial value and velocity on ``[0, L]``.

    ``phi`` and ``psi`` are sequences indexed from mode 1, or mappings
    ``{n: coefficient}`` with ``n >= 1``.
    """

    L: float
    phi: Union[Iterable, Mapping]
    psi: Union[Iterable, Mapping]

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidInputError("interval length must be positive")
        self.phi = self._as_array(self.phi)
        self.psi = self._as_array(self.psi)
        size = max(self.phi.size, self.psi.size)
        self.phi = np.pad(self.phi, (0, size - self.phi.size))
        self.psi = np.pad(self.psi, (0, size - self.psi.size))

    @staticmethod
    def _as_array(coeffs) -> np.ndarray:
        if isinstance(coeffs, Mapping):
            if any(int(n) < 1 for n in coeffs):
                raise InvalidModeError("sine modes start at n = 1")
            out = np.zeros(max(coeffs, default=0), dtype=complex)
            for n, v in coeffs.items():
                out[int(n) - 1] = v
            return out
        out = np.asarray(list(coeffs), dtype=complex)
        if not np.all(np.isfinite(out)):
            raise InvalidInputError("coefficients must be finite")
        return out


def _wave_modes(w: WaveData, n_max: int):
    size = min(w.phi.size, n_max)
    dropped = np.sum(np.abs(w.phi[size:])) + np.sum(np.abs(w.psi[size:]))
    total = np.sum(np.abs(w.phi)) + np.sum(np.abs(w.psi))
    if dropped > 1e-12 * max(total, 1e-300):
        warnings.warn(
            f"wave coefficients truncated at n={n_max}; discarded l1 mass {dropped:.3g}", RuntimeWarning, stacklevel=3
        )
    n = np.arange(1, size + 1)
    omega = n * math.pi / w.L
    a1 = 0.5 * (w.phi[:size] + w.psi[:size] / (1j * omega))
    a2 = 0.5 * (w.phi[:size] - w.psi[:size] / (1j * omega))
    return n, omega, a1, a2


def wave_dirichlet(w: WaveData, t: float, x_samples, n_max: int = WAVE_MAX_MODE) -> np.ndarray:
    """``sum_n (a1 e^{i w_n t} + a2 e^{-i w_n t}) sin(n pi x / L)`` with ``w_n = n pi / L``."""
    x = np.asarray(x_samples, dtype=float)
    if np.any(x < 0) or np.any(x > w.L):
        raise InvalidInputError("sample points must lie in [0, L]")
    n, omega, a1, a2 = _wave_modes(w, n_max)
    c = a1 * np.exp(1j * omega * t) + a2 * np.exp(-1j * omega * t)
    return np.sin(np.multiply.outer(x, n) * math.pi / w.L) @ c


def wave_energy(w: WaveData, t: float, points: int = 2049, n_max: int = WAVE_MAX_MODE) -> float:
    """``int_0^L |u_t|^2 + |u_x|^2`` by the trapezoid rule on ``points`` nodes."""
    n, omega, a1, a2 = _wave_modes(w, n_max)
    x = np.linspace(0.0, w.L, points)
    c = a1 * np.exp(1j * omega * t) + a2 * np.exp(-1j * omega * t)
    ct = 1j * omega * (a1 * np.exp(1j * omega * t) - a2 * np.exp(-1j * omega * t))
    arg = np.multiply.outer(x, n) * math.pi / w.L
    ut = np.sin(arg) @ ct
    ux = np.cos(arg) @ (c * omega)
    dens = np.abs(ut) ** 2 + np.abs(ux) ** 2
    h = w.L / (points - 1)
    return float(h * (dens.sum() - 0.5 * (dens[0] + dens[-1])))


@dataclass
class EMField:
    """Electric and magnetic fields on the 3-torus, arrays of shape ``(3, M, M, M)``."""

    E: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        self.E = np.asarray(self.E)
        self.H = np.asarray(self.H)
        if self.E.shape != self.H.shape or self.E.ndim != 4 or self.E.shape[0] != 3:
            raise InvalidInputError("fields must have shape (3, M, M, M)")
        if len(set(self.E.shape[1:])) != 1 or self.E.shape[1] % 2:
            raise InvalidInputError("fields must live on a cubic grid with an even side")

    @property
    def M(self) -> int:
        return self.E.shape[1]

    def energy(self) -> float:
        return em_energy(self.E, self.H)


def _k_vectors(M: int) -> np.ndarray:
    k = odd_wavenumbers(M)
    return np.stack(np.meshgrid(k, k, k, indexing="ij"))


def spectral_curl(F_hat: np.ndarray, K: np.ndarray) -> np.ndarray:
    """``i k x F^`` on FFT coefficients."""
    return 1j * np.stack(
        [
            K[1] * F_hat[2] - K[2] * F_hat[1],
            K[2] * F_hat[0] - K[0] * F_hat[2],
            K[0] * F_hat[1] - K[1] * F_hat[0],
        ]
    )


def divergence_defect(F: np.ndarray) -> float:
    """Largest ``|k . F^(k)|`` over resolved modes, with normalized coefficients."""
    M = F.shape[1]
    K = _k_vectors(M)
    F_hat = np.fft.fftn(F, axes=(1, 2, 3)) / M**3
    return float(np.max(np.abs(np.sum(K * F_hat, axis=0))))


def em_energy(E: np.ndarray, H: np.ndarray) -> float:
    """``1/2 int_{T^3} |E|^2 + |H|^2`` by the rectangle rule."""
    M = E.shape[1]
    return 0.5 * (2 * math.pi / M) ** 3 * float(np.sum(np.abs(E) ** 2) + np.sum(np.abs(H) ** 2))


def transverse_projection(F: np.ndarray) -> np.ndarray:
    """Remove the gradient part of a vector field (and its Nyquist modes) spectrally."""
    M = F.shape[1]
    K = _k_vectors(M)
    F_hat = np.fft.fftn(F, axes=(1, 2, 3))
    k2 = np.sum(K**2, axis=0)
    k2_safe = np.where(k2 == 0, 1.0, k2)
    F_hat = F_hat - K * np.sum(K * F_hat, axis=0) / k2_safe
    nyq = np.zeros((M,) * 3, dtype=bool)
    for ax in range(3):
        idx = [slice(None)] * 3
        idx[ax] = M // 2
        nyq[tuple(idx)] = True
    F_hat[:, nyq] = 0
    out = np.fft.ifftn(F_hat, axes=(1, 2, 3))
    return out.real if np.isrealobj(F) else out


def random_source_free_field(M: int, rng: np.random.Generator, kmax: int = 4) -> EMField:
    """Real random fields with modes ``|k_i| <= kmax`` and no divergence."""
    k = wavenumbers(M)
    mask = np.all(np.abs(np.stack(np.meshgrid(k, k, k, indexing="ij"))) <= kmax, axis=0)

    def one():
        F = rng.normal(size=(3, M, M, M))
        F_hat = np.fft.fftn(F, axes=(1, 2, 3)) * mask
        return transverse_projection(np.fft.ifftn(F_hat, axes=(1, 2, 3)).real)

    E, H = one(), one()
    scale = math.sqrt(em_energy(E, H))
    return EMField(E / scale, H / scale)


def maxwell_free(em0: EMField, t: float, step: float, constraint_tol: float = 1e-8):
    """Evolve ``E_t = curl H``, ``H_t = -curl E`` with RK4 on Fourier coefficients.

    Returns ``(EMField, energy_drift, realness_drift)``.  The energy is
    monitored after every step; the realness drift is the largest imaginary
    part of the synthesized fields and is only meaningful for real input.
    """
    for name, F in (("E", em0.E), ("H", em0.H)):
        d = divergence_defect(F)
        if d > constraint_tol:
            raise InvalidFieldError(f"div {name} = {d:.3g} violates the source-free constraint")
    if not step > 0:
        raise InvalidInputError("step must be positive")
    M = em0.M
    K = _k_vectors(M)
    E = np.fft.fftn(em0.E, axes=(1, 2, 3))
    H = np.fft.fftn(em0.H, axes=(1, 2, 3))

    def rhs(E, H):
        return spectral_curl(H, K), -spectral_curl(E, K)

    def energy(E, H):
        # Parseval: sum |F|^2 = M^-3 sum |F^|^2
        return 0.5 * (2 * math.pi / M) ** 3 * float(np.sum(np.abs(E) ** 2) + np.sum(np.abs(H) ** 2)) / M**3

    e0 = energy(E, H)
    drift = 0.0
    n = max(1, int(math.ceil(abs(t) / step - 1e-9))) if t != 0 else 0
    h = t / n if n else 0.0
    for _ in range(n):
        k1 = rhs(E, H)
        k2 = rhs(E + 0.5 * h * k1[0], H + 0.5 * h * k1[1])
        k3 = rhs(E + 0.5 * h * k2[0], H + 0.5 * h * k2[1])
        k4 = rhs(E + h * k3[0], H + h * k3[1])
        E = E + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        H = H + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        drift = max(drift, abs(energy(E, H) - e0))
    E_x = np.fft.ifftn(E, axes=(1, 2, 3))
    H_x = np.fft.ifftn(H, axes=(1, 2, 3))
    realness = float(max(np.max(np.abs(E_x.imag)), np.max(np.abs(H_x.imag))))
    if np.isrealobj(em0.E) and np.isrealobj(em0.H):
        return EMField(E_x.real, H_x.real), drift, realness
    return EMField(E_x, H_x), drift, realness
