"""Fourier analysis on the torus ``T^n = [-pi, pi)^n`` and on ``R^n``.

Coefficients use the normalized pairing ``f^(k) = (2 pi)^{-n} int e^{-ik.x} f(x) dx``
so that the exponentials ``e^{ik.x}`` are orthonormal.  On a grid of ``M``
points per axis the integral becomes the rectangle rule, evaluated with an
FFT.  For functions that are smooth only on the closed interval (the sawtooth
``f(x) = x`` for instance) the rectangle rule converges slowly, and
:func:`interval_fourier_coeffs` provides a Filon-type alternative that is
exact for piecewise-linear data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AliasingError, InvalidInputError, UndefinedFitError


def grid_axis(M: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(M) / M


def wavenumbers(M: int) -> np.ndarray:
    """Integer frequencies in FFT order."""
    return np.fft.fftfreq(M, 1.0 / M)


def odd_wavenumbers(M: int) -> np.ndarray:
    """FFT-order frequencies with the Nyquist entry zeroed.

    First (and other odd) derivatives of a real grid function are only real
    and skew-adjoint if the unpaired Nyquist mode is dropped.
    """
    k = wavenumbers(M)
    if M % 2 == 0:
        k[M // 2] = 0.0
    return k


@dataclass
class TorusGrid:
    """Samples of a function on ``x_j = -pi + 2 pi j / M`` along each of ``n`` axes."""

    n: int
    M: int
    samples: np.ndarray

    def __post_init__(self):
        self.n, self.M = int(self.n), int(self.M)
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.n < 1 or self.M < 2 or self.M % 2:
            raise InvalidInputError("need n >= 1 and an even number M >= 2 of points per axis")
        if self.samples.shape != (self.M,) * self.n:
            raise InvalidInputError(f"samples must have shape {(self.M,) * self.n}, got {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInputError("grid samples must be finite")

    @classmethod
    def from_function(cls, f: Callable, n: int, M: int) -> "TorusGrid":
        """Sample a vectorized ``f(x_1, ..., x_n)``."""
        return cls(n, M, np.broadcast_to(f(*cls.mesh(n, M)), (M,) * n))

    @staticmethod
    def mesh(n: int, M: int) -> list[np.ndarray]:
        return np.meshgrid(*([grid_axis(M)] * n), indexing="ij")

    @property
    def h(self) -> float:
        return 2 * np.pi / self.M

    def like(self, samples) -> "TorusGrid":
        return TorusGrid(self.n, self.M, samples)

    def mean_square(self) -> float:
        """``(2 pi)^{-n} int |f|^2`` by the rectangle rule."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def l1_distance(self, other: "TorusGrid") -> float:
        return float(np.mean(np.abs(self.samples - other.samples)))


@dataclass
class FourierSeries:
    """Coefficients ``coeffs[k + N]`` for ``k`` in the cube ``{-N..N}^n``."""

    n: int
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.n, self.N = int(self.n), int(self.N)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.N < 0 or self.coeffs.shape != (2 * self.N + 1,) * self.n:
            raise InvalidInputError("coefficient array does not match the declared radius")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInputError("coefficients must be finite")

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, k) -> complex:
        k = np.atleast_1d(k)
        if np.any(np.abs(k) > self.N):
            return 0.0j
        return complex(self.coeffs[tuple(k + self.N)])

    def truncate(self, N: int) -> "FourierSeries":
        if N > self.N:
            raise InvalidInputError(f"radius {N} exceeds stored radius {self.N}")
        cut = slice(self.N - N, self.N + N + 1)
        return FourierSeries(self.n, N, self.coeffs[(cut,) * self.n])

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def evaluate(self, x) -> np.ndarray:
        return kernel_sum(self, "dirichlet", self.N, x)

    def to_grid(self, M: int) -> TorusGrid:
        """Synthesize on an ``M``-point grid (requires ``N < M/2``)."""
        if 2 * self.N >= M:
            raise AliasingError(f"radius {self.N} cannot be represented on {M} points")
        full = np.zeros((M,) * self.n, dtype=complex)
        idx = np.ix_(*([self.ks % M] * self.n))
        full[idx] = self.coeffs
        sign = _alternating(self.n, M)
        return TorusGrid(self.n, M, np.fft.ifftn(full * sign) * M**self.n)


def _alternating(n: int, M: int) -> np.ndarray:
    """``(-1)^{k_1 + ... + k_n}`` on FFT-ordered frequencies (``M`` even)."""
    s = (-1.0) ** np.arange(M)
    out = s
    for _ in range(n - 1):
        out = np.multiply.outer(out, s)
    return out


def fourier_coeffs(f: TorusGrid, N: int) -> FourierSeries:
    """Rectangle-rule coefficients ``M^{-n} sum_j e^{-ik.x_j} f(x_j)`` for ``|k_i| <= N``."""
    N = int(N)
    if N < 0:
        raise InvalidInputError("radius must be nonnegative")
    if 2 * N >= f.M:
        raise AliasingError(f"N={N} requires more than {f.M} points per axis (need N < M/2)")
    M, n = f.M, f.n
    spectrum = np.fft.fftn(f.samples) / M**n * _alternating(n, M)
    idx = np.arange(-N, N + 1) % M
    return FourierSeries(n, N, spectrum[np.ix_(*([idx] * n))])


def _edge_weight(theta: np.ndarray) -> np.ndarray:
    """``int_0^1 e^{-i theta s} (1 - s) ds``."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 1e-2
    big = ~small
    tb = theta[big]
    out[big] = 1 / (1j * tb) + (1 - np.exp(-1j * tb)) / tb**2
    ts = theta[small]
    acc = np.zeros(ts.shape, dtype=complex)
    term = np.ones(ts.shape, dtype=complex)
    for m in range(12):
        acc += term / ((m + 1) * (m + 2))
        term = term * (-1j * ts) / (m + 1)
    out[small] = acc
    return out


def _filon_axis(values: np.ndarray, N: int, axis: int) -> np.ndarray:
    values = np.moveaxis(values, axis, 0)
    M = values.shape[0] - 1
    h = 2 * np.pi / M
    k = np.arange(-N, N + 1)
    theta = k * h
    W = np.ones_like(theta)
    nz = theta != 0
    W[nz] = (np.sin(theta[nz] / 2) / (theta[nz] / 2)) ** 2
    alpha = _edge_weight(theta)
    sign = (-1.0) ** np.abs(k)  # e^{-ik x_0} = e^{-ik x_M} = (-1)^k
    S = np.fft.fft(values[:M], axis=0)[k % M] * sign.reshape((-1,) + (1,) * (values.ndim - 1))
    shape = (-1,) + (1,) * (values.ndim - 1)
    f0, fM = values[0][None], values[M][None]
    edge0, edgeM = (sign * alpha).reshape(shape), (sign * np.conj(alpha)).reshape(shape)
    interior = W.reshape(shape) * (S - sign.reshape(shape) * f0)
    out = h * (interior + edge0 * f0 + edgeM * fM) / (2 * np.pi)
    return np.moveaxis(out, 0, axis)


def interval_fourier_coeffs(f: Callable, N: int, M: int, n: int = 1) -> FourierSeries:
    """Coefficients of ``f`` on the closed cube ``[-pi, pi]^n`` by linear Filon quadrature.

    ``f`` is sampled on ``M + 1`` nodes per axis including both endpoints and
    replaced by its (multi)linear interpolant, whose oscillatory integrals are
    computed in closed form.  The result is exact for piecewise-linear data,
    so jumps of the periodic extension cost nothing, and the error is
    ``O(M^{-2})`` for smooth data.
    """
    N, M = int(N), int(M)
    if M < 2 or N < 0:
        raise InvalidInputError("need M >= 2 and N >= 0")
    if 2 * N >= M:
        raise AliasingError(f"N={N} requires more than {M} panels (need N < M/2)")
    axis = np.linspace(-np.pi, np.pi, M + 1)
    values = np.asarray(f(*np.meshgrid(*([axis] * n), indexing="ij")), dtype=complex)
    values = np.broadcast_to(values, (M + 1,) * n)
    for ax in range(n):
        values = _filon_axis(values, N, ax)
    return FourierSeries(n, N, values)


def fejer_weights(N: int) -> np.ndarray:
    return 1.0 - np.abs(np.arange(-N, N + 1)) / (N + 1)


def kernel_sum(series: FourierSeries, kind: str, N: int, x) -> np.ndarray:
    """Dirichlet partial sum or Fejér mean of ``series`` at the points ``x``.

    ``x`` has shape ``(n,)`` or ``(P, n)`` (or ``(P,)`` when ``n == 1``).
    Returns a complex scalar or an array of length ``P``.
    """
    if kind not in ("dirichlet", "fejer"):
        raise InvalidInputError(f"unknown kernel {kind!r}")
    if not 0 <= N <= series.N:
        raise InvalidInputError(f"N={N} outside 0..{series.N}")
    n = series.n
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 0 if n == 1 else pts.ndim == 1
    pts = pts.reshape(-1, n)
    c = series.truncate(N).coeffs
    ks = np.arange(-N, N + 1)
    w = fejer_weights(N) if kind == "fejer" else np.ones(2 * N + 1)
    T = None
    for a in range(n):
        E = np.exp(1j * np.outer(pts[:, a], ks)) * w
        T = np.einsum("pk,k...->p...", E, c) if T is None else np.einsum("pk,pk...->p...", E, T)
    return T[0] if scalar else T


def convolve_torus(f: TorusGrid, g: TorusGrid) -> TorusGrid:
    """``(f*g)(x_i) = (2 pi / M)^n sum_j f(x_i - x_j) g(x_j)``, periodically wrapped."""
    if (f.n, f.M) != (g.n, g.M):
        raise InvalidInputError("convolution needs grids of the same shape")
    n, M = f.n, f.M
    # x_i - x_j is the grid point with index i - j + M/2
    f_shift = np.roll(f.samples, -M // 2, axis=tuple(range(n)))
    out = np.fft.ifftn(np.fft.fftn(f_shift) * np.fft.fftn(g.samples)) * (2 * np.pi / M) ** n
    return f.like(out)


@dataclass
class DecayReport:
    exponent: Optional[float]
    band_limited: bool
    regularity: Optional[int]
    verdict: str
    shell_radii: np.ndarray
    shell_max: np.ndarray
    derivative_gaps: dict = field(default_factory=dict)


#: Shells below this fraction of the largest coefficient are treated as zero.
NOISE_FLOOR = 1e-13
#: A series whose last significant shell is still this large ends abruptly.
BAND_EDGE = 1e-8
#: Safety margin on the fitted exponent before a regularity class is granted.
REGULARITY_MARGIN = 0.5


def decay_report(series: FourierSeries, derivatives: Optional[dict] = None) -> DecayReport:
    """Fit the power-law decay of ``|f^(k)|`` and translate it into a smoothness class.

    The fit is a least-squares line through ``log max_{|k|_inf = r} |f^(k)|``
    against ``log(1 + r)``.  A decay exponent ``-(n + s) - margin`` or faster
    is reported as compatible with ``C^s``.  ``derivatives`` optionally maps a
    multi-index ``alpha`` to the coefficient series of ``d^alpha f``; the gap
    to ``i^|alpha| k^alpha f^(k)`` is returned per multi-index.
    """
    if series.N < 8:
        raise InvalidInputError("decay fit needs radius >= 8")
    mag = np.abs(series.coeffs)
    top = float(mag.max())
    if top == 0:
        raise UndefinedFitError("all coefficients vanish")
    n, N = series.n, series.N
    grids = np.meshgrid(*([np.abs(series.ks)] * n), indexing="ij")
    shell = np.max(np.stack(grids), axis=0)
    radii = np.arange(1, N + 1)
    shell_max = np.array([mag[shell == r].max() for r in radii])
    significant = np.nonzero(shell_max > NOISE_FLOOR * top)[0]

    gaps = {}
    for alpha, dseries in (derivatives or {}).items():
        alpha = tuple(alpha)
        kpow = np.ones_like(series.coeffs)
        for a, (grid, power) in enumerate(zip(np.meshgrid(*([series.ks] * n), indexing="ij"), alpha)):
            kpow = kpow * grid.astype(float) ** power
        expected = (1j) ** sum(alpha) * kpow * series.coeffs
        gaps[alpha] = float(np.max(np.abs(dseries.truncate(N).coeffs - expected)))

    if significant.size == 0:
        return DecayReport(None, True, None, "band-limited", radii, shell_max, gaps)
    last = significant[-1]
    if last < N - 1 and shell_max[last] >= BAND_EDGE * top:
        return DecayReport(None, True, None, "band-limited", radii, shell_max, gaps)
    if significant.size < 2:
        raise UndefinedFitError("fewer than two significant shells")
    logs_r = np.log1p(radii[significant])
    logs_c = np.log(shell_max[significant])
    exponent = float(np.polyfit(logs_r, logs_c, 1)[0])
    s = math.floor(-exponent - n - REGULARITY_MARGIN)
    if s >= 0:
        return DecayReport(exponent, False, s, f"C^{s}-compatible", radii, shell_max, gaps)
    return DecayReport(exponent, False, None, "no regularity certified", radii, shell_max, gaps)


def gaussian_ft(lam: float, xi) -> float:
    """Transform of ``e^{-lam x^2 / 2}`` with the unitary ``(2 pi)^{-n/2}`` convention."""
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return float(lam ** (-xi.size / 2) * np.exp(-(xi @ xi) / (2 * lam)))


def gaussian_ft_quadrature(lam: float, xi, R: Optional[float] = None, panels: int = 4096) -> complex:
    """The same transform by trapezoidal quadrature on ``[-R, R]^n`` (one axis at a time)."""
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    R = 10 / math.sqrt(lam) if R is None else R
    x = np.linspace(-R, R, panels + 1)
    w = np.full(x.size, 2 * R / panels)
    w[[0, -1]] /= 2
    out = 1.0 + 0j
    for c in xi:
        out *= np.sum(w * np.exp(-1j * c * x - lam * x**2 / 2)) / math.sqrt(2 * math.pi)
    return complex(out)
