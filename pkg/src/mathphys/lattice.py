"""Tight-binding Hamiltonians on a periodically wrapped patch of ``Z^2``.

The shift ``s_j`` acts as ``(s_j psi)(g) = psi(g - e_j)``.  With the
transform ``psi^(k) = sum_g e^{+ik.g} psi(g)`` it becomes multiplication by
``e^{+ik_j}``; on an ``M x M`` patch the quasi-momenta are ``2 pi m / M``.

Two models are provided: the single-band square model
``1 + q1 s1 + q2 s2 + h.c.`` and the two-band honeycomb model whose
off-diagonal block is ``1 + q1 s1 + q2 s2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from .errors import DegeneratePointError, InvalidInputError, TruncationError
from .linear_flow import matrix_exponential

DEGENERACY_TOL = 1e-14

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True)
class TightBindingModel:
    kind: str
    q1: complex
    q2: complex
    truncation: int

    def __post_init__(self):
        if self.kind not in ("square_single_band", "honeycomb_two_band"):
            raise InvalidInputError(f"unknown model kind {self.kind!r}")
        if int(self.truncation) < 4:
            raise InvalidInputError("patch side must be at least 4")
        if not np.all(np.isfinite([self.q1, self.q2])):
            raise InvalidInputError("hopping amplitudes must be finite")

    @property
    def components(self) -> int:
        return 1 if self.kind == "square_single_band" else 2

    @property
    def state_shape(self) -> tuple:
        M = int(self.truncation)
        return (M, M) if self.components == 1 else (2, M, M)


def shift(psi: np.ndarray, j: int, power: int = 1) -> np.ndarray:
    """``s_j^power`` on the last two axes, ``(s_j psi)(g) = psi(g - e_j)``."""
    return np.roll(psi, power, axis=psi.ndim - 2 + j)


def apply_hamiltonian(model: TightBindingModel, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    q1, q2 = complex(model.q1), complex(model.q2)
    if model.components == 1:
        return (
            psi
            + q1 * shift(psi, 0)
            + q2 * shift(psi, 1)
            + np.conj(q1) * shift(psi, 0, -1)
            + np.conj(q2) * shift(psi, 1, -1)
        )
    a, b = psi[0], psi[1]
    top = b + q1 * shift(b, 0) + q2 * shift(b, 1)
    bottom = a + np.conj(q1) * shift(a, 0, -1) + np.conj(q2) * shift(a, 1, -1)
    return np.stack([top, bottom])


def patch_hamiltonian(model: TightBindingModel) -> np.ndarray:
    """Dense matrix of the wrapped Hamiltonian in the row-major site basis."""
    shape = model.state_shape
    dim = int(np.prod(shape))
    cols = [apply_hamiltonian(model, e.reshape(shape)).ravel() for e in np.eye(dim, dtype=complex)]
    return np.column_stack(cols)


def patch_momenta(M: int) -> np.ndarray:
    """Quasi-momenta ``2 pi m / M`` in the order used by ``numpy.fft``."""
    return 2 * np.pi * np.fft.fftfreq(M)


def band_function_square(q1: float, q2: float, k) -> np.ndarray:
    """``E(k) = 1 + 2 q1 cos k1 + 2 q2 cos k2``; ``k`` has a trailing axis of length 2."""
    k = np.asarray(k, dtype=float)
    return 1 + 2 * q1 * np.cos(k[..., 0]) + 2 * q2 * np.cos(k[..., 1])


def square_symbol(q1: complex, q2: complex, k1, k2) -> np.ndarray:
    """Symbol of ``1 + q1 s1 + q2 s2 + h.c.`` for complex amplitudes."""
    return 1 + 2 * np.real(q1 * np.exp(1j * k1)) + 2 * np.real(q2 * np.exp(1j * k2))


def varpi(q1: complex, q2: complex, k1, k2):
    return 1 + q1 * np.exp(-1j * np.asarray(k1)) + q2 * np.exp(-1j * np.asarray(k2))


@dataclass
class BlochPoint:
    k: np.ndarray
    varpi: complex
    e_plus: float
    e_minus: float
    p_plus: np.ndarray
    p_minus: np.ndarray

    @property
    def symbol(self) -> np.ndarray:
        return self.varpi.real * SIGMA1 + self.varpi.imag * SIGMA2


def bloch_symbol(w: complex) -> np.ndarray:
    """``T = Re(w) sigma_1 + Im(w) sigma_2``."""
    return w.real * SIGMA1 + w.imag * SIGMA2


def honeycomb_bloch(q1: complex, q2: complex, k) -> BlochPoint:
    """Bands ``E_+- = +-|varpi(k)|`` and spectral projections of the two-band symbol.

    Raises :class:`DegeneratePointError` (carrying ``varpi`` and the zero
    energies) where the bands touch and the projections are undefined.
    """
    k = np.asarray(k, dtype=float)
    w = complex(varpi(q1, q2, k[0], k[1]))
    r = abs(w)
    if r < DEGENERACY_TOL:
        raise DegeneratePointError(f"bands touch at k={k.tolist()}", w, 0.0, 0.0)
    T = bloch_symbol(w) / r
    eye = np.eye(2, dtype=complex)
    return BlochPoint(k, w, r, -r, 0.5 * (eye + T), 0.5 * (eye - T))


def find_dirac_point(q1: complex, q2: complex, k0) -> np.ndarray:
    """Solve ``varpi(k) = 0`` by Newton-type root finding from ``k0``."""

    def F(k):
        w = varpi(q1, q2, k[0], k[1])
        return [w.real, w.imag]

    def J(k):
        d1 = -1j * q1 * np.exp(-1j * k[0])
        d2 = -1j * q2 * np.exp(-1j * k[1])
        return [[d1.real, d2.real], [d1.imag, d2.imag]]

    sol = root(F, np.asarray(k0, dtype=float), jac=J, tol=1e-15)
    return (np.asarray(sol.x) + np.pi) % (2 * np.pi) - np.pi


def to_bloch(psi: np.ndarray) -> np.ndarray:
    """``psi^(k) = sum_g e^{+ik.g} psi(g)`` on the patch momenta."""
    M = psi.shape[-1]
    return np.fft.ifft2(psi, axes=(-2, -1)) * M * M


def from_bloch(psi_hat: np.ndarray) -> np.ndarray:
    M = psi_hat.shape[-1]
    return np.fft.fft2(psi_hat, axes=(-2, -1)) / (M * M)


def bloch_propagate(model: TightBindingModel, psi0: np.ndarray, t: float) -> np.ndarray:
    """Evolve by multiplication in momentum space."""
    M = int(model.truncation)
    k = patch_momenta(M)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    psi_hat = to_bloch(np.asarray(psi0, dtype=complex))
    if model.components == 1:
        return from_bloch(np.exp(-1j * t * square_symbol(model.q1, model.q2, k1, k2)) * psi_hat)
    # The position operator has off-diagonal block 1 + q s, whose symbol
    # 1 + q e^{+ik} is the conjugate of varpi evaluated at conj(q).
    w = varpi(np.conj(model.q1), np.conj(model.q2), k1, k2)
    r = np.abs(w)
    safe = np.where(r < DEGENERACY_TOL, 1.0, r)
    # T / |w| as a field of 2x2 matrices; zero where the bands touch (U = identity there)
    Tn = np.zeros((2, 2) + w.shape, dtype=complex)
    Tn[0, 1] = np.where(r < DEGENERACY_TOL, 0, np.conj(w) / safe)
    Tn[1, 0] = np.where(r < DEGENERACY_TOL, 0, w / safe)
    eye = np.eye(2)[:, :, None, None]
    P_plus, P_minus = 0.5 * (eye + Tn), 0.5 * (eye - Tn)
    U = np.exp(-1j * t * r) * P_plus + np.exp(1j * t * r) * P_minus
    U = np.where(r < DEGENERACY_TOL, eye, U)
    return from_bloch(np.einsum("ijab,jab->iab", U, psi_hat))


def tb_evolve(model: TightBindingModel, psi0, t: float, wrap: bool = True):
    """Position-space and momentum-space evolution of ``psi0`` and their max-norm gap."""
    if not wrap:
        raise TruncationError("open patch boundaries are not supported; evolution needs periodic wrap")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != model.state_shape:
        raise TruncationError(f"state of shape {psi0.shape} does not fit the patch {model.state_shape}")
    H = patch_hamiltonian(model)
    position = (matrix_exponential(-1j * H, t) @ psi0.ravel()).reshape(psi0.shape)
    bloch = bloch_propagate(model, psi0, t)
    return position, bloch, float(np.max(np.abs(position - bloch)))
