"""Spectral estimates for Hermitian operators and one-dimensional Schrödinger operators.

Units: hbar = 1 and 2m = 1, so the one-dimensional Hamiltonian is
``-d^2/dx^2 + lambda V``.  Operators are dense complex matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import bisect

from .errors import BracketError, InvalidInputError, PreconditionError
from .fourier import TorusGrid
from .linear_flow import matrix_exponential
from .reports import BoundReport

HERMITIAN_TOL = 1e-12
BS_WINDOW = 40.0
BS_SPACING = 1.0 / 200


def hermitian(H, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``H`` as a complex array after checking ``H = H*``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInputError("operator must be a square matrix")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("operator entries must be finite")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * max(1.0, np.max(np.abs(H), initial=0.0)):
        raise InvalidInputError("operator is not Hermitian")
    return H


def _vector(psi, dim: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != dim:
        raise InvalidInputError(f"vector of length {psi.size} does not match dimension {dim}")
    return psi


def _unit(psi, dim: int) -> np.ndarray:
    psi = _vector(psi, dim)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise InvalidInputError("state must be normalized")
    return psi


def expectation(H: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, H @ psi)))


def rayleigh_quotient(H, psi) -> float:
    H = hermitian(H)
    psi = _vector(psi, H.shape[0])
    nrm = float(np.real(np.vdot(psi, psi)))
    if nrm == 0:
        raise InvalidInputError("Rayleigh quotient of the zero vector")
    return expectation(H, psi) / nrm


def galerkin_minmax(H, phis) -> np.ndarray:
    """Sorted eigenvalues of ``H`` compressed to the span of the orthonormal columns ``phis``."""
    H = hermitian(H)
    Phi = np.asarray(phis, dtype=complex)
    if Phi.ndim == 1:
        Phi = Phi[:, None]
    if Phi.shape[0] != H.shape[0]:
        raise InvalidInputError("basis vectors must be columns of length dim")
    gram = Phi.conj().T @ Phi
    if np.max(np.abs(gram - np.eye(Phi.shape[1]))) > 1e-10:
        raise InvalidInputError("trial family is not orthonormal")
    h = Phi.conj().T @ H @ Phi
    return np.linalg.eigvalsh(0.5 * (h + h.conj().T))


def temple_bound(H, psi, mu: float) -> float:
    """Temple's lower bound ``<H> - var(H) / (mu - <H>)`` on the ground-state energy.

    Needs ``<H> < mu`` and no spectrum between the ground state and ``mu``;
    both are checked against the dense spectrum.
    """
    H = hermitian(H)
    psi = _unit(psi, H.shape[0])
    ev = np.linalg.eigvalsh(H)
    e0 = ev[0]
    scale = max(1.0, float(np.max(np.abs(ev))))
    above = ev[ev > e0 + 1e-12 * scale]
    mean = expectation(H, psi)
    if not mean < mu:
        raise PreconditionError("<psi, H psi> < mu", f"expectation {mean:.6g} is not below mu={mu:.6g}")
    if above.size and not mu <= above[0]:
        raise PreconditionError("mu <= E_1", f"mu={mu:.6g} exceeds the next spectral point {above[0]:.6g}")
    Hpsi = H @ psi
    variance = float(np.real(np.vdot(Hpsi, Hpsi))) - mean**2
    return mean - max(variance, 0.0) / (mu - mean)


def resolvent_kernel_1d(E: float, x, y):
    """Kernel of ``(-d^2/dx^2 + E)^{-1}`` on the line: ``e^{-sqrt(E)|x-y|} / (2 sqrt(E))``."""
    if not E > 0:
        raise InvalidInputError("resolvent kernel needs E > 0")
    mu = math.sqrt(E)
    return np.exp(-mu * np.abs(np.asarray(x) - np.asarray(y))) / (2 * mu)


@dataclass
class Potential1D:
    """A nonpositive potential sampled on the uniform grid ``x`` of ``[-R, R]``."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.shape != self.values.shape or self.x.size < 3:
            raise InvalidInputError("grid and values must match and have at least three points")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("potential must be finite")
        if np.any(self.values > 0):
            raise InvalidInputError("potential must be nonpositive")
        dx = np.diff(self.x)
        if not np.allclose(dx, dx[0], rtol=1e-9):
            raise InvalidInputError("grid must be uniform")

    @classmethod
    def from_function(cls, V: Callable, R: float = BS_WINDOW, h: float = BS_SPACING) -> "Potential1D":
        n = int(round(2 * R / h))
        x = np.linspace(-R, R, n + 1)
        return cls(x, np.asarray(V(x), dtype=float) * np.ones_like(x))

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def integral_abs(self) -> float:
        return float(trapezoid(np.abs(self.values), self.x))


@dataclass
class BSResult:
    mu_star: float
    energy: float
    weak_coupling_prediction: float
    grid_diag_energy: float
    bracket: tuple = (0.0, 0.0)
    details: dict = field(default_factory=dict)


def bs_kernel(V: Potential1D, mu: float) -> np.ndarray:
    """``h / (2 mu) sqrt|V_i| e^{-mu |x_i - x_j|} sqrt|V_j|`` on the support of ``V``."""
    supp = V.values != 0
    x = V.x[supp]
    s = np.sqrt(-V.values[supp])
    return V.h / (2 * mu) * s[:, None] * np.exp(-mu * np.abs(x[:, None] - x[None, :])) * s[None, :]


def bs_top_eigenvalue(V: Potential1D, mu: float) -> float:
    K = bs_kernel(V, mu)
    return float(np.linalg.eigvalsh(K)[-1])


def grid_ground_energy(V: Potential1D, lam: float) -> float:
    """Lowest eigenvalue of ``-D^2 + lam V`` with the 3-point Laplacian and Dirichlet ends."""
    h = V.h
    d = 2.0 / h**2 + lam * V.values[1:-1]
    e = np.full(d.size - 1, -1.0 / h**2)
    return float(eigh_tridiagonal(d, e, select="i", select_range=(0, 0), eigvals_only=True)[0])


def birman_schwinger(V: Potential1D, lam: float, max_expansions: int = 60) -> BSResult:
    """Bound-state energy of ``-d^2/dx^2 + lam V`` from ``lam * top(K(mu)) = 1``."""
    if not lam > 0:
        raise InvalidInputError("coupling must be positive")
    mass = V.integral_abs()
    if mass == 0:
        raise InvalidInputError("potential vanishes identically")

    def g(mu):
        return lam * bs_top_eigenvalue(V, mu) - 1.0

    lo, hi = lam * mass / 40, 10 * lam * mass
    for _ in range(max_expansions):
        if g(lo) > 0:
            break
        lo /= 2
    else:
        raise BracketError("no lower bracket for the Birman-Schwinger equation")
    for _ in range(max_expansions):
        if g(hi) < 0:
            break
        hi *= 2
    else:
        raise BracketError("no upper bracket for the Birman-Schwinger equation")
    mu_star = bisect(g, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=400)
    return BSResult(
        mu_star=float(mu_star),
        energy=-float(mu_star) ** 2,
        weak_coupling_prediction=-(lam**2) / 4 * mass**2,
        grid_diag_energy=grid_ground_energy(V, lam),
        bracket=(lo, hi),
    )


@dataclass
class MultiplicationSpectrum:
    hull: tuple
    points: np.ndarray
    residuals: dict


def multiplication_spectrum(
    f, x=None, probes: Optional[Sequence[float]] = None, widths: Sequence[float] = (0.2, 0.1, 0.05)
) -> MultiplicationSpectrum:
    """Spectrum of multiplication by sampled ``f`` with Weyl-sequence residuals.

    For every probe value ``lambda`` a normalized Gaussian bump of each width
    is centred where ``|f - lambda|`` is smallest; the residuals
    ``||(f - lambda) psi||`` shrink with the width when ``lambda`` lies in the
    range.  Without a grid ``x`` the samples are read as a diagonal matrix
    and unit vectors replace the bumps.
    """
    f = np.asarray(f, dtype=float).ravel()
    if not np.all(np.isfinite(f)):
        raise InvalidInputError("samples must be finite")
    points = np.unique(f)
    if probes is None:
        probes = np.quantile(f, np.linspace(0, 1, 5), method="nearest")
    residuals = {}
    for lam in probes:
        j = int(np.argmin(np.abs(f - lam)))
        if x is None:
            residuals[float(lam)] = [abs(f[j] - lam)]
            continue
        xs = np.asarray(x, dtype=float).ravel()
        res = []
        for w in widths:
            psi = np.exp(-((xs - xs[j]) ** 2) / (2 * w**2))
            psi /= np.linalg.norm(psi)
            res.append(float(np.linalg.norm((f - lam) * psi)))
        residuals[float(lam)] = res
    return MultiplicationSpectrum((float(f.min()), float(f.max())), points, residuals)


def uncertainty_check(A, B, psi) -> BoundReport:
    """``1/2 |<psi, i[A, B] psi>| <= sigma(A) sigma(B)``."""
    A, B = hermitian(A), hermitian(B)
    psi = _unit(psi, A.shape[0])
    comm = 1j * (A @ B - B @ A)
    lhs = 0.5 * abs(np.vdot(psi, comm @ psi))

    def sigma(X):
        return float(np.linalg.norm(X @ psi - expectation(X, psi) * psi))

    rhs = sigma(A) * sigma(B)
    return BoundReport("uncertainty", float(lhs), rhs, 1e-10, bool(lhs <= rhs + 1e-10))


def _central(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)


def _third(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, -2, axis) - 2 * np.roll(f, -1, axis) + 2 * np.roll(f, 1, axis) - np.roll(f, 2, axis)) / (
        2 * h**3
    )


def diamagnetic_check(psi: TorusGrid, A: Sequence[TorusGrid], fd_step: Optional[float] = None) -> BoundReport:
    """Pointwise ``|grad |psi|| <= |(-i grad - A) psi|`` on a periodic grid.

    Derivatives are central differences with the grid spacing.  Their
    truncation error is at most ``h^2/6`` times a third derivative, so the
    comparison allows a slack ``C h^2`` with ``C`` estimated from discrete
    third derivatives of ``psi`` and ``|psi|`` (with a safety factor 2).
    Points where ``|psi| <= 1e-8`` are skipped.
    """
    if len(A) != psi.n or any((a.n, a.M) != (psi.n, psi.M) for a in A):
        raise InvalidInputError("vector potential must have one grid per axis matching psi")
    h = psi.h
    if fd_step is not None and not math.isclose(fd_step, h, rel_tol=1e-12):
        raise InvalidInputError("finite differences use the grid spacing")
    u = psi.samples
    mod = np.abs(u)
    lhs_sq = np.zeros(u.shape)
    rhs_sq = np.zeros(u.shape)
    third_mod = third_psi = 0.0
    for j in range(psi.n):
        lhs_sq += _central(mod, j, h) ** 2
        cov = -1j * _central(u, j, h) - A[j].samples.real * u
        rhs_sq += np.abs(cov) ** 2
        third_mod = max(third_mod, float(np.max(np.abs(_third(mod, j, h)))))
        third_psi = max(third_psi, float(np.max(np.abs(_third(u, j, h)))))
    mask = mod > 1e-8
    excess = np.sqrt(lhs_sq[mask]) - np.sqrt(rhs_sq[mask])
    C = 2.0 * math.sqrt(psi.n) / 6.0 * (third_mod + third_psi)
    worst = float(np.max(excess)) if excess.size else 0.0
    slack = C * h**2
    return BoundReport(
        "diamagnetic",
        worst,
        0.0,
        slack,
        bool(worst <= slack),
        details={"C": C, "h": h, "points": int(mask.sum())},
    )


def operator_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2))


def duhamel_gap(H1, W, eps: float, t: float) -> BoundReport:
    """``||e^{-itH1} - e^{-it(H1 + eps W)}|| <= |t| eps ||W||``."""
    H1, W = hermitian(H1), hermitian(W)
    if H1.shape != W.shape:
        raise InvalidInputError("operators must have the same dimension")
    if eps < 0:
        raise InvalidInputError("eps must be nonnegative")
    lhs = operator_norm(matrix_exponential(-1j * H1, t) - matrix_exponential(-1j * (H1 + eps * W), t))
    rhs = abs(t) * eps * operator_norm(W)
    return BoundReport("duhamel", lhs, rhs, 1e-10, bool(lhs <= rhs + 1e-10))
