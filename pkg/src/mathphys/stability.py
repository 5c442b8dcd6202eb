"""Linear stability of fixed points of ODEs and Hamiltonian systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NotAFixedPointError, SolverError
from .linear_flow import VectorField

DEFAULT_TOL = 1e-8


@dataclass
class FixedPointReport:
    location: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    stability: str  # stable | marginal | unstable
    geometry: str  # elliptic | hyperbolic | neither
    warnings: list = field(default_factory=list)


def classify(eigenvalues, tol: float = DEFAULT_TOL) -> tuple[str, str]:
    """Stability and geometry labels from the spectrum of the linearization."""
    ev = np.asarray(eigenvalues, dtype=complex)
    re, im = ev.real, ev.imag
    if np.all(re < -tol):
        stability = "stable"
    elif np.all(re <= tol) and np.any(np.abs(re) <= tol):
        stability = "marginal"
    else:
        stability = "unstable"
    if np.all(np.abs(re) <= tol):
        geometry = "elliptic"
    elif np.all(np.abs(im) <= tol) and np.any(re > tol):
        geometry = "hyperbolic"
    else:
        geometry = "neither"
    return stability, geometry


def default_fd_step(x0) -> float:
    return 1e-5 * (1.0 + float(np.linalg.norm(x0)))


def jacobian_fd(F: Callable, x0, step: float) -> np.ndarray:
    """Central-difference Jacobian, column ``j`` = ``(F(x+h e_j) - F(x-h e_j)) / 2h``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    cols = []
    for j in range(x0.size):
        e = np.zeros_like(x0)
        e[j] = step
        cols.append((np.asarray(F(x0 + e), dtype=float) - np.asarray(F(x0 - e), dtype=float)) / (2 * step))
    return np.column_stack(cols)


def _report(x0, J, tol) -> FixedPointReport:
    eig = np.linalg.eigvals(J)
    stability, geometry = classify(eig, tol)
    warnings = []
    if np.any(np.abs(eig) <= tol):
        warnings.append("zero eigenvalue: the fixed point need not be isolated")
    return FixedPointReport(np.asarray(x0, dtype=float), J, eig, stability, geometry, warnings)


def analyze_fixed_point(F: Callable, x0, fd_step: float | None = None, tol: float = DEFAULT_TOL) -> FixedPointReport:
    """Linearize ``F`` at the fixed point ``x0`` and label it.

    Raises :class:`NotAFixedPointError` when ``|F(x0)| > tol``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    residual = float(np.linalg.norm(F(x0)))
    if residual > tol:
        raise NotAFixedPointError(f"|F(x0)| = {residual:.3g} exceeds tolerance {tol:.3g}")
    step = default_fd_step(x0) if fd_step is None else fd_step
    return _report(x0, jacobian_fd(F, x0, step), tol)


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    b: float = 8.0 / 5.0
    r: float = 0.5

    def __post_init__(self):
        if not all(np.isfinite([self.sigma, self.b, self.r])):
            raise InvalidInputError("Lorenz parameters must be finite")
        if self.sigma <= 0 or self.b <= 0 or self.r < 0:
            raise InvalidInputError("need sigma > 0, b > 0 and r >= 0")


def lorenz_field(p: LorenzParams) -> VectorField:
    s, b, r = p.sigma, p.b, p.r

    def F(x):
        return np.array([s * (x[1] - x[0]), -x[0] * x[2] + r * x[0] - x[1], x[0] * x[1] - b * x[2]])

    return VectorField(3, F, name="lorenz")


def lorenz_char_roots(p: LorenzParams) -> np.ndarray:
    """Roots of ``lambda^2 + (sigma+1) lambda + (1-r) sigma``, the non-trivial block of ``DF(0)``."""
    return np.roots([1.0, p.sigma + 1.0, (1.0 - p.r) * p.sigma])


def lorenz_model(p: LorenzParams, tol: float = DEFAULT_TOL) -> tuple[VectorField, FixedPointReport]:
    F = lorenz_field(p)
    return F, analyze_fixed_point(F, np.zeros(3), tol=tol)


def hessian_fd(H: Callable, x0, step: float) -> np.ndarray:
    """Symmetric central-difference Hessian of a scalar function."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    E = np.eye(n) * step
    h0 = H(x0)
    out = np.empty((n, n))
    for i in range(n):
        out[i, i] = (H(x0 + E[i]) - 2 * h0 + H(x0 - E[i])) / step**2
        for j in range(i):
            v = (H(x0 + E[i] + E[j]) - H(x0 + E[i] - E[j]) - H(x0 - E[i] + E[j]) + H(x0 - E[i] - E[j])) / (
                4 * step**2
            )
            out[i, j] = out[j, i] = v
    return out


def gradient_fd(H: Callable, x0, step: float) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    E = np.eye(x0.size) * step
    return np.array([(H(x0 + e) - H(x0 - e)) / (2 * step) for e in E])


def hamiltonian_jacobian(hess: np.ndarray) -> np.ndarray:
    """Linearization ``J Hess(H)`` of the Hamiltonian field ``(d_p H, -d_q H)``."""
    n = hess.shape[0] // 2
    Hqq, Hqp = hess[:n, :n], hess[:n, n:]
    Hpq, Hpp = hess[n:, :n], hess[n:, n:]
    return np.block([[Hpq, Hpp], [-Hqq, -Hqp]])


def hamiltonian_linearization(
    H: Callable,
    q0p0,
    fd_step: float = 1e-4,
    tol: float = DEFAULT_TOL,
    grad_tol: float = 1e-6,
) -> FixedPointReport:
    """Linearize the Hamiltonian vector field at a critical point of ``H``.

    ``H`` takes the phase-space point ``(q, p)`` as one flat vector.  The
    Jacobian is assembled from a symmetric finite-difference Hessian (second
    differences need a larger step than first differences, hence 1e-4).
    """
    x0 = np.atleast_1d(np.asarray(q0p0, dtype=float))
    if x0.size % 2:
        raise InvalidInputError("phase-space point must have even dimension")
    grad = gradient_fd(H, x0, fd_step)
    if np.linalg.norm(grad) > grad_tol:
        raise NotAFixedPointError(f"|grad H| = {np.linalg.norm(grad):.3g} at the requested point")
    J = hamiltonian_jacobian(hessian_fd(H, x0, fd_step))
    if abs(np.trace(J)) > 1e-6:
        raise SolverError(f"Hamiltonian linearization has trace {np.trace(J):.3g}")
    return _report(x0, J, tol)


def magnetic_field_matrix(B) -> tuple[np.ndarray, np.ndarray]:
    """The antisymmetric matrix with ``M p = p x B`` and its eigenvalues ``{0, +-i|B|}``."""
    B = np.asarray(B, dtype=float)
    if B.shape != (3,) or not np.all(np.isfinite(B)):
        raise InvalidInputError("B must be a finite 3-vector")
    b1, b2, b3 = B
    M = np.array([[0.0, b3, -b2], [-b3, 0.0, b1], [b2, -b1, 0.0]])
    return M, np.linalg.eigvals(M)
