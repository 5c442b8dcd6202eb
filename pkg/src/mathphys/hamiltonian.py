"""Hamiltonian mechanics on ``R^{2n}`` with an optional magnetic field.

Phase-space points are flat vectors ``(q_1..q_n, p_1..p_n)``.  Hamiltonians
are plain callables of that vector; gradients and Hessians are taken by
central differences so every system is specified by its energy alone.  The
charge is set to one and the mass is folded into ``H``.

A magnetic field enters in one of two equivalent ways: as an antisymmetric
matrix ``B(q)`` that modifies the equations of motion (the momentum is then
the kinetic one), or through a vector potential by minimal substitution
``p -> p - A(q)`` (canonical momentum).  The first never touches a vector
potential, the second never touches ``B``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, SolverError
from .linear_flow import Trajectory, rk4_integrate
from .stability import gradient_fd, hessian_fd, magnetic_field_matrix

FD_STEP = 1e-5
HESSIAN_STEP = 1e-4
GAUGE_LATTICE = 17
GAUGE_CURL_STEP = 1e-4


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise InvalidInputError("q and p must be vectors of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise InvalidInputError("phase point must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_flat(cls, x) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


@dataclass
class HamiltonianSystem:
    """Energy ``H(x)`` with ``x = (q, p)``; ``magnetic`` maps ``q`` to ``B(q)``."""

    n: int
    H: Callable[[np.ndarray], float]
    magnetic: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidInputError("need at least one degree of freedom")
        self.n = int(self.n)

    def energy(self, x) -> float:
        return float(self.H(_flat(x)))


def _flat(x) -> np.ndarray:
    if isinstance(x, PhasePoint):
        return x.flat()
    return np.asarray(x, dtype=float)


def constant_magnetic_field(Bvec) -> Callable[[np.ndarray], np.ndarray]:
    M, _ = magnetic_field_matrix(Bvec)
    return lambda q: M


def magnetic_from_potential(A: Callable, step: float = GAUGE_CURL_STEP) -> Callable[[np.ndarray], np.ndarray]:
    """``q -> B(q)`` with ``B_jk = d_j A_k - d_k A_j`` (so that ``B v = v x curl A`` in 3D)."""

    def B(q):
        q = np.asarray(q, dtype=float)
        D = np.column_stack(
            [(np.asarray(A(q + e)) - np.asarray(A(q - e))) / (2 * step) for e in np.eye(q.size) * step]
        )  # D[k, j] = d_j A_k
        return D.T - D

    return B


def curl(A: Callable, q, step: float = GAUGE_CURL_STEP) -> np.ndarray:
    Bm = magnetic_from_potential(A, step)(q)
    return np.array([Bm[1, 2], Bm[2, 0], Bm[0, 1]])


def symmetric_gauge(b: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda q: 0.5 * b * np.array([-q[1], q[0], 0.0])


def landau_gauge(b: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda q: b * np.array([-q[1], 0.0, 0.0])


def minimal_substitution(n: int, H: Callable, A: Callable) -> HamiltonianSystem:
    """Replace ``p`` by ``p - A(q)`` in ``H``; the result uses canonical momenta."""

    def HA(x):
        x = np.asarray(x, dtype=float)
        q, p = x[:n], x[n:]
        return H(np.concatenate([q, p - np.asarray(A(q), dtype=float)]))

    return HamiltonianSystem(n, HA)


def hamiltonian_vector_field(sys: HamiltonianSystem, x, fd_step: float = FD_STEP) -> np.ndarray:
    """``(q', p')`` with ``q' = d_p H`` and ``p' = -d_q H + B(q) q'``."""
    x = _flat(x)
    n = sys.n
    if x.size != 2 * n:
        raise InvalidInputError(f"expected a phase point of length {2 * n}")
    g = gradient_fd(sys.H, x, fd_step)
    qdot, pdot = g[n:], -g[:n]
    if sys.magnetic is not None:
        B = np.asarray(sys.magnetic(x[:n]), dtype=float)
        # (I 0; -B I) (q', p') = (d_p H, -d_q H); the block matrix has determinant 1
        pdot = pdot + B @ qdot
        if not np.all(np.isfinite(pdot)):
            raise SolverError("magnetic equations of motion produced non-finite velocity")
    return np.concatenate([qdot, pdot])


def poisson_bracket(f: Callable, g: Callable, x, fd_step: float = FD_STEP) -> float:
    """``sum_j d_{p_j} f d_{q_j} g - d_{q_j} f d_{p_j} g``, so that ``{H, q_j} = d_{p_j} H``."""
    x = _flat(x)
    n = x.size // 2
    df = gradient_fd(f, x, fd_step)
    dg = gradient_fd(g, x, fd_step)
    return float(df[n:] @ dg[:n] - df[:n] @ dg[n:])


def evolve_hamiltonian(
    sys: HamiltonianSystem, x0, t: float, step: float, fd_step: float = FD_STEP
) -> tuple[Trajectory, float]:
    """RK4 trajectory of the Hamiltonian field and the largest energy deviation along it."""
    x0 = _flat(x0)
    traj = rk4_integrate(lambda x: hamiltonian_vector_field(sys, x, fd_step), x0, t, step)
    E0 = sys.energy(x0)
    drift = max(abs(sys.energy(s) - E0) for s in traj.states)
    traj.diagnostics["energy_drift"] = drift
    return traj, drift


def field_jacobian(sys: HamiltonianSystem, x, step: float = HESSIAN_STEP) -> np.ndarray:
    """Linearization of the (magnetic) Hamiltonian field at ``x``.

    Built from a symmetric Hessian, so its trace vanishes identically without
    magnetic field and equals ``tr(B H_pp) = 0`` with it.
    """
    x = _flat(x)
    n = sys.n
    hess = hessian_fd(sys.H, x, step)
    Hqq, Hqp, Hpq, Hpp = hess[:n, :n], hess[:n, n:], hess[n:, :n], hess[n:, n:]
    top = np.hstack([Hpq, Hpp])
    bottom = np.hstack([-Hqq, -Hqp])
    if sys.magnetic is not None:
        q = x[:n]
        B = np.asarray(sys.magnetic(q), dtype=float)
        v = gradient_fd(sys.H, x, FD_STEP)[n:]
        dB = np.column_stack(
            [
                (np.asarray(sys.magnetic(q + e)) - np.asarray(sys.magnetic(q - e))) @ v / (2 * step)
                for e in np.eye(n) * step
            ]
        )
        bottom = bottom + np.hstack([B @ Hpq + dB, B @ Hpp])
    return np.vstack([top, bottom])


def liouville_determinant(sys: HamiltonianSystem, x0, t: float, step: float, fd_step: float = FD_STEP) -> float:
    """``det D Phi_t(x0)`` from the variational equation integrated alongside the flow."""
    x0 = _flat(x0)
    if t == 0:
        return 1.0
    m = x0.size

    def augmented(z):
        x, Phi = z[:m], z[m:].reshape(m, m)
        return np.concatenate([hamiltonian_vector_field(sys, x, fd_step), (field_jacobian(sys, x) @ Phi).ravel()])

    traj = rk4_integrate(augmented, np.concatenate([x0, np.eye(m).ravel()]), t, step)
    return float(np.linalg.det(traj.final[m:].reshape(m, m)))


def gauge_transform(
    A: Callable, chi: Callable, fd_step: float = FD_STEP, lattice: int = GAUGE_LATTICE
) -> tuple[Callable, float]:
    """``A' = A + grad chi`` and the largest change of ``curl A`` over a lattice on ``[-1, 1]^3``."""

    def grad_chi(q):
        return gradient_fd(chi, np.asarray(q, dtype=float), fd_step)

    def A_new(q):
        return np.asarray(A(q), dtype=float) + grad_chi(q)

    axis = np.linspace(-1.0, 1.0, lattice)
    gap = 0.0
    for q in np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3):
        gap = max(gap, float(np.max(np.abs(curl(A_new, q) - curl(A, q)))))
    return A_new, gap
