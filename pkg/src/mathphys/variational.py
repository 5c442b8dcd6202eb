"""Calculus of variations on finite-dimensional discretisations.

States are numpy arrays.  Complex arrays are treated as pairs of real
coordinates, so every derivative below is a real Gâteaux derivative and
gradients are Riesz representers for the pairing ``Re sum(conj(g) * phi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import GradientMismatchError, InvalidInputError
from .fourier import TorusGrid, odd_wavenumbers
from .reports import BoundReport

EPS = np.finfo(float).eps


def pairing(g: np.ndarray, phi: np.ndarray) -> float:
    return float(np.real(np.vdot(g, phi)))


@dataclass
class Functional:
    """A real functional on arrays of shape ``state_shape``.

    ``analytic_gradient``, when given, returns the representer of the
    derivative, so that ``dE(psi) phi = pairing(grad(psi), phi)``.
    """

    eval: Callable[[np.ndarray], float]
    state_shape: tuple
    analytic_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, psi) -> float:
        value = float(self.eval(psi))
        if not np.isfinite(value):
            raise InvalidInputError(f"functional {self.name or '?'} is not finite at the given state")
        return value


def _check_state(E: Functional, *arrays):
    for a in arrays:
        if np.shape(a) != tuple(E.state_shape):
            raise InvalidInputError(f"state of shape {np.shape(a)} does not match {tuple(E.state_shape)}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("states and directions must be finite")


def _central(E: Functional, psi, phi, h) -> tuple[float, float, float]:
    plus, minus = E(psi + h * phi), E(psi - h * phi)
    return (plus - minus) / (2 * h), plus, minus


def gradient_check(E: Functional, psi, phi, h: float = 1e-5) -> BoundReport:
    """Compare the analytic gradient with the central difference along ``phi``.

    The tolerance is ``10 h^2`` times a curvature scale (a third-difference
    estimate of ``E'''[phi, phi, phi]`` at a coarser step, floored at 1) plus the
    rounding error of the difference quotient.
    """
    if E.analytic_gradient is None:
        raise InvalidInputError("functional has no analytic gradient to check")
    psi, phi = np.asarray(psi), np.asarray(phi)
    _check_state(E, psi, phi)
    fd, plus, minus = _central(E, psi, phi, h)
    exact = pairing(E.analytic_gradient(psi), phi)
    H = 1e-2
    third = (E(psi + 2 * H * phi) - 2 * E(psi + H * phi) + 2 * E(psi - H * phi) - E(psi - 2 * H * phi)) / (2 * H**3)
    scale = max(1.0, abs(third))
    tol = 10 * h**2 * scale + 100 * EPS * max(1.0, abs(plus), abs(minus)) / h
    gap = abs(fd - exact)
    return BoundReport(
        "gradient_vs_fd", gap, 0.0, tol, gap <= tol, details={"fd": fd, "analytic": exact, "curvature": third}
    )


def gateaux_derivative(E: Functional, psi, phi, h: float = 1e-5) -> float:
    """``(E(psi + h phi) - E(psi - h phi)) / 2h``, cross-checked against any analytic gradient."""
    if not h > 0:
        raise InvalidInputError("difference step must be positive")
    psi, phi = np.asarray(psi), np.asarray(phi)
    _check_state(E, psi, phi)
    if E.analytic_gradient is not None:
        report = gradient_check(E, psi, phi, h)
        if not report.passed:
            raise GradientMismatchError(
                f"analytic gradient of {E.name or 'functional'} disagrees with finite differences by {report.lhs:.3e}"
            )
        return report.details["fd"]
    return _central(E, psi, phi, h)[0]


# -- example functionals ---------------------------------------------------


def linear_functional(c) -> Functional:
    c = np.asarray(c)
    return Functional(lambda x: pairing(c, x), c.shape, lambda x: c, "linear")


def quadratic_functional(Q, b=None) -> Functional:
    """``1/2 x.Qx + b.x`` for symmetric real ``Q``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T, atol=1e-12):
        raise InvalidInputError("quadratic form needs a symmetric square matrix")
    b = np.zeros(Q.shape[0]) if b is None else np.asarray(b, dtype=float)
    return Functional(lambda x: 0.5 * x @ Q @ x + b @ x, (Q.shape[0],), lambda x: Q @ x + b, "quadratic")


def norm_squared(shape, sign: float = 1.0) -> Functional:
    return Functional(
        lambda x: sign * float(np.vdot(x, x).real), tuple(shape), lambda x: 2 * sign * np.asarray(x), "norm_squared"
    )


def spectral_gradient(u: np.ndarray, M: int, axes: Sequence[int]) -> list[np.ndarray]:
    """Spectral partial derivatives along ``axes`` with the Nyquist mode dropped."""
    k = odd_wavenumbers(M)
    u_hat = np.fft.fftn(u, axes=axes)
    out = []
    for a in axes:
        shape = [1] * u.ndim
        shape[a] = M
        d = np.fft.ifftn(1j * k.reshape(shape) * u_hat, axes=axes)
        out.append(d.real if np.isrealobj(u) else d)
    return out


def dirichlet_functional(f: TorusGrid) -> Functional:
    """``int 1/2 |grad u|^2 + u f`` on the torus, rectangle rule with spectral derivatives."""
    n, M = f.n, f.M
    w = f.h**n
    src = f.samples.real
    axes = tuple(range(n))

    def energy(u):
        grads = spectral_gradient(u, M, axes)
        return w * float(sum(0.5 * np.sum(g**2) for g in grads) + np.sum(u * src))

    def gradient(u):
        lap = sum(spectral_gradient(g, M, (a,))[0] for a, g in zip(axes, spectral_gradient(u, M, axes)))
        return w * (-lap + src)

    return Functional(energy, (M,) * n, gradient, "dirichlet")


# -- Euler-Lagrange ----------------------------------------------------------


def euler_lagrange_residual(L: Callable, times, q, fd_step: float = 1e-3) -> float:
    """``max |grad_x L(q, qdot) - d/dt grad_v L(q, qdot)|`` over interior samples.

    ``q`` has shape ``(T, n)`` (or ``(T,)``) on uniformly spaced ``times``.  The
    velocity and the time derivative use central differences in the samples;
    the partial derivatives of ``L`` use central differences of size ``fd_step``.
    """
    t = np.asarray(times, dtype=float)
    q = np.asarray(q, dtype=float)
    q = q[:, None] if q.ndim == 1 else q
    if len(t) < 5 or len(q) != len(t):
        raise InvalidInputError("need at least five samples of a trajectory")
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt[0]:
        raise InvalidInputError("trajectory must be sampled uniformly in time")
    if dt[0] > fd_step * (1 + 1e-12):
        raise InvalidInputError("sample spacing must not exceed fd_step")
    step = dt[0]
    v = (q[2:] - q[:-2]) / (2 * step)
    x = q[1:-1]
    n = q.shape[1]
    eye = np.eye(n) * fd_step
    gx = np.array([[(L(xi + e, vi) - L(xi - e, vi)) / (2 * fd_step) for e in eye] for xi, vi in zip(x, v)])
    gv = np.array([[(L(xi, vi + e) - L(xi, vi - e)) / (2 * fd_step) for e in eye] for xi, vi in zip(x, v)])
    ddt = (gv[2:] - gv[:-2]) / (2 * step)
    return float(np.max(np.abs(gx[1:-1] - ddt)))


# -- Helmholtz decomposition on T^3 -------------------------------------------


def _k_field(M: int) -> np.ndarray:
    k = odd_wavenumbers(M)
    return np.stack(np.meshgrid(k, k, k, indexing="ij"))


def helmholtz_decompose(u: np.ndarray):
    """Split a vector field ``u`` of shape ``(3, M, M, M)`` into ``(u_par, u_perp, mean)``.

    ``u_par`` is curl-free, ``u_perp`` divergence-free and ``mean`` is the
    constant mode.  Wavenumbers whose Nyquist components are dropped are the
    ones the spectral ``div`` and ``curl`` use; modes with no resolved
    component are divergence- and curl-free and stay in ``u_perp``.
    """
    u = np.asarray(u)
    if u.ndim != 4 or u.shape[0] != 3 or len(set(u.shape[1:])) != 1:
        raise InvalidInputError("expected a vector field of shape (3, M, M, M)")
    M = u.shape[1]
    K = _k_field(M)
    u_hat = np.fft.fftn(u, axes=(1, 2, 3))
    mean_hat = np.zeros_like(u_hat)
    mean_hat[:, 0, 0, 0] = u_hat[:, 0, 0, 0]
    k2 = np.sum(K**2, axis=0)
    par_hat = K * np.sum(K * u_hat, axis=0) / np.where(k2 == 0, 1.0, k2)
    perp_hat = u_hat - par_hat - mean_hat

    def back(F):
        out = np.fft.ifftn(F, axes=(1, 2, 3))
        return out.real if np.isrealobj(u) else out

    return back(par_hat), back(perp_hat), back(mean_hat)


def divergence_defect(u: np.ndarray) -> float:
    """Largest ``|k . u^(k)|`` with coefficients normalised by ``M^3``."""
    M = u.shape[1]
    u_hat = np.fft.fftn(u, axes=(1, 2, 3)) / M**3
    return float(np.max(np.abs(np.sum(_k_field(M) * u_hat, axis=0))))


def curl_defect(u: np.ndarray) -> float:
    M = u.shape[1]
    K = _k_field(M)
    u_hat = np.fft.fftn(u, axes=(1, 2, 3)) / M**3
    return float(np.max(np.abs(np.cross(K, u_hat, axis=0))))


# -- Ginzburg-Landau -----------------------------------------------------------


@dataclass
class GLState:
    psi: TorusGrid
    A: list
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidInputError("kappa must be positive")
        if len(self.A) != self.psi.n:
            raise InvalidInputError("need one vector-potential component per torus dimension")
        for a in self.A:
            if (a.n, a.M) != (self.psi.n, self.psi.M):
                raise InvalidInputError("psi and A live on different grids")
            if np.max(np.abs(a.samples.imag)) > 0:
                raise InvalidInputError("vector potential must be real")

    @property
    def n(self) -> int:
        return self.psi.n

    @property
    def M(self) -> int:
        return self.psi.M

    def pack(self) -> np.ndarray:
        """Real coordinates ``(Re psi, Im psi, A_1, ..., A_n)``."""
        p = self.psi.samples
        return np.stack([p.real, p.imag] + [a.samples.real for a in self.A])

    def unpack(self, x: np.ndarray) -> "GLState":
        psi = self.psi.like(x[0] + 1j * x[1])
        return GLState(psi, [self.psi.like(x[2 + j]) for j in range(self.n)], self.kappa)


def _covariant(psi: np.ndarray, A: np.ndarray, M: int) -> list[np.ndarray]:
    """``(-i d_j - A_j) psi`` for each axis."""
    axes = tuple(range(psi.ndim))
    return [-1j * d - A[j] * psi for j, d in enumerate(spectral_gradient(psi, M, axes))]


def _field_strength(A: np.ndarray, M: int) -> dict:
    n = A.shape[0]
    axes = tuple(range(n))
    dA = [spectral_gradient(A[k], M, axes) for k in range(n)]  # dA[k][j] = d_j A_k
    return {(j, k): dA[k][j] - dA[j][k] for j in range(n) for k in range(j + 1, n)}


def gl_energy(s: GLState) -> float:
    """Rectangle-rule GL energy ``int |(-i grad - A) psi|^2 + kappa^2/2 (|psi|^2 - 1)^2 + |curl A|^2``."""
    psi = s.psi.samples
    A = np.stack([a.samples.real for a in s.A])
    kinetic = sum(np.sum(np.abs(c) ** 2) for c in _covariant(psi, A, s.M))
    potential = 0.5 * s.kappa**2 * np.sum((np.abs(psi) ** 2 - 1) ** 2)
    magnetic = sum(np.sum(F**2) for F in _field_strength(A, s.M).values())
    return float(s.psi.h**s.n * (kinetic + potential + magnetic))


def gl_gradient(s: GLState, fd_spacing: float | None = None):
    """L2 gradient ``((-i grad - A)^2 psi - kappa^2 (1 - |psi|^2) psi, curl curl A - Re(conj(psi)(-i grad - A) psi))``.

    Derivatives are spectral, so ``fd_spacing`` is accepted for interface
    symmetry and ignored.  The derivative of :func:`gl_energy` is
    ``2 h^n Re sum(conj(phi) grad_psi + a . grad_A)``.
    """
    M, n = s.M, s.n
    psi = s.psi.samples
    A = np.stack([a.samples.real for a in s.A])
    cov = _covariant(psi, A, M)
    second = sum(_covariant(c, A, M)[j] for j, c in enumerate(cov))
    grad_psi = second - s.kappa**2 * (1 - np.abs(psi) ** 2) * psi
    F = _field_strength(A, M)
    grad_A = []
    for k in range(n):
        # (curl curl A)_k = -sum_j d_j F_jk
        term = np.zeros((M,) * n)
        for j in range(n):
            if j == k:
                continue
            Fjk = F[(j, k)] if j < k else -F[(k, j)]
            term -= spectral_gradient(Fjk, M, (j,))[0]
        grad_A.append(term - np.real(np.conj(psi) * cov[k]))
    return grad_psi, np.stack(grad_A)


def gl_functional(template: GLState) -> Functional:
    """GL energy on packed real coordinates, with its exact Euclidean gradient."""
    w = template.psi.h**template.n

    def energy(x):
        return gl_energy(template.unpack(x))

    def gradient(x):
        gp, gA = gl_gradient(template.unpack(x))
        return 2 * w * np.concatenate([np.stack([gp.real, gp.imag]), gA])

    return Functional(energy, template.pack().shape, gradient, "ginzburg_landau")


@dataclass
class DescentResult:
    state: object
    energy_path: list
    grad_norms: list
    converged: bool
    iterations: int
    step_size: float
    stalled: bool = False


def gradient_descent(
    E: Functional, x0, step_size: float, max_iters: int = 10_000, tol: float = 1e-8, mask=None, metric: float = 1.0
) -> DescentResult:
    """Fixed-step descent ``x <- x - step * grad / metric``; the step halves whenever the energy would rise.

    Convergence means ``max |grad / metric| <= tol``.  ``mask`` (same shape as
    the state, booleans) freezes coordinates where it is False.  If a step is
    rejected although the rise is at rounding level, no step size can make
    measurable progress and the run stops with ``stalled=True``.
    """
    if not step_size > 0:
        raise InvalidInputError("step size must be positive")
    if E.analytic_gradient is None:
        raise InvalidInputError("descent needs an analytic gradient")
    x = np.array(x0, dtype=float, copy=True)
    _check_state(E, x)
    keep = np.ones_like(x, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    energy = E(x)
    path, norms = [energy], []
    tau = step_size
    for it in range(max_iters + 1):
        g = np.where(keep, E.analytic_gradient(x) / metric, 0.0)
        norms.append(float(np.max(np.abs(g))))
        if norms[-1] <= tol:
            return DescentResult(x, path, norms, True, it, tau)
        if it == max_iters:
            break
        while True:
            trial = x - tau * g
            e_trial = E(trial)
            if e_trial <= energy:
                break
            if e_trial - energy <= 8 * EPS * max(1.0, abs(energy)):
                return DescentResult(x, path, norms, False, it, tau, stalled=True)
            tau /= 2
        x, energy = trial, e_trial
        path.append(energy)
    return DescentResult(x, path, norms, False, max_iters, tau)


def gl_minimize(s0: GLState, step_size: float, max_iters: int = 20_000, tol: float = 1e-8, freeze_A: bool = False) -> DescentResult:
    """Gradient descent on the GL energy in the L2 metric.

    ``state`` of the result is a :class:`GLState`; ``converged`` is False when
    ``max_iters`` ran out, in which case the last state is returned.
    """
    E = gl_functional(s0)
    x0 = s0.pack()
    mask = np.ones_like(x0, dtype=bool)
    if freeze_A:
        mask[2:] = False
    metric = 2 * s0.psi.h**s0.n
    result = gradient_descent(E, x0, step_size, max_iters, tol, mask, metric)
    result.state = s0.unpack(result.state)
    return result


# -- convexity and bifurcations -----------------------------------------------


def convexity_check(E: Functional, pairs, tol: float = 1e-8) -> BoundReport:
    """Secant inequality at ``s = 1/4, 1/2, 3/4`` and monotonicity of ``dE`` on sampled pairs."""
    worst, where = 0.0, None
    for idx, (x, y) in enumerate(pairs):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        _check_state(E, x, y)
        Ex, Ey = E(x), E(y)
        for s in (0.25, 0.5, 0.75):
            excess = E(s * x + (1 - s) * y) - (s * Ex + (1 - s) * Ey)
            if excess > worst:
                worst, where = excess, (idx, f"secant s={s}")
        d = x - y
        mono = gateaux_derivative(E, x, d) - gateaux_derivative(E, y, d)
        if -mono > worst:
            worst, where = -mono, (idx, "monotone gradient")
    return BoundReport("convexity", worst, 0.0, tol, worst <= tol, details={"worst": where})


@dataclass
class BifurcationScan:
    mu_grid: np.ndarray
    smallest_singular: np.ndarray
    candidates: list = field(default_factory=list)
    transversality: list = field(default_factory=list)
    scale: float = 1.0

    def __post_init__(self):
        if len(self.mu_grid) != len(self.smallest_singular):
            raise InvalidInputError("scan arrays must have equal length")


def linearization(F: Callable, mu: float, dim: int, step: float = 1e-6) -> np.ndarray:
    """``d_x F(mu, 0)`` by central differences."""
    cols = [
        (np.asarray(F(mu, step * e), dtype=float) - np.asarray(F(mu, -step * e), dtype=float)) / (2 * step)
        for e in np.eye(dim)
    ]
    return np.column_stack(cols)


def bifurcation_scan(F: Callable, mu_range, n_points: int, state_dim: int, threshold: float = 1e-6) -> BifurcationScan:
    """Locate parameters where ``d_x F(mu, 0)`` loses invertibility along the trivial branch.

    A candidate is a local minimum of the smallest singular value, refined by a
    bounded scalar minimisation, that drops below ``threshold * scale`` (scale:
    the largest singular value seen) and across which ``det d_x F`` changes sign.
    """
    lo, hi = map(float, mu_range)
    if not hi > lo or n_points < 3 or state_dim < 1:
        raise InvalidInputError("need an increasing mu range, at least 3 points and a positive dimension")
    mus = np.linspace(lo, hi, n_points)
    zero = np.zeros(state_dim)
    sig, signs, top = [], [], 0.0
    for mu in mus:
        if np.max(np.abs(F(mu, zero))) > 1e-10:
            raise InvalidInputError(f"F(mu, 0) != 0 at mu={mu}: no trivial branch")
        J = linearization(F, mu, state_dim)
        s = np.linalg.svd(J, compute_uv=False)
        sig.append(s[-1])
        top = max(top, s[0])
        signs.append(np.linalg.slogdet(J)[0])
    sig = np.array(sig)
    scale = max(top, 1.0)
    smallest = lambda mu: np.linalg.svd(linearization(F, mu, state_dim), compute_uv=False)[-1]
    scan = BifurcationScan(mus, sig, scale=scale)
    for i in range(n_points):
        left, right = max(i - 1, 0), min(i + 1, n_points - 1)
        if sig[i] > sig[left] or sig[i] > sig[right] or (i > 0 and sig[i] == sig[i - 1]):
            continue
        a, b = mus[left], mus[right]
        res = minimize_scalar(smallest, bounds=(a, b), method="bounded", options={"xatol": 1e-10 * (hi - lo)})
        mu0 = float(res.x) if res.fun <= sig[i] else float(mus[i])
        if min(res.fun, sig[i]) > threshold * scale or signs[left] == signs[right]:
            continue
        J = linearization(F, mu0, state_dim)
        v = np.linalg.svd(J)[2][-1]
        h = 1e-4 * max(1.0, abs(mu0))
        dJ = (linearization(F, mu0 + h, state_dim) - linearization(F, mu0 - h, state_dim)) / (2 * h)
        scan.candidates.append(mu0)
        scan.transversality.append(float(v @ dJ @ v))
    return scan
