"""Flows of ordinary differential equations.

Linear systems are solved in closed form through the matrix exponential
(scaling and squaring of a truncated Taylor series) and the variation of
constants formula.  Nonlinear systems are handled by the Picard iteration
used in the existence proof and by a classical Runge-Kutta reference
integrator.  Two monitors compare simulated trajectories against the
Grönwall estimate and the perturbed-flow bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BlowUpError, DomainEscapeError, InvalidInputError
from .reports import BoundReport

#: Lattice density used to estimate suprema of a field over a ball.
BALL_SAMPLES_PER_AXIS = 33

_SERIES_CUTOFF = 1e-18
_MAX_SERIES_TERMS = 200


@dataclass
class VectorField:
    """A time-independent vector field ``x -> F(x)`` on ``R^dim``.

    ``lipschitz`` and ``ball_radius`` are the constants ``L`` and ``rho`` of
    the local existence theorem; they are declarations, not certificates.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    lipschitz: Optional[float] = None
    ball_radius: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidInputError("vector field dimension must be >= 1")
        self.dim = int(self.dim)
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise InvalidInputError("Lipschitz constant must be positive")
        if self.ball_radius is not None and not self.ball_radius > 0:
            raise InvalidInputError("ball radius must be positive")

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float).reshape(self.dim)


@dataclass
class Trajectory:
    """Samples ``(times[i], states[i])`` of a flow on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if self.method not in ("picard", "rk4", "closed_form"):
            raise InvalidInputError(f"unknown trajectory method {self.method!r}")
        if len(self.times) != len(self.states):
            raise InvalidInputError("times and states differ in length")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.states))):
            raise InvalidInputError("trajectory contains non-finite entries")
        if len(self.times) > 1:
            dt = np.diff(self.times)
            # backward integration produces a strictly decreasing grid
            if not (np.all(dt > 0) or np.all(dt < 0)):
                raise InvalidInputError("trajectory times must be strictly monotone")

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _as_square(H) -> np.ndarray:
    H = np.atleast_2d(np.asarray(H))
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("matrix has non-finite entries")
    return H


def matrix_exponential(H, t: float = 1.0) -> np.ndarray:
    """Return ``exp(t H)``.

    The Taylor series is summed until a term drops below 1e-18 in max-norm.
    When ``||tH||_1 > 1`` the argument is first scaled by ``2**-s`` so that
    its norm is at most one, and the result is squared ``s`` times.
    """
    H = _as_square(H)
    if not np.isfinite(t):
        raise InvalidInputError("time must be finite")
    A = t * H
    if not np.iscomplexobj(A):
        A = A.astype(float)
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    squarings = int(math.ceil(math.log2(norm))) if norm > 1.0 else 0
    A = A / 2.0**squarings

    result = np.eye(n, dtype=A.dtype)
    term = np.eye(n, dtype=A.dtype)
    for m in range(1, _MAX_SERIES_TERMS):
        term = term @ A / m
        result = result + term
        if np.max(np.abs(term), initial=0.0) < _SERIES_CUTOFF:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def jordan_block_exponential(lam: complex, r: int, t: float) -> np.ndarray:
    """Closed form of ``exp(t J_r(lam))`` for the ``r x r`` Jordan block.

    Entry ``(i, i+m)`` equals ``exp(t lam) t**m / m!``.
    """
    if int(r) != r or r < 1:
        raise InvalidInputError("Jordan block size must be a positive integer")
    r = int(r)
    if not (np.isfinite(lam) and np.isfinite(t)):
        raise InvalidInputError("lambda and t must be finite")
    dtype = complex if np.iscomplexobj(lam) or isinstance(lam, complex) else float
    out = np.zeros((r, r), dtype=dtype)
    for m in range(r):
        coeff = t**m / math.factorial(m)
        out += np.diag(np.full(r - m, coeff), k=m)
    return np.exp(t * lam) * out


def jordan_block(lam: complex, r: int) -> np.ndarray:
    """The explicit ``r x r`` Jordan matrix with ``lam`` on the diagonal."""
    if int(r) != r or r < 1:
        raise InvalidInputError("Jordan block size must be a positive integer")
    dtype = complex if isinstance(lam, complex) else float
    return lam * np.eye(int(r), dtype=dtype) + np.eye(int(r), k=1)


def simpson_weights(n_panels: int, width: float) -> np.ndarray:
    """Composite Simpson weights for ``n_panels`` panels (``2 n_panels + 1`` nodes)."""
    if n_panels < 1:
        raise InvalidInputError("need at least one Simpson panel")
    w = np.ones(2 * n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (width / (6.0 * n_panels))


def solve_linear_ivp(A, f: Callable[[float], np.ndarray], x0, t: float, quad_steps: int = 64) -> np.ndarray:
    """Variation of constants: ``exp(tA) x0 + int_0^t exp((t-s)A) f(s) ds``.

    The integral uses composite Simpson on ``quad_steps`` panels; the
    propagators ``exp((t-s_j)A)`` are powers of one half-panel exponential.
    """
    A = _as_square(A)
    x0 = np.atleast_1d(np.asarray(x0))
    if x0.shape != (A.shape[0],):
        raise InvalidInputError(f"x0 has shape {x0.shape}, matrix is {A.shape}")
    if int(quad_steps) < 1:
        raise InvalidInputError("quad_steps must be >= 1")
    quad_steps = int(quad_steps)
    homogeneous = matrix_exponential(A, t) @ x0
    if t == 0:
        return homogeneous

    nodes = np.linspace(0.0, t, 2 * quad_steps + 1)
    weights = simpson_weights(quad_steps, t)
    half = matrix_exponential(A, t / (2 * quad_steps))
    prop = np.eye(A.shape[0], dtype=half.dtype)
    acc = np.zeros(A.shape[0], dtype=np.result_type(half, x0, float))
    for j in range(len(nodes) - 1, -1, -1):
        fj = np.atleast_1d(np.asarray(f(nodes[j])))
        if fj.shape != x0.shape:
            raise InvalidInputError(f"f(s) has shape {fj.shape}, expected {x0.shape}")
        acc = acc + weights[j] * (prop @ fj)
        prop = half @ prop
    return homogeneous + acc


def ball_lattice(center, radius: float, per_axis: int = BALL_SAMPLES_PER_AXIS) -> np.ndarray:
    """Points of a ``per_axis``-per-axis cubic lattice that lie in the closed ball."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    axis = np.linspace(-radius, radius, per_axis)
    grids = np.meshgrid(*([axis] * center.size), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1)
    inside = np.linalg.norm(offsets, axis=1) <= radius * (1 + 1e-12)
    return center + offsets[inside]


def sup_norm_on_ball(F: Callable, center, radius: float, per_axis: int = BALL_SAMPLES_PER_AXIS) -> float:
    """Lattice estimate of ``sup |F|`` over a ball (an estimate, not a bound)."""
    pts = ball_lattice(center, radius, per_axis)
    return max(float(np.linalg.norm(F(p))) for p in pts)


def _cumulative_trapezoid_from(values: np.ndarray, dt: float, origin: int) -> np.ndarray:
    """Integral of sampled ``values`` from the node ``origin`` to every node."""
    out = np.zeros_like(values)
    seg = 0.5 * dt * (values[1:] + values[:-1])
    out[origin + 1 :] = np.cumsum(seg[origin:], axis=0)
    out[:origin] = -np.cumsum(seg[:origin][::-1], axis=0)[::-1]
    return out


def picard_solve(F: VectorField, x0, n_iter: int, time_samples: int = 201) -> Trajectory:
    """Iterate the Picard map starting from the constant path ``x0``.

    The time interval is ``[-T, T]`` with ``T = min(rho / v_max, 1 / (2L))``,
    where ``v_max`` is a lattice estimate of ``sup |F|`` on the ball of radius
    ``rho`` around ``x0``.  Integrals use the trapezoid rule; an even
    ``time_samples`` is bumped by one so that ``t = 0`` is a node.

    ``diagnostics["iterate_gaps"][n]`` is the sup distance between iterates
    ``n+1`` and ``n``; with ``T <= 1/(2L)`` these contract by at least 1/2.
    """
    if F.lipschitz is None or F.ball_radius is None:
        raise InvalidInputError("Picard iteration needs a declared Lipschitz constant and ball radius")
    if int(n_iter) < 1 or int(time_samples) < 2:
        raise InvalidInputError("n_iter must be >= 1 and time_samples >= 2")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (F.dim,):
        raise InvalidInputError("x0 dimension does not match the field")
    L, rho = float(F.lipschitz), float(F.ball_radius)
    v_max = sup_norm_on_ball(F, x0, rho)
    T = 1.0 / (2.0 * L) if v_max == 0 else min(rho / v_max, 1.0 / (2.0 * L))

    half = int(time_samples) // 2
    times = np.linspace(-T, T, 2 * half + 1)
    dt = times[1] - times[0]
    path = np.tile(x0, (len(times), 1))
    gaps = []
    for n in range(int(n_iter)):
        velocity = np.array([F(x) for x in path])
        new = x0 + _cumulative_trapezoid_from(velocity, dt, half)
        escape = np.max(np.linalg.norm(new - x0, axis=1))
        if escape > rho * (1 + 1e-9):
            raise DomainEscapeError(f"iterate {n + 1} left the ball: |x - x0| = {escape:.3g} > {rho:.3g}")
        gaps.append(float(np.max(np.linalg.norm(new - path, axis=1))))
        path = new
    diagnostics = {"T": T, "v_max": v_max, "iterate_gaps": gaps, "quadrature_slack": 10.0 * T / len(times) ** 2}
    return Trajectory(times, path, "picard", diagnostics)


def rk4_integrate(F: Callable, x0, t_end: float, step: float) -> Trajectory:
    """Classical fourth-order Runge-Kutta on a uniform grid from 0 to ``t_end``.

    The number of steps is ``ceil(|t_end| / step)``; the step actually used is
    ``t_end / n``, so a ``step`` that divides ``t_end`` is used verbatim.
    """
    if not step > 0:
        raise InvalidInputError("step must be positive")
    if not np.isfinite(t_end):
        raise InvalidInputError("t_end must be finite")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n = max(1, int(math.ceil(abs(t_end) / step - 1e-9)))
    h = t_end / n
    times = np.linspace(0.0, t_end, n + 1)
    states = np.empty((n + 1, x.size))
    states[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            k1 = np.asarray(F(x), dtype=float)
            k2 = np.asarray(F(x + 0.5 * h * k1), dtype=float)
            k3 = np.asarray(F(x + 0.5 * h * k2), dtype=float)
            k4 = np.asarray(F(x + h * k3), dtype=float)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise BlowUpError("non-finite state in RK4", float(times[i]))
            states[i + 1] = x
    if t_end == 0:
        times, states = times[:1], states[:1]
    return Trajectory(times, states, "rk4")


def groenwall_check(times, u, beta) -> BoundReport:
    """Check ``u(t) <= u(a) exp(int_a^t beta)`` at every sample.

    ``beta`` is a callable of time or an array of samples.  The report's
    ``lhs`` is the worst ratio ``u / bound``; it passes when that ratio is at
    most ``1 + 1e-10``.
    """
    times = np.asarray(times, dtype=float)
    u = np.asarray(u, dtype=float)
    if times.size == 0 or u.size == 0:
        raise InvalidInputError("empty trajectory")
    if times.shape != u.shape:
        raise InvalidInputError("times and u differ in shape")
    if np.any(u < 0):
        raise InvalidInputError("u must be nonnegative")
    b = np.array([beta(s) for s in times], dtype=float) if callable(beta) else np.asarray(beta, dtype=float)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (b[1:] + b[:-1]))])
    bound = u[0] * np.exp(integral)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, u / bound, np.where(u > 0, np.inf, 0.0))
    worst = float(np.max(ratio))
    slack = 1e-10
    return BoundReport(
        "groenwall",
        worst,
        1.0,
        slack,
        worst <= 1.0 + slack,
        "Groenwall lemma",
        {"bound": bound, "argmax": int(np.argmax(ratio))},
    )


def flow_divergence_gap(
    F0: VectorField,
    F1: VectorField,
    eps: float,
    x0,
    t: float,
    step: float = 1e-3,
    sup_F1: Optional[float] = None,
) -> BoundReport:
    """Compare the flows of ``F0`` and ``F0 + eps F1`` against ``eps (C/L)(e^{L|t|} - 1)``.

    ``C = sup |F1|`` is estimated on the ball declared by ``F1`` (or ``F0``)
    around ``x0``, or along both trajectories if neither declares one.
    """
    L = F0.lipschitz
    if L is None or not L > 0:
        raise InvalidInputError("F0 needs a positive Lipschitz constant")
    if not 0 <= eps < 1:
        raise InvalidInputError("eps must lie in [0, 1)")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    base = rk4_integrate(F0, x0, t, step)
    pert = rk4_integrate(lambda x: F0(x) + eps * F1(x), x0, t, step)
    gap = np.linalg.norm(pert.states - base.states, axis=1)
    if sup_F1 is None:
        radius = F1.ball_radius or F0.ball_radius
        if radius is not None:
            sup_F1 = sup_norm_on_ball(F1, x0, radius)
        else:
            pts = itertools.chain(base.states, pert.states)
            sup_F1 = max(float(np.linalg.norm(F1(p))) for p in pts)
    observed = float(np.max(gap))
    bound = eps * (sup_F1 / L) * math.expm1(L * abs(t))
    slack = 1e-8
    return BoundReport(
        "flow_divergence",
        observed,
        bound,
        slack,
        observed <= bound + slack,
        "perturbed flow estimate",
        {"times": base.times, "gap": gap, "C": sup_F1, "L": L},
    )
