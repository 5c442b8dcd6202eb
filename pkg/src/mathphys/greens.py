"""Green's functions for ``-u'' = f`` on [0,1], for ``-Laplace`` in free space, and on the unit square.

On the square two independent solvers are provided.  The reference solver is the
5-point finite-difference scheme.  The kernel solver builds
``G_Omega(x, y) = G(x - y) + b_x(y)``, where ``G`` is the free-space logarithm and
``b_x`` is the discrete harmonic function with boundary values ``-G(x - .)``.  It
then evaluates

    u(x) = int G_Omega(x, y) f(y) dy - int_{boundary} d_n G_Omega(x, y) h(y) ds(y).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InvalidInputError, SingularityError, SolverError
from .linear_flow import simpson_weights

EULER_GAMMA = 0.5772156649015329


def _check_unit(*values):
    for v in values:
        a = np.asarray(v, dtype=float)
        if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
            raise InvalidInputError("arguments must lie in [0, 1]")


def green_interval(x, y):
    """Dirichlet Green's function of ``-d^2/dx^2`` on [0,1]: ``(1-y) x`` below the diagonal, ``y (1-x)`` above."""
    _check_unit(x, y)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = np.where(x <= y, (1 - y) * x, y * (1 - x))
    return float(out) if out.ndim == 0 else out


def green_free_space(d: int, x, y) -> float:
    x, y = np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
    if d not in (2, 3) or x.shape != (d,) or y.shape != (d,):
        raise InvalidInputError(f"free-space kernel needs d in {{2, 3}} and points in R^{d}")
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        raise SingularityError("free-space Green's function is singular at x = y")
    if d == 2:
        return -np.log(r) / (2 * np.pi)
    return 1.0 / (4 * np.pi * r)


@dataclass(frozen=True)
class GreensKernel:
    kind: str
    dim: int = 1
    eval: Callable = None

    def __post_init__(self):
        if self.kind == "interval_dirichlet":
            object.__setattr__(self, "eval", green_interval)
        elif self.kind == "free_space_d":
            if self.dim not in (2, 3):
                raise InvalidInputError("free-space kernels exist for d = 2, 3")
            d = self.dim
            object.__setattr__(self, "eval", lambda x, y: green_free_space(d, x, y))
        else:
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}")

    def __call__(self, x, y):
        return self.eval(x, y)


def solve_poisson_interval(f: Callable, n_quad: int = 256) -> Callable:
    """``u(x) = int_0^1 G(x, y) f(y) dy``.

    The integral is split at the kink ``y = x`` so that composite Simpson on each
    piece sees a smooth integrand.
    """
    if n_quad < 1:
        raise InvalidInputError("n_quad must be positive")

    def piece(a, b, weight):
        if b <= a:
            return 0.0
        y = np.linspace(a, b, 2 * n_quad + 1)
        return float(simpson_weights(n_quad, b - a) @ (weight(y) * np.broadcast_to(f(y), y.shape)))

    def u(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        _check_unit(xs)
        vals = np.array(
            [(1 - s) * piece(0.0, s, lambda y: y) + s * piece(s, 1.0, lambda y: 1 - y) for s in xs]
        )
        return float(vals[0]) if np.ndim(x) == 0 else vals

    return u


def distributional_check(d: int, phi_grad: Callable, y, radius: float, eps: float = 1e-3, n_radial: int = 400, n_angular: int = 48) -> float:
    """``int grad G(., y) . grad phi`` over ``R^d`` minus the ball ``|x - y| < eps``.

    ``phi_grad`` maps an array of points (trailing axis ``d``) to gradients and
    must vanish outside the ball of ``radius`` about ``y``.  In polar
    coordinates about ``y`` the integrand reduces to ``-(1/Area) d_r phi``, which
    is integrated by Gauss-Legendre in ``r`` and a product rule on the sphere.
    """
    y = np.asarray(y, dtype=float)
    if d not in (2, 3) or y.shape != (d,):
        raise InvalidInputError("distributional check is available for d = 2, 3")
    r_nodes, r_w = np.polynomial.legendre.leggauss(n_radial)
    r = eps + (radius - eps) * (r_nodes + 1) / 2
    r_w = r_w * (radius - eps) / 2
    if d == 2:
        theta = 2 * np.pi * np.arange(n_angular) / n_angular
        omega = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        o_w = np.full(n_angular, 2 * np.pi / n_angular)
        area = 2 * np.pi
    else:
        z, zw = np.polynomial.legendre.leggauss(n_angular)
        phi_ang = 2 * np.pi * np.arange(2 * n_angular) / (2 * n_angular)
        st = np.sqrt(1 - z**2)
        omega = np.stack(
            [np.outer(st, np.cos(phi_ang)), np.outer(st, np.sin(phi_ang)), np.outer(z, np.ones_like(phi_ang))], axis=-1
        ).reshape(-1, 3)
        o_w = np.outer(zw, np.full(phi_ang.size, np.pi / n_angular)).ravel()
        area = 4 * np.pi
    pts = y + r[:, None, None] * omega[None, :, :]
    dr_phi = np.einsum("rad,ad->ra", phi_grad(pts), omega)
    # grad G = -omega / (Area r^{d-1}); the Jacobian r^{d-1} cancels
    return float(-(r_w @ dr_phi @ o_w) / area)


@dataclass
class RectangleProblem:
    """Poisson data on the unit square sampled at ``(i/nx, j/ny)``.

    ``f`` has shape ``(nx+1, ny+1)``; only interior values are used.  ``h_bdry``
    has the same shape and only its boundary ring is used.
    """

    nx: int
    ny: int
    f: np.ndarray
    h_bdry: np.ndarray

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise InvalidInputError("rectangle resolution must be at least 8")
        if self.nx != self.ny:
            raise InvalidInputError("the kernel solver needs square cells (nx == ny)")
        self.f = np.asarray(self.f, dtype=float)
        self.h_bdry = np.asarray(self.h_bdry, dtype=float)
        shape = (self.nx + 1, self.ny + 1)
        if self.f.shape != shape or self.h_bdry.shape != shape:
            raise InvalidInputError(f"samples must have shape {shape}")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.h_bdry))):
            raise InvalidInputError("samples must be finite")

    @classmethod
    def from_functions(cls, n: int, f: Callable, h: Callable) -> "RectangleProblem":
        X, Y = cls.mesh(n)
        return cls(n, n, np.broadcast_to(f(X, Y), X.shape), np.broadcast_to(h(X, Y), X.shape))

    @staticmethod
    def mesh(n: int):
        s = np.linspace(0.0, 1.0, n + 1)
        return np.meshgrid(s, s, indexing="ij")

    @property
    def spacing(self) -> float:
        return 1.0 / self.nx


def _dirichlet_laplacian(n: int):
    """``-Laplace_h`` on the ``(n-1)^2`` interior nodes, row-major, scaled by ``h^2``."""
    m = n - 1
    T = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])
    eye = sp.identity(m)
    return (sp.kron(T, eye) + sp.kron(eye, T)).tocsc()


def _factor(n: int):
    try:
        return splu(_dirichlet_laplacian(n))
    except RuntimeError as exc:
        raise SolverError(f"sparse factorisation failed: {exc}") from exc


def _boundary_load(g: np.ndarray) -> np.ndarray:
    """Contribution of boundary values ``g`` (full grid, trailing two axes) to interior rows."""
    load = np.zeros(g.shape[:-2] + (g.shape[-2] - 2, g.shape[-1] - 2))
    load[..., 0, :] += g[..., 0, 1:-1]
    load[..., -1, :] += g[..., -1, 1:-1]
    load[..., :, 0] += g[..., 1:-1, 0]
    load[..., :, -1] += g[..., 1:-1, -1]
    return load


def solve_rectangle_fd(p: RectangleProblem) -> np.ndarray:
    """Reference 5-point solve of ``-Laplace u = f`` with ``u = h`` on the boundary."""
    n, hh = p.nx, p.spacing
    rhs = hh**2 * p.f[1:-1, 1:-1] + _boundary_load(p.h_bdry)
    u = p.h_bdry.copy()
    u[1:-1, 1:-1] = _factor(n).solve(rhs.ravel()).reshape(n - 1, n - 1)
    return u


NEAR_FIELD = 16


def lattice_self_value(h: float) -> float:
    """Diagonal value that makes the sampled log kernel match the lattice Green's function."""
    return -(np.log(h) - EULER_GAMMA - 1.5 * np.log(2)) / (2 * np.pi)


@lru_cache(maxsize=None)
def lattice_potential_kernel(K: int = NEAR_FIELD, nodes: int = 256) -> np.ndarray:
    """``a(m, n)`` of the square lattice for ``0 <= m, n <= K``.

    ``a`` vanishes at the origin and satisfies ``(1/4) sum_neighbours a - a = delta``.
    It is evaluated from the one-dimensional representation
    ``a(m, n) = (2/pi) int_0^pi (1 - cos(m k) t^|n|) / sqrt(A^2 - 1) dk`` with
    ``A = 2 - cos k`` and ``t = A - sqrt(A^2 - 1)``; the integrand is smooth, so a
    fixed Gauss-Legendre rule is accurate to rounding.
    """
    z, w = np.polynomial.legendre.leggauss(nodes)
    k = np.pi * (z + 1) / 2
    w = w * np.pi / 2
    A = 2 - np.cos(k)
    root = np.sqrt(A * A - 1)
    t = A - root
    m = np.arange(K + 1)
    table = (2 / np.pi) * np.einsum(
        "k,mnk->mn", w, (1 - np.cos(m[:, None, None] * k) * t ** m[None, :, None]) / root
    )
    table[0, 0] = 0.0
    return table


def corrected_log_kernel(dx: np.ndarray, dy: np.ndarray, h: float) -> np.ndarray:
    """``-(1/2 pi) log r`` with lattice-consistent values near the diagonal.

    For offsets of at most ``NEAR_FIELD`` cells the exact lattice Green's function
    is used; beyond that the leading ``cos(4 theta) h^2 / r^2`` anisotropy of the
    lattice kernel is added to the logarithm.
    """
    r = np.hypot(dx, dy)
    m, n = np.rint(np.abs(dx) / h).astype(int), np.rint(np.abs(dy) / h).astype(int)
    near = np.maximum(m, n) <= NEAR_FIELD
    with np.errstate(divide="ignore", invalid="ignore"):
        cos4 = np.cos(4 * np.arctan2(dy, dx))
        G = -np.log(r) / (2 * np.pi) + cos4 * (h / r) ** 2 / (24 * np.pi)
    table = lattice_potential_kernel(NEAR_FIELD)
    G[near] = lattice_self_value(h) - table[m[near], n[near]] / 4
    return G


class DomainGreen:
    """``G_Omega = G + b`` on the interior nodes of the unit square, one row per target node.

    Harmonic corrections for all targets come from a single factorisation; rows
    are computed on first use and cached.
    """

    def __init__(self, n: int):
        if n < 8:
            raise InvalidInputError("rectangle resolution must be at least 8")
        self.n = n
        self.h = 1.0 / n
        self._lu = _factor(n)
        X, Y = RectangleProblem.mesh(n)
        self._X, self._Y = X, Y
        self._rows: dict[tuple[int, int], np.ndarray] = {}

    def _free(self, i: int, j: int) -> np.ndarray:
        return corrected_log_kernel(self._X - self._X[i, j], self._Y - self._Y[i, j], self.h)

    def rows(self, targets) -> np.ndarray:
        """``G_Omega(x_t, .)`` on the full grid for each interior target ``(i, j)``."""
        targets = [tuple(int(a) for a in t) for t in targets]
        missing = [t for t in targets if t not in self._rows]
        if missing:
            free = np.stack([self._free(i, j) for i, j in missing])
            rhs = _boundary_load(-free).reshape(len(missing), -1).T
            b = self._lu.solve(np.ascontiguousarray(rhs)).T.reshape(len(missing), self.n - 1, self.n - 1)
            for t, G, corr in zip(missing, free, b):
                row = np.zeros_like(G)
                row[1:-1, 1:-1] = G[1:-1, 1:-1] + corr
                self._rows[t] = row
        return np.stack([self._rows[t] for t in targets])


def solve_rectangle_dirichlet(p: RectangleProblem, kernel: DomainGreen | None = None):
    """Kernel solve of the Dirichlet problem.

    Returns ``(u, residual, boundary_gap)``: the solution grid (boundary ring set
    to the data), the max interior gap to the 5-point reference, and the max
    mismatch between the data and a cubic extrapolation of the interior values
    to the boundary.
    """
    n, hh = p.nx, p.spacing
    kernel = kernel or DomainGreen(n)
    if kernel.n != n:
        raise InvalidInputError("kernel resolution does not match the problem")
    interior = [(i, j) for i in range(1, n) for j in range(1, n)]
    G = kernel.rows(interior)
    volume = hh**2 * np.einsum("tij,ij->t", G[:, 1:-1, 1:-1], p.f[1:-1, 1:-1])
    # one-sided normal derivative d_n G = -G(x, y_inner) / h against ds = h
    surface = np.einsum("tij,ij->t", G[:, 1:-1, 1:-1], _boundary_load(p.h_bdry))
    u = p.h_bdry.copy()
    u[1:-1, 1:-1] = (volume + surface).reshape(n - 1, n - 1)
    reference = solve_rectangle_fd(p)
    residual = float(np.max(np.abs(u[1:-1, 1:-1] - reference[1:-1, 1:-1])))
    return u, residual, boundary_gap(u, p.h_bdry)


def boundary_gap(u: np.ndarray, h_bdry: np.ndarray) -> float:
    """Max ``|extrapolated u - h|`` over boundary nodes away from the corners."""
    sides = (u, u[::-1], u.T, u.T[::-1])
    gaps = [4 * s[1, 1:-1] - 6 * s[2, 1:-1] + 4 * s[3, 1:-1] - s[4, 1:-1] for s in sides]
    data = [h_bdry[0, 1:-1], h_bdry[-1, 1:-1], h_bdry[1:-1, 0], h_bdry[1:-1, -1]]
    return float(max(np.max(np.abs(g - d)) for g, d in zip(gaps, data)))
