import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mathphys.errors import InvalidInputError, SingularityError
from mathphys.greens import (
    DomainGreen,
    GreensKernel,
    RectangleProblem,
    distributional_check,
    green_free_space,
    green_interval,
    lattice_potential_kernel,
    solve_poisson_interval,
    solve_rectangle_dirichlet,
    solve_rectangle_fd,
)


def test_green_interval_values():
    ys = np.linspace(0, 1, 11)
    assert np.all(green_interval(0.0, ys) == 0) and np.all(green_interval(1.0, ys) == 0)
    assert green_interval(0.25, 0.5) == 0.125
    rng = np.random.default_rng(0)
    x, y = rng.uniform(size=(2, 100))
    assert np.max(np.abs(green_interval(x, y) - green_interval(y, x))) <= 1e-15
    with pytest.raises(InvalidInputError):
        green_interval(1.2, 0.3)


def bump(x, c=0.5, w=0.3):
    s = (x - c) / w
    return np.where(np.abs(s) < 1, np.exp(-1 / np.maximum(1 - s**2, 1e-300)), 0.0)


def test_green_interval_is_fundamental_solution():
    x = np.linspace(0, 1, 200001)
    h = x[1] - x[0]
    phi = bump(x)
    lap = np.zeros_like(phi)
    lap[1:-1] = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
    for y in (0.3, 0.5, 0.61):
        vals = green_interval(x, y) * -lap
        integral = h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
        assert abs(integral - bump(np.array(y))) <= 1e-6


def test_solve_poisson_interval():
    xs = np.linspace(0, 1, 41)
    u = solve_poisson_interval(lambda y: np.ones_like(y), 64)
    assert np.max(np.abs(u(xs) - xs * (1 - xs) / 2)) <= 1e-8
    assert np.all(solve_poisson_interval(lambda y: 0 * y, 16)(xs) == 0)
    u = solve_poisson_interval(lambda y: np.sin(np.pi * y), 256)
    assert np.max(np.abs(u(xs) - np.sin(np.pi * xs) / np.pi**2)) <= 1e-8
    assert abs(u(0.0)) <= 1e-10 and abs(u(1.0)) <= 1e-10


def test_solve_poisson_interval_residual():
    u = solve_poisson_interval(lambda y: np.exp(y) * np.cos(3 * y), 256)
    h = 1e-3
    for x in (0.2, 0.5, 0.77):
        second = (u(x + h) - 2 * u(x) + u(x - h)) / h**2
        assert abs(-second - np.exp(x) * np.cos(3 * x)) <= 1e-4


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))
def test_interval_linearity(alpha, beta, x):
    f = lambda y: np.cos(2 * y)
    g = lambda y: y**3
    lhs = solve_poisson_interval(lambda y: alpha * f(y) + beta * g(y), 32)(x)
    rhs = alpha * solve_poisson_interval(f, 32)(x) + beta * solve_poisson_interval(g, 32)(x)
    assert abs(lhs - rhs) <= 1e-12


def test_free_space_values():
    assert green_free_space(2, [0.0, 0.0], [1.0, 0.0]) == 0.0
    assert green_free_space(3, [0, 0, 0], [0, 0.6, 0.8]) == pytest.approx(1 / (4 * np.pi), rel=1e-15)
    with pytest.raises(SingularityError):
        green_free_space(3, [1, 2, 3], [1, 2, 3])
    with pytest.raises(InvalidInputError):
        green_free_space(4, [0] * 4, [1] * 4)
    k = GreensKernel("free_space_d", 2)
    assert k([0.1, 0.2], [0.7, -0.4]) == k([0.7, -0.4], [0.1, 0.2])
    assert GreensKernel("interval_dirichlet")(0.25, 0.5) == 0.125
    with pytest.raises(InvalidInputError):
        GreensKernel("half_space")


def bump_grad(center, radius):
    center = np.asarray(center, dtype=float)

    def phi(p):
        s2 = np.sum((p - center) ** 2, axis=-1) / radius**2
        inside = s2 < 1
        return np.where(inside, np.exp(-1 / np.where(inside, 1 - s2, 1.0)), 0.0)

    def grad(p):
        s2 = np.sum((p - center) ** 2, axis=-1) / radius**2
        inside = s2 < 1
        d = np.where(inside, 1 - s2, 1.0)
        factor = np.where(inside, -2 * np.exp(-1 / d) / d**2 / radius**2, 0.0)
        return factor[..., None] * (p - center)

    return phi, grad


@pytest.mark.parametrize("d", [2, 3])
def test_distributional_identity(d):
    center = np.zeros(d)
    y = np.full(d, 0.2)
    phi, grad = bump_grad(center, 1.0)
    # the support is inside the ball of radius 1 + |y| about y
    value = distributional_check(d, grad, y, radius=1.0 + np.linalg.norm(y))
    assert abs(value - phi(y)) <= 1e-3


def test_lattice_kernel_closed_forms():
    a = lattice_potential_kernel()
    assert a[1, 0] == pytest.approx(1.0, abs=1e-13)
    assert a[1, 1] == pytest.approx(4 / np.pi, abs=1e-13)
    assert a[2, 0] == pytest.approx(4 - 8 / np.pi, abs=1e-13)
    assert np.allclose(a, a.T, atol=1e-14)
    # discrete harmonicity away from the origin: the mean of the four neighbours equals the centre
    for m, n in [(1, 1), (3, 2), (5, 0)]:
        mean = (a[m + 1, n] + a[m - 1, n] + a[m, n + 1] + a[m, abs(n - 1)]) / 4
        assert mean == pytest.approx(a[m, n], abs=1e-12)


def sine_problem(n):
    return RectangleProblem.from_functions(
        n, lambda x, y: 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y), lambda x, y: 0 * x
    )


def test_rectangle_zero_data():
    p = RectangleProblem.from_functions(8, lambda x, y: 0 * x, lambda x, y: 0 * x)
    u, residual, gap = solve_rectangle_dirichlet(p)
    assert np.all(u == 0) and residual == 0 and gap == 0


def test_rectangle_manufactured_convergence():
    errors = []
    for n in (16, 32, 64):
        u, residual, _ = solve_rectangle_dirichlet(sine_problem(n))
        X, Y = RectangleProblem.mesh(n)
        errors.append(np.max(np.abs(u - np.sin(np.pi * X) * np.sin(np.pi * Y))))
        assert errors[-1] <= 5 / n**2
        assert residual <= 10 / n**2
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


@pytest.mark.parametrize("n", [16, 32])
def test_rectangle_harmonic_boundary_data(n):
    p = RectangleProblem.from_functions(n, lambda x, y: 0 * x, lambda x, y: x**2 - y**2)
    u, residual, gap = solve_rectangle_dirichlet(p)
    X, Y = RectangleProblem.mesh(n)
    assert np.max(np.abs(u - (X**2 - Y**2))) <= 1 / n**2
    assert residual <= 10 / n**2 and gap <= 10 / n**2


def test_rectangle_paths_agree_on_mixed_data():
    n = 24
    p = RectangleProblem.from_functions(n, lambda x, y: np.exp(x) * np.cos(2 * y), lambda x, y: np.sin(3 * x + y))
    u, residual, _ = solve_rectangle_dirichlet(p)
    assert residual <= 10 / n**2
    assert np.array_equal(u[0], p.h_bdry[0])
    assert np.max(np.abs(u - solve_rectangle_fd(p))) == pytest.approx(residual)


def test_domain_green_symmetric_and_cached():
    k = DomainGreen(16)
    rows = k.rows([(3, 5), (9, 2)])
    assert rows[0][9, 2] == pytest.approx(rows[1][3, 5], abs=1e-6)
    assert np.all(rows[:, 0, :] == 0) and np.all(rows[:, :, -1] == 0)
    again = k.rows([(3, 5)])
    assert np.array_equal(again[0], rows[0])


def test_rectangle_validation():
    with pytest.raises(InvalidInputError):
        RectangleProblem(4, 4, np.zeros((5, 5)), np.zeros((5, 5)))
    with pytest.raises(InvalidInputError):
        RectangleProblem(8, 8, np.zeros((9, 9)), np.full((9, 9), np.nan))
    with pytest.raises(InvalidInputError):
        solve_rectangle_dirichlet(sine_problem(16), DomainGreen(8))
