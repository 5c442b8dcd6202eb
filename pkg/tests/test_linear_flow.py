import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mathphys.errors import BlowUpError, DomainEscapeError, InvalidInputError
from mathphys.linear_flow import (
    Trajectory,
    VectorField,
    flow_divergence_gap,
    groenwall_check,
    jordan_block,
    jordan_block_exponential,
    matrix_exponential,
    picard_solve,
    rk4_integrate,
    solve_linear_ivp,
)


def test_nilpotent_free_particle():
    H = np.array([[0.0, 1.0], [0.0, 0.0]])
    for t in (0.3, -2.0, 17.5):
        np.testing.assert_allclose(matrix_exponential(H, t), [[1, t], [0, 1]], rtol=0, atol=1e-14)


def test_zero_and_diagonal():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3)), 4.2), np.eye(3))
    out = matrix_exponential(np.diag([0.5, -3.0]), 1.0)
    np.testing.assert_allclose(out, np.diag([math.exp(0.5), math.exp(-3.0)]), rtol=1e-14)


def test_against_scipy_expm():
    rng = np.random.default_rng(3)
    for scale in (0.1, 1.0, 5.0, 30.0):
        H = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        ref = scipy.linalg.expm(scale * H / np.linalg.norm(H, 1))
        got = matrix_exponential(H / np.linalg.norm(H, 1), scale)
        assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        matrix_exponential(np.array([[np.nan]]), 1.0)
    with pytest.raises(InvalidInputError):
        matrix_exponential(np.ones((2, 3)), 1.0)


small_matrices = arrays(np.float64, (3, 3), elements=st.floats(-10 / 3, 10 / 3))


@settings(max_examples=60, deadline=None)
@given(small_matrices, st.floats(-1, 1), st.floats(-1, 1))
def test_group_law(H, t1, t2):
    lhs = matrix_exponential(H, t1) @ matrix_exponential(H, t2)
    rhs = matrix_exponential(H, t1 + t2)
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(small_matrices, st.floats(-1, 1))
def test_inverse(H, t):
    prod = matrix_exponential(H, t) @ matrix_exponential(H, -t)
    scale = max(1.0, np.max(np.abs(matrix_exponential(H, t))) * np.max(np.abs(matrix_exponential(H, -t))))
    assert np.max(np.abs(prod - np.eye(3))) <= 1e-10 * scale


def test_jordan_examples():
    np.testing.assert_allclose(jordan_block_exponential(0.0, 2, 1.7), [[1, 1.7], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(jordan_block_exponential(0.4, 1, 2.0), [[math.exp(0.8)]])
    ref = matrix_exponential(jordan_block(1.0, 3), 2.0)
    np.testing.assert_allclose(jordan_block_exponential(1.0, 3, 2.0), ref, rtol=1e-12)
    with pytest.raises(InvalidInputError):
        jordan_block_exponential(1.0, 0, 1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 6),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_jordan_matches_series(r, re, im, t):
    lam = complex(re, im)
    closed = jordan_block_exponential(lam, r, t)
    series = matrix_exponential(jordan_block(lam, r), t)
    assert np.max(np.abs(closed - series)) <= 1e-12 * max(1.0, np.max(np.abs(closed)))


def test_linear_ivp_cases():
    A = np.array([[0.0, 1.0], [-2.0, -0.1]])
    x0 = np.array([1.0, 0.5])
    np.testing.assert_allclose(
        solve_linear_ivp(A, lambda s: np.zeros(2), x0, 1.3), matrix_exponential(A, 1.3) @ x0, rtol=1e-13
    )
    # A = 0: pure quadrature of f(s) = (cos s, s^2)
    got = solve_linear_ivp(np.zeros((2, 2)), lambda s: np.array([math.cos(s), s * s]), x0, 2.0, 50)
    np.testing.assert_allclose(got, x0 + [math.sin(2.0), 8.0 / 3.0], atol=1e-8)
    # scalar x' = x + 1, x(0) = 0 -> e - 1
    got = solve_linear_ivp([[1.0]], lambda s: np.array([1.0]), [0.0], 1.0, 64)
    assert abs(got[0] - (math.e - 1)) <= 1e-8
    with pytest.raises(InvalidInputError):
        solve_linear_ivp(A, lambda s: np.zeros(2), [1.0], 1.0)


def test_linear_ivp_satisfies_ode():
    A = np.array([[-0.3, 1.0], [-1.0, -0.2]])
    f = lambda s: np.array([math.sin(3 * s), 1.0 + s])  # noqa: E731
    x0 = np.array([0.2, -1.0])
    t, h = 0.8, 1e-5
    x = lambda s: solve_linear_ivp(A, f, x0, s, 200)  # noqa: E731
    deriv = (x(t + h) - x(t - h)) / (2 * h)
    assert np.max(np.abs(deriv - (A @ x(t) + f(t)))) <= 1e-5


def test_picard_zero_field():
    F = VectorField(2, lambda x: np.zeros(2), lipschitz=1.0, ball_radius=1.0)
    traj = picard_solve(F, [0.3, -0.2], 4, 51)
    assert np.all(traj.states == np.array([0.3, -0.2]))


def test_picard_iterates_are_taylor_polynomials():
    F = VectorField(1, lambda x: x, lipschitz=1.0, ball_radius=1.0)
    samples = 2001
    for n in (1, 2, 4, 7):
        traj = picard_solve(F, [1.0], n, samples)
        t = traj.times
        taylor = sum(t**k / math.factorial(k) for k in range(n + 1))
        h = t[1] - t[0]
        # trapezoid error of each nested integral is O(T h^2)
        assert np.max(np.abs(traj.states[:, 0] - taylor)) <= n * h**2
    assert traj.diagnostics["T"] == pytest.approx(0.5)


def test_picard_contraction_and_closed_form():
    lam = -1.5
    F = VectorField(2, lambda x: lam * x, lipschitz=abs(lam), ball_radius=2.0)
    x0 = np.array([0.7, -0.4])
    traj = picard_solve(F, x0, 12, 401)
    gaps = traj.diagnostics["iterate_gaps"]
    slack = traj.diagnostics["quadrature_slack"]
    for a, b in zip(gaps, gaps[1:]):
        assert b <= 0.5 * a + slack
    exact = np.exp(lam * traj.times)[:, None] * x0
    initial_gap = np.max(np.linalg.norm(exact - x0, axis=1))
    h = traj.times[1] - traj.times[0]
    err = np.max(np.linalg.norm(traj.states - exact, axis=1))
    assert err <= 2.0**-12 * initial_gap + 12 * h**2


def test_picard_domain_escape():
    # the field vanishes on the sampling lattice, so v_max is underestimated
    rho = 0.5
    bump = lambda x: 1e-3 + 100 * np.sin(16 * np.pi * (x - 1.0) / rho) ** 2  # noqa: E731
    F_bad = VectorField(1, bump, lipschitz=0.1, ball_radius=rho)
    with pytest.raises(DomainEscapeError):
        picard_solve(F_bad, [1.0], 3, 201)
    F = VectorField(1, lambda x: np.exp(4 * x), lipschitz=0.1, ball_radius=0.01)
    picard_solve(F, [1.0], 3, 21)


def test_rk4_examples():
    zero = rk4_integrate(lambda x: np.zeros_like(x), [1.0, 2.0], 3.0, 0.1)
    assert np.all(zero.states == [1.0, 2.0])
    exp = rk4_integrate(lambda x: x, [1.0], 1.0, 1e-3)
    assert abs(exp.final[0] - math.e) <= 1e-10
    rot = rk4_integrate(lambda x: np.array([-x[1], x[0]]), [1.0, 0.5], 2 * math.pi, 1e-3)
    assert np.max(np.abs(rot.final - [1.0, 0.5])) <= 1e-8
    assert len(rot.times) == len(rot.states)


def test_rk4_fourth_order():
    errs = [abs(rk4_integrate(lambda x: -x * x, [1.0], 2.0, h).final[0] - 1 / 3) for h in (0.1, 0.05)]
    assert 3.8 <= math.log2(errs[0] / errs[1]) <= 4.2


def test_rk4_blow_up():
    with pytest.raises(BlowUpError) as info:
        rk4_integrate(lambda x: x**2, [1.0], 2.0, 0.01)
    assert 0.9 <= info.value.last_time <= 1.1


def test_trajectory_validation():
    with pytest.raises(InvalidInputError):
        Trajectory([0, 1], [[0.0]], "rk4")
    with pytest.raises(InvalidInputError):
        Trajectory([0, 1], [[0.0], [1.0]], "euler")
    with pytest.raises(InvalidInputError):
        Trajectory([0, 1, 0.5], [[0.0], [1.0], [2.0]], "rk4")


def test_groenwall_examples():
    t = np.linspace(0, 2, 101)
    assert groenwall_check(t, np.exp(t), lambda s: 1.0).passed
    assert not groenwall_check(t, np.exp(2 * t), lambda s: 1.0).passed
    with pytest.raises(InvalidInputError):
        groenwall_check([], [], lambda s: 1.0)


def test_flow_divergence_analytic_case():
    F0 = VectorField(1, lambda x: -x, lipschitz=1.0, ball_radius=1.0)
    F1 = VectorField(1, lambda x: np.ones(1))
    for eps in (0.0, 1e-3, 0.3):
        rep = flow_divergence_gap(F0, F1, eps, [0.0], 2.0)
        assert rep.passed
        assert rep.lhs == pytest.approx(eps * (1 - math.exp(-2.0)), abs=1e-12)
        assert rep.rhs == pytest.approx(eps * math.expm1(2.0))
    assert flow_divergence_gap(F0, F1, 0.0, [0.0], 1.0).lhs == 0.0


def test_flow_divergence_feeds_groenwall():
    # w = gap + eps C / L satisfies w' <= L w
    F0 = VectorField(1, lambda x: -x, lipschitz=1.0, ball_radius=1.0)
    F1 = VectorField(1, lambda x: np.ones(1))
    eps = 0.01
    rep = flow_divergence_gap(F0, F1, eps, [0.0], 3.0)
    d = rep.details
    w = d["gap"] + eps * d["C"] / d["L"]
    assert groenwall_check(d["times"], w, lambda s: d["L"]).passed


def test_flow_divergence_pendulum():
    F0 = VectorField(2, lambda x: np.array([x[1], -math.sin(x[0])]), lipschitz=1.0, ball_radius=1.0)
    F1 = VectorField(2, lambda x: np.array([0.0, 1.0]))
    rep = flow_divergence_gap(F0, F1, 1e-3, [0.5, 0.0], 1.0)
    assert rep.passed and rep.lhs > 0
    with pytest.raises(InvalidInputError):
        flow_divergence_gap(VectorField(1, lambda x: x), F1, 0.1, [0.0], 1.0)
