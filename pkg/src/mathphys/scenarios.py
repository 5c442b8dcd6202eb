"""Named end-to-end runs of the numerical modules, driven by string flags.

Every scenario declares its flags with a type and a default.  Randomised
scenarios also require ``seed``; there is no default seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import greens, lattice, quantum_spectra, spectral_pde, stability, variational
from .emit import ScenarioResult
from .errors import FlagParseError, UsageError
from .fourier import TorusGrid, fourier_coeffs
from .hamiltonian import HamiltonianSystem, liouville_determinant, evolve_hamiltonian
from .stability import hamiltonian_linearization


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    parse.__name__ = "choice"
    return parse


def _positive(kind):
    def parse(text: str):
        v = kind(text)
        if not v > 0:
            raise ValueError(f"expected a positive value, got {text!r}")
        return v

    parse.__name__ = f"positive {kind.__name__}"
    return parse


@dataclass(frozen=True)
class Scenario:
    name: str
    run: Callable
    params: dict  # flag -> (parser, default string)
    randomized: bool = False
    help: str = ""


REGISTRY: dict[str, Scenario] = {}


def scenario(name, params, randomized=False, help=""):
    def register(fn):
        REGISTRY[name] = Scenario(name, fn, params, randomized, help)
        return fn

    return register


def parse_flags(sc: Scenario, flags: dict) -> dict:
    unknown = set(flags) - set(sc.params) - {"seed"}
    if unknown:
        flag = sorted(unknown)[0]
        raise FlagParseError(flag, f"unknown flag for scenario {sc.name}")
    values = {}
    for key, (parser, default) in sc.params.items():
        text = str(flags.get(key, default))
        try:
            values[key] = parser(text)
        except (TypeError, ValueError) as exc:
            raise FlagParseError(key, str(exc)) from None
    if sc.randomized:
        if "seed" not in flags:
            raise UsageError(f"scenario {sc.name} is randomized and requires --seed")
        try:
            values["seed"] = int(flags["seed"])
        except ValueError:
            raise FlagParseError("seed", f"expected an integer, got {flags['seed']!r}") from None
    elif "seed" in flags:
        raise FlagParseError("seed", f"scenario {sc.name} is deterministic and takes no --seed")
    return values


def run_scenario(name: str, flags: dict | None = None, timed: bool = True) -> ScenarioResult:
    flags = dict(flags or {})
    if name not in REGISTRY:
        raise UsageError(f"unknown scenario {name!r}; registered: {', '.join(sorted(REGISTRY))}")
    sc = REGISTRY[name]
    values = parse_flags(sc, flags)
    start = time.perf_counter()
    outputs, passed, columns = sc.run(values)
    elapsed = int(round(1000 * (time.perf_counter() - start))) if timed else 0
    inputs = {k: (flags[k] if k in flags else sc.params[k][1]) for k in sc.params}
    if sc.randomized:
        inputs["seed"] = str(values["seed"])
    passed = None if passed is None else bool(passed)
    return ScenarioResult(name, inputs, outputs, passed, elapsed, tuple(columns))


# -- spectral PDE -------------------------------------------------------------


@scenario(
    "heat",
    {"dim": (int, "1"), "N": (int, "256"), "D": (_positive(float), "1"), "t": (float, "1"), "init": (_choice("sin", "cos2"), "sin")},
    help="heat flow on the torus against the single-mode solution",
)
def _heat(v):
    n, M, D, t = v["dim"], v["N"], v["D"], v["t"]
    k = 1 if v["init"] == "sin" else 2
    mode = (lambda *x: np.sin(x[0])) if k == 1 else (lambda *x: np.cos(2 * x[0]))
    u0 = TorusGrid.from_function(mode, n, M)
    problem = spectral_pde.HeatProblem(n, "torus", D, u0)
    u = spectral_pde.heat_torus(problem, t)
    exact = math.exp(-D * k * k * t) * u0.samples
    err = float(np.max(np.abs(u.samples - exact)))
    half = spectral_pde.heat_torus(spectral_pde.HeatProblem(n, "torus", D, spectral_pde.heat_torus(problem, t / 2)), t / 2)
    semigroup = float(np.max(np.abs(half.samples - u.samples)))
    out = {"max_error": err, "semigroup_gap": semigroup, "mean_drift": abs(float(np.mean(u.samples - u0.samples).real))}
    columns = []
    if n == 1:
        out.update(x=TorusGrid.mesh(1, M)[0], u=u.samples.real, u_exact=exact.real)
        columns = ["x", "u", "u_exact"]
    return out, err <= 1e-12 and semigroup <= 1e-12, columns


@scenario(
    "schroedinger",
    {"N": (int, "256"), "t": (float, "7"), "states": (_positive(int), "20"), "eps": (_positive(float), "1e-2")},
    randomized=True,
    help="unitarity on random states and time-invariance of the truncation error",
)
def _schroedinger(v):
    rng = np.random.default_rng(v["seed"])
    M, t = v["N"], v["t"]
    drifts = []
    for _ in range(v["states"]):
        psi0 = TorusGrid(1, M, rng.normal(size=M) + 1j * rng.normal(size=M))
        drifts.append(spectral_pde.schroedinger_torus(psi0, t)[1])
    smooth = np.fft.ifft(np.fft.fft(rng.normal(size=M) + 1j * rng.normal(size=M)) / (1 + np.abs(np.fft.fftfreq(M, 1 / M))) ** 2)
    R = M // 2 - 1
    series = fourier_coeffs(TorusGrid(1, M, smooth), R)
    N, trunc, tail = spectral_pde.best_approximation(series, v["eps"])

    def err(time_):
        diff = spectral_pde.schroedinger_series(series, time_).coeffs.copy()
        diff[R - N : R + N + 1] -= spectral_pde.schroedinger_series(trunc, time_).coeffs
        return math.sqrt(float(np.sum(np.abs(diff) ** 2)))

    e0, et = err(0.0), err(t)
    out = {"max_norm_drift": max(drifts), "radius": N, "error_t0": e0, "error_t": et, "error_change": abs(et - e0)}
    return out, max(drifts) <= 1e-12 and abs(et - e0) <= 1e-12 and e0 < v["eps"], []


@scenario(
    "wave",
    {"L": (_positive(float), "1"), "mode": (_positive(int), "1"), "t": (float, "0.37"), "points": (_positive(int), "101")},
    help="standing wave on a Dirichlet interval",
)
def _wave(v):
    L, n, t = v["L"], v["mode"], v["t"]
    w = spectral_pde.WaveData(L, {n: 1.0}, {})
    x = np.linspace(0, L, v["points"])
    u = spectral_pde.wave_dirichlet(w, t, x)
    exact = math.cos(n * math.pi * t / L) * np.sin(n * math.pi * x / L)
    err = float(np.max(np.abs(u - exact)))
    drift = abs(spectral_pde.wave_energy(w, t) - spectral_pde.wave_energy(w, 0.0))
    out = {"max_error": err, "energy_drift": drift, "x": x, "u": u.real, "u_exact": exact}
    return out, err <= 1e-10 and drift <= 1e-8, ["x", "u", "u_exact"]


@scenario(
    "maxwell",
    {"M": (_positive(int), "16"), "t": (float, "1"), "step": (_positive(float), "1e-3"), "kmax": (_positive(int), "4")},
    randomized=True,
    help="vacuum Maxwell flow of a random real source-free field",
)
def _maxwell(v):
    rng = np.random.default_rng(v["seed"])
    em0 = spectral_pde.random_source_free_field(v["M"], rng, v["kmax"])
    em, drift, imag = spectral_pde.maxwell_free(em0, v["t"], v["step"])
    out = {
        "energy_initial": em0.energy(),
        "energy_drift": drift,
        "max_imaginary": imag,
        "div_E": spectral_pde.divergence_defect(em.E),
        "div_H": spectral_pde.divergence_defect(em.H),
    }
    return out, drift <= 1e-8 and imag <= 1e-10, []


# -- ODEs and mechanics -----------------------------------------------------------


@scenario(
    "lorenz",
    {"sigma": (float, "10"), "b": (float, "1.6"), "r": (float, "0.5")},
    help="linear stability of the Lorenz origin",
)
def _lorenz(v):
    p = stability.LorenzParams(v["sigma"], v["b"], v["r"])
    _, report = stability.lorenz_model(p)
    eig = np.sort_complex(report.eigenvalues.astype(complex))
    roots = np.sort_complex(stability.lorenz_char_roots(p).astype(complex))
    numeric = np.sort_complex(np.concatenate([roots, [-p.b]]))
    out = {
        "stability": report.stability,
        "geometry": report.geometry,
        "minus_b_gap": float(np.min(np.abs(eig + p.b))),
        "char_poly_gap": float(np.max(np.abs(eig - numeric))),
        "re": eig.real,
        "im": eig.imag,
    }
    return out, out["minus_b_gap"] <= 1e-10 and out["char_poly_gap"] <= 1e-8, ["re", "im"]


LIOUVILLE_SYSTEMS = {
    "oscillator": lambda x: 0.5 * (x[0] ** 2 + x[1] ** 2),
    "pendulum": lambda x: 0.5 * x[1] ** 2 - math.cos(x[0]),
}


@scenario(
    "liouville",
    {
        "system": (_choice(*LIOUVILLE_SYSTEMS), "oscillator"),
        "t": (float, "1"),
        "step": (_positive(float), "1e-3"),
        "q0": (float, "0.5"),
        "p0": (float, "0.3"),
    },
    help="phase-space volume along a Hamiltonian flow",
)
def _liouville(v):
    sys = HamiltonianSystem(1, LIOUVILLE_SYSTEMS[v["system"]])
    x0 = np.array([v["q0"], v["p0"]])
    det = liouville_determinant(sys, x0, v["t"], v["step"])
    _, drift = evolve_hamiltonian(sys, x0, v["t"], v["step"])
    lin = hamiltonian_linearization(sys.H, np.zeros(2))
    trace = float(abs(np.trace(lin.jacobian)))
    out = {"det_minus_one": abs(det - 1), "energy_drift": drift, "linearization_trace": trace}
    return out, abs(det - 1) <= 1e-6 and trace <= 1e-6, []


# -- lattice and spectra --------------------------------------------------------------


@scenario(
    "bands",
    {
        "model": (_choice("square", "honeycomb"), "square"),
        "q1": (complex, "1"),
        "q2": (complex, "1"),
        "M": (_positive(int), "16"),
        "t": (float, "1"),
    },
    help="tight-binding bands on a wrapped patch",
)
def _bands(v):
    M, q1, q2 = v["M"], v["q1"], v["q2"]
    kind = "square_single_band" if v["model"] == "square" else "honeycomb_two_band"
    model = lattice.TightBindingModel(kind, q1, q2, M)
    k = lattice.patch_momenta(M)
    K1, K2 = (a.ravel() for a in np.meshgrid(k, k, indexing="ij"))
    out = {}
    if model.components == 1:
        E = lattice.square_symbol(q1, q2, K1, K2)
        E_minus = E_plus = E
    else:
        r = np.abs(lattice.varpi(q1, q2, K1, K2))
        E_minus, E_plus = -r, r
    expected = np.sort(np.concatenate([E_minus, E_plus]) if model.components == 2 else E_plus)
    spectrum = np.linalg.eigvalsh(lattice.patch_hamiltonian(model))
    out["spectrum_gap"] = float(np.max(np.abs(spectrum - expected)))
    psi0 = np.zeros(model.state_shape, dtype=complex)
    g = np.arange(M) - M // 2
    bump = np.exp(-(g[:, None] ** 2 + g[None, :] ** 2) / 4.0)
    if model.components == 1:
        psi0 += bump
    else:
        psi0[0] += bump
        psi0[1] += 1j * np.roll(bump, 1, axis=0)
    _, _, gap = lattice.tb_evolve(model, psi0, v["t"])
    out["evolution_gap"] = gap
    passed = out["spectrum_gap"] <= 1e-8 and gap <= 1e-8
    if model.components == 2:
        dirac = lattice.find_dirac_point(q1, q2, [2.0, -2.0])
        out["dirac_k1"], out["dirac_k2"] = float(dirac[0]), float(dirac[1])
        out["dirac_varpi"] = float(abs(lattice.varpi(q1, q2, *dirac)))
        if q1 == 1 and q2 == 1:
            passed = passed and out["dirac_varpi"] <= 1e-12
    out.update(k1=K1, k2=K2, E_minus=E_minus, E_plus=E_plus)
    return out, passed, ["k1", "k2", "E_minus", "E_plus"]


@scenario(
    "birman-schwinger",
    {"lam": (_positive(float), "0.2"), "depth": (_positive(float), "1"), "width": (_positive(float), "1")},
    help="weak-coupling bound state of a square well",
)
def _birman_schwinger(v):
    half = v["width"] / 2
    V = quantum_spectra.Potential1D.from_function(lambda x: np.where(np.abs(x) <= half + 1e-12, -v["depth"], 0.0))
    r = quantum_spectra.birman_schwinger(V, v["lam"])
    exact_prediction = -(v["lam"] ** 2 / 4) * (v["depth"] * v["width"]) ** 2
    out = {
        "mu_star": r.mu_star,
        "energy": r.energy,
        "grid_energy": r.grid_diag_energy,
        "weak_coupling_prediction": exact_prediction,
        "grid_vs_prediction": abs(r.grid_diag_energy / exact_prediction - 1),
        "bisection_vs_grid": abs(r.energy / r.grid_diag_energy - 1),
    }
    return out, out["grid_vs_prediction"] <= 0.1 and out["bisection_vs_grid"] <= 0.02, []


def _gapped_hermitian(rng, n):
    ev = np.sort(np.concatenate([[rng.uniform(-2, -1)], rng.uniform(0, 3, size=n - 1)]))
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    H = (Q * ev) @ Q.conj().T
    psi = Q[:, 0] + 0.05 * (rng.normal(size=n) + 1j * rng.normal(size=n)) / math.sqrt(2 * n)
    return (H + H.conj().T) / 2, psi / np.linalg.norm(psi)


@scenario(
    "minmax",
    {"trials": (_positive(int), "50"), "max_dim": (_positive(int), "20")},
    randomized=True,
    help="Temple, Rayleigh and Galerkin bounds on random gapped matrices",
)
def _minmax(v):
    rng = np.random.default_rng(v["seed"])
    worst, violations = -np.inf, 0
    for _ in range(v["trials"]):
        n = int(rng.integers(2, v["max_dim"] + 1))
        H, psi = _gapped_hermitian(rng, n)
        E = np.linalg.eigvalsh(H)
        rq = quantum_spectra.rayleigh_quotient(H, psi)
        lower = quantum_spectra.temple_bound(H, psi, 0.5 * (rq + E[1]))
        m = int(rng.integers(1, n + 1))
        Q, _ = np.linalg.qr(rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m)))
        lam = quantum_spectra.galerkin_minmax(H, Q)
        excess = max(lower - E[0], E[0] - rq, float(np.max(E[:m] - lam)))
        worst = max(worst, excess)
        violations += excess > 1e-10
    return {"violations": violations, "worst_excess": worst}, violations == 0, []


# -- Green's functions ------------------------------------------------------------------


INTERVAL_SOURCES = {
    "one": (lambda y: np.ones_like(y), lambda x: x * (1 - x) / 2),
    "sine": (lambda y: np.sin(np.pi * y), lambda x: np.sin(np.pi * x) / np.pi**2),
    "zero": (lambda y: np.zeros_like(y), lambda x: np.zeros_like(x)),
}


@scenario(
    "greens-interval",
    {"f": (_choice(*INTERVAL_SOURCES), "one"), "n_quad": (_positive(int), "256"), "points": (_positive(int), "101")},
    help="-u'' = f on [0, 1] by the Dirichlet Green's function",
)
def _greens_interval(v):
    f, exact = INTERVAL_SOURCES[v["f"]]
    x = np.linspace(0, 1, v["points"])
    u = greens.solve_poisson_interval(f, v["n_quad"])(x)
    err = float(np.max(np.abs(u - exact(x))))
    out = {"max_error": err, "boundary": max(abs(u[0]), abs(u[-1])), "x": x, "u": u, "u_exact": exact(x)}
    return out, err <= 1e-8, ["x", "u", "u_exact"]


RECTANGLE_CASES = {
    "sine": (
        lambda x, y: 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y),
        lambda x, y: 0 * x,
        lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
    ),
    "harmonic": (lambda x, y: 0 * x, lambda x, y: x**2 - y**2, lambda x, y: x**2 - y**2),
    "zero": (lambda x, y: 0 * x, lambda x, y: 0 * x, lambda x, y: 0 * x),
}


@scenario(
    "greens-rectangle",
    {"case": (_choice(*RECTANGLE_CASES), "sine"), "n": (int, "16"), "levels": (_positive(int), "3")},
    help="Dirichlet problem on the unit square by the domain Green's function",
)
def _greens_rectangle(v):
    f, h, exact = RECTANGLE_CASES[v["case"]]
    errors, residuals, gaps = [], [], []
    for level in range(v["levels"]):
        n = v["n"] * 2**level
        p = greens.RectangleProblem.from_functions(n, f, h)
        u, residual, gap = greens.solve_rectangle_dirichlet(p)
        X, Y = greens.RectangleProblem.mesh(n)
        errors.append(float(np.max(np.abs(u - exact(X, Y)))))
        residuals.append(residual)
        gaps.append(gap)
    hs = [1 / (v["n"] * 2**k) for k in range(v["levels"])]
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:]) if a > 0 and b > 0]
    out = {
        "max_error_finest": errors[-1],
        "worst_error_over_h2": max(e / hh**2 for e, hh in zip(errors, hs)),
        "worst_residual_over_h2": max(r / hh**2 for r, hh in zip(residuals, hs)),
        "boundary_gap_finest": gaps[-1],
        "min_observed_order": min(orders) if orders else 0.0,
    }
    passed = out["worst_residual_over_h2"] <= 10 and out["worst_error_over_h2"] <= 5
    if v["case"] == "sine" and orders:
        passed = passed and min(orders) >= 1.9
    out.update(x=X.ravel(), y=Y.ravel(), value=u.ravel())
    return out, passed, ["x", "y", "value"]


# -- variational ----------------------------------------------------------------------


@scenario(
    "helmholtz",
    {"M": (_positive(int), "12")},
    randomized=True,
    help="Helmholtz splitting of a random periodic vector field on T^3",
)
def _helmholtz(v):
    rng = np.random.default_rng(v["seed"])
    u = rng.normal(size=(3,) + (v["M"],) * 3)
    par, perp, mean = variational.helmholtz_decompose(u)
    out = {
        "reconstruction": float(np.max(np.abs(par + perp + mean - u))),
        "div_transverse": variational.divergence_defect(perp),
        "curl_longitudinal": variational.curl_defect(par),
        "inner_product": float(abs(np.sum(par * perp)) / np.sum(u**2)),
    }
    passed = out["reconstruction"] <= 1e-12 and max(out["div_transverse"], out["curl_longitudinal"], out["inner_product"]) <= 1e-10
    return out, passed, []


@scenario(
    "gl-descent",
    {
        "M": (_positive(int), "32"),
        "kappa": (_positive(float), "2"),
        "step": (_positive(float), "6e-3"),
        "max_iters": (_positive(int), "20000"),
        "tol": (_positive(float), "1e-8"),
        "freeze_A": (_bool, "true"),
    },
    randomized=True,
    help="Ginzburg-Landau gradient descent on the circle from a small random start",
)
def _gl_descent(v):
    rng = np.random.default_rng(v["seed"])
    M = v["M"]
    x = TorusGrid.mesh(1, M)[0]
    a, b, c = rng.normal(size=3)
    psi0 = 0.1 * (1 + 0.3 * a * np.cos(x) + 0.3 * b * np.sin(2 * x)) + 0.02j * c * np.cos(x)
    s0 = variational.GLState(TorusGrid(1, M, psi0), [TorusGrid(1, M, np.zeros(M))], v["kappa"])
    r = variational.gl_minimize(s0, v["step"], v["max_iters"], v["tol"], freeze_A=v["freeze_A"])
    path = np.asarray(r.energy_path)
    norms = np.asarray(r.grad_norms[: len(path)])
    out = {
        "converged": r.converged,
        "iterations": r.iterations,
        "final_energy": float(path[-1]),
        "final_grad_norm": r.grad_norms[-1],
        "max_modulus_defect": float(np.max(np.abs(np.abs(r.state.psi.samples) - 1))),
        "iter": np.arange(len(path)),
        "energy": path,
        "grad_norm": norms,
    }
    return out, bool(r.converged), ["iter", "energy", "grad_norm"]


def _dirichlet_operator(N):
    h = 1 / (N + 1)
    return (np.diag(-2 * np.ones(N)) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)) / h**2


@scenario(
    "bifurcation",
    {
        "problem": (_choice("pitchfork", "dirichlet", "none"), "pitchfork"),
        "mu_min": (float, "-1"),
        "mu_max": (float, "1"),
        "points": (_positive(int), "41"),
        "N": (_positive(int), "49"),
    },
    help="loss of invertibility along the trivial branch",
)
def _bifurcation(v):
    lo, hi = v["mu_min"], v["mu_max"]
    if v["problem"] == "pitchfork":
        F, dim = (lambda mu, x: mu * x - x**3), 1
        expected = [0.0] if lo < 0 < hi else []
    elif v["problem"] == "none":
        F, dim, expected = (lambda mu, x: x), 1, []
    else:
        D2 = _dirichlet_operator(v["N"])
        F, dim = (lambda mu, u: D2 @ u + mu * u), v["N"]
        expected = [(k * math.pi) ** 2 for k in range(1, 64) if lo < (k * math.pi) ** 2 < hi]
    scan = variational.bifurcation_scan(F, (lo, hi), v["points"], dim)
    cands = scan.candidates
    passed = len(cands) == len(expected) and all(np.isclose(t, 1.0, atol=1e-6) for t in scan.transversality)
    if passed and expected:
        tol = 1e-6 if v["problem"] == "pitchfork" else 0.05
        passed = all(abs(c - e) <= tol * max(1.0, abs(e)) for c, e in zip(cands, expected))
    out = {
        "candidates": len(cands),
        "first_candidate": cands[0] if cands else 0.0,
        "first_transversality": scan.transversality[0] if cands else 0.0,
        "mu": scan.mu_grid,
        "sigma_min": scan.smallest_singular,
    }
    return out, passed, ["mu", "sigma_min"]
