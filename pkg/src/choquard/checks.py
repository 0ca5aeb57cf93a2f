"""
Invariant suite behind the `check` subcommand.

Every check returns a CheckResult carrying the measured quantity next to its
tolerance.  Randomized checks draw from a generator seeded by the caller, so
repeated runs print identical lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .extremals import (
    ExtremalFamily,
    Kind,
    dilation_exponents,
    kernel_for,
    mass_of,
    normalize_amplitudes,
    s1_quotient,
    s2_quotient,
    sample_extremal,
    sharp_constants,
    _pairing,
)
from .functional import (
    NonlinearityParams,
    derivative_action,
    energy,
    h1_gradient,
    ray_max,
    ray_profile,
)
from .grid import (
    GridSpec,
    build_grid,
    dirichlet_form,
    h1_inner,
    h1_norm,
    helmholtz_residual,
    integrate,
    solve_helmholtz,
)
from .riesz import RieszKernel, build_kernel, hls_pairing
from .threshold import compute_threshold, threshold_alternate_forms


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: value={self.value:.6g} tol={self.tolerance:.3g} {self.detail}".rstrip()


def _result(name, value, tol, detail="", le=True):
    ok = bool(np.isfinite(value) and (value <= tol if le else value >= tol))
    return CheckResult(name, ok, float(value), float(tol), detail)


# -- grid -------------------------------------------------------------------


def check_ball_volume() -> CheckResult:
    g = build_grid(GridSpec(3, 1.0, 2000, 2.0))
    err = abs(integrate(g, np.ones(g.size)) / (4 * math.pi / 3) - 1)
    return _result("quadrature.ball_volume", err, 1e-6)


def check_gaussian_integral() -> CheckResult:
    g = build_grid(GridSpec(3, 20.0, 2000, 2.0))
    err = abs(integrate(g, np.exp(-g.nodes**2)) / math.pi**1.5 - 1)
    return _result("quadrature.gaussian", err, 1e-8)


def check_helmholtz(kernel: RieszKernel, rng) -> CheckResult:
    g = kernel.grid
    f = np.exp(-((g.nodes / rng.uniform(1, 4)) ** 2))
    h = np.exp(-((g.nodes / rng.uniform(1, 4)) ** 2)) * (1 + g.nodes)
    vf, vh = solve_helmholtz(g, f), solve_helmholtz(g, h)
    res = helmholtz_residual(g, vf, f)
    a, b = integrate(g, vf.values * h), integrate(g, f * vh.values)
    sym = abs(a - b) / max(abs(a), abs(b))
    return _result("grid.helmholtz_residual_symmetry", max(res, sym), 1e-10)


# -- riesz ------------------------------------------------------------------


def check_kernel_self_adjoint(kernel: RieszKernel) -> CheckResult:
    S = kernel.symmetric_form()
    asym = float(np.max(np.abs(S - S.T)) / np.max(np.abs(S)))
    neg = float(np.min(kernel.matrix))
    return _result("riesz.self_adjoint", asym, 1e-12, f"min_entry={neg:.3g}") if neg >= 0 else CheckResult(
        "riesz.self_adjoint", False, asym, 1e-12, f"negative entry {neg}"
    )


def check_newtonian_oracle(M: int = 1000) -> CheckResult:
    # R = 6.25 with gamma = 2 puts a node exactly on r = 1 whenever 5 | M
    g = build_grid(GridSpec(3, 6.25, M, 2.0))
    K = build_kernel(g, 2.0)
    r = g.nodes
    err = float(np.max(np.abs((K.matrix @ ball_indicator(g))[r <= 5] / newtonian_ball(r[r <= 5]) - 1)))
    return _result("riesz.newtonian_ball", err, 1e-4)


def newtonian_ball(r):
    """Potential of the unit ball in R^3 with I_2 = 1/(4 pi |x|)."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= 1, (3 - r * r) / 6, 1 / (3 * np.maximum(r, 1e-300)))


def ball_indicator(grid) -> np.ndarray:
    """Indicator of the unit ball; a node on the sphere gets 1/2, as the trapezoid rule expects."""
    r = grid.nodes
    f = (r < 1.0).astype(float)
    f[np.isclose(r, 1.0, rtol=0, atol=1e-12)] = 0.5
    return f


def extremal_ratio(kernel: RieszKernel) -> tuple[np.ndarray, np.ndarray]:
    """(r, (I * phi) / psi) with phi = (1+r^2)^{-(N+a)/2}, psi = (1+r^2)^{-(N-a)/2}, r <= R/4."""
    g = kernel.grid
    N, a = g.N, kernel.alpha
    r = g.nodes
    phi = (1 + r * r) ** (-(N + a) / 2)
    psi = (1 + r * r) ** (-(N - a) / 2)
    sel = r <= g.spec.R / 4
    return r[sel], (kernel.matrix @ phi)[sel] / psi[sel]


def check_extremal_identity(kernel: RieszKernel) -> CheckResult:
    _, ratio = extremal_ratio(kernel)
    spread = float((ratio.max() - ratio.min()) / np.mean(ratio))
    return _result("riesz.extremal_identity", spread, 1e-3)


def check_hls_symmetry(kernel: RieszKernel, rng) -> CheckResult:
    g = kernel.grid
    worst = 0.0
    for _ in range(10):
        f = _random_profile(g, rng)
        h = _random_profile(g, rng)
        a, b = hls_pairing(kernel, f, h), hls_pairing(kernel, h, f)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return _result("riesz.pairing_symmetry", worst, 1e-12)


# -- functional -------------------------------------------------------------


def _random_profile(grid, rng, positive=True) -> np.ndarray:
    """Positive combination of three decaying bumps with random widths."""
    r = grid.nodes
    v = np.zeros(grid.size)
    for _ in range(3):
        width = rng.uniform(0.5, 4.0)
        v += rng.uniform(0.2, 1.0) * (1 + (r / width) ** 2) ** (-grid.N / 2)
    if not positive:
        v *= np.cos(rng.uniform(0.5, 2.0) * r)
    v[-1] = 0.0
    return v


def _modulation(grid, rng) -> np.ndarray:
    r = grid.nodes
    m = rng.uniform(-0.5, 0.5) + 0.5 * np.cos(rng.uniform(0.2, 1.5) * r + rng.uniform(0, 2 * math.pi))
    return m


def gradient_fd_orders(kernel, params, rng, trials=10, hs=(1e-2, 1e-3, 1e-4)):
    """
    Observed central-difference orders between consecutive h for `trials`
    random (u, phi).  u is positive and phi = u * m with |m| <= 1, so every
    u + h phi stays away from the kink of |s|^p.
    """
    A = normalize_amplitudes(kernel, params)[0]
    g = kernel.grid
    orders = []
    for _ in range(trials):
        u = A * _random_profile(g, rng)
        phi = u * _modulation(g, rng)
        exact = derivative_action(kernel, params, u, phi)
        errs = []
        for h in hs:
            fd = (energy(kernel, params, u + h * phi).total - energy(kernel, params, u - h * phi).total) / (2 * h)
            errs.append(abs(fd - exact))
        orders.append(
            [math.log10(errs[i] / errs[i + 1]) / math.log10(hs[i] / hs[i + 1]) for i in range(len(hs) - 1)]
        )
    return np.asarray(orders)


def check_gradient_fd(kernel, params, rng) -> CheckResult:
    orders = gradient_fd_orders(kernel, params, rng)
    return _result("functional.fd_order", float(orders.min()), 1.9, le=False)


def check_gradient_representation(kernel, params, rng) -> CheckResult:
    g = kernel.grid
    A = normalize_amplitudes(kernel, params)[0]
    worst = 0.0
    for _ in range(5):
        u = A * _random_profile(g, rng)
        phi = _random_profile(g, rng, positive=False)
        grad = h1_gradient(kernel, params, u)
        lhs = h1_inner(g, grad, phi)
        rhs = derivative_action(kernel, params, u, phi)
        worst = max(worst, abs(lhs - rhs) / (h1_norm(g, grad) * h1_norm(g, phi)))
    return _result("functional.h1_gradient", worst, 1e-8)


def check_ray_identity(kernel, params, rng) -> CheckResult:
    g = kernel.grid
    u = normalize_amplitudes(kernel, params)[0] * _random_profile(g, rng)
    prof = ray_profile(kernel, params, u)
    worst = 0.0
    for t in (0.1, 0.5, 1.0, 2.0, 5.0):
        e = energy(kernel, params, t * u).total
        worst = max(worst, abs(e - prof(t)) / max(abs(e), 1e-300))
    t0 = ray_max(prof)
    return _result("functional.ray_identity", worst, 1e-10, f"t0={t0:.6g}")


# -- extremals --------------------------------------------------------------


def fit_dilation_exponents(kernel: RieszKernel, params: NonlinearityParams) -> dict:
    """
    Log-log slopes of each energy term of mu_lambda over lambda in {2, 4, 8}
    and of nu_lambda over {1/2, 1/4, 1/8}, on grids refit to max(1, lambda) R.
    Returns {branch: {term: (measured, expected)}}.
    """
    expected = dilation_exponents(params)
    out = {}
    for branch, kind, lams in (("MU", Kind.MU, (2.0, 4.0, 8.0)), ("NU", Kind.NU, (0.5, 0.25, 0.125))):
        vals = {k: [] for k in expected[branch]}
        for lam in lams:
            k = kernel_for(kernel, lam)
            e = energy(k, params, sample_extremal(k.grid, ExtremalFamily(kind, lam)))
            for term in vals:
                vals[term].append(getattr(e, term))
        x = np.log(lams)
        out[branch] = {
            term: (float(np.polyfit(x, np.log(v), 1)[0]), expected[branch][term]) for term, v in vals.items()
        }
    return out


def exponent_error(measured: float, expected: float) -> float:
    """Relative error, absolute for a zero exponent."""
    return abs(measured - expected) / max(abs(expected), 1.0)


def check_dilation_exponents(kernel, params) -> CheckResult:
    fits = fit_dilation_exponents(kernel, params)
    worst, where = 0.0, ""
    for branch, terms in fits.items():
        for term, (m, e) in terms.items():
            err = exponent_error(m, e)
            if err >= worst:
                worst, where = err, f"{branch}.{term}"
    return _result("extremals.dilation_exponents", worst, 0.02, f"worst={where}")


def check_normalization(kernel, params) -> CheckResult:
    A, B = normalize_amplitudes(kernel, params)
    g = kernel.grid
    mu = sample_extremal(g, ExtremalFamily(Kind.MU, 1.0, A)).values
    nu = sample_extremal(g, ExtremalFamily(Kind.NU, 1.0, B)).values
    e1 = abs(mass_of(g, mu) / _pairing(kernel, mu, params.p) - 1)
    e2 = abs(dirichlet_form(g, nu, nu) / _pairing(kernel, nu, params.q) - 1)
    return _result("extremals.normalization", max(e1, e2), 1e-8, f"A={A:.10g} B={B:.10g}")


def check_sharp_invariance(kernel, params) -> CheckResult:
    sc = sharp_constants(kernel, params)
    return _result("extremals.lambda_invariance", sc.rel_accuracy, 1e-4, f"S1={sc.S1:.10g} S2={sc.S2:.10g}")


def extremality_probe(kernel, params, rng, count=200, eps=1e-2) -> tuple[float, float]:
    """Smallest (quotient / extremal quotient) - 1 over random perturbations, for S1 and S2."""
    g = kernel.grid
    mu = sample_extremal(g, ExtremalFamily(Kind.MU)).values
    nu = sample_extremal(g, ExtremalFamily(Kind.NU)).values
    S1, S2 = s1_quotient(kernel, params, mu), s2_quotient(kernel, params, nu)
    lo1 = lo2 = math.inf
    for _ in range(count):
        eta = _random_profile(g, rng, positive=False)
        eta1 = eta / math.sqrt(mass_of(g, eta)) * math.sqrt(mass_of(g, mu))
        eta2 = eta / math.sqrt(dirichlet_form(g, eta, eta)) * math.sqrt(dirichlet_form(g, nu, nu))
        lo1 = min(lo1, s1_quotient(kernel, params, mu + eps * eta1) / S1 - 1)
        lo2 = min(lo2, s2_quotient(kernel, params, nu + eps * eta2) / S2 - 1)
    return lo1, lo2


def check_extremality(kernel, params, rng) -> CheckResult:
    lo1, lo2 = extremality_probe(kernel, params, rng, count=50)
    return _result("extremals.local_minimality", min(lo1, lo2), -1e-6, le=False)


# -- threshold --------------------------------------------------------------


def check_threshold_identity(params, rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        S1, S2 = rng.uniform(0.1, 50.0, size=2)
        tp, tq, _ = compute_threshold(params, S1, S2)
        ap, aq = threshold_alternate_forms(params, S1, S2)
        worst = max(worst, abs(tp / ap - 1), abs(tq / aq - 1))
    return _result("threshold.two_forms", worst, 1e-12)


def run_checks(kernel: RieszKernel, params: NonlinearityParams, seed: int = 0, include_slow: bool = True):
    """Yield CheckResult objects one at a time."""
    rng = np.random.default_rng(seed)
    yield check_ball_volume()
    yield check_gaussian_integral()
    yield check_helmholtz(kernel, rng)
    yield check_kernel_self_adjoint(kernel)
    yield check_hls_symmetry(kernel, rng)
    yield check_extremal_identity(kernel)
    if include_slow:
        yield check_newtonian_oracle()
    yield check_gradient_fd(kernel, params, rng)
    yield check_gradient_representation(kernel, params, rng)
    yield check_ray_identity(kernel, params, rng)
    yield check_normalization(kernel, params)
    yield check_sharp_invariance(kernel, params)
    yield check_dilation_exponents(kernel, params)
    yield check_extremality(kernel, params, rng)
    yield check_threshold_identity(params, rng)


def nested_quadrature_convolution(N: int, alpha: float, f, r: float) -> float:
    """
    Brute-force (I_alpha * f)(r) for radial f by nested adaptive quadrature:
    outer over s, inner over the polar angle, no shared code with `riesz`.
    """
    from scipy.special import gamma as G

    c = G((N - alpha) / 2) / (G(alpha / 2) * math.pi ** (N / 2) * 2**alpha)
    area = 2 * math.pi ** ((N - 1) / 2) / G((N - 1) / 2)
    beta = (N - alpha) / 2

    def angular(s):
        fn = lambda t: math.sin(t) ** (N - 2) * (r * r + s * s - 2 * r * s * math.cos(t)) ** (-beta)
        if abs(s - r) < 1e-14:
            return area * quad(fn, 0, math.pi, limit=200)[0]
        return area * quad(fn, 0, math.pi, limit=200, points=[min(math.pi, abs(s - r) / max(r, s))])[0]

    inner = lambda s: s ** (N - 1) * f(s) * angular(s)
    val = quad(inner, 0, r, limit=400)[0] if r > 0 else 0.0
    val += quad(inner, r, np.inf, limit=400)[0]
    return c * val
