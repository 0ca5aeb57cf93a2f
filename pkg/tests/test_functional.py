from __future__ import annotations

import math

import numpy as np
import pytest

from choquard.extremals import ExtremalFamily, Kind, normalize_amplitudes, sample_extremal
from choquard.functional import (
    NonlinearityParams,
    RayProfile,
    F_eval,
    derivative_action,
    energy,
    energy_and_gradient,
    h1_gradient,
    ray_max,
    ray_profile,
)
from choquard.grid import h1_inner, h1_norm, integrate


def _positive(g, rng, scale=1.0):
    r = g.nodes
    v = np.zeros(g.size)
    for _ in range(3):
        v += rng.uniform(0.2, 1.0) * (1 + (r / rng.uniform(0.5, 4.0)) ** 2) ** -3.5
    v[-1] = 0.0
    return scale * v


def test_params_exponents():
    P = NonlinearityParams.doubly_critical(7, 2)
    assert P.p == pytest.approx(9 / 7) and P.q == pytest.approx(9 / 5)
    assert P.coef_p == pytest.approx(7 / 9) and P.coef_q == pytest.approx(5 / 9)
    assert 1 < P.p < P.q <= P.p * 7 / 5 + 1e-15
    assert P.is_doubly_critical
    assert not NonlinearityParams.single_power(7, 2, 1.5).is_doubly_critical


@pytest.mark.parametrize("N,alpha", [(7, 0.0), (7, 7.0), (2, 1.0)])
def test_params_validation(N, alpha):
    with pytest.raises(ValueError):
        NonlinearityParams.doubly_critical(N, alpha)


def test_params_exponent_window():
    with pytest.raises(ValueError):
        NonlinearityParams.single_power(7, 2, 1.1)  # below (N+alpha)/N
    with pytest.raises(ValueError):
        NonlinearityParams.single_power(7, 2, 2.0)  # above (N+alpha)/(N-2)


def test_F_eval_values():
    P = NonlinearityParams.doubly_critical(7, 2)
    assert F_eval(P, 0.0) == (0.0, 0.0)
    F, dF = F_eval(P, 1.0)
    assert F == pytest.approx(1 / P.p + 1 / P.q, rel=1e-15) and dF == pytest.approx(2.0, rel=1e-15)
    F, _ = F_eval(P, 2.0)
    assert F == pytest.approx(7 / 9 * 2 ** (9 / 7) + 5 / 9 * 2 ** (9 / 5), rel=1e-14)
    # 7/9 * 2.43807 + 5/9 * 3.48220
    assert F == pytest.approx(3.8308, abs=1e-4)


def test_F_eval_parity_and_derivative():
    P = NonlinearityParams.doubly_critical(7, 2)
    s = np.linspace(-3, 3, 61)
    F, dF = F_eval(P, s)
    Fm, dFm = F_eval(P, -s)
    assert np.array_equal(F, Fm) and np.array_equal(dF, -dFm)
    h = 1e-6
    for x in (-2.0, -0.3, 0.7, 2.5):
        fd = (F_eval(P, x + h)[0] - F_eval(P, x - h)[0]) / (2 * h)
        assert fd == pytest.approx(F_eval(P, x)[1], rel=1e-7)


def test_energy_of_zero(kernel7, params7):
    e = energy(kernel7, params7, np.zeros(kernel7.grid.size))
    assert (e.dirichlet, e.mass, e.D_pp, e.D_qq, e.D_pq, e.total) == (0, 0, 0, 0, 0, 0)


def test_energy_total_formula_and_signs(kernel7, params7):
    rng = np.random.default_rng(0)
    u = _positive(kernel7.grid, rng, 300.0)
    e = energy(kernel7, params7, u)
    p, q = params7.p, params7.q
    expected = 0.5 * (e.dirichlet + e.mass) - e.D_pp / (2 * p * p) - e.D_qq / (2 * q * q) - e.D_pq / (p * q)
    assert e.total == pytest.approx(expected, rel=1e-14)
    assert min(e.D_pp, e.D_qq, e.D_pq) > 0


def test_energy_even(kernel7, params7):
    rng = np.random.default_rng(1)
    u = _positive(kernel7.grid, rng, 200.0) * np.cos(kernel7.grid.nodes)
    assert energy(kernel7, params7, u) == energy(kernel7, params7, -u)


def test_normalized_mu_mass_equals_pairing(kernel7, params7):
    A, _ = normalize_amplitudes(kernel7, params7)
    mu = sample_extremal(kernel7.grid, ExtremalFamily(Kind.MU, 1.0, A))
    e = energy(kernel7, params7, mu)
    assert e.mass == pytest.approx(e.D_pp, rel=1e-6)


def test_ray_identity(kernel7, params7):
    rng = np.random.default_rng(2)
    u = _positive(kernel7.grid, rng, 100.0)
    prof = ray_profile(kernel7, params7, u)
    for t in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert energy(kernel7, params7, t * u).total == pytest.approx(prof(t), rel=1e-10)
    e2 = energy(kernel7, params7, 2 * u).total
    p, q = params7.p, params7.q
    rebuilt = prof.A * 4 - prof.B * 2 ** (2 * p) - prof.C * 2 ** (2 * q) - prof.D * 2 ** (p + q)
    assert e2 == pytest.approx(rebuilt, rel=1e-10)


def test_ray_profile_matches_breakdown(kernel7, params7):
    rng = np.random.default_rng(3)
    u = _positive(kernel7.grid, rng, 50.0)
    e = energy(kernel7, params7, u)
    prof = ray_profile(kernel7, params7, u)
    p, q = params7.p, params7.q
    assert prof.A == pytest.approx(0.5 * (e.dirichlet + e.mass))
    assert prof.B == pytest.approx(e.D_pp / (2 * p * p))
    assert prof.C == pytest.approx(e.D_qq / (2 * q * q))
    assert prof.D == pytest.approx(e.D_pq / (p * q))


def test_mountain_pass_geometry_along_rays(kernel7, params7):
    rng = np.random.default_rng(4)
    for _ in range(5):
        u = _positive(kernel7.grid, rng, rng.uniform(1, 500))
        prof = ray_profile(kernel7, params7, u)
        assert prof.A > 0 and max(prof.B, prof.C, prof.D) > 0
        t0 = ray_max(prof)
        assert prof(1e-3 * t0) > 0
        assert prof(1e3 * t0) < 0


def test_derivative_action_zero_at_origin(kernel7, params7):
    rng = np.random.default_rng(5)
    z = np.zeros(kernel7.grid.size)
    for _ in range(3):
        phi = rng.standard_normal(kernel7.grid.size)
        assert derivative_action(kernel7, params7, z, phi) == 0.0


def test_derivative_action_linear_in_phi(kernel7, params7):
    rng = np.random.default_rng(6)
    u = _positive(kernel7.grid, rng, 200.0)
    a, b = rng.standard_normal((2, kernel7.grid.size))
    lhs = derivative_action(kernel7, params7, u, 2 * a - b)
    rhs = 2 * derivative_action(kernel7, params7, u, a) - derivative_action(kernel7, params7, u, b)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * abs(rhs))


def test_central_difference_oracle(kernel7, params7):
    rng = np.random.default_rng(7)
    A, _ = normalize_amplitudes(kernel7, params7)
    g = kernel7.grid
    for _ in range(3):
        u = _positive(g, rng, A)
        phi = u * (0.5 * np.cos(rng.uniform(0.2, 1.0) * g.nodes))
        exact = derivative_action(kernel7, params7, u, phi)
        scale = abs(exact) + h1_norm(g, u) * h1_norm(g, phi)
        for h in (1e-3, 1e-4):
            fd = (energy(kernel7, params7, u + h * phi).total - energy(kernel7, params7, u - h * phi).total) / (2 * h)
            assert abs(fd - exact) <= 1e-6 * scale


def test_fd_order_ladder(kernel7, params7):
    rng = np.random.default_rng(8)
    A, _ = normalize_amplitudes(kernel7, params7)
    g = kernel7.grid
    u = _positive(g, rng, A)
    phi = u * (0.3 + 0.5 * np.sin(0.7 * g.nodes))
    exact = derivative_action(kernel7, params7, u, phi)
    errs = []
    for h in (1e-2, 1e-3, 1e-4):
        fd = (energy(kernel7, params7, u + h * phi).total - energy(kernel7, params7, u - h * phi).total) / (2 * h)
        errs.append(abs(fd - exact))
    assert math.log10(errs[0] / errs[1]) > 1.9 and math.log10(errs[1] / errs[2]) > 1.9


def test_derivative_vanishes_at_ray_maximum(kernel7, params7):
    rng = np.random.default_rng(9)
    for _ in range(5):
        u = _positive(kernel7.grid, rng, rng.uniform(1, 1000))
        t0 = ray_max(ray_profile(kernel7, params7, u))
        val = derivative_action(kernel7, params7, t0 * u, u)
        assert abs(val) <= 1e-8 * h1_norm(kernel7.grid, u) * h1_norm(kernel7.grid, t0 * u)


def test_h1_gradient_zero(kernel7, params7):
    g = h1_gradient(kernel7, params7, np.zeros(kernel7.grid.size))
    assert np.all(g.values == 0)


def test_h1_gradient_represents_derivative(kernel7, params7):
    rng = np.random.default_rng(10)
    grid = kernel7.grid
    A, _ = normalize_amplitudes(kernel7, params7)
    for _ in range(20):
        u = _positive(grid, rng, rng.uniform(0.1, 2) * A)
        phi = rng.standard_normal(grid.size) * np.exp(-grid.nodes / 10)
        phi[-1] = 0.0
        g = h1_gradient(kernel7, params7, u)
        err = abs(h1_inner(grid, g, phi) - derivative_action(kernel7, params7, u, phi))
        assert err <= 1e-8 * h1_norm(grid, g) * h1_norm(grid, phi)


def test_gradient_descent_lowers_energy(kernel7, params7):
    rng = np.random.default_rng(11)
    A, _ = normalize_amplitudes(kernel7, params7)
    for _ in range(20):
        u = _positive(kernel7.grid, rng, rng.uniform(0.1, 2) * A)
        e, g = energy_and_gradient(kernel7, params7, u)
        assert h1_norm(kernel7.grid, g) > 0
        sigma = 1e-3
        assert energy(kernel7, params7, u - sigma * g.values).total < e.total


def test_energy_and_gradient_agree_with_separate_calls(kernel7, params7):
    rng = np.random.default_rng(12)
    u = _positive(kernel7.grid, rng, 300.0)
    e, g = energy_and_gradient(kernel7, params7, u)
    assert e == energy(kernel7, params7, u)
    assert np.array_equal(g.values, h1_gradient(kernel7, params7, u).values)


def test_ray_max_one_term_closed_forms():
    p, q = 9 / 7, 9 / 5
    t0 = ray_max(RayProfile(1.0, 1.0, 0.0, 0.0, p, q))
    assert t0 == pytest.approx((7 / 9) ** 1.75, rel=1e-13)
    assert t0 == pytest.approx(0.6442, abs=1e-4)
    A, C = 3.0, 0.7
    assert ray_max(RayProfile(A, 0.0, C, 0.0, p, q)) == pytest.approx((A / (q * C)) ** (1 / (2 * q - 2)), rel=1e-13)


def test_ray_max_random_profiles():
    rng = np.random.default_rng(13)
    p, q = 9 / 7, 9 / 5
    for _ in range(100):
        A, B, C, D = 10 ** rng.uniform(-3, 3, 4)
        prof = RayProfile(A, B, C, D, p, q)
        t0 = ray_max(prof)
        assert prof.g(t0) == pytest.approx(2 * A, rel=1e-10)
        assert prof.dg(t0) > 0
        # increasing before, decreasing after
        ts_lo = np.linspace(0.05, 0.95, 10) * t0
        ts_hi = np.linspace(1.05, 5.0, 10) * t0
        assert np.all(prof.derivative(ts_lo) > 0) and np.all(prof.derivative(ts_hi) < 0)


def test_ray_max_requires_nonlinearity():
    with pytest.raises(ValueError, match="B = C = D = 0"):
        ray_max(RayProfile(1.0, 0.0, 0.0, 0.0, 9 / 7, 9 / 5))
    with pytest.raises(ValueError):
        ray_max(RayProfile(0.0, 1.0, 0.0, 0.0, 9 / 7, 9 / 5))


def test_pow_abs_has_hard_zero(kernel7, params7):
    u = np.zeros(kernel7.grid.size)
    u[:10] = 1.0
    e = energy(kernel7, params7, u)
    assert np.isfinite(e.total)
    assert integrate(kernel7.grid, np.abs(u) ** params7.p) > 0
