"""
The Choquard energy

    J(u) = 1/2 int |grad u|^2 + u^2 - 1/2 int (I_alpha * F(u)) F(u),
    F(s) = a |s|^p + b |s|^q,

expanded into the five scalars dirichlet, mass, D_pp, D_qq, D_pq so that

    J(t u) = A t^2 - B t^{2p} - C t^{2q} - D t^{p+q}.

The doubly critical problem has p = (N+alpha)/N, q = (N+alpha)/(N-2) and
coefficients a = 1/p, b = 1/q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RadialFunction, _values, dirichlet_form, h1_inner, solve_helmholtz
from .riesz import RieszKernel


@dataclass(frozen=True)
class NonlinearityParams:
    N: int
    alpha: float
    p: float
    q: float
    coef_p: float
    coef_q: float

    def __post_init__(self):
        N, alpha = self.N, self.alpha
        if int(N) != N or N < 3:
            raise ValueError(f"N must be an integer >= 3, got {N}")
        if not (0 < alpha < N):
            raise ValueError(f"alpha must lie in (0, N); got alpha={alpha}, N={N}")
        lo, hi = (N + alpha) / N, (N + alpha) / (N - 2)
        tol = 1e-12
        if not (lo - tol <= self.p <= self.q <= hi + tol):
            raise ValueError(
                f"exponents must satisfy (N+alpha)/N <= p <= q <= (N+alpha)/(N-2); got p={self.p}, q={self.q}"
            )
        if self.coef_p < 0 or self.coef_q < 0 or self.coef_p + self.coef_q == 0:
            raise ValueError("coefficients must be nonnegative and not both zero")

    @classmethod
    def doubly_critical(cls, N: int, alpha: float) -> "NonlinearityParams":
        if int(N) != N or N < 3:
            raise ValueError(f"N must be an integer >= 3, got {N}")
        p = (N + alpha) / N
        q = (N + alpha) / (N - 2)
        return cls(N, float(alpha), p, q, 1.0 / p, 1.0 / q)

    @classmethod
    def single_power(cls, N: int, alpha: float, p: float) -> "NonlinearityParams":
        """F(s) = |s|^p / p."""
        return cls(N, float(alpha), p, p, 1.0 / p, 0.0)

    @property
    def is_doubly_critical(self) -> bool:
        N, a = self.N, self.alpha
        return (
            math.isclose(self.p, (N + a) / N, rel_tol=1e-15)
            and math.isclose(self.q, (N + a) / (N - 2), rel_tol=1e-15)
            and math.isclose(self.coef_p, 1 / self.p, rel_tol=1e-15)
            and math.isclose(self.coef_q, 1 / self.q, rel_tol=1e-15)
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    mass: float
    D_pp: float
    D_qq: float
    D_pq: float
    total: float


@dataclass(frozen=True)
class RayProfile:
    A: float
    B: float
    C: float
    D: float
    p: float
    q: float

    def __call__(self, t):
        p, q = self.p, self.q
        return self.A * t**2 - self.B * t ** (2 * p) - self.C * t ** (2 * q) - self.D * t ** (p + q)

    def g(self, t):
        """f'(t) = t (2A - g(t)); g is strictly increasing on (0, inf)."""
        p, q = self.p, self.q
        return (
            2 * p * self.B * t ** (2 * p - 2)
            + 2 * q * self.C * t ** (2 * q - 2)
            + (p + q) * self.D * t ** (p + q - 2)
        )

    def dg(self, t):
        p, q = self.p, self.q
        return (
            2 * p * (2 * p - 2) * self.B * t ** (2 * p - 3)
            + 2 * q * (2 * q - 2) * self.C * t ** (2 * q - 3)
            + (p + q) * (p + q - 2) * self.D * t ** (p + q - 3)
        )

    def derivative(self, t):
        return t * (2 * self.A - self.g(t))


def _pow_abs(v: np.ndarray, e: float) -> np.ndarray:
    a = np.abs(v)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = np.exp(e * np.log(a[nz]))
    return out


def F_eval(params: NonlinearityParams, s):
    """F(s) and F'(s); accepts scalars or arrays."""
    s_arr = np.asarray(s, dtype=float)
    a, b, p, q = params.coef_p, params.coef_q, params.p, params.q
    F = a * _pow_abs(np.atleast_1d(s_arr), p) + b * _pow_abs(np.atleast_1d(s_arr), q)
    sign = np.sign(np.atleast_1d(s_arr))
    dF = sign * (
        a * p * _pow_abs(np.atleast_1d(s_arr), p - 1) + b * q * _pow_abs(np.atleast_1d(s_arr), q - 1)
    )
    if s_arr.ndim == 0:
        return float(F[0]), float(dF[0])
    return F, dF


class _Terms:
    """Convolutions of |u|^p and |u|^q, shared by the energy and gradient paths."""

    def __init__(self, kernel: RieszKernel, params: NonlinearityParams, u):
        self.grid = kernel.grid
        self.u = _values(kernel.grid, u)
        self.up = _pow_abs(self.u, params.p)
        K = kernel.matrix
        self.Kp = K @ self.up
        if params.q == params.p:
            self.uq, self.Kq = self.up, self.Kp
        else:
            self.uq = _pow_abs(self.u, params.q)
            self.Kq = K @ self.uq
        w = self.grid.weights
        self.D_pp = float(np.dot(w * self.up, self.Kp))
        self.D_qq = float(np.dot(w * self.uq, self.Kq))
        self.D_pq = float(np.dot(w * self.uq, self.Kp))

    def potential(self, params):
        """(I_alpha * F(u)) F'(u) at the nodes."""
        a, b = params.coef_p, params.coef_q
        KF = a * self.Kp + b * self.Kq
        _, dF = F_eval(params, self.u)
        return KF * dF


def energy(kernel: RieszKernel, params: NonlinearityParams, u) -> EnergyBreakdown:
    t = _Terms(kernel, params, u)
    grid = kernel.grid
    dirichlet = dirichlet_form(grid, t.u, t.u)
    mass = float(np.dot(grid.weights, t.u * t.u))
    return _assemble(params, dirichlet, mass, t.D_pp, t.D_qq, t.D_pq)


def _assemble(params, dirichlet, mass, D_pp, D_qq, D_pq) -> EnergyBreakdown:
    a, b = params.coef_p, params.coef_q
    total = 0.5 * (dirichlet + mass) - 0.5 * a * a * D_pp - 0.5 * b * b * D_qq - a * b * D_pq
    return EnergyBreakdown(dirichlet, mass, D_pp, D_qq, D_pq, total)


def derivative_action(kernel: RieszKernel, params: NonlinearityParams, u, phi) -> float:
    """J'(u) phi = <u, phi>_{H^1} - int (I_alpha * F(u)) F'(u) phi."""
    grid = kernel.grid
    ph = _values(grid, phi)
    t = _Terms(kernel, params, u)
    return h1_inner(grid, t.u, ph) - float(np.dot(grid.weights * t.potential(params), ph))


def h1_gradient(kernel: RieszKernel, params: NonlinearityParams, u) -> RadialFunction:
    """
    H^1 representative of J'(u): g = u - (-Delta + 1)^{-1} (I_alpha * F(u)) F'(u).
    Represents J'(u) on test functions vanishing at r = R.
    """
    t = _Terms(kernel, params, u)
    v = solve_helmholtz(kernel.grid, t.potential(params))
    return RadialFunction(kernel.grid, t.u - v.values)


def energy_and_gradient(kernel, params, u) -> tuple[EnergyBreakdown, RadialFunction]:
    """Both at the cost of one pair of convolutions."""
    grid = kernel.grid
    t = _Terms(kernel, params, u)
    e = _assemble(
        params,
        dirichlet_form(grid, t.u, t.u),
        float(np.dot(grid.weights, t.u * t.u)),
        t.D_pp,
        t.D_qq,
        t.D_pq,
    )
    v = solve_helmholtz(grid, t.potential(params))
    return e, RadialFunction(grid, t.u - v.values)


def profile_from_energy(params: NonlinearityParams, e: EnergyBreakdown) -> RayProfile:
    a, b = params.coef_p, params.coef_q
    return RayProfile(
        A=0.5 * (e.dirichlet + e.mass),
        B=0.5 * a * a * e.D_pp,
        C=0.5 * b * b * e.D_qq,
        D=a * b * e.D_pq,
        p=params.p,
        q=params.q,
    )


def ray_profile(kernel: RieszKernel, params: NonlinearityParams, u) -> RayProfile:
    return profile_from_energy(params, energy(kernel, params, u))


def ray_max(profile: RayProfile) -> float:
    """Unique positive root of g(t) = 2A: the maximizer of t -> J(t u)."""
    A = profile.A
    if not A > 0:
        raise ValueError("ray profile needs A > 0 (nonzero u)")
    if not (profile.B > 0 or profile.C > 0 or profile.D > 0):
        raise ValueError("no nonlinear term along this ray (B = C = D = 0): J(tu) has no maximizer")
    target = 2 * A
    lo = hi = 1.0
    while profile.g(hi) < target:
        lo, hi = hi, 2 * hi
    while profile.g(lo) >= target:
        lo, hi = 0.5 * lo, lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if profile.g(mid) < target:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(5):
        d = profile.dg(t)
        if not d > 0:
            break
        step = (profile.g(t) - target) / d
        t_new = t - step
        if not (lo <= t_new <= hi):
            break
        t = t_new
    return t
