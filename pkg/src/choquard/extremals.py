"""
Extremal families and the sharp constants S1, S2.

    mu_lambda(r) = A lambda^{N/2}     / (lambda^2 + r^2)^{N/2}
    nu_lambda(r) = B lambda^{(N-2)/2} / (lambda^2 + r^2)^{(N-2)/2}

S1 is the infimum of  mass(u) / D_pp(u)^{N/(N+alpha)}  and S2 the infimum of
dirichlet(u) / D_qq(u)^{(N-2)/(N+alpha)}; both are attained on the families
above, so the constants are read off the extremal quotients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .functional import NonlinearityParams, _pow_abs
from .grid import GridSpec, RadialFunction, RadialGrid, _values, dirichlet_form, solve_laplace
from .riesz import RieszKernel


class Kind(enum.Enum):
    MU = "MU"
    NU = "NU"


@dataclass(frozen=True)
class ExtremalFamily:
    kind: Kind
    lam: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"dilation parameter must be positive, got {self.lam}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")

    def at(self, lam: float) -> "ExtremalFamily":
        return ExtremalFamily(self.kind, lam, self.amplitude)

    def __call__(self, r, N: int):
        lam = self.lam
        e = N / 2 if self.kind is Kind.MU else (N - 2) / 2
        r = np.asarray(r, dtype=float)
        return self.amplitude * lam**e / (lam * lam + r * r) ** e


def sample_extremal(grid: RadialGrid, family: ExtremalFamily) -> RadialFunction:
    return RadialFunction(grid, family(grid.nodes, grid.N))


def _pairing(kernel: RieszKernel, u: np.ndarray, e: float) -> float:
    up = _pow_abs(u, e)
    return float(np.dot(kernel.grid.weights * up, kernel.matrix @ up))


def mass_of(grid, u) -> float:
    v = _values(grid, u)
    return float(np.dot(grid.weights, v * v))


def s1_quotient(kernel: RieszKernel, params: NonlinearityParams, u) -> float:
    """mass(u) / D_pp(u)^{N/(N+alpha)}."""
    v = _values(kernel.grid, u)
    N, a = params.N, params.alpha
    return mass_of(kernel.grid, v) / _pairing(kernel, v, (N + a) / N) ** (N / (N + a))


def s2_quotient(kernel: RieszKernel, params: NonlinearityParams, u) -> float:
    """dirichlet(u) / D_qq(u)^{(N-2)/(N+alpha)}."""
    v = _values(kernel.grid, u)
    N, a = params.N, params.alpha
    return dirichlet_form(kernel.grid, v, v) / _pairing(kernel, v, (N + a) / (N - 2)) ** (
        (N - 2) / (N + a)
    )


def normalize_amplitudes(kernel: RieszKernel, params: NonlinearityParams) -> tuple[float, float]:
    """
    Amplitudes A, B with  mass(mu_1) = D_pp(mu_1)  and  dirichlet(nu_1) = D_qq(nu_1).
    mass scales like A^2 and D_pp like A^{2p}, hence A = (mass/D_pp)^{1/(2p-2)}.
    """
    grid = kernel.grid
    p, q = params.p, params.q
    mu = sample_extremal(grid, ExtremalFamily(Kind.MU)).values
    nu = sample_extremal(grid, ExtremalFamily(Kind.NU)).values
    m, dpp = mass_of(grid, mu), _pairing(kernel, mu, p)
    d, dqq = dirichlet_form(grid, nu, nu), _pairing(kernel, nu, q)
    if not (dpp > 0 and dqq > 0):
        raise ArithmeticError(f"degenerate quadrature on {grid.spec}: D_pp={dpp}, D_qq={dqq}")
    A = (m / dpp) ** (1.0 / (2 * p - 2))
    B = (d / dqq) ** (1.0 / (2 * q - 2))
    if not (math.isfinite(A) and math.isfinite(B) and A > 0 and B > 0):
        raise ArithmeticError(f"amplitude normalization failed: A={A}, B={B}")
    return A, B


def refit_spec(base: GridSpec, lam: float, covariant: bool = False) -> GridSpec:
    """
    Grid for the dilation parameter lam.  The default keeps R proportional to
    max(1, lam) R_0; covariant=True dilates the grid with lam (R = lam R_0),
    which resolves concentrating profiles as lam -> 0.
    """
    factor = lam if covariant else max(1.0, lam)
    return base.scaled(factor)


def kernel_for(kernel: RieszKernel, lam: float, covariant: bool = False) -> RieszKernel:
    """Kernel on the refit grid; the dilation is exact, so no rebuild is needed."""
    factor = lam if covariant else max(1.0, lam)
    return kernel if factor == 1.0 else kernel.scaled(factor)


@dataclass(frozen=True)
class SharpConstants:
    S1: float
    S2: float
    R: float
    M: int
    gamma: float
    lambdas: tuple[float, ...]
    S1_spread: float
    S2_spread: float
    rel_accuracy: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rel_accuracy", max(self.S1_spread, self.S2_spread))


def sharp_constant_S1(kernel: RieszKernel, params: NonlinearityParams, lam: float = 1.0) -> float:
    k = kernel_for(kernel, lam)
    return s1_quotient(k, params, sample_extremal(k.grid, ExtremalFamily(Kind.MU, lam)))


def sharp_constant_S2(kernel: RieszKernel, params: NonlinearityParams, lam: float = 1.0) -> float:
    k = kernel_for(kernel, lam)
    return s2_quotient(k, params, sample_extremal(k.grid, ExtremalFamily(Kind.NU, lam)))


def sharp_constants(
    kernel: RieszKernel, params: NonlinearityParams, lambdas=(0.5, 1.0, 2.0)
) -> SharpConstants:
    """S1, S2 at lambda = 1 with the relative spread over `lambdas` as certificate."""
    s1 = [sharp_constant_S1(kernel, params, lam) for lam in lambdas]
    s2 = [sharp_constant_S2(kernel, params, lam) for lam in lambdas]
    S1 = sharp_constant_S1(kernel, params)
    S2 = sharp_constant_S2(kernel, params)
    spec = kernel.grid.spec
    return SharpConstants(
        S1=S1,
        S2=S2,
        R=spec.R,
        M=spec.M,
        gamma=spec.gamma,
        lambdas=tuple(float(x) for x in lambdas),
        S1_spread=(max(s1) - min(s1)) / S1,
        S2_spread=(max(s2) - min(s2)) / S2,
    )


def dilation_exponents(params: NonlinearityParams) -> dict[str, dict[str, float]]:
    """Powers of lambda by which each energy term of mu_lambda / nu_lambda scales."""
    N, a, p, q = params.N, params.alpha, params.p, params.q
    return {
        "MU": {
            "dirichlet": -2.0,
            "mass": 0.0,
            "D_pp": -N * p + N + a,
            "D_qq": -N * q + N + a,
            "D_pq": -N * (p + q) / 2 + N + a,
        },
        "NU": {
            "dirichlet": 0.0,
            "mass": 2.0,
            "D_pp": -(N - 2) * p + N + a,
            "D_qq": -(N - 2) * q + N + a,
            "D_pq": -(N - 2) * (p + q) / 2 + N + a,
        },
    }


def optimize_quotient(
    kernel: RieszKernel,
    params: NonlinearityParams,
    which: str = "S1",
    u0=None,
    iters: int = 400,
    tol: float = 1e-12,
):
    """
    Minimize the S1 or S2 quotient by projected gradient descent.

    The gradient of log Q is taken in the L^2 metric for S1 and in the
    Dirichlet metric for S2 (preconditioned by the discrete Laplacian);
    iterates are projected onto the unit sphere of that metric and kept
    nonnegative.  Returns (quotient, minimizer values).
    """
    grid = kernel.grid
    N, a = params.N, params.alpha
    K, w = kernel.matrix, grid.weights
    if which == "S1":
        e = (N + a) / N
        expo = N / (N + a)
    elif which == "S2":
        e = (N + a) / (N - 2)
        expo = (N - 2) / (N + a)
    else:
        raise ValueError("which must be 'S1' or 'S2'")

    if which == "S2":

        def norm2(v):
            return dirichlet_form(grid, v, v)

        def riesz(v):  # metric representative of the weighted vector v
            return solve_laplace(grid, v)

    else:

        def norm2(v):
            return float(np.dot(w, v * v))

        def riesz(v):
            return v / w

    def logq(v):
        D = _pairing(kernel, v, e)
        return math.log(norm2(v)) - expo * math.log(D), D

    u = np.abs(_values(grid, u0)).astype(float) if u0 is not None else sample_extremal(
        grid, ExtremalFamily(Kind.MU if which == "S1" else Kind.NU)
    ).values.copy()
    u[-1] = 0.0
    u /= math.sqrt(norm2(u))
    f, D = logq(u)
    step = 1.0
    for _ in range(iters):
        up = _pow_abs(u, e)
        # d/du of log D, as a weighted (dual) vector
        dD = 2 * e * w * (K @ up) * _pow_abs(u, e - 1) / D
        # d/du of log norm2 at norm2 = 1 is 2 * (metric) u; in the metric the gradient is
        grad = 2 * u - expo * riesz(dD)
        grad[-1] = 0.0
        gn = math.sqrt(max(norm2(grad), 0.0))
        if gn < tol:
            break
        while True:
            v = np.maximum(u - step * grad, 0.0)
            v[-1] = 0.0
            nv = norm2(v)
            if nv > 0:
                v /= math.sqrt(nv)
                fv, Dv = logq(v)
                if fv <= f - 1e-4 * step * gn * gn:
                    break
            step *= 0.5
            if step < 1e-14:
                return math.exp(f), u
        if abs(f - fv) < tol:
            u, f, D = v, fv, Dv
            break
        u, f, D = v, fv, Dv
        step = min(step * 2.0, 4.0)
    return math.exp(f), u
