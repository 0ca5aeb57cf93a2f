"""
Mountain-pass solver.

The path from 0 to the endpoint T w is the segment through a direction w,
discretized by K + 1 equally spaced nodes.  Along a ray J(t w) has a single
interior maximum at t0(w) (see `functional.ray_max`), so the path maximum is
located on the nodes and then pinned to t0(w) w exactly.  Each outer iteration
descends that node along the H^1 gradient,

    v = u - sigma g,    g = u - (-Delta + 1)^{-1} (I_alpha * F(u)) F'(u),

accepting sigma by Armijo backtracking on the new path maximum
Phi(v) = max_t J(t v), and then rebuilds the path through v.  Because u sits
at a ray maximum, g is orthogonal to u in H^1 at convergence and Phi decreases
monotonically, so the reported level never increases between iterations.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .extremals import ExtremalFamily, Kind, sample_extremal, sharp_constant_S1, sharp_constant_S2
from .functional import (
    NonlinearityParams,
    derivative_action,
    energy,
    energy_and_gradient,
    profile_from_energy,
    ray_max,
    ray_profile,
)
from .grid import RadialFunction, _values, h1_norm
from .riesz import RieszKernel
from .threshold import compute_threshold

logger = logging.getLogger(__name__)


class SeedKind(enum.Enum):
    MU = "MU"
    NU = "NU"
    GAUSSIAN = "GAUSSIAN"


@dataclass(frozen=True)
class SeedProfile:
    kind: SeedKind = SeedKind.MU
    scale: float = 1.0  # lambda for MU/NU, width for GAUSSIAN

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"seed scale must be positive, got {self.scale}")

    def sample(self, grid) -> RadialFunction:
        if self.kind is SeedKind.GAUSSIAN:
            v = np.exp(-((grid.nodes / self.scale) ** 2))
        else:
            kind = Kind.MU if self.kind is SeedKind.MU else Kind.NU
            v = sample_extremal(grid, ExtremalFamily(kind, self.scale)).values.copy()
        v = np.array(v)
        v[-1] = 0.0  # Dirichlet node
        return RadialFunction(grid, v)


@dataclass(frozen=True)
class SolverConfig:
    path_nodes: int = 16
    max_outer_iters: int = 2000
    gradient_tol: float = 1e-6
    backtrack: float = 0.5
    max_trials: int = 50
    armijo: float = 1e-4
    seed: SeedProfile = field(default_factory=SeedProfile)
    endpoint_scale_cap: float = 64.0
    stagnation_window: int = 50
    stagnation_tol: float = 1e-12

    def __post_init__(self):
        if int(self.path_nodes) != self.path_nodes or self.path_nodes < 8:
            raise ValueError(f"path_nodes must be an integer >= 8, got {self.path_nodes}")
        if int(self.max_outer_iters) != self.max_outer_iters or self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be a positive integer")
        if not self.gradient_tol > 0:
            raise ValueError("gradient_tol must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if int(self.max_trials) != self.max_trials or self.max_trials < 1:
            raise ValueError("max_trials must be a positive integer")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo constant must lie in (0, 1)")
        if not self.endpoint_scale_cap > 1:
            raise ValueError("endpoint_scale_cap must exceed 1")
        if self.stagnation_window < 1 or not self.stagnation_tol >= 0:
            raise ValueError("stagnation window/tolerance invalid")


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STAGNATED = "stagnated"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass
class SolveResult:
    u_star: RadialFunction
    energy_level: float
    gradient_norm: float
    nehari_residual: float
    pohozaev_residual: float
    iterations: int
    converged: bool
    below_threshold: bool | None
    status: SolveStatus
    threshold: float | None = None
    history: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "energy_level": self.energy_level,
            "gradient_norm": self.gradient_norm,
            "nehari_residual": self.nehari_residual,
            "pohozaev_residual": self.pohozaev_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "below_threshold": self.below_threshold,
            "threshold": self.threshold,
            "status": self.status.value,
        }


def make_endpoint(
    kernel: RieszKernel, params: NonlinearityParams, seed, scale_cap: float = 64.0
) -> tuple[RadialFunction, float]:
    """
    (T seed, T) with T the first doubling of t0(seed) at which J(T seed) < 0.
    Raises if T / t0 would exceed `scale_cap`.
    """
    prof = ray_profile(kernel, params, seed)
    t0 = ray_max(prof)
    T = 2.0 * t0
    while True:
        if T > scale_cap * t0:
            raise RuntimeError(
                f"no negative-energy endpoint within {scale_cap} x t0 along this seed"
            )
        if prof(T) < 0:
            break
        T *= 2.0
    return RadialFunction(kernel.grid, T * _values(kernel.grid, seed)), T


def nehari_residual(kernel: RieszKernel, params: NonlinearityParams, u) -> float:
    """J'(u) u / ||u||^2_{H^1}."""
    n2 = h1_norm(kernel.grid, u) ** 2
    if n2 == 0:
        raise ValueError("Nehari residual needs a nonzero function")
    return derivative_action(kernel, params, u, u) / n2


def pohozaev_from_energy(params: NonlinearityParams, e) -> float:
    N, al = params.N, params.alpha
    a, b = params.coef_p, params.coef_q
    nonlinear = 0.5 * a * a * e.D_pp + 0.5 * b * b * e.D_qq + a * b * e.D_pq
    norm2 = e.dirichlet + e.mass
    if norm2 == 0:
        return 0.0
    return ((N - 2) / 2 * e.dirichlet + N / 2 * e.mass - (N + al) * nonlinear) / norm2


def pohozaev_residual(kernel: RieszKernel, params: NonlinearityParams, u) -> float:
    """d/dsigma J(u(./sigma)) at sigma = 1, over ||u||^2_{H^1}."""
    return pohozaev_from_energy(params, energy(kernel, params, u))


def _path_maximum(kernel, params, w, T_over_t0, K):
    """Largest J over the K + 1 path nodes, then pinned to the exact ray maximum."""
    e = energy(kernel, params, w)
    prof = profile_from_energy(params, e)
    t0 = ray_max(prof)
    ts = np.linspace(0.0, T_over_t0 * t0, K + 1)
    k = int(np.argmax(prof(ts)))
    # the pinned node sits between the neighbours of the best sampled node
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, K)]
    if not lo <= t0 <= hi:
        raise ArithmeticError("ray maximum lies outside the bracketing path nodes")
    return t0, float(prof(t0))


def _phi(kernel, params, v):
    prof = ray_profile(kernel, params, v)
    t = ray_max(prof)
    return t, float(prof(t))


def _threshold_for(kernel, params):
    if not params.is_doubly_critical:
        return None
    return compute_threshold(params, sharp_constant_S1(kernel, params), sharp_constant_S2(kernel, params))[2]


def mpa_solve(
    kernel: RieszKernel,
    params: NonlinearityParams,
    config: SolverConfig | None = None,
    seed=None,
) -> SolveResult:
    """
    Run the mountain-pass iteration.  Convergence means
    ||J'(u)||_{H^1} <= gradient_tol * max(1, ||u||_{H^1}).
    """
    cfg = config or SolverConfig()
    grid = kernel.grid
    start = seed if seed is not None else cfg.seed.sample(grid)
    w = np.array(_values(grid, start), dtype=float)
    w[-1] = 0.0
    w /= h1_norm(grid, w)
    _, T = make_endpoint(kernel, params, w, cfg.endpoint_scale_cap)
    t0 = ray_max(ray_profile(kernel, params, w))
    T_over_t0 = T / t0

    history: list[float] = []
    status = SolveStatus.MAX_ITERS
    sigma = 1.0
    u = t0 * w
    gn = math.inf
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        t0, level = _path_maximum(kernel, params, w, T_over_t0, cfg.path_nodes)
        u = t0 * w
        e, g = energy_and_gradient(kernel, params, u)
        history.append(e.total)
        gv = g.values
        gn = h1_norm(grid, gv)
        scale = max(1.0, math.sqrt(e.dirichlet + e.mass))
        if gn <= cfg.gradient_tol * scale:
            status = SolveStatus.CONVERGED
            break
        if len(history) > cfg.stagnation_window:
            old = history[-cfg.stagnation_window - 1]
            if abs(old - e.total) <= cfg.stagnation_tol * abs(e.total):
                status = SolveStatus.STAGNATED
                break
        sigma = min(1.0, sigma / cfg.backtrack)
        accepted = False
        for _ in range(cfg.max_trials):
            v = u - sigma * gv
            if h1_norm(grid, v) > 0:
                try:
                    _, phi = _phi(kernel, params, v)
                except ValueError:
                    phi = math.inf
                if phi <= e.total - cfg.armijo * sigma * gn * gn:
                    accepted = True
                    break
            sigma *= cfg.backtrack
        if not accepted:
            status = SolveStatus.LINE_SEARCH_FAILED
            break
        w = v / h1_norm(grid, v)
    else:
        it = cfg.max_outer_iters

    # final diagnostics at the reported node
    e, g = energy_and_gradient(kernel, params, u)
    gn = h1_norm(grid, g)
    thr = _threshold_for(kernel, params)
    converged = status is SolveStatus.CONVERGED
    logger.info("mpa_solve: %s after %d iterations, J=%.12g, |g|=%.3e", status.value, it, e.total, gn)
    return SolveResult(
        u_star=RadialFunction(grid, u),
        energy_level=e.total,
        gradient_norm=gn,
        nehari_residual=nehari_residual(kernel, params, u),
        pohozaev_residual=pohozaev_from_energy(params, e),
        iterations=it,
        converged=converged,
        below_threshold=None if thr is None else bool(e.total < thr),
        status=status,
        threshold=thr,
        history=history,
    )


def equation_residual(kernel: RieszKernel, params: NonlinearityParams, u) -> float:
    """H^{-1} norm of -Delta u + u - (I_alpha * F(u)) F'(u): the H^1 norm of its Riesz representative."""
    _, g = energy_and_gradient(kernel, params, u)
    return h1_norm(kernel.grid, g)


def is_positive_decreasing(u, tol: float = 0.0) -> bool:
    """Strictly positive away from r = R and nonincreasing in r."""
    v = np.asarray(u.values if isinstance(u, RadialFunction) else u)
    return bool(np.all(v[:-1] > 0) and np.all(np.diff(v) <= tol * np.max(np.abs(v))))


__all__ = [
    "SeedKind",
    "SeedProfile",
    "SolverConfig",
    "SolveStatus",
    "SolveResult",
    "make_endpoint",
    "mpa_solve",
    "nehari_residual",
    "pohozaev_residual",
    "equation_residual",
    "is_positive_decreasing",
]
