"""
Compactness threshold, test-path energies and the Brezis-Lieb splitting.

Palais-Smale sequences of J are relatively compact below

    c* = min( 1/2 (1 - 1/p) p^{1/(p-1)} S1^{p/(p-1)},
              1/2 (1 - 1/q) q^{1/(q-1)} S2^{q/(q-1)} ).

Since p - 1 = alpha/N and q - 1 = (alpha+2)/(N-2), the exponents are
p/(p-1) = (N+alpha)/alpha and q/(q-1) = (N+alpha)/(alpha+2), and each term can
also be written (1/(2k) - 1/(2k^2)) (k S)^{k/(k-1)}.  Both forms are computed
and must agree.

The mountain-pass level is bounded above by the maximum of J along the rays
through mu_lambda and nu_lambda; sweeping lambda and taking the smallest ray
maximum gives c0_upper.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .extremals import (
    ExtremalFamily,
    Kind,
    _pairing,
    kernel_for,
    normalize_amplitudes,
    sample_extremal,
    sharp_constant_S1,
    sharp_constant_S2,
)
from .functional import NonlinearityParams, ray_max, ray_profile
from .grid import GridSpec, _values, build_grid
from .riesz import RieszKernel, build_kernel

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("lambda", "t_lambda", "J_mu", "s_lambda", "J_nu")


def default_lambdas(count: int = 25, lo: float = 1e-3, hi: float = 1e3) -> list[float]:
    return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), count)]


class Verdict(enum.Enum):
    BELOW_THRESHOLD = "BELOW_THRESHOLD"
    NOT_ESTABLISHED = "NOT_ESTABLISHED"


def _threshold_term(k: float, S: float, expo: float) -> tuple[float, float]:
    """(1/2 (1-1/k) k^{1/(k-1)} S^{k/(k-1)},  (1/(2k) - 1/(2k^2)) (k S)^expo)."""
    first = 0.5 * (1.0 - 1.0 / k) * k ** (1.0 / (k - 1.0)) * S ** (k / (k - 1.0))
    second = (1.0 / (2 * k) - 1.0 / (2 * k * k)) * (k * S) ** expo
    return first, second


def compute_threshold(params: NonlinearityParams, S1: float, S2: float) -> tuple[float, float, float]:
    if not (S1 > 0 and S2 > 0):
        raise ValueError(f"sharp constants must be positive, got S1={S1}, S2={S2}")
    N, a = params.N, params.alpha
    tp, tp_alt = _threshold_term(params.p, S1, (N + a) / a)
    tq, tq_alt = _threshold_term(params.q, S2, (N + a) / (a + 2))
    if params.is_doubly_critical:
        for x, y in ((tp, tp_alt), (tq, tq_alt)):
            if not math.isclose(x, y, rel_tol=1e-12):
                raise ArithmeticError(f"threshold forms disagree: {x!r} vs {y!r}")
    return tp, tq, min(tp, tq)


def threshold_alternate_forms(params: NonlinearityParams, S1: float, S2: float) -> tuple[float, float]:
    """The (1/(2k) - 1/(2k^2)) (k S)^{...} forms, with explicit exponents."""
    N, a = params.N, params.alpha
    return (
        _threshold_term(params.p, S1, (N + a) / a)[1],
        _threshold_term(params.q, S2, (N + a) / (a + 2))[1],
    )


@dataclass(frozen=True)
class DimensionGate:
    gate: bool
    cross_exponent: float  # N(p+q)/2 - (N+alpha)
    cross_ok: bool
    nu_exponent: float  # (N+alpha)/N
    nu_ok: bool

    def __bool__(self):
        return self.gate


def dimension_gate(N: int, alpha: float) -> DimensionGate:
    p = (N + alpha) / N
    q = (N + alpha) / (N - 2)
    cross = N * (p + q) / 2 - (N + alpha)
    nu = (N + alpha) / N
    return DimensionGate(N > 4 + alpha, cross, cross < 2, nu, nu < 2)


@dataclass(frozen=True)
class SweepRow:
    lam: float
    t_lambda: float
    J_mu: float
    s_lambda: float
    J_nu: float

    def as_tuple(self):
        return (self.lam, self.t_lambda, self.J_mu, self.s_lambda, self.J_nu)


def _ray_maximum(kernel, params, family):
    u = sample_extremal(kernel.grid, family)
    prof = ray_profile(kernel, params, u)
    t = ray_max(prof)
    return t, float(prof(t))


def path_energy_sweep(
    kernel: RieszKernel,
    params: NonlinearityParams,
    lambdas,
    amplitudes: tuple[float, float] | None = None,
) -> list[SweepRow]:
    """
    Ray maxima of J through mu_lambda and nu_lambda.  The grid is dilated with
    lambda for every row, which keeps both profiles equally resolved from
    lambda = 1e-3 to 1e3.
    """
    lams = sorted(float(x) for x in lambdas)
    if not lams or lams[0] <= 0:
        raise ValueError("lambda values must be positive")
    A, B = amplitudes if amplitudes is not None else normalize_amplitudes(kernel, params)
    rows = []
    for lam in lams:
        k = kernel_for(kernel, lam, covariant=True)
        t, jm = _ray_maximum(k, params, ExtremalFamily(Kind.MU, lam, A))
        s, jn = _ray_maximum(k, params, ExtremalFamily(Kind.NU, lam, B))
        rows.append(SweepRow(lam, t, jm, s, jn))
    return rows


def c0_upper_bound(rows: list[SweepRow]) -> tuple[float, float, str]:
    """(min ray maximum, lambda where attained, branch 'MU' or 'NU')."""
    best = min(
        [(r.J_mu, r.lam, "MU") for r in rows] + [(r.J_nu, r.lam, "NU") for r in rows]
    )
    return best


@dataclass(frozen=True)
class ThresholdReport:
    params: NonlinearityParams
    S1: float
    S2: float
    threshold_p: float
    threshold_q: float
    threshold: float
    sweep: list[SweepRow]
    c0_upper: float
    c0_lambda: float
    c0_branch: str
    margin: float
    richardson_error: float | None
    verdict: Verdict
    dimension_gate: bool
    cross_exponent: float
    grid: GridSpec
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "params": asdict(self.params),
            "grid": asdict(self.grid),
            "S1": self.S1,
            "S2": self.S2,
            "threshold_p": self.threshold_p,
            "threshold_q": self.threshold_q,
            "threshold": self.threshold,
            "c0_upper": self.c0_upper,
            "c0_lambda": self.c0_lambda,
            "c0_branch": self.c0_branch,
            "margin": self.margin,
            "richardson_error": self.richardson_error,
            "verdict": self.verdict.value,
            "dimension_gate": self.dimension_gate,
            "cross_exponent": self.cross_exponent,
            "sweep": [dict(zip(SWEEP_COLUMNS, r.as_tuple())) for r in self.sweep],
            "notes": list(self.notes),
        }
        return d


def _level_and_threshold(kernel, params, lambdas):
    S1 = sharp_constant_S1(kernel, params)
    S2 = sharp_constant_S2(kernel, params)
    thr = compute_threshold(params, S1, S2)
    rows = path_energy_sweep(kernel, params, lambdas)
    return S1, S2, thr, rows


def verify_theorem(
    kernel: RieszKernel,
    params: NonlinearityParams,
    lambdas=None,
    fine_kernel: RieszKernel | None = None,
    richardson: bool = True,
) -> ThresholdReport:
    """
    Threshold, sweep and verdict.  With `richardson` the whole computation is
    repeated on the grid with twice the nodes; the difference in margin is the
    error estimate, and BELOW_THRESHOLD needs margin > 3 * estimate.
    """
    if lambdas is None:
        lambdas = default_lambdas()
    gate = dimension_gate(params.N, params.alpha)
    S1, S2, (tp, tq, thr), rows = _level_and_threshold(kernel, params, lambdas)
    c0, lam0, branch = c0_upper_bound(rows)
    margin = thr - c0
    notes = []
    err = None
    if not gate.gate:
        verdict = Verdict.NOT_ESTABLISHED
        notes.append(f"dimension gate N > 4 + alpha fails for N={params.N}, alpha={params.alpha}; no claim")
    else:
        if richardson:
            if fine_kernel is None:
                s = kernel.grid.spec
                fine_grid = build_grid(GridSpec(s.N, s.R, 2 * s.M, s.gamma))
                fine_kernel = build_kernel(fine_grid, params.alpha, kernel.order)
            _, _, (_, _, thr_f), rows_f = _level_and_threshold(fine_kernel, params, lambdas)
            c0_f = c0_upper_bound(rows_f)[0]
            err = abs((thr_f - c0_f) - margin)
            logger.info("Richardson: margin %.6g (M) vs %.6g (2M)", margin, thr_f - c0_f)
        ok = margin > 0 and (err is None or margin > 3.0 * err)
        verdict = Verdict.BELOW_THRESHOLD if ok else Verdict.NOT_ESTABLISHED
        if err is None:
            notes.append("no refinement estimate requested")
    return ThresholdReport(
        params=params,
        S1=S1,
        S2=S2,
        threshold_p=tp,
        threshold_q=tq,
        threshold=thr,
        sweep=rows,
        c0_upper=c0,
        c0_lambda=lam0,
        c0_branch=branch,
        margin=margin,
        richardson_error=err,
        verdict=verdict,
        dimension_gate=gate.gate,
        cross_exponent=gate.cross_exponent,
        grid=kernel.grid.spec,
        notes=notes,
    )


def brezis_lieb_gap(
    kernel: RieszKernel,
    params: NonlinearityParams,
    u,
    lam: float | None,
    exponent: str = "q",
    kind: Kind = Kind.NU,
    amplitude: float = 1.0,
) -> float:
    """
    |D(u_n) - D(u_n - u) - D(u)| with u_n = u + (bump at scale lam) and
    D(v) = int (I_alpha * |v|^e) |v|^e.  lam=None means no bump (u_n = u).
    """
    if exponent not in ("p", "q"):
        raise ValueError("exponent must be 'p' or 'q'")
    e = params.p if exponent == "p" else params.q
    grid = kernel.grid
    uv = np.asarray(_values(grid, u), dtype=float)
    if lam is None:
        bump = np.zeros_like(uv)
    else:
        bump = sample_extremal(grid, ExtremalFamily(kind, lam, amplitude)).values
    un = uv + bump
    return abs(_pairing(kernel, un, e) - _pairing(kernel, un - uv, e) - _pairing(kernel, uv, e))


def asymptotic_exponent(rows: list[SweepRow], limit: float, decade: tuple[float, float] = (1e2, 1e3)) -> float:
    """Log-log slope of |J_mu - limit| against lambda over the given range (returned positive)."""
    sel = [r for r in rows if decade[0] * (1 - 1e-9) <= r.lam <= decade[1] * (1 + 1e-9)]
    if len(sel) < 2:
        raise ValueError("need at least two sweep rows in the fitting range")
    x = np.log([r.lam for r in sel])
    y = np.log([abs(r.J_mu - limit) for r in sel])
    return float(-np.polyfit(x, y, 1)[0])
