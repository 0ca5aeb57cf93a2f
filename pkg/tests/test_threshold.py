from __future__ import annotations

import csv
import io
import math

import pytest

from choquard.extremals import ExtremalFamily, Kind, normalize_amplitudes, sample_extremal
from choquard.functional import NonlinearityParams
from choquard.grid import GridSpec, build_grid
from choquard.riesz import build_kernel
from choquard.threshold import (
    SWEEP_COLUMNS,
    Verdict,
    asymptotic_exponent,
    brezis_lieb_gap,
    c0_upper_bound,
    compute_threshold,
    default_lambdas,
    dimension_gate,
    path_energy_sweep,
    threshold_alternate_forms,
    verify_theorem,
)


@pytest.fixture(scope="module")
def report7(kernel7, kernel7_fine, params7):
    return verify_theorem(kernel7, params7, fine_kernel=kernel7_fine)


def test_exponent_identities(params7):
    p, q = params7.p, params7.q
    assert p / (p - 1) == pytest.approx(4.5, rel=1e-14)
    assert q / (q - 1) == pytest.approx(2.25, rel=1e-14)
    assert p / (p - 1) == pytest.approx((7 + 2) / 2, rel=1e-14)
    assert q / (q - 1) == pytest.approx((7 + 2) / (2 + 2), rel=1e-14)


@pytest.mark.parametrize("S", [0.5, 1.0, 2.0])
def test_threshold_forms_agree(params7, S):
    tp, tq, thr = compute_threshold(params7, S, S)
    ap, aq = threshold_alternate_forms(params7, S, S)
    assert abs(tp - ap) <= 1e-12 * tp
    assert abs(tq - aq) <= 1e-12 * tq
    assert thr == min(tp, tq)


@pytest.mark.parametrize("N,alpha", [(5, 1.0), (6, 2.5), (9, 3.0)])
def test_threshold_forms_agree_other_params(N, alpha):
    params = NonlinearityParams.doubly_critical(N, alpha)
    for S1, S2 in ((0.3, 7.0), (11.7, 137.1), (2.0, 0.5)):
        tp, tq, _ = compute_threshold(params, S1, S2)
        ap, aq = threshold_alternate_forms(params, S1, S2)
        assert math.isclose(tp, ap, rel_tol=1e-12) and math.isclose(tq, aq, rel_tol=1e-12)


def test_threshold_monotone_in_constants(params7):
    ladder = (0.5, 1.0, 2.0)
    tps = [compute_threshold(params7, s, 1.0)[0] for s in ladder]
    tqs = [compute_threshold(params7, 1.0, s)[1] for s in ladder]
    assert tps[0] < tps[1] < tps[2]
    assert tqs[0] < tqs[1] < tqs[2]
    assert compute_threshold(params7, 1e-6, 1e-6)[2] < 1e-20


@pytest.mark.parametrize("S1,S2", [(0.0, 1.0), (1.0, -2.0), (float("nan"), 1.0)])
def test_threshold_rejects_nonpositive(params7, S1, S2):
    with pytest.raises(ValueError):
        compute_threshold(params7, S1, S2)


def test_dimension_gate_cases():
    g = dimension_gate(7, 2.0)
    assert g.gate and bool(g)
    assert g.cross_exponent == pytest.approx(1.8, abs=1e-12) and g.cross_ok
    assert g.nu_exponent == pytest.approx(9 / 7) and g.nu_ok
    assert not dimension_gate(6, 2.0)
    assert not dimension_gate(6, 2.0).cross_ok  # exponent equals 2 at the boundary
    assert not dimension_gate(5, 1.5)


@pytest.mark.parametrize("N,alpha", [(5, 0.5), (8, 3.0), (10, 5.5), (6, 2.0), (5, 2.0)])
def test_gate_equivalent_to_cross_exponent(N, alpha):
    g = dimension_gate(N, alpha)
    assert g.gate == g.cross_ok
    assert g.nu_ok


def test_default_lambdas():
    lams = default_lambdas()
    assert len(lams) == 25
    assert lams[0] == pytest.approx(1e-3) and lams[-1] == pytest.approx(1e3) and lams[12] == pytest.approx(1.0)


def test_sweep_limits(report7, params7):
    rows = {round(math.log10(r.lam), 6): r for r in report7.sweep}
    t_inf = params7.p ** (1 / (2 * params7.p - 2))
    s_0 = params7.q ** (1 / (2 * params7.q - 2))
    assert t_inf == pytest.approx(1.5524, abs=1e-4)
    assert s_0 == pytest.approx(1.4440, abs=1e-4)
    assert rows[3.0].t_lambda == pytest.approx(t_inf, rel=1e-2)
    assert rows[-3.0].s_lambda == pytest.approx(s_0, rel=1e-2)


def test_sweep_rows_sorted(kernel7_small, params7):
    rows = path_energy_sweep(kernel7_small, params7, [10.0, 0.1, 1.0])
    assert [r.lam for r in rows] == [0.1, 1.0, 10.0]
    with pytest.raises(ValueError):
        path_energy_sweep(kernel7_small, params7, [1.0, -1.0])


def test_mu_branch_stays_below_threshold_p(report7):
    large = [r for r in report7.sweep if r.lam >= 10.0]
    assert large and all(r.J_mu < report7.threshold_p for r in large)
    gaps = [report7.threshold_p - r.J_mu for r in large]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_asymptotic_exponent(report7, params7):
    N, a = params7.N, params7.alpha
    target = min(2.0, N * (params7.p + params7.q) / 2 - (N + a))
    assert target == pytest.approx(1.8)
    e = asymptotic_exponent(report7.sweep, report7.threshold_p)
    assert abs(e - target) <= 0.2 * target


def test_report_invariants(report7):
    assert report7.threshold == min(report7.threshold_p, report7.threshold_q)
    c0, lam, branch = c0_upper_bound(report7.sweep)
    assert (report7.c0_upper, report7.c0_lambda, report7.c0_branch) == (c0, lam, branch)
    assert report7.margin == report7.threshold - report7.c0_upper
    assert report7.dimension_gate


def test_verify_theorem_below_threshold(report7):
    assert report7.verdict is Verdict.BELOW_THRESHOLD
    assert report7.margin > 0
    assert report7.richardson_error is not None
    assert report7.margin > 3 * report7.richardson_error
    d = report7.to_dict()
    assert d["verdict"] == "BELOW_THRESHOLD" and len(d["sweep"]) == 25
    assert set(d["sweep"][0]) == set(SWEEP_COLUMNS)


def test_single_lambda_report_is_looser(report7, kernel7, params7):
    rep = verify_theorem(kernel7, params7, lambdas=[1.0], richardson=False)
    assert rep.c0_upper >= report7.c0_upper
    assert rep.threshold == report7.threshold
    assert rep.richardson_error is None and len(rep.sweep) == 1


def test_gate_false_gives_no_claim(kernel_cache):
    params = NonlinearityParams.doubly_critical(5, 2.0)
    k = build_kernel(build_grid(GridSpec(5, 40.0, 400, 2.0)), 2.0, cache_dir=kernel_cache)
    rep = verify_theorem(k, params, lambdas=default_lambdas(5, 1e-2, 1e2))
    assert not rep.dimension_gate
    assert rep.verdict is Verdict.NOT_ESTABLISHED
    assert rep.richardson_error is None
    assert any("gate" in n for n in rep.notes)


def test_brezis_lieb_zero_cases(kernel7_small, params7):
    g = kernel7_small.grid
    mu = sample_extremal(g, ExtremalFamily(Kind.MU)).values
    zero = mu * 0.0
    for lam in (1e-1, 1e-2):
        assert brezis_lieb_gap(kernel7_small, params7, zero, lam) == 0.0
    assert brezis_lieb_gap(kernel7_small, params7, mu, None) == 0.0
    assert brezis_lieb_gap(kernel7_small, params7, mu, None, exponent="p") == 0.0
    with pytest.raises(ValueError):
        brezis_lieb_gap(kernel7_small, params7, mu, 0.1, exponent="r")


@pytest.mark.parametrize("exponent", ["q", "p"])
def test_brezis_lieb_gap_decays(kernel7, params7, exponent):
    A, B = normalize_amplitudes(kernel7, params7)
    u = sample_extremal(kernel7.grid, ExtremalFamily(Kind.MU, 1.0, A)).values
    gaps = [brezis_lieb_gap(kernel7, params7, u, lam, exponent, Kind.NU, B) for lam in (1e-1, 1e-2, 1e-3)]
    assert gaps[0] > 0
    assert gaps[0] >= 2 * gaps[1] and gaps[1] >= 2 * gaps[2]


def test_sweep_csv_columns(kernel7_small, params7):
    rows = path_energy_sweep(kernel7_small, params7, [0.5, 2.0])
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(SWEEP_COLUMNS)
    w.writerows(r.as_tuple() for r in rows)
    back = list(csv.reader(io.StringIO(buf.getvalue())))
    assert back[0] == ["lambda", "t_lambda", "J_mu", "s_lambda", "J_nu"]
    assert float(back[2][0]) == 2.0
