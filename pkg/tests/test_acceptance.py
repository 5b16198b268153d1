"""End-to-end acceptance checklist.

One test per criterion; each prints a single ``criterion NN: PASS/FAIL``
line on the real stdout so the verdicts survive pytest's capture, then
asserts. Statistical criteria run at fixed, pre-registered seeds chosen
before their outcomes were known: nothing here was re-drawn until it passed.
The known-red clause (criterion 8's variance band) stays asserted at its
stated value; notes/decisions.md in the work log records the measurement.

Budget: the statistical criteria dominate; the whole module is ~20 minutes.
"""
import math
import sys

import numpy as np
import pytest

import edgestats as es
from edgestats.cli import (
    _verify_airy_identity,
    _verify_mehler,
    _verify_operator_bounds,
    _verify_von_koch,
    main,
)


_CAPFD = None


@pytest.fixture(autouse=True)
def _expose_capfd(capfd):
    # default fd-level capture swallows even sys.__stdout__, so the
    # one-line-per-criterion report would vanish for passing tests;
    # stash the fixture so _line can print with capture suspended
    global _CAPFD
    _CAPFD = capfd
    yield
    _CAPFD = None


def _line(num: int, ok: bool, detail: str) -> str:
    msg = f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
    if _CAPFD is not None:
        with _CAPFD.disabled():
            print(msg, flush=True)
    else:
        print(msg, file=sys.__stdout__, flush=True)
    return msg


def test_criterion_01_identity_suite():
    airy = _verify_airy_identity()
    mehler = _verify_mehler()
    koch = _verify_von_koch()
    ok = airy["passed"] and mehler["passed"] and koch["passed"]
    msg = _line(1, ok,
                f"pair-integral rel {airy['max_relative_error']:.1e} (<1e-8), "
                f"closed-sum {mehler['max_error_80_terms']:.1e} (<1e-10), "
                f"det identity drift {koch['truncation_drift']:.1e} (<1e-8)")
    assert ok, msg


def test_criterion_02_operator_bounds():
    spec = _verify_operator_bounds()
    xs = np.linspace(-5.0, 10.0, 151)
    diag = np.array([es.fermi_airy_kernel(1.0, float(x), float(x)) for x in xs])
    margin = float(np.min(np.exp(-xs) - diag))
    ok = spec["passed"] and margin >= 0.0
    msg = _line(2, ok,
                f"spectra in [{spec['min_eigenvalue']:.1e}, "
                f"{spec['max_eigenvalue']:.10f}], "
                f"diagonal under exp(-x) by >= {margin:.3e}")
    assert ok, msg


def test_criterion_03_distribution_interpolation():
    ts = np.arange(-5.0, 2.0 + 1e-9, 0.25)
    f16 = np.array([es.fermi_airy_cdf(16.0, float(t)) for t in ts])
    ftw = np.array([es.tracy_widom_cdf(float(t)) for t in ts])
    sup = float(np.max(np.abs(f16 - ftw)))

    ladder = es.check_edge_cdf_limits("to_gumbel")  # alpha 0.4, 0.2, 0.1
    strict = all(b < a for a, b in zip(ladder.errors, ladder.errors[1:]))

    mono = np.all(np.diff(f16) > 0) and np.all(np.diff(ftw) > 0)
    mass16 = float(f16[-1] - f16[0])
    masstw = float(ftw[-1] - ftw[0])
    masses = mass16 > 0.999 and masstw > 0.999

    ok = sup < 5e-3 and strict and bool(mono) and masses
    msg = _line(3, ok,
                f"sup|F_16-F_TW|={sup:.2e} (<5e-3), gumbel ladder "
                f"{tuple(round(e, 4) for e in ladder.errors)} strict={strict}, "
                f"mass {mass16:.5f}/{masstw:.5f} (>0.999)")
    assert ok, msg


def test_criterion_04_kernel_scaling_limits():
    tables = {
        "edge->airy": es.check_edge_kernel_limits("to_airy"),
        "finite->projection": es.check_finite_kernel_limits("to_gue"),
        "bulk": es.check_bulk_scaling(1.0),
        "edge->exponential": es.check_poisson_edge_scaling(1.0),
        "finite->crossover": es.check_crossover_edge_scaling(1.0),
    }
    trends = {k: t.decreasing() for k, t in tables.items()}
    cross = tables["finite->crossover"]
    final_err = cross.errors[-1]
    final_ok = cross.parameters[-1] == 512 and final_err < 0.05

    d = np.linspace(0.0, 2.0, 81)
    exact = es.bulk_kernel(0.05, d, 0.0)
    approx = es.bulk_kernel_approx(0.05, d, 0.0)
    # sup error relative to the kernel scale (the peak value, ~1 at d=0)
    approx_err = float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))

    ok = all(trends.values()) and final_ok and approx_err < 0.02
    msg = _line(4, ok,
                f"trends {trends}, crossover final {final_err:.3f} (<0.05 at "
                f"n={cross.parameters[-1]}), bulk approx {approx_err:.4f} (<0.02)")
    assert ok, msg


def test_criterion_05_sampler_vs_theory():
    spec = es.fermi_hermite_kernel(math.exp(-0.1), math.expm1(0.1 * 20.0))
    samples = [es.sample_grand_canonical(spec, seed=555000 + i)
               for i in range(10000)]
    counts = es.CountDistribution.from_counts([len(s) for s in samples])
    tv = counts.tv(es.CountDistribution.from_bernoulli(spec.weights))

    # the basis compression puts the whole process inside |x| < 1.5
    bins = np.linspace(-1.6, 1.6, 25)
    est = es.empirical_rho1(samples, bins)
    coverage = est.coverage(
        lambda x: np.array([float(spec.matrix(np.array([xx]))[0, 0])
                            for xx in np.atleast_1d(x)]))

    ok = tv < 0.03 and coverage >= 0.95
    msg = _line(5, ok, f"count-law TV {tv:.4f} (<0.03), intensity coverage "
                       f"{coverage:.3f} (>=0.95 within 3 sigma)")
    assert ok, msg


def _falpha_interpolant(alpha: float):
    grid = np.linspace(-8.0, 12.0, 501)
    vals = np.array([es.fermi_airy_cdf(alpha, float(t)) for t in grid])
    return lambda u: np.interp(np.asarray(u, dtype=float), grid, vals)


def test_criterion_06_shifted_edge_maximum():
    cdf = _falpha_interpolant(1.0)
    draws4 = np.array([es.sample_shifted_airy_max(1.0, {"gue_n": 400, "top_k": 10},
                                                  seed=777000 + i)
                       for i in range(10000)])
    ks4 = es.ks_statistic(draws4, cdf)
    draws8 = np.array([es.sample_shifted_airy_max(1.0, {"gue_n": 800, "top_k": 10},
                                                  seed=777000 + i)
                       for i in range(10000)])
    ks8 = es.ks_statistic(draws8, cdf)
    shift = abs(ks8 - ks4)
    ok = ks4 < 0.03 and shift < 0.01
    msg = _line(6, ok, f"KS(n=400)={ks4:.4f} (<0.03), doubling shift "
                       f"{shift:.4f} (<0.01)")
    assert ok, msg


def test_criterion_07_tracy_widom_cross_validation():
    edge = np.array([es.edge_rescale(es.gue_eigs_tridiag(400, seed=888000 + i), 400)
                     for i in range(10000)])
    lo, hi = -4.0, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if es.tracy_widom_cdf(mid) < 0.5 else (lo, mid)
    tw_median = 0.5 * (lo + hi)
    med_diff = abs(float(np.median(edge)) - tw_median)
    ks = es.ks_statistic(edge, lambda u: np.array(
        [es.tracy_widom_cdf(float(x)) for x in np.atleast_1d(u)]))
    ok = med_diff < 0.02 and ks < 0.05
    msg = _line(7, ok, f"median gap {med_diff:.4f} (<0.02), KS {ks:.4f} "
                       f"(<0.05; the KS is the measured finite-n bias at n=400)")
    assert ok, msg


def test_criterion_08_deformed_ensemble_pipeline():
    reports = {}
    for alpha in (1.0, 4.0, 0.25):
        model = es.DeformedModel(n=400, alpha=alpha,
                                 diag_law=es.DiagLaw.gaussian(0.5))
        reports[alpha] = es.deformed_edge_experiment(model, 5000, seed=20260822)

    identity_ok = all(r.identity_max <= 1e-10 for r in reports.values())
    var_s = reports[1.0].var_s
    var_ok = abs(var_s - 0.5) <= 0.15 * 0.5
    trend_ok = reports[1.0].ks_convolution < reports[1.0].ks_convolution_half
    dom_hi = reports[4.0].ks_tracy_widom < reports[4.0].ks_gaussian
    dom_lo = reports[0.25].ks_gaussian < reports[0.25].ks_tracy_widom

    var_note = "ok" if var_ok else ("OUTSIDE (population value at n=400 is "
                                    "0.5899 by direct quadrature; the band "
                                    "is unreachable at this size)")
    ok = identity_ok and var_ok and trend_ok and dom_hi and dom_lo
    msg = _line(8, ok,
                f"identity max {max(r.identity_max for r in reports.values()):.1e} "
                f"(<=1e-10), Var(s)={var_s:.4f} vs band [0.425, 0.575] {var_note}, "
                f"trend {reports[1.0].ks_convolution:.4f}<"
                f"{reports[1.0].ks_convolution_half:.4f}={trend_ok}, "
                f"dominance hi={dom_hi} lo={dom_lo}")
    assert ok, msg


def test_criterion_09_contour_reduction():
    n = 10
    s = 1.0 / n ** (2.0 / 3.0)
    r = math.sqrt(2.0 * s)
    pts = np.linspace(-1.8, 1.8, 13)
    got = es.deformed_density(n, s, np.zeros(n), pts)
    want = np.array([float(es.gue_kernel(n, p / r, p / r)) for p in pts]) / r
    dens_err = float(np.max(np.abs(got - want)))

    half = 2.0 * r * math.sqrt(2.0 * n)
    grid = np.linspace(-half, half, 1201)
    rho = es.deformed_density(n, s, np.zeros(n), grid)
    trace_err = abs(float(np.trapezoid(rho, grid)) - n)

    ok = dens_err < 1e-6 and trace_err < 1e-4
    msg = _line(9, ok, f"density vs projection {dens_err:.2e} (<1e-6), "
                       f"integrated mass off by {trace_err:.2e} (<1e-4)")
    assert ok, msg


def test_criterion_10_reproducibility(tmp_path):
    first = tmp_path / "a"
    rerun = tmp_path / "b"
    args = ["dist", "falpha", "--alpha", "1.0", "--from", "-2.0",
            "--to", "0.0", "--step", "0.5"]
    code1 = main(["--out-dir", str(first), *args])
    code2 = main(["--out-dir", str(rerun), "rerun",
                  str(first / "dist_falpha.manifest.json")])
    bytes_equal = (first / "dist_falpha.csv").read_bytes() == \
        (rerun / "dist_falpha.csv").read_bytes()

    serial = tmp_path / "s"
    pooled = tmp_path / "p"
    sample = ["sample", "oscillator", "--mu", "0.5", "--n-mean", "5",
              "--replicas", "60", "--seed", "41"]
    code3 = main(["--out-dir", str(serial), *sample])
    code4 = main(["--out-dir", str(pooled), "--workers", "3", *sample])
    par_equal = (serial / "sample_oscillator.csv").read_bytes() == \
        (pooled / "sample_oscillator.csv").read_bytes()

    ok = code1 == code2 == code3 == code4 == 0 and bytes_equal and par_equal
    msg = _line(10, ok, f"manifest rerun byte-identical={bytes_equal}, "
                        f"parallel==serial={par_equal}")
    assert ok, msg
