"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines. The
Monte Carlo runs take a couple of minutes in total; every tolerance is fixed
here, nothing is calibrated at runtime. Loading draws use the zero-mean
uniform family, which satisfies the bounded-support and pervasiveness
assumptions with a well-conditioned loading Gram.
"""

import math

import numpy as np

import oracles
from factorcov import io
from factorcov.cli import main as cli_main
from factorcov.identification import identification_sweep
from factorcov.simulation import (
    Banded,
    DGPSpec,
    coverage_experiment,
    rate_experiment,
    simulate,
)
from factorcov.thresholding import PlugIn, estimate_covariance, inv_norm_cdf, soft_threshold

THREADS = 8
LOADINGS = (-1.0, 1.0)


def _report(number, name, passed, details):
    print(f"ACCEPTANCE {number} ({name}): {'PASS' if passed else 'FAIL'} — {details}")


def test_criterion_1_simultaneous_coverage():
    spec = DGPSpec(p=100, n=400, k=3, seed=0, loading_range=LOADINGS,
                   sigma_u_structure=Banded(bandwidth=2, decay=0.4))
    report = coverage_experiment(spec, reps=500, c0=1.1, alpha=0.05, threads=THREADS)
    bound = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / 500)
    passed = report.coverage_frequency <= bound
    _report(1, "coverage", passed,
            f"frequency {report.coverage_frequency:.4f} <= {bound:.4f}")
    assert passed


def test_criterion_2_population_recovery_scaling():
    report = identification_sweep((50, 100, 200, 400), k=3, bandwidth=2, decay=0.4)
    decreasing = all(a > b for a, b in zip(report.errors, report.errors[1:]))
    passed = decreasing and report.slope <= -0.3
    _report(2, "tail-eigencomponent recovery", passed,
            f"errors {[round(e, 5) for e in report.errors]}, slope {report.slope:.3f} <= -0.3")
    assert passed


def test_criterion_3_residual_term_rate_in_p():
    spec = DGPSpec(p=20, n=5000, k=2, seed=0, loading_range=LOADINGS,
                   sigma_u_structure=Banded(bandwidth=2, decay=0.4))
    report = rate_experiment(spec, axis="p", grid=[20, 40, 80], reps=100, threads=THREADS)
    means = [pt.residual_term_mean for pt in report.points]
    slope, _ = report.fitted_slopes["residual_term"]
    passed = means[0] > means[1] > means[2] and slope <= -0.6
    _report(3, "residual-term rate", passed,
            f"means {[round(m, 4) for m in means]}, slope {slope:.3f} <= -0.6")
    assert passed


def test_criterion_4_error_rate_in_n():
    spec = DGPSpec(p=200, n=100, k=3, seed=0, loading_range=LOADINGS,
                   sigma_u_structure=Banded(bandwidth=0, decay=0.0))
    report = rate_experiment(spec, axis="n", grid=[100, 200, 400, 800],
                             reps=100, threads=THREADS)
    slope, _ = report.fitted_slopes["max_norm"]
    passed = -0.65 <= slope <= -0.35
    _report(4, "max-norm error rate in n", passed, f"slope {slope:.3f} in [-0.65, -0.35]")
    assert passed


def test_criterion_5_sparsistency():
    spec = DGPSpec(p=50, n=2000, k=1, seed=0, loading_range=LOADINGS,
                   sigma_u_structure=Banded(bandwidth=0, decay=0.0))
    report = coverage_experiment(spec, reps=100, threads=THREADS)
    mean_zero = report.points[0].zero_fraction_mean
    passed = mean_zero >= 0.99
    _report(5, "sparsistency", passed, f"mean zero fraction {mean_zero:.5f} >= 0.99")
    assert passed


def test_criterion_6_oracle_equivalences():
    # quantile function vs the bisection oracle on 10^3 points incl deep tails
    qs = list(np.linspace(1e-12, 1.0 - 1e-12, 992))
    for p in (10, 100, 1000, 10_000):
        qs.append(1.0 - 0.05 / (2.0 * p * p))
        qs.append(0.05 / (2.0 * p * p))
    worst_quantile = max(
        abs(inv_norm_cdf(float(q)) - oracles.normal_quantile_bisection(float(q)))
        for q in qs
    )

    # plug-in thresholds vs a direct recomputation of the formula
    rng = np.random.default_rng(0)
    u = rng.standard_normal((50, 200))
    from factorcov.thresholding import plugin_thresholds

    mu = plugin_thresholds(u, 1.1, 0.05)
    _, q4 = oracles.cross_moment_loops(u)
    z = oracles.normal_quantile_bisection(1.0 - 0.05 / (2 * 50 * 50))
    direct = (1.1 / math.sqrt(200)) * z * np.sqrt(q4)
    worst_threshold = float(np.max(np.abs(mu - direct)))

    # soft-threshold identities on 10^4 random entries
    dim = 100
    s = rng.standard_normal((dim, dim))
    s = np.triu(s) + np.triu(s, 1).T
    levels = np.abs(rng.standard_normal((dim, dim)))
    levels = np.triu(levels) + np.triu(levels, 1).T
    out = soft_threshold(s, levels)
    off = ~np.eye(dim, dtype=bool)
    expected = np.sign(s) * np.maximum(np.abs(s) - levels, 0.0)
    shrink_ok = np.array_equal(out[off], expected[off])
    kill_ok = np.all(out[off][np.abs(s[off]) <= levels[off]] == 0.0)
    identity_ok = np.array_equal(soft_threshold(s, np.zeros_like(s)), s)

    passed = (
        worst_quantile <= 1e-7
        and worst_threshold <= 1e-12
        and shrink_ok and kill_ok and identity_ok
    )
    _report(6, "oracle equivalences", passed,
            f"quantile dev {worst_quantile:.2e} <= 1e-7, "
            f"threshold dev {worst_threshold:.2e} <= 1e-12, "
            f"soft-threshold identities {shrink_ok and kill_ok and identity_ok}")
    assert passed


def test_criterion_7_pipeline_invariants(tmp_path):
    spec = DGPSpec(p=40, n=120, k=2, seed=0, loading_range=LOADINGS)
    y = simulate(spec).y

    # scale equivariance: zero pattern invariant, entries scale by c^2
    base = estimate_covariance(y, 2, rule=PlugIn())
    scaled = estimate_covariance(3.0 * y, 2, rule=PlugIn())
    pattern_ok = np.array_equal(base.sigma_u == 0.0, scaled.sigma_u == 0.0)
    scale_ok = np.allclose(scaled.sigma_u, 9.0 * base.sigma_u, rtol=1e-10, atol=1e-13)
    threshold_scale_ok = np.allclose(scaled.thresholds, 9.0 * base.thresholds, rtol=1e-10)

    # permutation equivariance: permuted zero patterns, same entry multiset
    perm = np.random.default_rng(1).permutation(40)
    permuted = estimate_covariance(y[perm], 2, rule=PlugIn())
    perm_pattern_ok = np.array_equal(
        permuted.sigma_u[np.ix_(np.argsort(perm), np.argsort(perm))] == 0.0,
        base.sigma_u == 0.0,
    )
    multiset_ok = np.allclose(
        np.sort(permuted.sigma_u.ravel()), np.sort(base.sigma_u.ravel()), atol=1e-10
    )

    # determinism: CLI outputs byte-identical across reruns and thread counts
    y_path = tmp_path / "y.csv"
    io.write_matrix_csv(y_path, y)
    est_outputs = []
    for name in ("e1.csv", "e2.csv"):
        out = tmp_path / name
        assert cli_main(["estimate", "--input", str(y_path), "--k", "2",
                         "--output", str(out)]) == 0
        est_outputs.append(out.read_bytes() + (tmp_path / name).with_suffix(".json").read_bytes())
    cov_outputs = []
    for threads, name in ((1, "c1.json"), (4, "c4.json")):
        out = tmp_path / name
        assert cli_main(["coverage", "--p", "20", "--n", "60", "--k", "1",
                         "--reps", "20", "--seed", "11", "--threads", str(threads),
                         "--output", str(out)]) == 0
        cov_outputs.append(out.read_bytes())
    determinism_ok = est_outputs[0] == est_outputs[1] and cov_outputs[0] == cov_outputs[1]

    passed = (pattern_ok and scale_ok and threshold_scale_ok
              and perm_pattern_ok and multiset_ok and determinism_ok)
    _report(7, "pipeline invariants", passed,
            f"scale pattern {pattern_ok}, scale values {scale_ok and threshold_scale_ok}, "
            f"permutation {perm_pattern_ok and multiset_ok}, determinism {determinism_ok}")
    assert passed
