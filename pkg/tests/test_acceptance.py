"""Acceptance gate. Each test reports one PASS/FAIL line, then asserts."""
import time
from fractions import Fraction
from math import ceil, factorial, floor

import numpy as np
import pytest

from samplets.cluster_tree import dyadic_cells
from samplets.experiments import (ExperimentConfig, kh_rate_check, rate_fit, run_convergence,
                                  shifted_legendre_monic)
from samplets.geometry import Cell
from samplets.index_sets import custom_set, tensor_set, total_degree_set
from samplets.multiwavelet import (continuous_hierarchy, detail_basis, filter_scale_independence,
                                   parity_residual, project_function, symmetrize_parity,
                                   two_scale_deviation)
from samplets.ortho_poly import (continuous_monic, continuous_orthonormal, discrete_orthonormal,
                                 family_sup_distance)
from samplets.samplet_transform import samplet_basis
from samplets.sampling import halton, sample_uniform, star_discrepancy_1d

CASES = [(1, 2, 2 ** 10), (2, 2, 2 ** 12)]


def slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


@pytest.fixture(scope="module")
def bases():
    out, times = {}, {}
    for d, k, N in CASES:
        t0 = time.perf_counter()
        out[d] = samplet_basis(sample_uniform(N, d, 0), 4, total_degree_set(d, k))
        times[d] = time.perf_counter() - t0
    return out, times


def test_criterion_01_orthogonality(bases, report):
    worst, slowest = 0.0, 0.0
    for d, k, N in CASES:
        t0 = time.perf_counter()
        U = bases[0][d].dense_matrix()
        err = float(np.max(np.abs(U.T @ U - np.eye(N))))
        worst = max(worst, err)
        slowest = max(slowest, bases[1][d] + time.perf_counter() - t0)
    ok = worst < 1e-10 and slowest < 10
    report(1, "orthogonality of U", ok, f"max|U^T U - I| = {worst:.2e}, {slowest:.2f} s")
    assert ok


def test_criterion_02_vanishing_moments(bases, report):
    res = {f"Lambda_2 d={d}": bases[0][d].check_vanishing_moments() for d in (1, 2)}
    pts = sample_uniform(2 ** 12, 2, 1)
    for name, iset in [("tensor k=2", tensor_set(2, 2)),
                       ("custom", custom_set([(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1)]))]:
        res[name] = samplet_basis(pts, 4, iset).check_vanishing_moments()
    worst = max(res.values())
    ok = worst < 1e-10
    report(2, "vanishing moments", ok, ", ".join(f"{k}: {v:.1e}" for k, v in res.items()))
    assert ok


def test_criterion_03_roundtrip(report):
    N = 2 ** 16
    b = samplet_basis(sample_uniform(N, 3, 2), 3, total_degree_set(3, 2))
    v = np.random.default_rng(3).standard_normal(N)
    c = b.analyze(v)
    err = float(np.max(np.abs(b.synthesize(c) - v)))
    norm_gap = abs(np.linalg.norm(c) - np.linalg.norm(v) / np.sqrt(N))
    ok = err < 1e-10 and norm_gap < 1e-12
    report(3, "transform roundtrip", ok, f"max err {err:.2e}, norm gap {norm_gap:.2e}")
    assert ok


def test_criterion_04_shifted_legendre(report):
    unit = Cell.unit(1)
    coeff_err, norm_err = 0.0, 0.0
    for k in range(7):
        iset = total_degree_set(1, k)
        C = continuous_monic(iset, unit).raw_coefficients()
        coeff_err = max(coeff_err, float(np.max(np.abs(C - shifted_legendre_monic(k)))))
        D = np.diag(continuous_orthonormal(iset, unit).raw_coefficients())
        # ||pi_n||^2 = (n!)^4 / ((2n)!^2 (2n + 1)) for the monic shifted Legendre polynomial
        exact = [Fraction(factorial(n) ** 4, factorial(2 * n) ** 2 * (2 * n + 1)) for n in range(k + 1)]
        norm_err = max(norm_err, max(abs(1 / D[n] ** 2 - float(e)) for n, e in enumerate(exact)))
    ok = coeff_err < 1e-12 and norm_err < 1e-12
    report(4, "shifted-Legendre oracle", ok, f"coeff err {coeff_err:.2e}, norm err {norm_err:.2e}")
    assert ok


def test_criterion_05_two_scale(report):
    dev = mom = gram = 0.0
    for d in (1, 2):
        for det in continuous_hierarchy(d, 4, total_degree_set(d, 2)).values():
            dev = max(dev, two_scale_deviation(det))
            mom = max(mom, float(np.max(np.abs(det.moments()[:, det.m_phi:]))))
            gram = max(gram, float(np.max(np.abs(det.gram() - np.eye(det.q.shape[0])))))
    ok = dev < 1e-10 and mom < 1e-12 and gram < 1e-10
    report(5, "two-scale consistency", ok,
           f"coeff dev {dev:.1e}, moments {mom:.1e}, Gram {gram:.1e}")
    assert ok


def test_criterion_06_alpert(report):
    det = detail_basis(Cell.unit(1), total_degree_set(1, 0))
    x = (np.arange(1024) + 0.5)[:, None] / 1024
    haar = np.where(x[:, 0] < 0.5, 1.0, -1.0)
    v = det.sigma[0](x)
    haar_err = float(min(np.max(np.abs(v - haar)), np.max(np.abs(v + haar))))
    counts_ok, resid = True, 0.0
    for k in (1, 2):
        n = k + 1
        sym = symmetrize_parity(detail_basis(Cell.unit(1), total_degree_set(1, k)))
        counts_ok &= (sym.labels.count("odd"), sym.labels.count("even")) == (ceil(n / 2), floor(n / 2))
        resid = max(resid, parity_residual(sym))
    cells = dyadic_cells(1, 5)[:31]
    filt = max(filter_scale_independence(cells, total_degree_set(1, k)) for k in (0, 1, 2))
    ok = haar_err < 1e-14 and counts_ok and resid < 1e-10 and filt < 1e-10
    report(6, "Alpert recovery", ok, f"Haar err {haar_err:.1e}, parity counts {counts_ok}, "
                                     f"residual {resid:.1e}, filter dev {filt:.1e}")
    assert ok


def test_criterion_07_discrete_to_continuous(report):
    t0 = time.perf_counter()
    iset = total_degree_set(1, 2)
    cont = continuous_orthonormal(iset, Cell.unit(1))
    ns = [2 ** m for m in range(8, 17)]
    dist = [family_sup_distance(discrete_orthonormal(iset, halton(N, 1)), cont) for N in ns]
    elapsed = time.perf_counter() - t0
    s = slope(ns, dist)
    mono = all(b < a for a, b in zip(dist, dist[1:]))
    ok = mono and s <= -0.7 and elapsed < 30
    report(7, "discrete to continuous", ok, f"slope {s:.3f}, monotone {mono}, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_08_desk_reproduction(report, tmp_path):
    t0 = time.perf_counter()
    common = dict(d=1, moments="2", depth=6, samples=[2 ** m for m in range(10, 19)],
                  ref_samples=2 ** 22, out=str(tmp_path))
    _, mc, mc_skip = run_convergence(ExperimentConfig(sampler="mc", runs=10, **common), write=False)
    _, qmc, q_skip = run_convergence(ExperimentConfig(sampler="halton", **common), write=False)
    elapsed = time.perf_counter() - t0
    s_mc, s_q = rate_fit(mc)[0], rate_fit(qmc)[0]
    matched = {r.n: r.mean for r in mc}
    below = all(r.mean < matched[r.n] for r in qmc if r.n in matched)
    ok = (not mc_skip and not q_skip and -0.7 <= s_mc <= -0.3 and s_q <= -0.7 and below
          and elapsed < 900)
    report(8, "desk-scale reproduction", ok,
           f"MC slope {s_mc:.3f}, Halton slope {s_q:.3f}, Halton below MC {below}, "
           f"{elapsed:.0f} s")
    assert ok


def brute_force_discrepancy(xs):
    """Sup over anchored intervals [0, t) and [0, t] at every candidate threshold, exactly."""
    xs = sorted(Fraction(v) for v in xs)
    N = len(xs)
    best = Fraction(0)
    for t in set(xs) | {Fraction(1)}:
        open_count = sum(v < t for v in xs)
        closed_count = sum(v <= t for v in xs)
        best = max(best, abs(Fraction(open_count, N) - t), abs(Fraction(closed_count, N) - t))
    return float(best)


def test_criterion_09_koksma_hlawka(report):
    rows = kh_rate_check([2 ** m for m in range(6, 17)])
    worst_ratio = max(r.ratio for r in rows)
    disc_err = 0.0
    for N in (1, 2, 3, 7, 64, 100, 256):
        for pts in (halton(N, 1), sample_uniform(N, 1, N)):
            disc_err = max(disc_err, abs(star_discrepancy_1d(pts) - brute_force_discrepancy(pts.coords[:, 0])))
    ok = worst_ratio <= 10 and disc_err < 1e-12
    report(9, "Koksma-Hlawka check", ok, f"max ratio {worst_ratio:.2f}, disc* err {disc_err:.1e}")
    assert ok


def test_criterion_10_completeness(report):
    iset = total_degree_set(1, 2)
    f = lambda x: np.sin(2 * np.pi * x[:, 0])
    errs = {n: project_function(f, n, iset)[1] for n in range(1, 6)}
    # consecutive depths within 2..5; the 1 -> 2 step is reported but not gated
    ratios = [errs[n] / errs[n + 1] for n in range(2, 5)]
    ok = all(6 <= r <= 10 for r in ratios)
    report(10, "completeness trend", ok, "ratios " + ", ".join(f"{r:.2f}" for r in ratios)
           + f" (depth 1 -> 2: {errs[1] / errs[2]:.2f})")
    assert ok
