"""Acceptance checks, one test per numbered criterion.

Each test records a ``criterion N: PASS|FAIL`` line (printed immediately and
repeated in the pytest terminal summary).  Run alone with

    pytest tests/test_acceptance.py -v -s

or ``python tests/test_acceptance.py``.  The Monte Carlo criteria take a few
minutes in total.
"""
from __future__ import annotations

import math
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy import stats

from signcov.estimator import tstar, tstar_bruteforce, tstar_many
from signcov.inference import MarginalSpec, PowerRequest, critical_value, sample_size
from signcov.inference import test_asymptotic as run_asymptotic
from signcov.kernel import Quadruple, h_kernel, h_kernel_by_average, kernel_codes
from signcov.nulldist import NullDistribution
from signcov.simulate import (
    BivariateNormal,
    Independent,
    convergence_study,
    draw_many,
    ks_distance,
    level_study,
    tau_star_curve,
)
from signcov.spectrum import (
    DiscreteMarginal,
    r_matrix,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
    symmetric_eigenvalues,
)

ACCEPTANCE_LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# -- 1 ---------------------------------------------------------------------

def test_c01_kernel_exactness():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    bad = 0
    allowed = {h_kernel([(0, 0), (1, 1), (2, 2), (3, 3)]), h_kernel([(0, 0), (1, 2), (2, 1), (3, 3)]), 0}
    for r in range(10_000):
        if r % 2:
            pts = rng.integers(0, 3, (4, 2)).tolist()  # heavy ties
        else:
            pts = rng.standard_normal((4, 2)).tolist()
        h = h_kernel(pts)
        if h not in allowed or h != h_kernel_by_average(pts):
            bad += 1
    elapsed = time.perf_counter() - start
    record(1, bad == 0 and elapsed < 5.0,
           f"10000 quadruples, {bad} mismatches, values {sorted(map(str, allowed))}, {elapsed:.2f}s (< 5s)")


# -- 2 ---------------------------------------------------------------------

def test_c02_variance_constants():
    s = spectrum_continuous()
    # h2 eigenvalues are the limit weights divided by 6
    kept = float(np.dot(s.weights, s.weights)) / 36
    spectral_ok = abs(kept - 1 / 225) <= 1e-6 and abs(kept + s.tail_sq / 36 - 1 / 225) < 1e-15

    rng = np.random.default_rng(202)
    m = 1_000_000
    U = rng.random((m, 5, 2))
    h = kernel_codes(U[:, :4, 0], U[:, :4, 1]).astype(float) / 3
    var4 = h.var()
    se4 = ((h - h.mean()) ** 2).std() / math.sqrt(m)
    # replace the fourth point by an independent copy
    xs = U[:, [0, 1, 2, 4], 0]
    ys = U[:, [0, 1, 2, 4], 1]
    prod = h * kernel_codes(xs, ys).astype(float) / 3
    var3, se3 = prod.mean(), prod.std() / math.sqrt(m)
    ok4 = abs(var4 - 50 / 225) <= 3 * se4
    ok3 = abs(var3 - 8 / 225) <= 3 * se3
    record(2, spectral_ok and ok4 and ok3,
           f"sum lambda^2 = {kept:.9f} vs 1/225 = {1 / 225:.9f}; "
           f"sigma4^2 = {var4:.5f} +- {se4:.5f} vs {50 / 225:.5f}; sigma3^2 = {var3:.5f} +- {se3:.5f} vs {8 / 225:.5f}")


# -- 3 ---------------------------------------------------------------------

def test_c03_continuous_limit():
    s = spectrum_continuous()
    top_ok = abs(s.weights[0] - 36 / math.pi**4) <= 1e-12
    bracket_ok = s.total_weight <= 1.0 <= s.total_weight + s.tail_bound + 1e-12
    var_kept = 2 * float(np.dot(s.weights, s.weights))
    var_ok = abs(var_kept - 0.32) <= 1e-4
    record(3, top_ok and bracket_ok and var_ok,
           f"top weight {s.weights[0]:.15f}; weight sum {s.total_weight:.6f} + tail {s.tail_bound:.6f} "
           f"brackets 1; variance {var_kept:.8f}")


# -- 4 ---------------------------------------------------------------------

def test_c04_discrete_r_matrices():
    worst = 0.0
    for p in [0.1 * k for k in range(1, 10)]:
        R = r_matrix(DiscreteMarginal((0.0, 1.0), (1 - p, p)))
        q = p * (1 - p)
        expected = np.array([[p * p * (1 - p), -q**1.5], [-q**1.5, p * (1 - p) ** 2]])
        ev = symmetric_eigenvalues(R)
        worst = max(worst, np.max(np.abs(R - expected)), abs(ev[0] - q))
    rng = np.random.default_rng(404)
    worst3 = 0.0
    for _ in range(50):
        p1, p2, p3 = rng.dirichlet([1, 1, 1])
        p3 = 1 - p1 - p2
        R = r_matrix(DiscreteMarginal.from_masses([p1, p2, p3]))
        a = -math.sqrt(p1 * p2) * (p1 * (1 - p1) - p3**2)
        b = -math.sqrt(p1 * p3) * (p3 * (1 - p3) + p1 * p2)
        c = -math.sqrt(p2 * p3) * (p3 * (1 - p3) - p1**2)
        E = np.array([[p1 * (1 - p1) ** 2, a, b], [a, p2 * (p1**2 + p3**2), c], [b, c, p3 * (1 - p3) ** 2]])
        worst3 = max(worst3, float(np.max(np.abs(R - E))))
    record(4, worst <= 1e-12 and worst3 <= 1e-12,
           f"Bernoulli max error {worst:.2e}; ternary max error {worst3:.2e} (tol 1e-12)")


# -- 5 ---------------------------------------------------------------------

SIZES = [10, 15, 20, 25, 30, 40, 50, 60, 70, 80]
CASES = {
    "continuous": Independent.continuous,
    "discrete": Independent.discrete_example,
    "mixed": Independent.mixed_example,
}


def test_c05_null_convergence():
    parts, ok = [], True
    for k, (name, make) in enumerate(CASES.items()):
        st = convergence_study(make(), SIZES, reps=10_000, seed=500 + k)
        ks80 = st.rows[-1].ks
        rho = st.ks_trend()
        ok &= ks80 <= 0.02 and rho < 0
        parts.append(f"{name}: KS(n=80) = {ks80:.4f}, spearman = {rho:.2f}")
    record(5, ok, "; ".join(parts) + " (need KS <= 0.02 and negative trend)")


# -- 6 ---------------------------------------------------------------------

def test_c06_level_calibration():
    parts, ok = [], True
    for k, (name, make) in enumerate(CASES.items()):
        rate, se = level_study(make(), n=100, reps=10_000, alpha=0.05, seed=600 + k)
        ok &= 0.04 <= rate <= 0.06
        parts.append(f"{name}: {rate:.4f} +- {se:.4f}")
    record(6, ok, "rejection rates " + "; ".join(parts) + " (need [0.04, 0.06])")


# -- 7 ---------------------------------------------------------------------

def test_c07_tau_star_anchors():
    (p70,) = tau_star_curve([0.7], n=300, reps=200, seed=700)
    (p74,) = tau_star_curve([0.74], n=300, reps=200, seed=701, with_sigma1=True)
    ok = abs(p70.mean_tstar - 1 / 6) <= 0.02 and abs(p74.mean_16sigma1sq - 0.14) <= 0.03
    record(7, ok, f"tau*(0.7) = {p70.mean_tstar:.4f} (target 1/6 +- 0.02); "
                  f"16 sigma1^2 (0.74) = {p74.mean_16sigma1sq:.4f} (target 0.14 +- 0.03)")


# -- 8 ---------------------------------------------------------------------

BETAS = [round(0.5 + 0.05 * k, 2) for k in range(10)]


def test_c08_sample_size_bounds():
    alpha = 0.05
    (pt,) = tau_star_curve([0.6], n=300, reps=200, seed=800)
    tau = pt.mean_tstar
    loose = [sample_size(PowerRequest(tau, 0.25, alpha, b)) for b in BETAS]
    tight = [sample_size(PowerRequest(tau, 0.00875, alpha, b)) for b in BETAS]
    dominates = all(a > b for a, b in zip(loose, tight))
    c = critical_value(spectrum_continuous(), alpha)

    @lru_cache(maxsize=None)
    def power(n: int) -> float:
        X, Y = draw_many(BivariateNormal(0.6), n, 2000, seed=810 + n)
        return float(np.mean(n * tstar_many(X, Y) > c))

    def empirical_n(beta: float) -> int:
        lo, hi = 4, 8
        while power(hi) < beta:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if power(mid) >= beta:
                hi = mid
            else:
                lo = mid
        return hi

    emp = [empirical_n(b) for b in BETAS]
    covered = sum(t >= e for t, e in zip(tight, emp))
    record(8, dominates and covered >= 9,
           f"tau*(0.6) = {tau:.4f}; n(1/4) = {loose}; n(0.00875) = {tight}; empirical = {emp}; "
           f"bound holds at {covered}/10")


# -- 9 ---------------------------------------------------------------------

def test_c09_oracle_equivalence():
    rng = np.random.default_rng(909)
    worst, tied = 0.0, 0
    for r in range(500):
        n = int(rng.integers(4, 31))
        if r % 5 < 2:  # 40% of samples drawn from few levels, hence tied
            x, y = rng.integers(0, 4, n).astype(float), rng.integers(0, 5, n).astype(float)
        else:
            x, y = rng.standard_normal(n), rng.standard_normal(n)
        tied += np.unique(x).size < n or np.unique(y).size < n
        worst = max(worst, abs(tstar((x, y)).value - tstar_bruteforce((x, y)).value))
    record(9, worst <= 1e-12 and tied >= 150, f"500 samples ({tied} with ties), max |fast - brute| = {worst:.1e}")


# -- 10 --------------------------------------------------------------------

def test_c10_inversion_vs_sampler():
    spectra = {
        "continuous": spectrum_continuous(),
        "discrete": spectrum_discrete(DiscreteMarginal.from_masses([0.3, 0.7]),
                                      DiscreteMarginal.from_masses([0.2, 0.3, 0.5])),
        "mixed": spectrum_mixed(DiscreteMarginal.from_masses([0.2] * 5)),
    }
    parts, ok = [], True
    for k, (name, spec) in enumerate(spectra.items()):
        d = NullDistribution(spec)
        draws = d.sample(1_000_000, seed=1000 + k)
        F = d.cdf_interpolant()
        # the interpolant stands in for the exact cdf at a million points; check it first
        probe = np.quantile(draws, np.linspace(0.001, 0.999, 60))
        interp_err = float(np.max(np.abs(F(probe) - d.cdf(probe))))
        ks = ks_distance(draws, F)
        trip = max(abs(d.cdf(d.quantile(q)) - q) for q in (0.01, 0.1, 0.5, 0.9, 0.95, 0.99))
        ok &= ks <= 0.002 and trip <= 1e-4 and interp_err <= 1e-4
        parts.append(f"{name}: KS {ks:.5f}, round trip {trip:.1e}")
    record(10, ok, "; ".join(parts) + " (need KS <= 0.002, round trip <= 1e-4)")


# -- 11 --------------------------------------------------------------------

TRANSFORMS = [
    np.exp,
    lambda v: v**3,
    np.arctan,
    np.sinh,
    lambda v: 1 / (1 + np.exp(-v)),
    lambda v: 7.5 * v - 3,
]


def test_c11_rank_invariance():
    rng = np.random.default_rng(1111)
    spec = MarginalSpec.from_code("cc")
    worst = 0.0
    for r in range(100):
        x = rng.standard_normal(100)
        y = 0.3 * x + rng.standard_normal(100)
        f, g = TRANSFORMS[r % 6], TRANSFORMS[(r // 6) % 6]
        p0 = run_asymptotic((x, y), spec).p_value
        p1 = run_asymptotic((f(x), g(y)), spec).p_value
        worst = max(worst, abs(p0 - p1))
    record(11, worst <= 1e-12, f"100 transform/sample pairs, max p-value difference {worst:.1e}")


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
