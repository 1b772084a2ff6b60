"""Run the asymptotic and permutation tests on dependent and independent data."""
import numpy as np

from signcov import test_asymptotic, test_permutation

rng = np.random.default_rng(7)
x = rng.standard_normal(150)
datasets = {
    "independent": (x, rng.standard_normal(150)),
    "quadratic (zero correlation)": (x, x**2 + 0.3 * rng.standard_normal(150)),
    "discrete x, continuous y": (rng.integers(0, 3, 150), rng.standard_normal(150)),
}
for label, s in datasets.items():
    a = test_asymptotic(s)
    p = test_permutation(s, B=999, seed=1)
    print(f"{label:30s} t* = {a.t_star:+.4f}  asymptotic p = {a.p_value:.4f}  permutation p = {p.p_value:.4f}  "
          f"marginals {a.marginals.code}")
