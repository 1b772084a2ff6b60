"""Inspect the three null laws of n t*: spectra, quantiles and a sampler check."""
import numpy as np

from signcov import DiscreteMarginal, NullDistribution, spectrum_continuous, spectrum_discrete, spectrum_mixed

laws = {
    "continuous": spectrum_continuous(),
    "discrete": spectrum_discrete(DiscreteMarginal.from_masses([0.3, 0.7]), DiscreteMarginal.from_masses([0.2, 0.3, 0.5])),
    "mixed": spectrum_mixed(DiscreteMarginal.from_masses([0.2] * 5)),
}
for name, spec in laws.items():
    d = NullDistribution(spec)
    q95 = d.quantile(0.95)
    draws = d.sample(200_000, seed=3)
    print(f"{name:10s} weights {len(spec.weights):4d}  top {spec.weights[0]:.4f}  "
          f"q95 {q95:.4f}  sampler P(T > q95) {np.mean(draws > q95):.4f}")
