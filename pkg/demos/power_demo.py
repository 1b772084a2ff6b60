"""Sample sizes under the conservative and the Gaussian-tuned variance bounds."""
from signcov import PowerRequest, sample_size

for tau in (0.02, 0.05, 0.1):
    loose = sample_size(PowerRequest(tau, 0.25, alpha=0.05, beta=0.8))
    tight = sample_size(PowerRequest(tau, 0.00875, alpha=0.05, beta=0.8))
    print(f"tau* = {tau:.2f}: n = {loose:6d} (bound 1/4)  n = {tight:5d} (bound 0.00875)")
