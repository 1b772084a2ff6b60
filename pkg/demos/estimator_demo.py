"""Compare the fast O(n^2) estimator with the quartic oracle on tied data."""
import time

import numpy as np

from signcov import tstar, tstar_bruteforce

rng = np.random.default_rng(1)
x = rng.integers(0, 4, 40).astype(float)
y = x + rng.integers(0, 3, 40)
for f in (tstar, tstar_bruteforce):
    start = time.perf_counter()
    est = f((x, y))
    print(f"{f.__name__:17s} t* = {est.value:.12f}  ({time.perf_counter() - start:.3f}s)")

big = rng.standard_normal((2, 5000))
start = time.perf_counter()
print(f"n = 5000: t* = {tstar((big[0], big[1] + big[0])).value:.5f} in {time.perf_counter() - start:.2f}s")
