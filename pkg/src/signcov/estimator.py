"""Estimators of the sign covariance ``t*``.

``tstar_bruteforce`` averages the kernel over every 4-subset and is the
reference.  ``tstar`` counts the same quantity in O(n^2) time and memory:

* a 4-subset whose middle ``x`` values differ splits uniquely into a
  lower-``x`` pair ``A`` and an upper-``x`` pair ``B``.  It is concordant iff
  ``A`` also lies strictly below (or strictly above) ``B`` in ``y``.  With
  pair corners on the rank grid, counting such ``(A, B)`` is a dominance
  count between two histograms, done with 2-D suffix sums;
* a 4-subset is concordant or discordant iff neither middle pair of
  coordinates ties, which is counted by inclusion-exclusion over tie groups.

Then ``C(n, 4) * t* = #concordant - #(concordant or discordant) / 3``,
computed in exact integer arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .kernel import kernel_codes

__all__ = [
    "InsufficientSampleError",
    "Method",
    "PairedSample",
    "TStarEstimate",
    "tstar",
    "tstar_bruteforce",
    "tstar_vstatistic",
    "tstar_fraction",
    "tstar_permuted",
    "tstar_many",
    "estimate_tau_sigma1",
    "projection_estimates",
]


class InsufficientSampleError(ValueError):
    pass


class Method(str, Enum):
    BRUTE_FORCE = "BruteForce"
    OPTIMIZED = "Optimized"


@dataclass(frozen=True)
class PairedSample:
    """Paired observations ``(x_i, y_i)``."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float).ravel()
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("sample contains non-finite values")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class TStarEstimate:
    value: float
    n: int
    method: Method
    exact: Fraction | None = None


def _as_sample(s) -> PairedSample:
    if isinstance(s, PairedSample):
        return s
    xs, ys = s
    return PairedSample(xs, ys)


def _require(n: int, minimum: int = 4) -> None:
    if n < minimum:
        raise InsufficientSampleError(f"insufficient sample: n = {n} < {minimum}")


@lru_cache(maxsize=64)
def _combinations(n: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), k)), dtype=np.intp).reshape(-1, k)


def tstar_bruteforce(s) -> TStarEstimate:
    """Average of the kernel over all ``C(n, 4)`` quadruples (O(n^4))."""
    s = _as_sample(s)
    n = s.n
    _require(n)
    total = 0
    count = 0
    for block in np.array_split(_combinations(n, 4), max(1, math.comb(n, 4) // 200_000)):
        total += int(kernel_codes(s.xs[block], s.ys[block]).sum(dtype=np.int64))
        count += len(block)
    exact = Fraction(total, 3 * count)
    return TStarEstimate(float(exact), n, Method.BRUTE_FORCE, exact)


def _dense_rank(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, inv, counts = np.unique(v, return_inverse=True, return_counts=True)
    return inv.astype(np.int64), counts.astype(np.int64)


def _comb(m: np.ndarray, k: int) -> np.ndarray:
    m = m.astype(np.int64)
    out = np.ones_like(m)
    for j in range(k):
        out = out * (m - j)
    return out // math.factorial(k)


def _insep_one_axis(counts: np.ndarray, n: int) -> int:
    # middle order statistics tie at a value of multiplicity m, with L below and G above
    below = np.concatenate(([0], np.cumsum(counts)[:-1]))
    above = n - below - counts
    c = (
        _comb(counts, 4)
        + (below + above) * _comb(counts, 3)
        + below * above * _comb(counts, 2)
    )
    return int(c.sum())


def _cell_configs() -> list[tuple[tuple[int, int], ...]]:
    # 3x3 tables (rows: x below/at/above v, cols: y below/at/above w) of four
    # points whose middle x equals v and middle y equals w
    out = []
    for cells in itertools.product(range(5), repeat=9):
        if sum(cells) != 4:
            continue
        t = np.array(cells).reshape(3, 3)
        r, c = t.sum(axis=1), t.sum(axis=0)
        if r[0] <= 1 and r[2] <= 1 and c[0] <= 1 and c[2] <= 1:
            out.append(tuple(((i, j), int(t[i, j])) for i in range(3) for j in range(3) if t[i, j]))
    return out


_CONFIGS = _cell_configs()


def _insep_both(rx, ry, cx, cy, n: int) -> int:
    vx = np.flatnonzero(cx >= 2)
    vy = np.flatnonzero(cy >= 2)
    if vx.size == 0 or vy.size == 0:
        return 0
    Kx, Ky = cx.size, cy.size
    J = np.bincount(rx * Ky + ry, minlength=Kx * Ky).reshape(Kx, Ky)
    P = np.zeros((Kx + 1, Ky + 1), dtype=np.int64)
    P[1:, 1:] = J.cumsum(0).cumsum(1)

    def box(a0, a1, b0, b1):
        # points with x-rank in [a0, a1) and y-rank in [b0, b1)
        return P[a1][:, b1] - P[a0][:, b1] - P[a1][:, b0] + P[a0][:, b0]

    v = vx
    w = vy
    v1 = v + 1
    w1 = w + 1
    zx = np.zeros_like(v)
    zy = np.zeros_like(w)
    Kxa = np.full_like(v, Kx)
    Kya = np.full_like(w, Ky)
    rows = [(zx, v), (v, v1), (v1, Kxa)]
    cols = [(zy, w), (w, w1), (w1, Kya)]
    cells = [[box(ra[0], ra[1], cb[0], cb[1]) for cb in cols] for ra in rows]
    total = np.zeros((v.size, w.size), dtype=np.int64)
    binoms: dict[tuple[int, int, int], np.ndarray] = {}
    for cfg in _CONFIGS:
        term = np.ones_like(total)
        for (i, j), k in cfg:
            key = (i, j, k)
            if key not in binoms:
                binoms[key] = _comb(cells[i][j], k)
            term = term * binoms[key]
        total += term
    return int(total.sum())


def _suffix_counts(H: np.ndarray, x_greater: bool, y_greater: bool) -> np.ndarray:
    """``S[a, b]`` = mass of ``H`` strictly beyond ``(a, b)`` in the given directions."""
    G = H
    G = G[::-1].cumsum(0)[::-1] if x_greater else G.cumsum(0)
    G = G[:, ::-1].cumsum(1)[:, ::-1] if y_greater else G.cumsum(1)
    S = np.zeros_like(G)
    # shift by one so the comparison is strict
    if x_greater and y_greater:
        S[:-1, :-1] = G[1:, 1:]
    elif x_greater and not y_greater:
        S[:-1, 1:] = G[1:, :-1]
    else:  # pragma: no cover - only the two orientations above are used
        raise ValueError
    return S


def _concordant_count(rx, ry, Kx: int, Ky: int) -> int:
    n = rx.size
    i, j = np.triu_indices(n, 1)
    xa, xb = rx[i], rx[j]
    ya, yb = ry[i], ry[j]
    xmax, xmin = np.maximum(xa, xb), np.minimum(xa, xb)
    ymax, ymin = np.maximum(ya, yb), np.minimum(ya, yb)
    size = Kx * Ky
    # A left of and below B: corner (xmax, ymax) of A strictly below (xmin, ymin) of B
    ll = np.bincount(xmin * Ky + ymin, minlength=size).reshape(Kx, Ky)
    ur = np.bincount(xmax * Ky + ymax, minlength=size).reshape(Kx, Ky)
    c1 = int(np.sum(ur * _suffix_counts(ll, True, True)))
    # A left of and above B: corner (xmax, ymin) of A vs (xmin, ymax) of B
    ul = np.bincount(xmin * Ky + ymax, minlength=size).reshape(Kx, Ky)
    lr = np.bincount(xmax * Ky + ymin, minlength=size).reshape(Kx, Ky)
    c2 = int(np.sum(lr * _suffix_counts(ul, True, False)))
    return c1 + c2


def tstar_fraction(xs, ys) -> Fraction:
    """Exact ``t*`` as a fraction, by grid counting."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = xs.size
    _require(n)
    rx, cx = _dense_rank(xs)
    ry, cy = _dense_rank(ys)
    total = math.comb(n, 4)
    if cx.size == 1 or cy.size == 1:
        return Fraction(0)
    conc = _concordant_count(rx, ry, cx.size, cy.size)
    separable = total - _insep_one_axis(cx, n) - _insep_one_axis(cy, n) + _insep_both(rx, ry, cx, cy, n)
    return Fraction(3 * conc - separable, 3 * total)


def tstar(s) -> TStarEstimate:
    """Sign covariance ``t*`` of a paired sample.

    Exact; agrees with :func:`tstar_bruteforce` on every input.  Runs in
    O(n^2) time and memory (about a second at ``n = 2000``).
    """
    s = _as_sample(s)
    _require(s.n)
    exact = tstar_fraction(s.xs, s.ys)
    return TStarEstimate(float(exact), s.n, Method.OPTIMIZED, exact)


def _concordant_batch(rx: np.ndarray, ry: np.ndarray, Kx: int, Ky: int) -> np.ndarray:
    """Concordant counts for each row of the rank arrays ``rx``, ``ry`` (shape ``(m, n)``)."""
    m, n = rx.shape
    i, j = np.triu_indices(n, 1)
    xa, xb = rx[:, i], rx[:, j]
    xmax, xmin = np.maximum(xa, xb), np.minimum(xa, xb)
    ya, yb = ry[:, i], ry[:, j]
    ymax, ymin = np.maximum(ya, yb), np.minimum(ya, yb)
    size = Kx * Ky
    off = (np.arange(m) * size)[:, None]

    def hist(xk, yk):
        return np.bincount((off + xk * Ky + yk).ravel(), minlength=m * size).reshape(m, Kx, Ky)

    # same dominance counts as _concordant_count, one grid per row
    ll, ur = hist(xmin, ymin), hist(xmax, ymax)
    G = ll[:, ::-1].cumsum(1)[:, ::-1]
    G = G[:, :, ::-1].cumsum(2)[:, :, ::-1]
    S1 = np.zeros_like(G)
    S1[:, :-1, :-1] = G[:, 1:, 1:]
    c1 = np.sum(ur * S1, axis=(1, 2))
    ul, lr = hist(xmin, ymax), hist(xmax, ymin)
    G = ul[:, ::-1].cumsum(1)[:, ::-1].cumsum(2)
    S2 = np.zeros_like(G)
    S2[:, :-1, 1:] = G[:, 1:, :-1]
    c2 = np.sum(lr * S2, axis=(1, 2))
    return c1 + c2


def tstar_permuted(xs, ys, perms: np.ndarray, block: int = 64) -> np.ndarray:
    """``t*`` of ``(xs, ys[perm])`` for every row of ``perms``.

    Marginal tie structure is permutation invariant, so only the concordant
    count (vectorised over a block of permutations) and, when both axes have
    ties, the doubly-inseparable count are recomputed.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = xs.size
    _require(n)
    perms = np.atleast_2d(np.asarray(perms, dtype=np.intp))
    rx, cx = _dense_rank(xs)
    ry, cy = _dense_rank(ys)
    Kx, Ky = cx.size, cy.size
    total = math.comb(n, 4)
    if Kx == 1 or Ky == 1:
        return np.zeros(len(perms))
    base = total - _insep_one_axis(cx, n) - _insep_one_axis(cy, n)
    both_ties = bool(np.any(cx >= 2) and np.any(cy >= 2))
    out = np.empty(len(perms))
    for a in range(0, len(perms), block):
        ryp = ry[perms[a:a + block]]
        conc = _concordant_batch(np.broadcast_to(rx, ryp.shape), ryp, Kx, Ky)
        for b in range(len(ryp)):
            both = _insep_both(rx, ryp[b], cx, cy, n) if both_ties else 0
            out[a + b] = (3 * int(conc[b]) - (base + both)) / (3 * total)
    return out


def tstar_many(X, Y, block: int = 64) -> np.ndarray:
    """``t*`` of each row pair ``(X[r], Y[r])`` for equal-length samples.

    Equivalent to calling :func:`tstar` per row but vectorised over blocks
    of rows; used by the simulation drivers.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise ValueError("X and Y must have the same shape")
    R, n = X.shape
    _require(n)
    total = math.comb(n, 4)
    out = np.empty(R)
    for a in range(0, R, block):
        ranks = [(_dense_rank(X[r]), _dense_rank(Y[r])) for r in range(a, min(a + block, R))]
        Kx = max(c.size for (_, c), _ in ranks)
        Ky = max(c.size for _, (_, c) in ranks)
        rx = np.stack([r for (r, _), _ in ranks])
        ry = np.stack([r for _, (r, _) in ranks])
        conc = _concordant_batch(rx, ry, Kx, Ky)
        for b, ((rxb, cx), (ryb, cy)) in enumerate(ranks):
            if cx.size == 1 or cy.size == 1:
                out[a + b] = 0.0
                continue
            sep = total - _insep_one_axis(cx, n) - _insep_one_axis(cy, n) + _insep_both(rxb, ryb, cx, cy, n)
            out[a + b] = (3 * int(conc[b]) - sep) / (3 * total)
    return out


def _a_block(z: np.ndarray, i: int) -> np.ndarray:
    """``a(z_i, z_j, z_k, z_l)`` for all ``j, k, l`` as an int8 cube."""
    z1 = z[i]
    z2 = z[:, None, None]
    z3 = z[None, :, None]
    z4 = z[None, None, :]
    up = (np.maximum(z1, z3) < np.minimum(z2, z4)).astype(np.int8)
    up += np.minimum(z1, z3) > np.maximum(z2, z4)
    up -= np.maximum(z1, z2) < np.minimum(z3, z4)
    up -= np.minimum(z1, z2) > np.maximum(z3, z4)
    return up


def tstar_vstatistic(s) -> float:
    """V-statistic version: average of ``a(x) a(y)`` over all ``n^4`` index tuples.

    Index repeats are allowed, so this differs from ``t*`` by O(1/n).
    Cost is O(n^4) (vectorised per leading index).
    """
    s = _as_sample(s)
    n = s.n
    if n < 1:
        raise InsufficientSampleError("empty sample")
    total = 0
    for i in range(n):
        ax = _a_block(s.xs, i)
        ay = _a_block(s.ys, i)
        total += int(np.sum(ax.astype(np.int64) * ay))
    return total / n**4


def projection_estimates(s, max_triples: int = 500, seed: int = 0) -> np.ndarray:
    """Leave-one-out estimates of ``h1(z_i)`` for every observation.

    For each ``i`` the kernel is averaged over ``min(max_triples, C(n-1, 3))``
    triples of the remaining points: all of them when that is at most
    ``max_triples``, otherwise triples of distinct indices drawn uniformly
    with a fixed seed.
    """
    s = _as_sample(s)
    n = s.n
    _require(n)
    x, y = s.xs, s.ys
    k = math.comb(n - 1, 3)
    if k <= max_triples:
        trip = _combinations(n - 1, 3)
        idx = np.broadcast_to(trip, (n,) + trip.shape).copy()
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, n, 0x51]))
        idx = rng.integers(0, n - 1, size=(n, max_triples, 3))
        while True:
            bad = (idx[..., 0] == idx[..., 1]) | (idx[..., 0] == idx[..., 2]) | (idx[..., 1] == idx[..., 2])
            nbad = int(bad.sum())
            if nbad == 0:
                break
            idx[bad] = rng.integers(0, n - 1, size=(nbad, 3))
    own = np.arange(n)[:, None, None]
    idx = idx + (idx >= own)  # skip the point itself
    m = idx.shape[1]
    X = np.concatenate([np.broadcast_to(x[:, None, None], (n, m, 1)), x[idx]], axis=2).reshape(-1, 4)
    Y = np.concatenate([np.broadcast_to(y[:, None, None], (n, m, 1)), y[idx]], axis=2).reshape(-1, 4)
    codes = kernel_codes(X, Y).reshape(n, m)
    return codes.mean(axis=1) / 3.0


def estimate_tau_sigma1(s, max_triples: int = 500, seed: int = 0) -> tuple[float, float]:
    """Estimate ``tau*`` and the projection variance ``sigma_1^2``.

    ``sigma_1^2`` is the sample variance of the leave-one-out projections
    from :func:`projection_estimates`, clamped to ``[0, 1/4]`` (``h1`` lies
    in ``[-1/3, 2/3]``).  ``16 * sigma_1^2`` is the asymptotic variance of
    ``sqrt(n) (t* - tau*)`` under dependence.
    """
    s = _as_sample(s)
    if s.n < 8:
        raise InsufficientSampleError(f"insufficient sample: n = {s.n} < 8")
    tau = tstar(s).value
    h1 = projection_estimates(s, max_triples=max_triples, seed=seed)
    sig = float(np.var(h1, ddof=1))
    return tau, min(max(sig, 0.0), 0.25)
