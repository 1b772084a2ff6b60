"""Eigenvalue weights of the null limit law of ``n * t*``.

Under independence ``n * t*`` converges to a centered chi-square mixture
``sum_k w_k (chi2_1 - 1)``.  The weights depend on the marginals:

* both continuous: ``36 / (pi^4 i^2 j^2)`` for ``i, j >= 1``;
* both discrete: ``4 * lx_i * ly_j`` with ``lx``, ``ly`` the eigenvalues of
  the R matrices of the two marginals;
* one discrete, one continuous: ``12 * l_i / (pi^2 j^2)``.

Infinite families are truncated to their largest weights.  The omitted part
is summarised by ``tail_bound`` (sum of omitted weights) and ``tail_sq`` (sum
of their squares); :mod:`signcov.nulldist` treats the omitted part as a
Gaussian with variance ``2 * tail_sq``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "DiscreteMarginal",
    "MarginalKind",
    "MixtureSpectrum",
    "EigenSolverError",
    "InvalidMarginalError",
    "MAX_SUPPORT",
    "EIGEN_CUTOFF",
    "DEFAULT_EPS",
    "r_matrix",
    "symmetric_eigenvalues",
    "spectrum_continuous",
    "spectrum_discrete",
    "spectrum_mixed",
]

MAX_SUPPORT = 64
EIGEN_CUTOFF = 1e-14
DEFAULT_EPS = 0.05

_ZETA2 = math.pi**2 / 6
_ZETA4 = math.pi**4 / 90


class InvalidMarginalError(ValueError):
    pass


class EigenSolverError(ArithmeticError):
    pass


class MarginalKind(str, Enum):
    CONTINUOUS_CONTINUOUS = "ContinuousContinuous"
    DISCRETE_DISCRETE = "DiscreteDiscrete"
    DISCRETE_CONTINUOUS = "DiscreteContinuous"


@dataclass(frozen=True)
class DiscreteMarginal:
    """Finite-support distribution on the real line.

    Parameters
    ----------
    support : sequence of float
        Strictly increasing support points.
    masses : sequence of float
        Positive probabilities summing to one (within ``1e-12``).
    """

    support: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        support = tuple(float(u) for u in self.support)
        masses = tuple(float(p) for p in self.masses)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)
        if len(support) == 0 or len(support) != len(masses):
            raise InvalidMarginalError("support and masses must be non-empty and of equal length")
        if not all(math.isfinite(u) for u in support):
            raise InvalidMarginalError("support points must be finite")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise InvalidMarginalError("support must be strictly increasing")
        if any(not (p > 0) or not math.isfinite(p) for p in masses):
            raise InvalidMarginalError("masses must be positive")
        if abs(math.fsum(masses) - 1.0) > 1e-12:
            raise InvalidMarginalError(f"masses sum to {math.fsum(masses)!r}, not 1")

    @classmethod
    def from_masses(cls, masses: Sequence[float]) -> "DiscreteMarginal":
        """Marginal on ``1, 2, ..., r`` with the given masses."""
        return cls(tuple(range(1, len(masses) + 1)), tuple(masses))

    @classmethod
    def empirical(cls, values: Sequence[float]) -> "DiscreteMarginal":
        """Empirical pmf on the observed support."""
        support, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
        masses = counts / counts.sum()
        # renormalise with fsum so the 1e-12 check cannot trip on rounding
        total = math.fsum(masses)
        return cls(tuple(support), tuple(m / total for m in masses))

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.masses)

    @property
    def cdf(self) -> np.ndarray:
        """``F(u_i)`` at each support point."""
        c = np.cumsum(self.masses)
        c[-1] = 1.0
        return c


@dataclass(frozen=True, eq=False)
class MixtureSpectrum:
    """Weights of ``sum_k w_k (chi2_1 - 1)`` plus a truncation summary.

    ``tail_bound`` is the sum of the omitted (absolute) weights and
    ``tail_sq`` the sum of their squares.  Both are zero for a finite
    spectrum.
    """

    weights: np.ndarray
    tail_bound: float
    marginal_kind: MarginalKind
    tail_sq: float = 0.0
    eps: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        w = np.sort(np.asarray(self.weights, dtype=float))[::-1].copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.tail_bound < 0 or self.tail_sq < 0:
            raise ValueError("tail summaries must be nonnegative")

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.weights))

    @property
    def variance(self) -> float:
        """Variance of the (tail-completed) law, ``2 * sum w^2``."""
        return 2.0 * (float(np.dot(self.weights, self.weights)) + self.tail_sq)

    def summary(self, top: int = 5) -> dict:
        return {
            "marginal_kind": self.marginal_kind.value,
            "n_weights": int(self.weights.size),
            "top_weights": [float(w) for w in self.weights[:top]],
            "tail_bound": float(self.tail_bound),
            "tail_sq": float(self.tail_sq),
        }


def _check_marginal(m: DiscreteMarginal) -> None:
    if not isinstance(m, DiscreteMarginal):
        raise InvalidMarginalError(f"expected DiscreteMarginal, got {type(m).__name__}")
    if m.size > MAX_SUPPORT:
        raise InvalidMarginalError(
            f"support of size {m.size} exceeds {MAX_SUPPORT}; treat this axis as continuous"
        )


def r_matrix(m: DiscreteMarginal) -> np.ndarray:
    """Symmetric R matrix of a discrete marginal.

    Entry ``(i, j)`` is ``sqrt(p_i p_j) * k(u_i, u_j)`` where ``k = -g`` is
    the negated pair kernel ``-E[a(u_i, u_j, X3, X4)]``, written through the
    cdf ``F`` and pmf ``p``::

        k(u_i, u_j) = (F(lo) - p(lo))^2 + (1 - F(hi))^2
                      - [i != j] * (F(lo)(1 - F(lo)) + sum_{lo < u_l < hi} p_l (1 - F_l))

    with ``lo = min(u_i, u_j)`` and ``hi = max(u_i, u_j)``.
    """
    _check_marginal(m)
    p = m.p
    F = m.cdf
    r = m.size
    tail = p * (1.0 - F)
    # strictly-between sums via prefix sums: S[b] - S[a+1] = sum_{a<l<b} tail_l
    S = np.concatenate(([0.0], np.cumsum(tail)))
    R = np.empty((r, r))
    for i in range(r):
        for j in range(i, r):
            lo, hi = i, j
            val = (F[lo] - p[lo]) ** 2 + (1.0 - F[hi]) ** 2
            if i != j:
                val -= F[lo] * (1.0 - F[lo]) + (S[hi] - S[lo + 1])
            R[i, j] = R[j, i] = math.sqrt(p[i] * p[j]) * val
    return R


def symmetric_eigenvalues(M, *, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    ``tol * ||M||_F``.  Returns eigenvalues (with multiplicity) sorted in
    descending order.

    Raises
    ------
    ValueError
        If ``M`` is not square or not symmetric within ``1e-12``.
    EigenSolverError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.size and np.max(np.abs(A - A.T)) > 1e-12:
        raise ValueError("matrix is not symmetric within 1e-12")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    if n <= 1 or scale == 0.0:
        return np.sort(np.diag(A))[::-1]
    target = tol * scale

    mask = ~np.eye(n, dtype=bool)

    def off(B: np.ndarray) -> float:
        return float(np.linalg.norm(B[mask]))

    for _ in range(max_sweeps):
        if off(A) <= target:
            return np.sort(np.diag(A))[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
    if off(A) <= target:
        return np.sort(np.diag(A))[::-1]
    raise EigenSolverError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _nonzero_eigenvalues(m: DiscreteMarginal) -> np.ndarray:
    ev = symmetric_eigenvalues(r_matrix(m))
    return ev[np.abs(ev) >= EIGEN_CUTOFF]


def _divisor_counts(N: int) -> np.ndarray:
    d = np.zeros(N + 1, dtype=np.int64)
    for i in range(1, N + 1):
        d[i::i] += 1
    return d


def _continuous_tail(N: int) -> tuple[float, float]:
    """Omitted weight sum and square sum when keeping all ``i * j <= N``."""
    k = np.arange(1, N + 1, dtype=float)
    d = _divisor_counts(N)[1:]
    c = 36.0 / math.pi**4
    tail = c * (_ZETA2**2 - math.fsum(d / k**2))
    tail_sq = c * c * (_ZETA4**2 - math.fsum(d / k**4))
    return max(tail, 0.0), max(tail_sq, 0.0)


@lru_cache(maxsize=32)
def spectrum_continuous(eps: float = DEFAULT_EPS) -> MixtureSpectrum:
    """Null spectrum when both marginals are continuous.

    Keeps every weight ``36 / (pi^4 i^2 j^2)`` with ``i * j <= N`` for the
    smallest ``N`` whose omitted weight sum is at most ``eps``.  The omitted
    sums are exact (series values ``zeta(2)^2`` and ``zeta(4)^2`` minus the
    kept part).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    lo, hi = 1, 2
    while _continuous_tail(hi)[0] > eps:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _continuous_tail(mid)[0] > eps:
            lo = mid
        else:
            hi = mid
    N = hi if _continuous_tail(lo)[0] > eps else lo
    tail, tail_sq = _continuous_tail(N)
    c = 36.0 / math.pi**4
    weights = [c / (i * i * j * j) for i in range(1, N + 1) for j in range(1, N // i + 1)]
    return MixtureSpectrum(np.array(weights), tail, MarginalKind.CONTINUOUS_CONTINUOUS, tail_sq, eps)


def spectrum_discrete(mx: DiscreteMarginal, my: DiscreteMarginal) -> MixtureSpectrum:
    """Exact finite null spectrum for two discrete marginals."""
    lx = _nonzero_eigenvalues(mx)
    ly = _nonzero_eigenvalues(my)
    w = 4.0 * np.outer(lx, ly).ravel()
    w = w[np.abs(w) >= EIGEN_CUTOFF]
    return MixtureSpectrum(w, 0.0, MarginalKind.DISCRETE_DISCRETE, 0.0)


def spectrum_mixed(mx: DiscreteMarginal, eps: float = DEFAULT_EPS) -> MixtureSpectrum:
    """Null spectrum for one discrete marginal ``mx`` and one continuous marginal.

    Keeps ``12 * l_i / (pi^2 j^2)`` for every nonzero eigenvalue ``l_i`` of
    the R matrix of ``mx`` and ``j <= J``, with ``J`` the smallest cutoff
    whose omitted weight sum is at most ``eps``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    lam = _nonzero_eigenvalues(mx)
    c = 12.0 / math.pi**2
    abs_sum = float(np.sum(np.abs(lam)))
    sq_sum = float(np.dot(lam, lam))
    if lam.size == 0:
        return MixtureSpectrum(np.array([]), 0.0, MarginalKind.DISCRETE_CONTINUOUS, 0.0, eps)

    def tails(J: int) -> tuple[float, float]:
        j = np.arange(1, J + 1, dtype=float)
        r2 = _ZETA2 - math.fsum(1.0 / j**2)
        r4 = _ZETA4 - math.fsum(1.0 / j**4)
        return c * abs_sum * max(r2, 0.0), c * c * sq_sum * max(r4, 0.0)

    # zeta(2) - S_J lies in (1/(J+1), 1/J), so this J is within one of minimal
    J = max(1, int(math.floor(c * abs_sum / eps)) - 1)
    while J > 1 and tails(J - 1)[0] <= eps:
        J -= 1
    while tails(J)[0] > eps:
        J += 1
    tail, tail_sq = tails(J)
    j = np.arange(1, J + 1, dtype=float)
    w = c * np.outer(lam, 1.0 / j**2).ravel()
    return MixtureSpectrum(w, tail, MarginalKind.DISCRETE_CONTINUOUS, tail_sq, eps)
