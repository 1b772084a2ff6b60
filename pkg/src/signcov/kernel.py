"""Sign kernel of the sign covariance t*.

The kernel ``h`` of four points takes only three values, determined by how
the points sit relative to each other:

    concordant   -> 2/3
    discordant   -> -1/3
    inseparable  -> 0

Values are kept exact as integer numerators over 3 (``KERNEL_CODE``); the
vectorised :func:`kernel_codes` is what the estimators use.

The remaining helpers (``cvm_c``, ``h2_uniform``, ``g_discrete``,
``h1_bruteforce``) are closed forms and exact expectations used as oracles
for the limit theory.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .spectrum import DiscreteMarginal, InvalidMarginalError

__all__ = [
    "Classification",
    "Quadruple",
    "KERNEL_CODE",
    "MAX_JOINT_SUPPORT",
    "a_sign",
    "classify",
    "h_kernel",
    "h_kernel_by_average",
    "kernel_codes",
    "cvm_c",
    "h2_uniform",
    "g_discrete",
    "h1_bruteforce",
    "h1_bruteforce_joint",
]

MAX_JOINT_SUPPORT = 40


class Classification(Enum):
    CONCORDANT = "concordant"
    DISCORDANT = "discordant"
    INSEPARABLE = "inseparable"

    @property
    def value_fraction(self) -> Fraction:
        return Fraction(KERNEL_CODE[self], 3)


# kernel value times 3
KERNEL_CODE = {
    Classification.CONCORDANT: 2,
    Classification.DISCORDANT: -1,
    Classification.INSEPARABLE: 0,
}


def _finite(*vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise ValueError(f"non-finite input {v!r}")


@dataclass(frozen=True)
class Quadruple:
    """Four points ``(x, y)`` in the plane."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) != 4:
            raise ValueError("a quadruple has exactly four points")
        for x, y in pts:
            _finite(x, y)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_xy(cls, xs: Sequence[float], ys: Sequence[float]) -> "Quadruple":
        return cls(tuple(zip(xs, ys)))

    @property
    def xs(self) -> tuple[float, ...]:
        return tuple(p[0] for p in self.points)

    @property
    def ys(self) -> tuple[float, ...]:
        return tuple(p[1] for p in self.points)


def _below(a: float, b: float, c: float, d: float) -> bool:
    # "a, b < c, d" means max(a, b) < min(c, d)
    return max(a, b) < min(c, d)


def a_sign(z1: float, z2: float, z3: float, z4: float) -> int:
    """Sign function ``a`` of four reals, in ``{-1, 0, 1}``.

    ``+1`` when ``{z1, z3}`` and ``{z2, z4}`` are strictly separated (either
    way round), ``-1`` when ``{z1, z2}`` and ``{z3, z4}`` are, ``0`` otherwise.
    """
    _finite(z1, z2, z3, z4)
    return (
        int(_below(z1, z3, z2, z4))
        + int(_below(z2, z4, z1, z3))
        - int(_below(z1, z2, z3, z4))
        - int(_below(z3, z4, z1, z2))
    )


def _as_quadruple(q) -> Quadruple:
    return q if isinstance(q, Quadruple) else Quadruple(tuple(q))


def classify(q: Quadruple | Iterable[tuple[float, float]]) -> Classification:
    """Classify four points as concordant, discordant or inseparable.

    After sorting by ``x`` the points are inseparable when the two middle
    ``x`` values tie or the two middle ``y`` values tie.  Otherwise they are
    concordant when the lower-``x`` pair lies entirely below or entirely
    above the upper-``x`` pair in ``y``, and discordant if not.
    """
    q = _as_quadruple(q)
    pts = sorted(q.points, key=lambda p: p[0])
    x = [p[0] for p in pts]
    y = [p[1] for p in pts]
    ysorted = sorted(y)
    if x[1] == x[2] or ysorted[1] == ysorted[2]:
        return Classification.INSEPARABLE
    if max(y[0], y[1]) < min(y[2], y[3]) or max(y[2], y[3]) < min(y[0], y[1]):
        return Classification.CONCORDANT
    return Classification.DISCORDANT


def h_kernel(q: Quadruple | Iterable[tuple[float, float]]) -> Fraction:
    """Kernel value from the classification: 2/3, -1/3 or 0."""
    return classify(q).value_fraction


def h_kernel_by_average(q: Quadruple | Iterable[tuple[float, float]]) -> Fraction:
    """Kernel value as the average of ``a(x) a(y)`` over all 24 orderings."""
    q = _as_quadruple(q)
    total = 0
    for perm in itertools.permutations(range(4)):
        xs = [q.points[i][0] for i in perm]
        ys = [q.points[i][1] for i in perm]
        total += a_sign(*xs) * a_sign(*ys)
    return Fraction(total, 24)


def kernel_codes(xs, ys) -> np.ndarray:
    """Vectorised ``3 * h`` for quadruples stored row-wise.

    Parameters
    ----------
    xs, ys : array_like, shape (m, 4)

    Returns
    -------
    ndarray of int8, shape (m,)
        Entries in ``{2, -1, 0}``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 2 or xs.shape[1] != 4:
        raise ValueError("xs and ys must both have shape (m, 4)")
    order = np.argsort(xs, axis=1, kind="stable")
    xo = np.take_along_axis(xs, order, axis=1)
    yo = np.take_along_axis(ys, order, axis=1)
    ys_sorted = np.sort(ys, axis=1)
    insep = (xo[:, 1] == xo[:, 2]) | (ys_sorted[:, 1] == ys_sorted[:, 2])
    lo_max = np.maximum(yo[:, 0], yo[:, 1])
    lo_min = np.minimum(yo[:, 0], yo[:, 1])
    hi_max = np.maximum(yo[:, 2], yo[:, 3])
    hi_min = np.minimum(yo[:, 2], yo[:, 3])
    conc = (lo_max < hi_min) | (hi_max < lo_min)
    out = np.where(conc, 2, -1).astype(np.int8)
    out[insep] = 0
    return out


def cvm_c(x1: float, x2: float) -> float:
    """Cramer-von Mises kernel ``x1^2/2 + x2^2/2 - max(x1, x2) + 1/3``."""
    _finite(x1, x2)
    if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
        raise ValueError("cvm_c is defined on [0, 1]^2")
    return 0.5 * x1 * x1 + 0.5 * x2 * x2 - max(x1, x2) + 1.0 / 3.0


def h2_uniform(p1: tuple[float, float], p2: tuple[float, float]) -> float:
    """Second projection of ``h`` for independent uniform marginals: ``6 c(x) c(y)``."""
    return 6.0 * cvm_c(p1[0], p2[0]) * cvm_c(p1[1], p2[1])


def g_discrete(u1: float, u2: float, m: DiscreteMarginal) -> float:
    """``E[a(u1, u2, X3, X4)]`` for ``X3, X4`` i.i.d. from ``m``, by summation."""
    if not isinstance(m, DiscreteMarginal):
        raise InvalidMarginalError("g_discrete needs a DiscreteMarginal")
    _finite(u1, u2)
    u = np.asarray(m.support)
    p = m.p
    X3 = u[:, None]
    X4 = u[None, :]
    lo, hi = min(u1, u2), max(u1, u2)
    # u1,X3 < u2,X4  or  u1,X3 > u2,X4
    plus = (np.maximum(u1, X3) < np.minimum(u2, X4)) | (np.minimum(u1, X3) > np.maximum(u2, X4))
    # u1,u2 < X3,X4  or  u1,u2 > X3,X4
    minus = (hi < np.minimum(X3, X4)) | (lo > np.maximum(X3, X4))
    w = np.outer(p, p)
    return float(np.sum(w * plus) - np.sum(w * minus))


def _h1_enumerate(x: float, y: float, pts: np.ndarray, probs: np.ndarray) -> float:
    k = len(pts)
    if k > MAX_JOINT_SUPPORT:
        raise ValueError(f"joint support of {k} points exceeds the enumeration cap {MAX_JOINT_SUPPORT}")
    idx = np.array(list(itertools.product(range(k), repeat=3)), dtype=np.intp).reshape(-1, 3)
    xs = np.column_stack([np.full(len(idx), x), pts[idx, 0]])
    ys = np.column_stack([np.full(len(idx), y), pts[idx, 1]])
    codes = kernel_codes(xs, ys).astype(float)
    w = probs[idx[:, 0]] * probs[idx[:, 1]] * probs[idx[:, 2]]
    return float(np.dot(w, codes) / 3.0)


def h1_bruteforce(x: float, y: float, mx: DiscreteMarginal, my: DiscreteMarginal) -> float:
    """First projection ``h1(x, y)`` under the product law ``mx x my``.

    Exact expectation of ``h((x, y), Z2, Z3, Z4)`` over every triple from the
    joint support.
    """
    _finite(x, y)
    pts = np.array([(u, v) for u in mx.support for v in my.support], dtype=float)
    probs = np.array([pu * pv for pu in mx.masses for pv in my.masses])
    return _h1_enumerate(x, y, pts, probs)


def h1_bruteforce_joint(x: float, y: float, points: Sequence[tuple[float, float]], masses: Sequence[float]) -> float:
    """First projection ``h1(x, y)`` under an arbitrary finite joint law."""
    _finite(x, y)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    probs = np.asarray(masses, dtype=float)
    if len(probs) != len(pts) or np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > 1e-12:
        raise InvalidMarginalError("joint masses must be nonnegative, match the points, and sum to 1")
    return _h1_enumerate(x, y, pts, probs)
