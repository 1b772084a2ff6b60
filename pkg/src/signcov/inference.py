"""Independence tests based on ``t*`` and sample-size planning.

The asymptotic test rejects for large ``n * t*`` (upper tail): ``tau* >= 0``
with equality only under independence, so negative values are not evidence
of dependence.  Discrete marginals are estimated from the data and then
treated as known when building the null law.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from ._rng import stream
from .estimator import InsufficientSampleError, PairedSample, tstar, tstar_fraction, tstar_permuted
from .nulldist import NullDistribution
from .spectrum import (
    DEFAULT_EPS,
    MAX_SUPPORT,
    DiscreteMarginal,
    InvalidMarginalError,
    MixtureSpectrum,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
)

__all__ = [
    "AxisKind",
    "MarginalSpec",
    "ResolvedMarginals",
    "TestMethod",
    "TestResult",
    "PowerRequest",
    "DegenerateMarginalError",
    "resolve_marginals",
    "null_distribution",
    "test_asymptotic",
    "test_permutation",
    "critical_value",
    "power_normal_approx",
    "sample_size",
]

log = logging.getLogger(__name__)

RECOMMENDED_N = 80


class DegenerateMarginalError(ValueError):
    pass


class AxisKind(str, Enum):
    CONTINUOUS = "Continuous"
    DISCRETE = "Discrete"
    AUTO = "Auto"


class TestMethod(str, Enum):
    __test__ = False
    ASYMPTOTIC = "Asymptotic"
    PERMUTATION = "Permutation"


@dataclass(frozen=True)
class MarginalSpec:
    """How to treat each axis; an explicit marginal forces that axis discrete."""

    x: AxisKind = AxisKind.AUTO
    y: AxisKind = AxisKind.AUTO
    marginal_x: DiscreteMarginal | None = None
    marginal_y: DiscreteMarginal | None = None

    @classmethod
    def from_code(cls, code: str) -> "MarginalSpec":
        """``auto``, or a two-letter code such as ``dc`` (x discrete, y continuous)."""
        code = code.lower()
        if code == "auto":
            return cls()
        letters = {"c": AxisKind.CONTINUOUS, "d": AxisKind.DISCRETE}
        if len(code) != 2 or any(ch not in letters for ch in code):
            raise ValueError(f"unknown marginal code {code!r}")
        return cls(letters[code[0]], letters[code[1]])


@dataclass(frozen=True)
class ResolvedMarginals:
    x: AxisKind
    y: AxisKind
    marginal_x: DiscreteMarginal | None
    marginal_y: DiscreteMarginal | None
    warnings: tuple[str, ...] = ()

    @property
    def code(self) -> str:
        return ("d" if self.x is AxisKind.DISCRETE else "c") + ("d" if self.y is AxisKind.DISCRETE else "c")


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    t_star: float
    n: int
    scaled_statistic: float
    p_value: float
    method: TestMethod
    marginals: ResolvedMarginals
    spectrum_summary: dict | None = None
    seed: int | None = None
    permutations: int | None = None
    precision: float | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "n": self.n,
            "scaled_statistic": self.scaled_statistic,
            "p_value": self.p_value,
            "method": self.method.value,
            "marginals": {"x": self.marginals.x.value, "y": self.marginals.y.value},
            "spectrum": self.spectrum_summary,
            "seed": self.seed,
            "permutations": self.permutations,
            "precision": self.precision,
            "warnings": list(self.warnings),
        }


def _auto_kind(v: np.ndarray) -> AxisKind:
    distinct = np.unique(v).size
    has_tie = distinct < v.size
    if has_tie and distinct <= max(10, math.sqrt(v.size)):
        return AxisKind.DISCRETE
    return AxisKind.CONTINUOUS


def _resolve_axis(v: np.ndarray, kind: AxisKind, given: DiscreteMarginal | None, name: str):
    notes = []
    if given is not None:
        if not np.all(np.isin(v, np.asarray(given.support))):
            raise InvalidMarginalError(f"{name}: data contain values outside the supplied support")
        return AxisKind.DISCRETE, given, notes
    if kind is AxisKind.AUTO:
        kind = _auto_kind(v)
    if kind is AxisKind.DISCRETE:
        distinct = np.unique(v).size
        if distinct > MAX_SUPPORT:
            raise InvalidMarginalError(
                f"{name}: {distinct} distinct values exceed the discrete support cap of {MAX_SUPPORT}"
            )
        return kind, DiscreteMarginal.empirical(v), notes
    if np.unique(v).size < v.size:
        notes.append(f"{name}: ties present in an axis treated as continuous")
    return kind, None, notes


def resolve_marginals(s, spec: MarginalSpec | None = None) -> ResolvedMarginals:
    """Decide continuous/discrete per axis and estimate discrete pmfs.

    ``Auto`` makes an axis discrete when it has a tie and at most
    ``max(10, sqrt(n))`` distinct values.  Declared kinds and supplied
    marginals always win.
    """
    s = s if isinstance(s, PairedSample) else PairedSample(*s)
    spec = spec or MarginalSpec()
    kx, mx, wx = _resolve_axis(s.xs, spec.x, spec.marginal_x, "x")
    ky, my, wy = _resolve_axis(s.ys, spec.y, spec.marginal_y, "y")
    return ResolvedMarginals(kx, ky, mx, my, tuple(wx + wy))


@lru_cache(maxsize=256)
def _null_cached(code: str, mx, my, eps: float) -> NullDistribution:
    if code == "cc":
        spec = spectrum_continuous(eps)
    elif code == "dd":
        spec = spectrum_discrete(mx, my)
    elif code == "dc":
        spec = spectrum_mixed(mx, eps)
    else:
        spec = spectrum_mixed(my, eps)
    return NullDistribution(spec)


def null_distribution(resolved: ResolvedMarginals, eps: float = DEFAULT_EPS) -> NullDistribution:
    """Asymptotic null law of ``n * t*`` for resolved marginals."""
    return _null_cached(resolved.code, resolved.marginal_x, resolved.marginal_y, eps)


def test_asymptotic(s, spec: MarginalSpec | None = None, eps: float = DEFAULT_EPS) -> TestResult:
    """Upper-tail test of independence against the limit law of ``n * t*``.

    Raises
    ------
    InsufficientSampleError
        For fewer than four observations.
    DegenerateMarginalError
        If an axis has a single distinct value.
    PrecisionError
        If the null cdf cannot be inverted to the configured precision.
    """
    s = s if isinstance(s, PairedSample) else PairedSample(*s)
    if s.n < 4:
        raise InsufficientSampleError(f"insufficient sample: n = {s.n} < 4")
    for name, v in (("x", s.xs), ("y", s.ys)):
        if np.unique(v).size < 2:
            raise DegenerateMarginalError(f"degenerate marginal: {name} has a single distinct value")
    resolved = resolve_marginals(s, spec)
    notes = list(resolved.warnings)
    if s.n < RECOMMENDED_N:
        notes.append(f"n = {s.n} is below {RECOMMENDED_N}; the asymptotic null may be inaccurate")
    for note in notes:
        log.warning(note)
    t = tstar(s).value
    stat = s.n * t
    null = null_distribution(resolved, eps)
    F, err = null.cdf_with_error(stat)
    return TestResult(
        t_star=t,
        n=s.n,
        scaled_statistic=stat,
        p_value=min(max(1.0 - F, 0.0), 1.0),
        method=TestMethod.ASYMPTOTIC,
        marginals=resolved,
        spectrum_summary=null.spectrum.summary(),
        precision=err,
        warnings=tuple(notes),
    )


def test_permutation(s, B: int = 999, seed: int = 0, spec: MarginalSpec | None = None) -> TestResult:
    """Permutation test: ``p = (1 + #{t*_perm >= t*_obs}) / (B + 1)``.

    The ``y`` values are permuted ``B`` times using the seeded stream.
    """
    s = s if isinstance(s, PairedSample) else PairedSample(*s)
    if s.n < 4:
        raise InsufficientSampleError(f"insufficient sample: n = {s.n} < 4")
    if B < 99:
        raise ValueError("use at least 99 permutations")
    resolved = resolve_marginals(s, spec)
    obs = tstar_fraction(s.xs, s.ys)
    rng = stream(seed, 0x7E57)
    perms = np.argsort(rng.random((B, s.n)), axis=1)
    null = tstar_permuted(s.xs, s.ys, perms)
    # permuted values are exact fractions with the same denominator; compare on that grid
    denom = 3 * math.comb(s.n, 4)
    obs_num = obs.numerator * (denom // obs.denominator)
    exceed = int(np.sum(np.rint(null * denom).astype(np.int64) >= obs_num))
    t = float(obs)
    return TestResult(
        t_star=t,
        n=s.n,
        scaled_statistic=s.n * t,
        p_value=(1 + exceed) / (B + 1),
        method=TestMethod.PERMUTATION,
        marginals=resolved,
        seed=seed,
        permutations=B,
        warnings=resolved.warnings,
    )


@dataclass(frozen=True)
class PowerRequest:
    """Inputs of the normal-approximation sample-size bound.

    ``spectrum`` fixes the null law used for the critical value (continuous
    marginals by default).
    """

    tau_star: float
    sigma1sq_bound: float
    alpha: float = 0.05
    beta: float = 0.8
    spectrum: MixtureSpectrum = field(default_factory=spectrum_continuous)

    def __post_init__(self) -> None:
        if not self.tau_star > 0:
            raise ValueError("tau_star must be positive")
        if self.tau_star > 2.0 / 3.0:
            raise ValueError("tau_star cannot exceed 2/3")
        if not 0 < self.sigma1sq_bound <= 0.25:
            raise ValueError("sigma1sq_bound must lie in (0, 1/4]")
        if not 0 < self.alpha < 1 or not 0 < self.beta < 1:
            raise ValueError("alpha and beta must lie in (0, 1)")


@lru_cache(maxsize=128)
def _critical_cached(spectrum: MixtureSpectrum, alpha: float) -> float:
    return NullDistribution(spectrum).quantile(1.0 - alpha)


def critical_value(spectrum: MixtureSpectrum, alpha: float) -> float:
    """``c_alpha``: the ``1 - alpha`` quantile of the null law of ``n * t*``."""
    return _critical_cached(spectrum, float(alpha))


def power_normal_approx(req: PowerRequest, n: int) -> float:
    """Asymptotic power lower bound ``P(N(tau*, 16 s^2 / n) > c_alpha / n)``.

    Zero when ``c_alpha / n > tau*``.
    """
    if n < 4:
        raise InsufficientSampleError(f"insufficient sample: n = {n} < 4")
    c = critical_value(req.spectrum, req.alpha)
    if c / n > req.tau_star:
        return 0.0
    sd = math.sqrt(16.0 * req.sigma1sq_bound / n)
    return float(norm.sf((c / n - req.tau_star) / sd))


# keep pytest from collecting the public test_* functions on import
test_asymptotic.__test__ = False  # type: ignore[attr-defined]
test_permutation.__test__ = False  # type: ignore[attr-defined]


def sample_size(req: PowerRequest) -> int:
    """Smallest ``n >= 4`` with ``c_alpha / n <= tau*`` and power bound at least ``beta``."""
    if not req.tau_star > 0:
        raise ValueError("tau_star must be positive")

    def ok(n: int) -> bool:
        return power_normal_approx(req, n) >= req.beta

    if ok(4):
        return 4
    lo, hi = 4, 8
    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
