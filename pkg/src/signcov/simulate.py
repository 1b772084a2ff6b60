"""Scenario samplers and desk-scale experiment drivers.

Scenarios
---------
* :class:`BivariateNormal` - standard bivariate normal with correlation ``rho``.
* :class:`DiscreteGrid` - mixture, at weight ``p``, of a pattern distribution
  on ``{1..5}^2`` with the uniform distribution on the grid.
* :class:`MixedMeanShift` - discrete ``X``; ``Y | X = x ~ N(mu_x, 1)`` with
  ``mu_x = mu`` on a chosen subset of the support and 0 elsewhere.
* :class:`Independent` - independent marginals, each either standard normal
  or a given discrete law (used by the convergence and level studies).

Every replicate ``r`` of a study with seed ``s`` draws from its own stream
``(s, tag, r)``, so results do not depend on how replicates are scheduled
and :func:`draw` with ``replicate=r`` reproduces replicate ``r`` exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats

from ._rng import stream
from .estimator import PairedSample, estimate_tau_sigma1, tstar_many
from .inference import MarginalSpec, null_distribution, resolve_marginals
from .nulldist import NullDistribution
from .spectrum import (
    DEFAULT_EPS,
    DiscreteMarginal,
    MixtureSpectrum,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
)

__all__ = [
    "GridPattern",
    "BivariateNormal",
    "DiscreteGrid",
    "MixedMeanShift",
    "Independent",
    "Scenario",
    "draw",
    "draw_many",
    "CurvePoint",
    "tau_star_curve",
    "ks_distance",
    "ConvergenceRow",
    "ConvergenceStudy",
    "convergence_study",
    "level_study",
    "PowerPoint",
    "PowerStudy",
    "power_study",
    "pearson_pvalues",
    "chisq_pvalue",
    "two_sample_t_pvalue",
    "to_json",
    "to_csv",
]

_DRAW_TAG = 0xD7A3
GRID = 5


class GridPattern(str, Enum):
    DIAGONAL = "Diagonal"
    PERMUTATION = "Permutation"
    LSHAPE = "LShape"
    UNIFORM = "UniformGrid"


def _pattern_cells(pattern: GridPattern) -> list[tuple[int, int]]:
    # (x, y) cells, both in 1..5
    if pattern is GridPattern.DIAGONAL:
        return [(i, i) for i in range(1, 6)]
    if pattern is GridPattern.PERMUTATION:
        return [(1, 1), (2, 5), (3, 3), (4, 4), (5, 2)]
    if pattern is GridPattern.LSHAPE:
        return sorted({(5, j) for j in range(1, 6)} | {(i, 1) for i in range(1, 6)})
    return [(i, j) for i in range(1, 6) for j in range(1, 6)]


@dataclass(frozen=True)
class BivariateNormal:
    rho: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")

    def null_spectrum(self, eps: float = DEFAULT_EPS) -> MixtureSpectrum:
        return spectrum_continuous(eps)

    def describe(self) -> dict:
        return {"kind": "BivariateNormal", "rho": self.rho}


@dataclass(frozen=True)
class DiscreteGrid:
    """``p * pattern + (1 - p) * uniform`` on the 5 x 5 grid."""

    pattern: GridPattern
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "pattern", GridPattern(self.pattern))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("mixture weight must lie in [0, 1]")

    def masses(self) -> np.ndarray:
        """Mass table indexed ``[x - 1, y - 1]``."""
        pat = np.zeros((GRID, GRID))
        cells = _pattern_cells(self.pattern)
        for x, y in cells:
            pat[x - 1, y - 1] = 1.0 / len(cells)
        return self.p * pat + (1.0 - self.p) / GRID**2

    def marginals(self) -> tuple[DiscreteMarginal, DiscreteMarginal]:
        M = self.masses()
        return DiscreteMarginal.from_masses(M.sum(axis=1)), DiscreteMarginal.from_masses(M.sum(axis=0))

    def null_spectrum(self, eps: float = DEFAULT_EPS) -> MixtureSpectrum:
        return spectrum_discrete(*self.marginals())

    def describe(self) -> dict:
        return {"kind": "DiscreteGrid", "pattern": self.pattern.value, "p": self.p}


@dataclass(frozen=True)
class MixedMeanShift:
    """Discrete ``X`` and ``Y | X = x ~ N(mu_x, 1)``.

    ``mu_x = mu`` when ``x`` is in ``shifted`` and 0 otherwise.
    """

    marginal: DiscreteMarginal
    shifted: tuple[float, ...]
    mu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "shifted", tuple(float(v) for v in self.shifted))
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if any(v not in self.marginal.support for v in self.shifted):
            raise ValueError("shifted values must belong to the support")

    @classmethod
    def bernoulli(cls, mu: float, q: float = 0.3) -> "MixedMeanShift":
        """``X ~ Bernoulli(q)`` with the mean shift on ``x = 0``."""
        return cls(DiscreteMarginal((0.0, 1.0), (1.0 - q, q)), (0.0,), mu)

    @classmethod
    def uniform_six(cls, mu: float) -> "MixedMeanShift":
        """``X`` uniform on ``1..6`` with the mean shift on even values."""
        return cls(DiscreteMarginal.from_masses([1 / 6] * 6), (2.0, 4.0, 6.0), mu)

    def null_spectrum(self, eps: float = DEFAULT_EPS) -> MixtureSpectrum:
        return spectrum_mixed(self.marginal, eps)

    def describe(self) -> dict:
        return {
            "kind": "MixedMeanShift",
            "support": list(self.marginal.support),
            "masses": list(self.marginal.masses),
            "shifted": list(self.shifted),
            "mu": self.mu,
        }


@dataclass(frozen=True)
class Independent:
    """Independent marginals; ``None`` means standard normal."""

    x: DiscreteMarginal | None = None
    y: DiscreteMarginal | None = None

    @classmethod
    def continuous(cls) -> "Independent":
        return cls()

    @classmethod
    def discrete_example(cls) -> "Independent":
        """``X`` uniform on ``1..10``, ``P(Y = i)`` proportional to ``2^-i`` on ``1..12``."""
        w = np.array([2.0**-i for i in range(1, 13)])
        return cls(DiscreteMarginal.from_masses([0.1] * 10), DiscreteMarginal.from_masses(w / w.sum()))

    @classmethod
    def mixed_example(cls) -> "Independent":
        """``X ~ N(0, 1)`` and ``Y`` uniform on ``1..5``."""
        return cls(None, DiscreteMarginal.from_masses([0.2] * 5))

    def null_spectrum(self, eps: float = DEFAULT_EPS) -> MixtureSpectrum:
        if self.x is None and self.y is None:
            return spectrum_continuous(eps)
        if self.x is not None and self.y is not None:
            return spectrum_discrete(self.x, self.y)
        return spectrum_mixed(self.x if self.x is not None else self.y, eps)

    def describe(self) -> dict:
        def one(m):
            return None if m is None else {"support": list(m.support), "masses": list(m.masses)}

        return {"kind": "Independent", "x": one(self.x), "y": one(self.y)}


Scenario = Union[BivariateNormal, DiscreteGrid, MixedMeanShift, Independent]


def _draw_xy(sc: Scenario, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sc, BivariateNormal):
        # closed-form Cholesky factor of [[1, rho], [rho, 1]]; valid at |rho| = 1
        L = np.array([[1.0, 0.0], [sc.rho, math.sqrt(1.0 - sc.rho * sc.rho)]])
        z = rng.standard_normal((n, 2)) @ L.T
        return z[:, 0], z[:, 1]
    if isinstance(sc, DiscreteGrid):
        idx = rng.choice(GRID * GRID, size=n, p=sc.masses().ravel())
        return (idx // GRID + 1).astype(float), (idx % GRID + 1).astype(float)
    if isinstance(sc, MixedMeanShift):
        x = rng.choice(np.asarray(sc.marginal.support), size=n, p=sc.marginal.p)
        mu = np.where(np.isin(x, sc.shifted), sc.mu, 0.0)
        return x, mu + rng.standard_normal(n)
    if isinstance(sc, Independent):

        def one(m):
            if m is None:
                return rng.standard_normal(n)
            return rng.choice(np.asarray(m.support), size=n, p=m.p)

        x = one(sc.x)
        return x, one(sc.y)
    raise TypeError(f"unknown scenario type {type(sc).__name__}")


def draw(sc: Scenario, n: int, seed: int, replicate: int = 0) -> PairedSample:
    """Draw ``n`` pairs from ``sc``; deterministic in ``(seed, replicate)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x, y = _draw_xy(sc, n, stream(seed, _DRAW_TAG, replicate))
    return PairedSample(x, y)


def draw_many(sc: Scenario, n: int, reps: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Replicates ``0..reps-1`` stacked as ``(reps, n)`` arrays."""
    if n < 1 or reps < 1:
        raise ValueError("n and reps must be at least 1")
    X = np.empty((reps, n))
    Y = np.empty((reps, n))
    for r in range(reps):
        X[r], Y[r] = _draw_xy(sc, n, stream(seed, _DRAW_TAG, r))
    return X, Y


# -- tau* curve ---------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    rho: float
    mean_tstar: float
    se: float
    reps: int
    mean_16sigma1sq: float | None = None


def tau_star_curve(
    rhos: Sequence[float],
    n: int,
    reps: int,
    seed: int,
    with_sigma1: bool = False,
) -> list[CurvePoint]:
    """Monte Carlo mean of ``t*`` per correlation under bivariate normality.

    With ``with_sigma1`` the replicate average of ``16 * sigma_1^2`` (from
    :func:`~signcov.estimator.estimate_tau_sigma1`) is reported too.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    out = []
    for k, rho in enumerate(rhos):
        X, Y = draw_many(BivariateNormal(float(rho)), n, reps, stream_key(seed, k))
        t = tstar_many(X, Y)
        sig = None
        if with_sigma1:
            sig = float(np.mean([16.0 * estimate_tau_sigma1((X[r], Y[r]), seed=r)[1] for r in range(reps)]))
        se = float(np.std(t, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        out.append(CurvePoint(float(rho), float(np.mean(t)), se, reps, sig))
    return out


def stream_key(seed: int, k: int) -> int:
    """Derived integer seed for the ``k``-th sub-study of ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1, np.uint64)[0] >> 1)


# -- convergence to the null law ------------------------------------------------

def ks_distance(sample: np.ndarray, F: Callable[[np.ndarray], np.ndarray]) -> float:
    """``sup |F_n - F|`` for continuous ``F``, accounting for tied sample values."""
    v, counts = np.unique(np.asarray(sample, dtype=float), return_counts=True)
    m = counts.sum()
    upper = np.cumsum(counts) / m
    lower = upper - counts / m
    Fv = np.asarray(F(v), dtype=float)
    return float(max(np.max(np.abs(upper - Fv)), np.max(np.abs(Fv - lower))))


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    reps: int
    ks: float
    mean: float
    variance: float


@dataclass
class ConvergenceStudy:
    scenario: dict
    rows: list[ConvergenceRow]
    samples: dict[int, np.ndarray] = field(repr=False)
    reference: NullDistribution = field(repr=False)
    seed: int = 0

    def ks_trend(self) -> float:
        """Spearman correlation between ``n`` and the KS distance."""
        if len(self.rows) < 2:
            return float("nan")
        return float(stats.spearmanr([r.n for r in self.rows], [r.ks for r in self.rows])[0])


def convergence_study(
    scenario: Scenario,
    sizes: Sequence[int],
    reps: int,
    seed: int,
    eps: float = DEFAULT_EPS,
) -> ConvergenceStudy:
    """Empirical law of ``n * t*`` per sample size against the asymptotic cdf.

    The reference law uses the scenario's population marginals; KS distances
    use a monotone interpolant of the inverted cdf.
    """
    if any(n < 4 for n in sizes):
        raise ValueError("sample sizes must be at least 4")
    ref = NullDistribution(scenario.null_spectrum(eps))
    F = ref.cdf_interpolant()
    rows, samples = [], {}
    for k, n in enumerate(sizes):
        X, Y = draw_many(scenario, int(n), reps, stream_key(seed, k))
        z = n * tstar_many(X, Y)
        samples[int(n)] = z
        rows.append(ConvergenceRow(int(n), reps, ks_distance(z, F), float(np.mean(z)), float(np.var(z, ddof=1))))
    return ConvergenceStudy(scenario.describe(), rows, samples, ref, seed)


def level_study(
    scenario: Scenario,
    n: int,
    reps: int,
    alpha: float,
    seed: int,
    spec: MarginalSpec | None = None,
    eps: float = DEFAULT_EPS,
) -> tuple[float, float]:
    """Rejection rate (and its standard error) of the asymptotic test.

    Each replicate goes through the same marginal resolution and null law as
    :func:`~signcov.inference.test_asymptotic` (discrete pmfs estimated from
    that replicate).
    """
    X, Y = draw_many(scenario, n, reps, seed)
    t = tstar_many(X, Y)
    reject = 0
    for r in range(reps):
        resolved = resolve_marginals(PairedSample(X[r], Y[r]), spec)
        null = null_distribution(resolved, eps)
        if 1.0 - null.cdf(n * t[r]) <= alpha:
            reject += 1
    rate = reject / reps
    return rate, math.sqrt(rate * (1.0 - rate) / reps)


# -- baselines ---------------------------------------------------------------

def pearson_pvalues(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Two-sided Pearson test per row via ``r sqrt((n-2)/(1-r^2)) ~ t_{n-2}``."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    n = X.shape[1]
    xc = X - X.mean(axis=1, keepdims=True)
    yc = Y - Y.mean(axis=1, keepdims=True)
    denom = np.sqrt(np.sum(xc * xc, axis=1) * np.sum(yc * yc, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.clip(np.sum(xc * yc, axis=1) / denom, -1.0, 1.0)
        tstat = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * stats.t.sf(np.abs(tstat), n - 2)
    return np.where(np.isnan(r), 1.0, p)


def chisq_pvalue(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    """Pearson chi-square independence test without continuity correction.

    Cells with zero expected count (empty rows or columns of the observed
    table) are excluded; the returned flag records whether that happened.
    Tables with fewer than two non-empty rows or columns give ``p = 1``.
    """
    xv, xi = np.unique(x, return_inverse=True)
    yv, yi = np.unique(y, return_inverse=True)
    table = np.zeros((xv.size, yv.size))
    np.add.at(table, (xi, yi), 1.0)
    return _chisq_table(table)


def _chisq_table(table: np.ndarray) -> tuple[float, bool]:
    n = table.sum()
    rows, cols = table.sum(axis=1), table.sum(axis=0)
    keep_r, keep_c = rows > 0, cols > 0
    excluded = not (keep_r.all() and keep_c.all())
    t = table[keep_r][:, keep_c]
    if t.shape[0] < 2 or t.shape[1] < 2:
        return 1.0, excluded
    E = np.outer(t.sum(axis=1), t.sum(axis=0)) / n
    stat = float(np.sum((t - E) ** 2 / E))
    df = (t.shape[0] - 1) * (t.shape[1] - 1)
    return float(stats.chi2.sf(stat, df)), excluded


def two_sample_t_pvalue(x: np.ndarray, y: np.ndarray) -> float:
    """Pooled-variance two-sided t-test of ``y`` between the two ``x`` groups."""
    groups = np.unique(x)
    if groups.size != 2:
        return 1.0
    a, b = y[x == groups[0]], y[x == groups[1]]
    if a.size < 2 or b.size < 2:
        return 1.0
    return float(stats.ttest_ind(a, b, equal_var=True).pvalue)


def _default_baselines(sc: Scenario) -> list[str]:
    if isinstance(sc, BivariateNormal):
        return ["pearson"]
    if isinstance(sc, DiscreteGrid):
        return ["chisq"]
    if isinstance(sc, MixedMeanShift) and sc.marginal.size == 2:
        return ["ttest"]
    return []


# -- power -----------------------------------------------------------------

@dataclass(frozen=True)
class PowerPoint:
    level: float
    power: dict[str, float]
    se: dict[str, float]
    reps: int
    flags: dict[str, int] = field(default_factory=dict)


@dataclass
class PowerStudy:
    family: str
    n: int
    alpha: float
    seed: int
    critical_value: float | None
    points: list[PowerPoint]

    def curve(self, test: str) -> list[float]:
        return [p.power[test] for p in self.points]


ExternalTest = Callable[[PairedSample], float]


def power_study(
    family: Callable[[float], Scenario],
    levels: Sequence[float],
    n: int,
    reps: int,
    alpha: float,
    seed: int,
    baselines: Sequence[str] | None = None,
    hook: tuple[str, ExternalTest] | None = None,
    marginals: str = "population",
    eps: float = DEFAULT_EPS,
    name: str | None = None,
) -> PowerStudy:
    """Rejection frequencies of the ``t*`` test and baselines per parameter level.

    Parameters
    ----------
    family : callable
        Maps a parameter level (``rho``, mixture weight or ``mu``) to a scenario.
    baselines : sequence of str, optional
        Any of ``pearson``, ``chisq``, ``ttest``; chosen from the scenario
        type when omitted.
    hook : (name, callable), optional
        Extra test mapping a sample to a p-value (e.g. an external distance
        covariance implementation).
    marginals : {"population", "empirical"}
        ``population`` uses one critical value per level computed from the
        scenario's true marginals; ``empirical`` runs the full per-replicate
        test (pmfs estimated from each sample).
    """
    if reps < 100:
        raise ValueError("use at least 100 replicates")
    if marginals not in ("population", "empirical"):
        raise ValueError("marginals must be 'population' or 'empirical'")
    points = []
    crit_last = None
    for k, level in enumerate(levels):
        sc = family(float(level))
        names = list(baselines) if baselines is not None else _default_baselines(sc)
        X, Y = draw_many(sc, n, reps, stream_key(seed, k))
        stat = n * tstar_many(X, Y)
        if marginals == "population":
            crit_last = NullDistribution(sc.null_spectrum(eps)).quantile(1.0 - alpha)
            rej = {"tstar": stat > crit_last}
        else:
            pv = np.array([
                1.0 - null_distribution(resolve_marginals(PairedSample(X[r], Y[r])), eps).cdf(stat[r])
                for r in range(reps)
            ])
            rej = {"tstar": pv <= alpha}
        flags: dict[str, int] = {}
        for b in names:
            if b == "pearson":
                rej[b] = pearson_pvalues(X, Y) <= alpha
            elif b == "chisq":
                res = [chisq_pvalue(X[r], Y[r]) for r in range(reps)]
                rej[b] = np.array([p for p, _ in res]) <= alpha
                flags["chisq_excluded_cells"] = int(sum(f for _, f in res))
            elif b == "ttest":
                rej[b] = np.array([two_sample_t_pvalue(X[r], Y[r]) for r in range(reps)]) <= alpha
            else:
                raise ValueError(f"unknown baseline {b!r}")
        if hook is not None:
            hname, fn = hook
            rej[hname] = np.array([fn(PairedSample(X[r], Y[r])) for r in range(reps)]) <= alpha
        power = {key: float(np.mean(v)) for key, v in rej.items()}
        se = {key: math.sqrt(p * (1.0 - p) / reps) for key, p in power.items()}
        points.append(PowerPoint(float(level), power, se, reps, flags))
    label = name or type(family(float(levels[0]))).__name__
    return PowerStudy(label, n, alpha, seed, crit_last, points)


# -- serialisation -------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _result_body(result) -> tuple[dict, list[dict]]:
    """Summary fields and flat rows of a study result."""
    if isinstance(result, ConvergenceStudy):
        summary = {
            "study": "convergence",
            "scenario": result.scenario,
            "ks_trend_spearman": result.ks_trend(),
            "tail_bound": result.reference.spectrum.tail_bound,
            "spectrum": result.reference.spectrum.summary(),
        }
        return summary, [asdict(r) for r in result.rows]
    if isinstance(result, PowerStudy):
        summary = {
            "study": "power",
            "family": result.family,
            "n": result.n,
            "alpha": result.alpha,
            "critical_value": result.critical_value,
        }
        rows = []
        for p in result.points:
            for test, val in p.power.items():
                rows.append({"level": p.level, "test": test, "power": val, "se": p.se[test], "reps": p.reps})
        return summary, rows
    if isinstance(result, list) and all(isinstance(p, CurvePoint) for p in result):
        return {"study": "tau_star_curve"}, [asdict(p) for p in result]
    raise TypeError(f"cannot serialise {type(result).__name__}")


def to_json(result, meta: dict) -> str:
    """JSON document with ``meta`` (version, config, seed) merged in."""
    summary, rows = _result_body(result)
    doc = {"schema": 1, **_plain(meta), **_plain(summary), "rows": _plain(rows)}
    return json.dumps(doc, indent=2, sort_keys=True)


def to_csv(result, meta: dict) -> str:
    """Flat CSV, one row per summary row; a leading ``# {json}`` line carries ``meta``."""
    summary, rows = _result_body(result)
    head = {**_plain(meta), **{k: v for k, v in _plain(summary).items() if not isinstance(v, (dict, list))}}
    buf = io.StringIO()
    buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()
