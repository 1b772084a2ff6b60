"""Centered chi-square mixtures as evaluable distributions.

A :class:`NullDistribution` wraps a :class:`~signcov.spectrum.MixtureSpectrum`
and models ``X = sum_k w_k (chi2_1 - 1) + G`` where ``G`` is a centered
Gaussian standing in for the truncated weights (variance ``2 * tail_sq``).
This is the law of ``n * t*`` (not ``t*``).

The cdf and density come from Gil-Pelaez inversion of the characteristic
function.  When the modulus of the characteristic function decays quickly
(many weights, or a Gaussian part) the integral is a trapezoid sum on
``[0, T]`` whose step is refined until two successive sums agree; the step
is never coarser than ``2 pi / range`` so aliasing stays below ``1e-12``.
With only a few weights the modulus decays like a power of ``t`` and the
tail beyond ``T`` is instead integrated as a Fourier integral with
QUADPACK (``scipy.integrate.quad`` with a ``cos``/``sin`` weight).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from ._rng import stream
from .spectrum import MixtureSpectrum

__all__ = ["NullDistribution", "PrecisionError", "char_function", "cdf", "density", "quantile", "sample"]


class PrecisionError(ArithmeticError):
    """Requested precision not reached; ``achieved`` holds the error estimate."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved precision {achieved:.3g})")
        self.achieved = achieved


_ALIAS_PROB = 1e-12
_CHUNK = 4096


@dataclass(frozen=True)
class NullDistribution:
    """Law of ``sum_k w_k (chi2_1 - 1)`` built from a mixture spectrum.

    Parameters
    ----------
    spectrum : MixtureSpectrum
    target : float
        Absolute error target of :meth:`cdf` (the density uses ``100 * target``).
    max_evals : int
        Cap on characteristic-function evaluations per trapezoid inversion.
    """

    spectrum: MixtureSpectrum
    target: float = 1e-6
    max_evals: int = 2_000_000
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.spectrum.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("negative mixture weights are not supported")
        self._cache["w"] = w
        self._cache["W"] = float(math.fsum(w))
        self._cache["tsq"] = float(self.spectrum.tail_sq)
        self._cache["upper"] = self._upper_point()
        self._cache["T"] = {}

    # -- basic properties -------------------------------------------------
    @property
    def weights(self) -> np.ndarray:
        return self._cache["w"]

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return self.spectrum.variance

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def lower_support(self) -> float:
        """Infimum of the support (``-inf`` with a Gaussian tail part)."""
        return -self._cache["W"] if self._cache["tsq"] == 0.0 else -math.inf

    def _lower_point(self) -> float:
        # below this point the cdf is < 1e-12
        return -self._cache["W"] - 7.5 * math.sqrt(2.0 * self._cache["tsq"])

    def _cumulant_gen(self, s: np.ndarray) -> np.ndarray:
        w = self.weights
        s = np.atleast_1d(s)[:, None]
        return np.sum(-0.5 * np.log1p(-2.0 * w * s) - w * s, axis=1) + self._cache["tsq"] * s[:, 0] ** 2

    def _upper_point(self) -> float:
        """Chernoff point ``u`` with ``P(X > u) <= 1e-12``."""
        w = self.weights
        tsq = self._cache["tsq"]
        if w.size == 0 and tsq == 0.0:
            return 0.0
        smax = 0.5 / w[0] if w.size else math.inf
        if math.isinf(smax):
            smax = 50.0 / math.sqrt(2 * tsq)
        s = smax * (1.0 - np.geomspace(1e-6, 1.0, 400, endpoint=False))
        u = (self._cumulant_gen(s) - math.log(_ALIAS_PROB)) / s
        return float(np.min(u))

    # -- characteristic function ------------------------------------------
    def _log_modulus_phase(self, t: np.ndarray, x: float) -> tuple[np.ndarray, np.ndarray]:
        """``log|phi(t) e^{-itx}|`` and its argument, accumulated in logs."""
        w = self.weights
        t = np.asarray(t, dtype=float)
        logmod = np.empty_like(t)
        phase = np.empty_like(t)
        W = self._cache["W"]
        tsq = self._cache["tsq"]
        for a in range(0, t.size, _CHUNK):
            tt = t[a:a + _CHUNK, None]
            z = 2.0 * w * tt
            logmod[a:a + _CHUNK] = -0.25 * np.sum(np.log1p(z * z), axis=1) - tsq * tt[:, 0] ** 2
            phase[a:a + _CHUNK] = 0.5 * np.sum(np.arctan(z), axis=1) - (W + x) * tt[:, 0]
        return logmod, phase

    def char_function(self, t) -> np.ndarray | complex:
        """``phi(t) = prod_k (1 - 2i w_k t)^(-1/2) exp(-i w_k t)`` (times the Gaussian part)."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        logmod, phase = self._log_modulus_phase(tt, 0.0)
        out = np.exp(logmod) * np.exp(1j * phase)
        return complex(out[0]) if scalar else out

    # -- inversion machinery ----------------------------------------------
    def _envelope_table(self, power: int) -> tuple[np.ndarray, np.ndarray]:
        """Tail integrals ``int_T^Tmax |phi(t)| / t^power dt`` on a log grid of ``T``."""
        key = ("env", power)
        if key not in self._cache:
            w = self.weights
            t0 = 1.0 / w[0] if w.size else 1.0
            # beyond 1e14 the trapezoid path is over budget anyway
            u = np.linspace(math.log(t0), math.log(1e14), 6000)
            lm, _ = self._log_modulus_phase(np.exp(u), 0.0)
            g = np.exp(lm + (1 - power) * u)
            seg = 0.5 * (g[1:] + g[:-1]) * np.diff(u)
            tail = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
            self._cache[key] = (u, tail)
        return self._cache[key]

    def _envelope_tail(self, T: float, power: int) -> float:
        """``int_T^inf |phi(t)| / t^power dt`` (a bound on the truncation error)."""
        u, tail = self._envelope_table(power)
        lu = math.log(T)
        if lu >= u[-1]:
            return math.inf
        return float(np.interp(lu, u, tail))

    def _truncation_point(self, power: int, tol: float, h: float) -> float | None:
        """Smallest doubling ``T`` with envelope tail below ``tol``; None if over budget."""
        key = (power, tol)
        cache = self._cache["T"]
        if key in cache:
            T = cache[key]
            return None if T is None or T / h > self.max_evals else T
        w = self.weights
        T = 1.0 / w[0] if w.size else 1.0
        while self._envelope_tail(T, power) > tol:
            T *= 2.0
            if T > 1e12:
                cache[key] = None
                return None
        cache[key] = T
        return None if T / h > self.max_evals else T

    def _step(self, x: float) -> float:
        span = max(x - self._lower_point(), self._cache["upper"] - x, 1e-3)
        return 2.0 * math.pi / span

    def _trapezoid(self, x: float, T: float, h: float, kind: str, tol: float) -> tuple[float, float]:
        """Trapezoid sum of the inversion integrand on ``[0, T]`` with step halving."""

        def values(t: np.ndarray) -> np.ndarray:
            lm, ph = self._log_modulus_phase(t, x)
            if kind == "cdf":
                return np.exp(lm) * np.sin(ph) / t
            return np.exp(lm) * np.cos(ph)

        f0 = -x if kind == "cdf" else 1.0
        k = np.arange(1, int(math.ceil(T / h)) + 1)
        acc = 0.5 * f0 + float(np.sum(values(k * h)))
        evals = k.size
        est = h * acc
        while True:
            h *= 0.5
            k = np.arange(1, int(math.ceil(T / h)) + 1, 2)
            evals += k.size
            if evals > self.max_evals:
                return est, math.inf
            acc += float(np.sum(values(k * h)))
            new = h * acc
            diff = abs(new - est)
            est = new
            if diff <= tol:
                return est, diff

    def _fourier_path(self, x: float, kind: str, tol: float) -> tuple[float, float]:
        """``int_0^inf`` via adaptive quadrature near 0 plus a QUADPACK Fourier tail."""
        w = self.weights
        W = self._cache["W"]
        omega = W + x

        def logmod(t: float) -> float:
            z = 2.0 * w * t
            return -0.25 * float(np.sum(np.log1p(z * z))) - self._cache["tsq"] * t * t

        def psi(t: float) -> float:
            return 0.5 * float(np.sum(np.arctan(2.0 * w * t)))

        def full(t: float) -> float:
            if t == 0.0:
                return -x if kind == "cdf" else 1.0
            m = math.exp(logmod(t))
            th = psi(t) - omega * t
            return m * math.sin(th) / t if kind == "cdf" else m * math.cos(th)

        T1 = max(4.0 * math.pi / max(omega, 1e-12), 1.0 / w[0]) if omega > 0 else 1.0 / w[0]
        T1 = min(T1, 1e6)
        # QUADPACK warnings are redundant: the returned error estimates are checked by the caller
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, err_head = integrate.quad(full, 0.0, T1, limit=2000, epsabs=tol / 4, epsrel=0.0)
            if omega <= 0:
                tail, err_tail = integrate.quad(full, T1, math.inf, limit=2000, epsabs=tol / 4, epsrel=0.0)
                return head + tail, err_head + err_tail

        if kind == "cdf":
            # m sin(psi - omega t)/t = (m sin psi / t) cos(omega t) - (m cos psi / t) sin(omega t)
            def amp_c(t: float) -> float:
                return math.exp(logmod(t)) * math.sin(psi(t)) / t

            def amp_s(t: float) -> float:
                return -math.exp(logmod(t)) * math.cos(psi(t)) / t
        else:
            # m cos(psi - omega t) = m cos psi cos(omega t) + m sin psi sin(omega t)
            def amp_c(t: float) -> float:
                return math.exp(logmod(t)) * math.cos(psi(t))

            def amp_s(t: float) -> float:
                return math.exp(logmod(t)) * math.sin(psi(t))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            tc, ec = integrate.quad(amp_c, T1, math.inf, weight="cos", wvar=omega, limlst=200, epsabs=tol / 4)
            ts, es = integrate.quad(amp_s, T1, math.inf, weight="sin", wvar=omega, limlst=200, epsabs=tol / 4)
        return head + tc + ts, err_head + ec + es

    def _integral(self, x: float, kind: str, tol: float) -> tuple[float, float]:
        power = 1 if kind == "cdf" else 0
        h = self._step(x)
        T = self._truncation_point(power, tol / 10, h)
        if T is not None:
            val, err = self._trapezoid(x, T, h, kind, tol / 10)
            if math.isfinite(err):
                return val, err + tol / 10
        return self._fourier_path(x, kind, tol)

    # -- public evaluations -------------------------------------------------
    def cdf_with_error(self, x: float) -> tuple[float, float]:
        """``(F(x), error estimate)``; raises :class:`PrecisionError` past the target."""
        x = float(x)
        if self._cache["tsq"] == 0.0 and x <= -self._cache["W"]:
            return 0.0, 0.0
        if x < self._lower_point():
            return 0.0, 1e-12
        tol = self.target * math.pi
        val, err = self._integral(x, "cdf", tol)
        F = 0.5 - val / math.pi
        err /= math.pi
        if not err <= self.target:
            raise PrecisionError("cdf inversion did not reach the target precision", err)
        return min(max(F, 0.0), 1.0), err

    def cdf(self, x):
        """Cumulative distribution function (scalar or array input)."""
        if np.ndim(x) == 0:
            return self.cdf_with_error(x)[0]
        return np.array([self.cdf_with_error(v)[0] for v in np.ravel(x)]).reshape(np.shape(x))

    def sf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def density(self, x):
        """Density by inversion; absolute accuracy about ``100 * target``."""
        if np.ndim(x) != 0:
            return np.array([self.density(v) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        if self._cache["tsq"] == 0.0 and x <= -self._cache["W"]:
            return 0.0
        if x < self._lower_point():
            return 0.0
        tol = 100 * self.target * math.pi
        val, err = self._integral(x, "density", tol)
        if not err / math.pi <= 100 * self.target:
            raise PrecisionError("density inversion did not reach the target precision", err / math.pi)
        return max(val / math.pi, 0.0)

    def quantile(self, q: float) -> float:
        """Inverse cdf by bracketed root finding; ``|F(x) - q| <= 1e-6``."""
        if not 0.0 < q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        sd = self.std if self.variance > 0 else 1.0
        lo, hi = -sd, sd
        floor = self._lower_point()
        while self.cdf(lo) > q:
            lo = lo - 2.0 * (hi - lo)
            if lo <= floor:
                lo = floor
                break
        while self.cdf(hi) < q:
            hi = hi + 2.0 * (hi - lo)
        x = optimize.brentq(lambda v: self.cdf(v) - q, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)
        return float(x)

    def cdf_interpolant(self, points: int = 600):
        """Monotone cubic interpolant of the cdf on ``[lower, upper]`` tail points.

        Nodes are quadratically clustered at the lower end, where the cdf of a
        finite mixture behaves like a square root.  Outside the node range the
        interpolant returns 0 or 1.  Intended for vectorised summaries (KS
        distances) where thousands of exact inversions would be wasteful.
        """
        key = ("interp", points)
        if key in self._cache:
            return self._cache[key]
        lo = max(self._lower_point(), -self._cache["W"])
        hi = self._cache["upper"]
        u = np.linspace(0.0, 1.0, points)
        nodes = lo + (hi - lo) * u * u
        vals = np.maximum.accumulate(self.cdf(nodes))
        spline = interpolate.PchipInterpolator(nodes, vals, extrapolate=False)

        def F(x):
            x = np.asarray(x, dtype=float)
            out = spline(np.clip(x, lo, hi))
            return np.where(x < lo, 0.0, np.where(x > hi, 1.0, out))

        self._cache[key] = F
        return F

    def sample(self, count: int, seed: int) -> np.ndarray:
        """Draw ``sum_k w_k (G_k^2 - 1)`` (plus the Gaussian tail part) ``count`` times."""
        if count < 1:
            raise ValueError("count must be at least 1")
        rng = stream(seed, 0x5A)
        w = self.weights
        out = np.empty(count)
        block = max(1, 2_000_000 // max(w.size, 1))
        for a in range(0, count, block):
            m = min(block, count - a)
            if w.size:
                g = rng.standard_normal((m, w.size))
                out[a:a + m] = (g * g - 1.0) @ w
            else:
                out[a:a + m] = 0.0
        tsq = self._cache["tsq"]
        if tsq > 0:
            out += math.sqrt(2.0 * tsq) * rng.standard_normal(count)
        return out


def char_function(d: NullDistribution, t):
    return d.char_function(t)


def cdf(d: NullDistribution, x):
    return d.cdf(x)


def density(d: NullDistribution, x):
    return d.density(x)


def quantile(d: NullDistribution, q: float) -> float:
    return d.quantile(q)


def sample(d: NullDistribution, count: int, seed: int) -> np.ndarray:
    return d.sample(count, seed)
