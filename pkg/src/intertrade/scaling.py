"""DFA and DMA fluctuation functions and Hurst-exponent estimation.

Both methods share one path: build the profile, compute the mean squared
detrended residual ``f_v(s)**2`` of every box at every scale (the compiled or
numpy kernel), aggregate, and regress ``log10 F`` on ``log10 s``.

Summation order is fixed: boxes are reduced with ``numpy.mean`` over the
kernel's box order (left boxes, then right-end boxes); scales are independent,
so a thread pool over scales gives bitwise-identical results.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from . import kernels
from .errors import ConfigError, DataError, NumericalError
from .fileio import array_hash, table_csv

METHODS = ("dfa", "dma")
MAX_ORDER = 3


@dataclass
class Profile:
    """Cumulative sum of the (optionally mean-removed) series."""

    y: np.ndarray
    mean: float
    demeaned: bool = True

    @property
    def n(self) -> int:
        return len(self.y)


def _as_array(series):
    if hasattr(series, "values") and not isinstance(series, np.ndarray):
        series = series.values
    return np.asarray(series, dtype=np.float64)


def build_profile(series, demean: bool = True) -> Profile:
    """``y(i) = sum_{j<=i} (x(j) - <x>)``.

    ``demean=False`` keeps the raw cumulative sum, the natural profile of a
    nonnegative measure (see :mod:`intertrade.multifractal`).
    """
    if isinstance(series, Profile):
        return series
    x = _as_array(series)
    if x.ndim != 1 or x.size < 2:
        raise DataError("profile needs a 1-D series of length >= 2")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    if not demean:
        return Profile(y=np.ascontiguousarray(np.cumsum(x)), mean=0.0, demeaned=False)
    return Profile(y=np.ascontiguousarray(_demeaned_cumsum(x)), mean=math.fsum(x) / x.size,
                   demeaned=True)


def _demeaned_cumsum(x: np.ndarray) -> np.ndarray:
    """``cumsum(x - mean)`` with the mean carried as ``hi + lo`` and the
    subtraction errors recovered by TwoSum.

    For a series with a large offset and small variation, a plainly rounded
    mean leaves a linear drift that a backward moving average turns into a
    constant bias; this keeps the profile accurate to rounding of ``y`` itself.
    """
    hi = math.fsum(x) / x.size
    d = x - hi
    # TwoSum(x, -hi): d + e == x - hi exactly
    bb = d - x
    e = (x - (d - bb)) + (-hi - bb)
    lo = math.fsum(np.concatenate((d, e))) / x.size
    return np.cumsum(d) + np.cumsum(e - lo)


@lru_cache(maxsize=256)
def polynomial_basis(s: int, order: int) -> np.ndarray:
    """Orthonormal basis (``s x (order+1)``) of degree-``order`` polynomials on a box."""
    x = np.arange(s, dtype=np.float64) - (s - 1) / 2.0
    x /= max(1.0, (s - 1) / 2.0)
    q, _ = np.linalg.qr(np.vander(x, order + 1, increasing=True))
    q = np.ascontiguousarray(q)
    q.flags.writeable = False
    return q


def dma_window(s: int, theta: float):
    """Points ``(lag, lead)`` before and after ``i`` in the moving-average window.

    ``lead = floor((s-1) theta)`` future points and ``lag = s - 1 - lead`` past
    points, so the window always holds exactly ``s`` points.
    """
    if not 0.0 <= theta <= 1.0:
        raise ConfigError("theta must lie in [0, 1]")
    lead = int(math.floor((s - 1) * theta + 1e-9))
    return s - 1 - lead, lead


def dfa_box_variances(profile: Profile, s: int, order: int = 1) -> np.ndarray:
    """``f_v(s)**2`` for the ``N_s`` boxes from the left, plus ``N_s`` from the
    right when ``s`` does not divide ``N``."""
    n = profile.n
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"DFA order must be in 1..{MAX_ORDER}")
    if s < 2 * order + 2 or s > n:
        raise DataError(f"DFA scale {s} out of range [{2 * order + 2}, {n}]")
    return kernels.active().dfa_box_variances(profile.y, int(s), polynomial_basis(int(s), order),
                                               bool(n % s))


def dma_box_variances(profile: Profile, s: int, theta: float = 0.0) -> np.ndarray:
    """``f_v(s)**2`` over disjoint boxes of the moving-average residual support."""
    lag, lead = dma_window(int(s), theta)
    if s < 2 or profile.n - s + 1 < s:
        raise DataError(f"DMA scale {s} leaves no full box in a series of length {profile.n}")
    return kernels.active().dma_box_variances(profile.y, int(s), lag, lead)


def aggregate_fluctuation(f2: np.ndarray, q: float = 2.0) -> float:
    """``F_q = (mean f_v**q)**(1/q)``; ``exp(mean ln f_v)`` at ``q = 0``.

    Takes squared box fluctuations. ``q = 2`` is ``sqrt(mean f_v**2)``.
    """
    if q == 2:
        return float(np.sqrt(np.mean(f2)))
    if q <= 0 and np.any(f2 <= 0):
        bad = np.flatnonzero(f2 <= 0)
        raise NumericalError(
            f"q={q}: {bad.size} box(es) with zero fluctuation (first indices {bad[:10].tolist()})")
    if q == 0:
        return float(np.exp(0.5 * np.mean(np.log(f2))))
    return float(np.mean(f2 ** (q / 2.0)) ** (1.0 / q))


def dfa_fluctuation(profile, s: int, order: int = 1) -> float:
    return aggregate_fluctuation(dfa_box_variances(build_profile(profile), s, order))


def dma_fluctuation(profile, s: int, theta: float = 0.0) -> float:
    return aggregate_fluctuation(dma_box_variances(build_profile(profile), s, theta))


def max_scale(n: int, method: str = "dfa") -> int:
    """Largest default scale: ``N/4``; DMA also keeps >= 4 residual boxes."""
    smax = n // 4
    if method == "dma":
        smax = min(smax, (n + 1) // 5)
    return smax


def default_scales(n: int, method: str = "dfa", n_scales: int = 30, s_min: int = 20) -> np.ndarray:
    """Geometric grid of integer scales in ``[s_min, max_scale]``, deduplicated."""
    smax = max_scale(n, method)
    if smax < s_min:
        raise DataError(f"series of length {n} too short for scales >= {s_min}")
    return np.unique(np.round(np.geomspace(s_min, smax, n_scales)).astype(np.int64))


def rounding_floor(profile: Profile) -> float:
    """Squared fluctuation indistinguishable from cumulative-sum rounding.

    A run of equal values (e.g. zero durations) gives an exactly linear
    profile in exact arithmetic, but ``cumsum`` leaves residuals of order
    ``N * eps * max|y|``.
    """
    scale = profile.n * np.finfo(np.float64).eps * float(np.max(np.abs(profile.y)))
    return scale * scale


def box_variance_sweep(profile: Profile, scales, method: str = "dfa", order: int = 1,
                       theta: float = 0.0, threads: int = 1):
    """Squared box fluctuations for every scale (list aligned with ``scales``).

    Values at or below :func:`rounding_floor` are set to exactly zero so that
    degenerate boxes are reported as such rather than as tiny noise.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    floor = rounding_floor(profile)

    def flush(f2):
        if floor > 0 and np.any(f2 <= floor):
            f2 = np.where(f2 <= floor, 0.0, f2)
        return f2

    if method == "dfa":
        def one(s):
            return flush(dfa_box_variances(profile, int(s), order))
    else:
        def one(s):
            return flush(dma_box_variances(profile, int(s), theta))
    scales = [int(s) for s in scales]
    if threads > 1 and len(scales) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, scales))
    return [one(s) for s in scales]


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    ci: float
    e_rms: float


def loglog_fit(scales, values) -> LogLogFit:
    """OLS of ``log10 values`` on ``log10 scales`` with a 95% slope interval."""
    x = np.log10(np.asarray(scales, dtype=np.float64))
    y = np.log10(np.asarray(values, dtype=np.float64))
    n = x.size
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, y - ym) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    rss = float(np.dot(resid, resid))
    if n > 2:
        ci = float(stats.t.ppf(0.975, n - 2) * math.sqrt(rss / (n - 2) / sxx))
    else:
        ci = float("nan")
    return LogLogFit(slope, intercept, ci, float(math.sqrt(rss / n)))


@dataclass
class FluctuationCurve:
    scales: np.ndarray
    F: np.ndarray
    H: float
    H_ci: float
    E_rms: float
    intercept: float
    method: str
    order: int | None = None
    theta: float | None = None
    demeaned: bool = True
    n: int = 0
    dropped: list = field(default_factory=list)
    series_hash: str = ""

    @property
    def tag(self) -> str:
        return f"DFA-{self.order}" if self.method == "dfa" else f"DMA(theta={self.theta:g})"

    def to_csv(self) -> str:
        return table_csv(["s", "F"], [self.scales, self.F], {"method": self.tag})

    def sidecar(self) -> dict:
        return {
            "H": self.H, "H_ci": self.H_ci, "E_rms": self.E_rms, "intercept": self.intercept,
            "method": self.method, "order": self.order, "theta": self.theta,
            "demeaned": self.demeaned, "n": self.n, "scales": self.scales.tolist(),
            "dropped_scales": list(self.dropped), "series_hash": self.series_hash,
            "backend": kernels.backend_name(),
        }


def validate_scales(scales, n: int, method: str, order: int = 1, min_scales: int = 10,
                    min_boxes: int = 1) -> np.ndarray:
    s = np.unique(np.asarray(scales, dtype=np.int64))
    lo = 2 * order + 2 if method == "dfa" else 2
    if s.size and (s[0] < lo or s[-1] > n // 4):
        raise ConfigError(f"scales must lie in [{lo}, N/4={n // 4}]")
    if s.size < min_scales:
        raise ConfigError(f"need at least {min_scales} distinct scales, got {s.size}")
    if method == "dma" and s.size and (n - s[-1] + 1) // s[-1] < min_boxes:
        raise ConfigError(f"DMA scale {s[-1]} leaves fewer than {min_boxes} boxes")
    return s


def drop_zero_scales(scales, F):
    ok = F > 0
    dropped = [int(s) for s in np.asarray(scales)[~ok]]
    if dropped:
        warnings.warn(f"dropping scales with zero fluctuation: {dropped}", RuntimeWarning,
                      stacklevel=3)
    return np.asarray(scales)[ok], F[ok], dropped


def estimate_hurst(series, method: str = "dfa", scales=None, order: int = 1, theta: float = 0.0,
                   demean: bool = True, threads: int = 1, min_scales: int = 10) -> FluctuationCurve:
    """Fluctuation curve and Hurst exponent ``H`` (slope of ``log F`` vs ``log s``).

    Scales with ``F(s) = 0`` are dropped with a warning; fewer than
    ``min_scales`` survivors is a :class:`NumericalError`.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    profile = build_profile(series, demean)
    n = profile.n
    if scales is None:
        scales = default_scales(n, method)
    scales = validate_scales(scales, n, method, order, min_scales)
    f2s = box_variance_sweep(profile, scales, method, order, theta, threads)
    F = np.array([aggregate_fluctuation(f2) for f2 in f2s])
    kept, F_kept, dropped = drop_zero_scales(scales, F)
    if kept.size < min_scales:
        raise NumericalError(f"only {kept.size} scales with nonzero fluctuation")
    fit = loglog_fit(kept, F_kept)
    source = series if not isinstance(series, Profile) else series.y
    return FluctuationCurve(
        scales=kept, F=F_kept, H=fit.slope, H_ci=fit.ci, E_rms=fit.e_rms,
        intercept=fit.intercept, method=method,
        order=order if method == "dfa" else None,
        theta=float(theta) if method == "dma" else None,
        demeaned=profile.demeaned, n=n, dropped=dropped,
        series_hash=array_hash(_as_array(source)),
    )


def exponent_relations(H: float):
    """Power-spectrum exponent ``eta = 2H - 1`` and autocorrelation exponent ``gamma = 2 - 2H``."""
    H = float(H)
    if not math.isfinite(H):
        raise DataError("H must be finite")
    return 2 * H - 1, 2 - 2 * H
