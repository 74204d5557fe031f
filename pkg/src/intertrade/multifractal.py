"""MFDFA / MFDMA: q-th order fluctuations, h(q), tau(q) and the f(alpha) spectrum.

Box fluctuations at each scale are computed once and reused for every q.

Profile choice matters for DMA on nonnegative measures: removing the sample
mean adds a linear drift to the profile, and a backward moving average lags a
linear drift by a constant ``mean * (s - 1) / 2`` that swamps low-mass boxes.
Pass ``demean=False`` to analyse a measure through its raw cumulative mass.
DFA (order >= 1) removes the drift exactly and is insensitive to the choice.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .fileio import array_hash, table_csv
from .scaling import (METHODS, Profile, _as_array, aggregate_fluctuation, box_variance_sweep,
                      build_profile, default_scales, loglog_fit, validate_scales)
from . import kernels

MIN_BOXES = 4


def default_q_grid() -> np.ndarray:
    """41 orders from -4 to 4 in steps of 0.2 (exact 0 and 2 included)."""
    return np.round(np.linspace(-4.0, 4.0, 41), 12)


def validate_q_grid(qs) -> np.ndarray:
    q = np.asarray(qs, dtype=np.float64)
    if q.ndim != 1 or q.size < 5:
        raise ConfigError("q grid needs at least 5 values")
    if np.any(np.diff(q) <= 0):
        raise ConfigError("q grid must be strictly increasing")
    if not (np.any(q == 0) and np.any(q == 2)):
        raise ConfigError("q grid must contain 0 and 2")
    return q


def fq(series, s: int, q: float, method: str = "dfa", order: int = 1, theta: float = 0.0,
       demean: bool = True) -> float:
    """``F_q(s)`` of one scale; ``q = 0`` uses the logarithmic average."""
    profile = build_profile(series, demean)
    (f2,) = box_variance_sweep(profile, [s], method, order, theta)
    return aggregate_fluctuation(f2, q)


def mass_exponents(h, qs) -> np.ndarray:
    """``tau(q) = q h(q) - 1`` (unit support dimension for time series)."""
    return np.asarray(qs, dtype=np.float64) * np.asarray(h, dtype=np.float64) - 1.0


def legendre_spectrum(tau, qs):
    """``alpha = d tau / dq`` by finite differences, ``f = q alpha - tau``.

    Central differences in the interior and one-sided differences at the ends
    (:func:`numpy.gradient`). A non-concave ``tau`` is returned as-is; check
    :func:`is_concave` to flag it.
    """
    q = np.asarray(qs, dtype=np.float64)
    t = np.asarray(tau, dtype=np.float64)
    if q.size < 5 or t.shape != q.shape:
        raise ConfigError("need tau on a grid of at least 5 q values")
    if not np.all(np.isfinite(t)):
        raise NumericalError("tau contains non-finite values")
    alpha = np.gradient(t, q)
    return alpha, q * alpha - t


def is_concave(tau, qs=None, tol: float = 1e-6) -> bool:
    """Second differences of ``tau`` on the grid are all <= ``tol``.

    A flat-``h`` monofractal has linear ``tau``, whose second differences
    are pure estimation noise, so it can fail this check; treat the flag as
    a warning.
    """
    t = np.asarray(tau, dtype=np.float64)
    return bool(np.all(np.diff(t, 2) <= tol))


def spectrum_width(result) -> float:
    """``max alpha - min alpha`` over the q grid."""
    alpha = result.alpha if hasattr(result, "alpha") else np.asarray(result)
    return float(np.max(alpha) - np.min(alpha))


@dataclass
class MultifractalResult:
    q: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f: np.ndarray
    h_ci: np.ndarray
    e_rms: np.ndarray
    scales: np.ndarray
    Fq: np.ndarray
    method: str
    order: int | None = None
    theta: float | None = None
    demeaned: bool = True
    n: int = 0
    flags: dict = field(default_factory=dict)
    series_hash: str = ""

    @property
    def width(self) -> float:
        return spectrum_width(self)

    def h_at(self, q: float) -> float:
        return float(self.h[np.flatnonzero(self.q == q)[0]])

    def spectrum_pairs(self):
        """``(alpha, f)`` sorted by alpha, ready for plotting."""
        order = np.argsort(self.alpha, kind="stable")
        return self.alpha[order], self.f[order]

    def to_csv(self) -> str:
        return table_csv(["q", "h", "tau", "alpha", "f", "e_rms"],
                         [self.q, self.h, self.tau, self.alpha, self.f, self.e_rms],
                         {"method": self.method})

    def spectrum_csv(self) -> str:
        a, f = self.spectrum_pairs()
        return table_csv(["alpha", "f"], [a, f])

    def sidecar(self) -> dict:
        return {
            "method": self.method, "order": self.order, "theta": self.theta,
            "demeaned": self.demeaned, "n": self.n, "q": self.q.tolist(),
            "scales": self.scales.tolist(), "width": self.width, "flags": self.flags,
            "h_ci": self.h_ci.tolist(), "series_hash": self.series_hash,
            "backend": kernels.backend_name(),
        }


def generalized_hurst(series, scales=None, qs=None, method: str = "dfa", order: int = 1,
                      theta: float = 0.0, demean: bool = True, threads: int = 1,
                      min_scales: int = 10):
    """Per-q log-log slopes of ``F_q(s)``; returns ``(h, ci, e_rms, scales, Fq)``.

    Scales whose fluctuation vanishes are dropped for every q so the q = 2
    row matches :func:`intertrade.scaling.estimate_hurst` on the same input.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    profile = build_profile(series, demean)
    qs = default_q_grid() if qs is None else validate_q_grid(qs)
    if scales is None:
        scales = default_scales(profile.n, method)
    scales = validate_scales(scales, profile.n, method, order, min_scales, MIN_BOXES)
    f2s = box_variance_sweep(profile, scales, method, order, theta, threads)
    zero = np.array([not np.any(f2 > 0) for f2 in f2s])
    if zero.any():
        warnings.warn(f"dropping scales with zero fluctuation: {scales[zero].tolist()}",
                      RuntimeWarning, stacklevel=2)
        scales = scales[~zero]
        f2s = [f2 for f2, z in zip(f2s, zero) if not z]
    if scales.size < min_scales:
        raise NumericalError(f"only {scales.size} scales with nonzero fluctuation")
    Fq = np.empty((qs.size, scales.size))
    for j, (s, f2) in enumerate(zip(scales, f2s)):
        if f2.size < MIN_BOXES:
            raise ConfigError(f"scale {s} has only {f2.size} boxes (< {MIN_BOXES})")
        for i, q in enumerate(qs):
            try:
                Fq[i, j] = aggregate_fluctuation(f2, float(q))
            except NumericalError as exc:
                raise NumericalError(f"scale {s}: {exc}; consider the per-minute series") from None
    fits = [loglog_fit(scales, row) for row in Fq]
    h = np.array([ft.slope for ft in fits])
    ci = np.array([ft.ci for ft in fits])
    e = np.array([ft.e_rms for ft in fits])
    return h, ci, e, scales, Fq


def multifractal_analysis(series, method: str = "dfa", scales=None, qs=None, order: int = 1,
                          theta: float = 0.0, demean: bool = True, threads: int = 1) -> MultifractalResult:
    profile = build_profile(series, demean)
    h, ci, e, scales, Fq = generalized_hurst(profile, scales, qs, method, order, theta,
                                             threads=threads)
    q = default_q_grid() if qs is None else validate_q_grid(qs)
    tau = mass_exponents(h, q)
    alpha, f = legendre_spectrum(tau, q)
    flags = {
        "tau_nondecreasing": bool(np.all(np.diff(tau) >= -1e-6)),
        "tau_concave": is_concave(tau, q),
        "h_nonincreasing": bool(np.all(np.diff(h) <= 1e-3)),
    }
    if not (flags["tau_nondecreasing"] and flags["tau_concave"]):
        warnings.warn("tau(q) is not monotone and concave: spectrum estimate unreliable",
                      RuntimeWarning, stacklevel=2)
    source = series.y if isinstance(series, Profile) else _as_array(series)
    return MultifractalResult(
        q=q, h=h, tau=tau, alpha=alpha, f=f, h_ci=ci, e_rms=e, scales=scales, Fq=Fq,
        method=method, order=order if method == "dfa" else None,
        theta=float(theta) if method == "dma" else None, demeaned=profile.demeaned,
        n=profile.n, flags=flags, series_hash=array_hash(source),
    )


def mfdfa(series, scales=None, qs=None, order: int = 1, demean: bool = True, threads: int = 1):
    return multifractal_analysis(series, "dfa", scales, qs, order=order, demean=demean,
                                 threads=threads)


def mfdma(series, scales=None, qs=None, theta: float = 0.0, demean: bool = True, threads: int = 1):
    return multifractal_analysis(series, "dma", scales, qs, theta=theta, demean=demean,
                                 threads=threads)
