"""Weibull maximum likelihood and shifted power-law (q-exponential) regression.

Densities, in terms of the scaled duration ``g``::

    weibull:  p_w(g) = alpha * beta * g**(beta - 1) * exp(-alpha * g**beta)
    q-exp:    p_q(g) = a * (g + g0)**(-(gamma + 1))
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import ConfigError, DataError, NumericalError
from .stats import EmpiricalPdf, ScaledSample, log_binned_pdf

log = logging.getLogger(__name__)


@dataclass
class WeibullFit:
    alpha: float
    beta: float
    loglik: float
    n: int

    def pdf(self, g):
        g = np.asarray(g, dtype=np.float64)
        return self.alpha * self.beta * g ** (self.beta - 1) * np.exp(-self.alpha * g ** self.beta)

    def to_dict(self):
        return {"model": "weibull", **asdict(self)}


@dataclass
class QExpFit:
    a: float
    g0: float
    gamma: float
    sse: float
    n_bins: int = 0
    weighting: str = "counts"
    nfev: int = 0
    log_a: float | None = None
    at_bound: bool = False

    def pdf(self, g):
        g = np.asarray(g, dtype=np.float64)
        log_a = math.log(self.a) if self.log_a is None else self.log_a
        return np.exp(log_a - (self.gamma + 1) * np.log(g + self.g0))

    def to_dict(self):
        return {"model": "qexp", **asdict(self)}


def _positive(sample):
    if isinstance(sample, ScaledSample):
        x = sample.g
    elif hasattr(sample, "values"):
        x = np.asarray(sample.values, dtype=np.float64)
    else:
        x = np.asarray(sample, dtype=np.float64)
    return x[x > 0]


def weibull_loglik(x, alpha, beta):
    lx = np.log(x)
    return float(x.size * (math.log(alpha) + math.log(beta)) + (beta - 1) * lx.sum()
                 - alpha * np.exp(beta * lx).sum())


def weibull_score(x, alpha, beta):
    """Analytic gradient ``(d/d alpha, d/d beta)`` of the Weibull log-likelihood."""
    lx = np.log(x)
    xb = np.exp(beta * lx)
    return np.array([x.size / alpha - xb.sum(),
                     x.size / beta + lx.sum() - alpha * (xb * lx).sum()])


def fit_weibull_mle(sample, min_size: int = 100, maxiter: int = 500) -> WeibullFit:
    """Maximum likelihood Weibull fit on the positive part of ``sample``.

    The shape ``beta`` solves the profile-likelihood score equation by
    bracketed root finding; ``alpha = n / sum(g**beta)`` in closed form.
    """
    x = _positive(sample)
    n = x.size
    if n < min_size:
        raise DataError(f"need at least {min_size} positive values, got {n}")
    lx = np.log(x)
    sum_lx = lx.sum()
    if np.ptp(lx) == 0:
        raise DataError("degenerate sample: all positive values are equal")

    def score(beta):
        z = beta * lx
        w = np.exp(z - z.max())
        return n / beta + sum_lx - n * (w * lx).sum() / w.sum()

    lo, hi = 1.0, 1.0
    while score(lo) <= 0:
        lo /= 2
        if lo < 1e-8:
            raise NumericalError("could not bracket the Weibull shape from below")
    while score(hi) >= 0:
        hi *= 2
        if hi > 1e8:
            raise NumericalError("could not bracket the Weibull shape from above")
    try:
        beta = optimize.brentq(score, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                               maxiter=maxiter)
    except RuntimeError as exc:
        raise NumericalError(f"Weibull shape root finding did not converge: {exc}") from exc
    z = beta * lx
    zmax = z.max()
    log_sum = zmax + math.log(np.exp(z - zmax).sum())
    alpha = math.exp(math.log(n) - log_sum)
    return WeibullFit(alpha=alpha, beta=float(beta), loglik=weibull_loglik(x, alpha, beta), n=int(n))


def _as_pdf(obj, bins_per_decade=10):
    if isinstance(obj, EmpiricalPdf):
        return obj
    return log_binned_pdf(obj, bins_per_decade)


G0_BOUNDS = (1e-4, 1e4)
GAMMA_BOUNDS = (1e-3, 50.0)


def fit_qexp_nls(pdf, weighting: str = "counts", min_bins: int = 10,
                 g0_range=(0.1, 20.0), gamma_range=(1.0, 10.0), n_starts: int = 5,
                 max_nfev: int = 500) -> QExpFit:
    """Least squares of ``log density - log p_q(center)`` over nonempty bins.

    ``a`` is profiled out in closed form; ``(g0, gamma)`` are searched on a
    log scale from an ``n_starts x n_starts`` grid. ``weighting="counts"``
    weights each bin by its count (inverse Poisson variance of the log
    density); bins without counts, or ``weighting="uniform"``, get unit weight.

    The search is boxed to ``G0_BOUNDS`` x ``GAMMA_BOUNDS``: data with a
    thinner-than-power-law tail pull the fit toward the exponential limit
    ``g0, gamma -> inf``, which is reported with ``at_bound=True``.
    """
    if weighting not in ("counts", "uniform"):
        raise ConfigError("weighting must be 'counts' or 'uniform'")
    pdf = _as_pdf(pdf)
    keep = pdf.densities > 0
    nb = int(keep.sum())
    if nb < max(min_bins, 3):
        raise DataError(f"need at least {max(min_bins, 3)} nonempty bins, got {nb}")
    c = pdf.bin_centers[keep]
    ld = np.log(pdf.densities[keep])
    if weighting == "counts" and pdf.counts is not None:
        w = pdf.counts[keep].astype(np.float64)
    else:
        weighting = "uniform"
        w = np.ones(nb)
    sw = np.sqrt(w)
    wsum = w.sum()

    def parts(theta):
        g0, gam = np.exp(theta)
        lc = np.log(c + g0)
        u = ld + (gam + 1) * lc
        la = (w * u).sum() / wsum
        return g0, gam, lc, u, la

    def resid(theta):
        _, _, _, u, la = parts(theta)
        return sw * (u - la)

    def jac(theta):
        g0, gam, lc, _, _ = parts(theta)
        du = np.column_stack(((gam + 1) / (c + g0) * g0, lc * gam))
        du -= (w[:, None] * du).sum(axis=0) / wsum
        return sw[:, None] * du

    lower = np.log([G0_BOUNDS[0], GAMMA_BOUNDS[0]])
    upper = np.log([G0_BOUNDS[1], GAMMA_BOUNDS[1]])
    best = None
    for g0 in np.geomspace(*g0_range, n_starts):
        for gam in np.linspace(*gamma_range, n_starts):
            try:
                res = optimize.least_squares(resid, np.log([g0, gam]), jac=jac, method="trf",
                                             bounds=(lower, upper), ftol=1e-10, xtol=1e-12,
                                             gtol=1e-12, max_nfev=max_nfev)
            except (ValueError, FloatingPointError):
                continue
            if res.status <= 0 or not np.all(np.isfinite(res.x)):
                continue
            if best is None or res.cost < best.cost:
                best = res
    if best is None:
        raise NumericalError("q-exponential regression did not converge from any start")
    g0, gam, _, u, la = parts(best.x)
    sse = float(np.sum(w * (u - la) ** 2))
    at_bound = bool(np.any(np.isclose(best.x, lower, rtol=0, atol=1e-6)
                           | np.isclose(best.x, upper, rtol=0, atol=1e-6)))
    if at_bound:
        log.warning("q-exponential fit ended on the search boundary (g0=%g, gamma=%g)", g0, gam)
    return QExpFit(a=float(math.exp(min(la, 700.0))), g0=float(g0), gamma=float(gam), sse=sse,
                   n_bins=nb, weighting=weighting, nfev=int(best.nfev), log_a=float(la),
                   at_bound=at_bound)


@dataclass
class FitComparison:
    decades: np.ndarray
    weibull_error: np.ndarray
    qexp_error: np.ndarray
    weibull_overall: float
    qexp_overall: float
    body_winner: str
    tail_winner: str

    def to_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def compare_fits(sample, wfit: WeibullFit, qfit: QExpFit, bins_per_decade: int = 10) -> FitComparison:
    """Mean absolute log-density error of each model, decade by decade.

    The Weibull density is scaled by the positive share of the sample so both
    models are compared against the same binned densities. ``tail`` is the
    highest populated decade, ``body`` everything below it.
    """
    pdf = _as_pdf(sample, bins_per_decade)
    keep = pdf.densities > 0
    c = pdf.bin_centers[keep]
    ld = np.log(pdf.densities[keep])
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        ew = np.abs(ld - np.log(wfit.pdf(c) * (1.0 - pdf.atom_mass)))
        eq = np.abs(ld - np.log(qfit.pdf(c)))
    dec = np.floor(np.log10(c) + 1e-12).astype(int)
    decades = np.unique(dec)
    w_err = np.array([ew[dec == d].mean() for d in decades])
    q_err = np.array([eq[dec == d].mean() for d in decades])
    body = dec < decades[-1]

    def winner(mask):
        if not mask.any():
            return "none"
        a, b = ew[mask].mean(), eq[mask].mean()
        return "weibull" if a < b else "qexp" if b < a else "tie"

    return FitComparison(decades, w_err, q_err, float(ew.mean()), float(eq.mean()),
                         winner(body), winner(~body))
