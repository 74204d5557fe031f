"""Scaled durations and log-binned empirical densities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .fileio import table_csv

ZERO_POLICIES = ("include", "exclude")


@dataclass
class ScaledSample:
    """Durations divided by their standard deviation (population convention)."""

    g: np.ndarray
    sigma: float
    n: int
    zero_policy: str = "include"

    @property
    def positive(self) -> np.ndarray:
        return self.g[self.g > 0]


def _values(series):
    if hasattr(series, "values"):
        series = series.values
    return np.asarray(series, dtype=np.float64)


def scale_by_std(series, zero_policy: str = "include") -> ScaledSample:
    """Return ``g = tau / sigma_tau``; ``sigma_tau`` uses ``ddof=0``.

    With ``zero_policy="exclude"`` zeros are dropped before both the standard
    deviation and the scaling.
    """
    if zero_policy not in ZERO_POLICIES:
        raise ConfigError(f"zero_policy must be one of {ZERO_POLICIES}")
    tau = _values(series)
    if zero_policy == "exclude":
        tau = tau[tau != 0]
    if tau.size < 2:
        raise DataError("need at least two values to scale by the standard deviation")
    sigma = float(np.std(tau))
    if not sigma > 0:
        raise DataError("zero variance: series is constant")
    return ScaledSample(g=tau / sigma, sigma=sigma, n=int(tau.size), zero_policy=zero_policy)


@dataclass
class EmpiricalPdf:
    """Log-binned density of the positive values; zeros are an atom of mass ``atom_mass``.

    ``densities`` are normalized by the full sample size, so
    ``atom_mass + sum(densities * widths) == 1``.
    """

    bin_edges: np.ndarray
    bin_centers: np.ndarray
    densities: np.ndarray
    counts: np.ndarray | None = None
    atom_mass: float = 0.0
    n: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def nonempty(self) -> np.ndarray:
        return self.densities > 0

    @classmethod
    def from_density(cls, centers, densities, edges=None):
        """Wrap an analytic density table (no counts; fitting weights are uniform)."""
        centers = np.asarray(centers, dtype=np.float64)
        if edges is None:
            mid = np.sqrt(centers[1:] * centers[:-1])
            edges = np.concatenate(([centers[0] ** 2 / mid[0]], mid, [centers[-1] ** 2 / mid[-1]]))
        return cls(np.asarray(edges, np.float64), centers, np.asarray(densities, np.float64))

    def to_csv(self) -> str:
        return table_csv(["bin_center", "density", "bin_width"],
                         [self.bin_centers, self.densities, self.widths],
                         {"atom_mass": repr(float(self.atom_mass)), "n": str(self.n)})


def log_binned_pdf(sample, bins_per_decade: int = 10) -> EmpiricalPdf:
    """Histogram density over logarithmic bins aligned to ``10**(k/bins_per_decade)``.

    Bin centers are geometric means of the edges. Zeros never enter a bin;
    their share is reported as ``atom_mass``.
    """
    if bins_per_decade < 2:
        raise ConfigError("bins_per_decade must be >= 2")
    x = sample.g if isinstance(sample, ScaledSample) else _values(sample)
    if x.size == 0:
        raise DataError("empty sample")
    if np.any(x < 0):
        raise DataError("log binning needs nonnegative values")
    pos = x[x > 0]
    if pos.size == 0:
        raise DataError("all-zero sample: nothing to bin")
    n = x.size
    lo = int(np.floor(np.log10(pos.min()) * bins_per_decade))
    hi = int(np.ceil(np.log10(pos.max()) * bins_per_decade))
    # guard against log10 rounding putting an extreme value outside the edges
    while 10.0 ** (lo / bins_per_decade) > pos.min():
        lo -= 1
    while 10.0 ** (hi / bins_per_decade) < pos.max():
        hi += 1
    if hi == lo:
        hi += 1
    edges = 10.0 ** (np.arange(lo, hi + 1) / bins_per_decade)
    counts, _ = np.histogram(pos, edges)
    widths = np.diff(edges)
    return EmpiricalPdf(
        bin_edges=edges,
        bin_centers=np.sqrt(edges[:-1] * edges[1:]),
        densities=counts / (n * widths),
        counts=counts,
        atom_mass=float((n - pos.size) / n),
        n=int(n),
    )
