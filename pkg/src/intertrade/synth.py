"""Synthetic series with known properties, used as estimator oracles.

Random streams come from numpy's ``PCG64`` bit generator seeded through
``numpy.random.default_rng(seed)``; normals use numpy's ziggurat sampler and
permutations numpy's Fisher-Yates shuffle. Output is reproducible bit for bit
for a given ``(kind, params, N, seed)`` and numpy major version.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .tickdata import SessionConfig, TickTable

KINDS = ("fgn", "binomial-cascade", "iid-exponential", "iid-weibull", "iid-qexp", "iid-gaussian")


def rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def fgn_autocovariance(H: float, k) -> np.ndarray:
    """``0.5 (|k+1|^2H - 2|k|^2H + |k-1|^2H)`` for unit-variance fGn."""
    k = np.abs(np.asarray(k, dtype=np.float64))
    return 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def circulant_eigenvalues(H: float, n: int) -> np.ndarray:
    """Eigenvalues of the ``2n`` circulant embedding of the fGn covariance."""
    g = fgn_autocovariance(H, np.arange(n + 1))
    row = np.concatenate((g, g[-2:0:-1]))
    return np.fft.fft(row).real


def gen_fgn(H: float, n: int, seed) -> np.ndarray:
    """Exact fractional Gaussian noise by circulant embedding (Davies-Harte).

    ``n`` must be a power of two. The real part of
    ``FFT(sqrt(lambda / 2n) * (Z1 + i Z2))`` has exactly the fGn covariance.
    """
    if not 0.0 < H < 1.0:
        raise ConfigError("Hurst exponent must lie in (0, 1)")
    if n < 2 or n & (n - 1):
        raise ConfigError("fGn length must be a power of two")
    lam = circulant_eigenvalues(H, n)
    tol = 1e-10 * lam.max()
    if lam.min() < -tol:
        raise NumericalError(f"circulant embedding not positive semidefinite (min eigenvalue {lam.min():g})")
    lam = np.clip(lam, 0.0, None)
    m = lam.size
    r = rng(seed)
    z = r.standard_normal(m) + 1j * r.standard_normal(m)
    return np.fft.fft(np.sqrt(lam / m) * z).real[:n].copy()


def gen_binomial_cascade(p: float, k: int, seed=None, randomized: bool = False) -> np.ndarray:
    """Binomial multiplicative measure on ``2**k`` dyadic cells, total mass 1.

    Each refinement gives the left half a share ``p`` of its parent. With
    ``randomized=True`` the side receiving ``p`` is drawn per node (seeded).
    """
    if not 0.0 < p < 1.0:
        raise ConfigError("cascade weight must lie in (0, 1)")
    if not 0 <= k <= 24:
        raise ConfigError("cascade depth must be in 0..24")
    mass = np.ones(1)
    r = rng(seed) if randomized else None
    for _ in range(k):
        left = np.full(mass.size, p)
        if randomized:
            flip = r.random(mass.size) < 0.5
            left[flip] = 1.0 - p
        child = np.empty(2 * mass.size)
        child[0::2] = mass * left
        child[1::2] = mass * (1.0 - left)
        mass = child
    return mass


def binomial_tau(q, p: float) -> np.ndarray:
    """Mass exponents ``-log2(p**q + (1-p)**q)`` of the binomial measure."""
    q = np.asarray(q, dtype=np.float64)
    return -np.log2(p ** q + (1 - p) ** q)


def binomial_h(q, p: float) -> np.ndarray:
    """Generalized Hurst exponent ``(tau(q) + 1) / q`` (finite limit at q = 0)."""
    q = np.asarray(q, dtype=np.float64)
    out = np.empty_like(q)
    nz = q != 0
    out[nz] = (binomial_tau(q[nz], p) + 1) / q[nz]
    out[~nz] = -(math.log(p) + math.log(1 - p)) / (2 * math.log(2))
    return out


def binomial_alpha(q, p: float) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    a, b = p ** q, (1 - p) ** q
    return -(a * math.log(p) + b * math.log(1 - p)) / ((a + b) * math.log(2))


def binomial_f(q, p: float) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q * binomial_alpha(q, p) - binomial_tau(q, p)


def shuffle(series, seed) -> np.ndarray:
    """Uniform random permutation (numpy Fisher-Yates on PCG64)."""
    x = np.asarray(series)
    if x.size == 0:
        raise ConfigError("cannot shuffle an empty series")
    return rng(seed).permutation(x)


def gen_iid(kind: str, params: dict, n: int, seed) -> np.ndarray:
    """Inverse-CDF iid samples.

    ``exponential`` (rate), ``weibull`` (alpha, beta; CDF ``1 - exp(-alpha g**beta)``),
    ``qexp`` (g0, gamma; shifted Pareto ``1 - (g0 / (g + g0))**gamma``),
    ``gaussian`` (mean, std).
    """
    r = rng(seed)
    kind = kind.removeprefix("iid-")
    if kind == "gaussian":
        return r.normal(params.get("mean", 0.0), params.get("std", 1.0), n)
    u = r.random(n)
    tail = -np.log1p(-u)  # Exp(1) via inverse CDF
    if kind == "exponential":
        rate = float(params.get("rate", 1.0))
        if rate <= 0:
            raise ConfigError("rate must be positive")
        return tail / rate
    if kind == "weibull":
        alpha, beta = float(params["alpha"]), float(params["beta"])
        if alpha <= 0 or beta <= 0:
            raise ConfigError("Weibull parameters must be positive")
        return (tail / alpha) ** (1.0 / beta)
    if kind == "qexp":
        g0, gamma = float(params["g0"]), float(params["gamma"])
        if g0 <= 0 or gamma <= 0:
            raise ConfigError("q-exponential parameters must be positive")
        return g0 * np.expm1(tail / gamma)
    raise ConfigError(f"unknown iid kind {kind!r}")


@dataclass
class SyntheticSpec:
    kind: str
    n: int = 1 << 16
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown synthetic kind {self.kind!r}; expected one of {KINDS}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], n=int(d.get("n", 1 << 16)), seed=int(d.get("seed", 0)),
                   params=dict(d.get("params", {})))


def generate(spec: SyntheticSpec) -> np.ndarray:
    p = spec.params
    if spec.kind == "fgn":
        return gen_fgn(float(p.get("H", 0.5)), spec.n, spec.seed)
    if spec.kind == "binomial-cascade":
        k = int(p.get("k", round(math.log2(spec.n))))
        if spec.n != 1 << k:
            raise ConfigError("cascade length must be 2**k")
        return gen_binomial_cascade(float(p.get("p", 0.3)), k, spec.seed,
                                    bool(p.get("randomized", False)))
    return gen_iid(spec.kind, p, spec.n, spec.seed)


def poisson_tick_stream(intensity, n_days: int, seed, cfg: SessionConfig = SessionConfig(),
                        equity: str = "SYN", first_day: int = 13000) -> TickTable:
    """Trades from an (in)homogeneous Poisson process, time-stamped to the second.

    ``intensity`` is a rate per second, either a constant or a callable of the
    trading-time offset in seconds (0 at the first open). Inhomogeneous rates
    are drawn by thinning against their maximum on a 1-second grid.
    """
    r = rng(seed)
    total = cfg.total_seconds
    if callable(intensity):
        grid = np.asarray(intensity(np.arange(total) + 0.5), dtype=np.float64)
        lam_max = float(grid.max()) * 1.05
    else:
        lam_max = float(intensity)
    if lam_max <= 0:
        raise ConfigError("intensity must be positive")
    days, times = [], []
    bounds = np.cumsum([0] + [b - a for a, b in cfg.sessions])
    for d in range(n_days):
        for k in range(len(cfg.sessions)):
            length = bounds[k + 1] - bounds[k]
            cnt = r.poisson(lam_max * length)
            t = np.sort(r.random(cnt) * length) + bounds[k]
            if callable(intensity):
                keep = r.random(cnt) * lam_max < np.asarray(intensity(t), dtype=np.float64)
                t = t[keep]
            sec = cfg.offset_to_second(np.floor(t).astype(np.int64))
            days.append(np.full(sec.size, first_day + d, dtype=np.int64))
            times.append(sec)
    day = np.concatenate(days) if days else np.empty(0, np.int64)
    time = np.concatenate(times) if times else np.empty(0, np.int64)
    return TickTable(day, time, np.full(day.size, equity, dtype=object))
