"""Intertrade-duration statistics.

Tick ingestion, scaled-duration densities with Weibull and shifted power-law
fits, intraday patterns, DFA/DMA Hurst estimation, MFDFA/MFDMA singularity
spectra, and synthetic oracles (fGn, binomial cascades, iid samplers).
"""
__version__ = "0.1.0"

from .errors import ConfigError, DataError, IntertradeError, NumericalError
from .tickdata import (DurationSeries, SessionConfig, TickRecord, TickSchema, TickTable,
                       aggregate_per_minute, extract_durations, parse_ticks, zero_fraction)
from .stats import EmpiricalPdf, ScaledSample, log_binned_pdf, scale_by_std
from .distfit import QExpFit, WeibullFit, compare_fits, fit_qexp_nls, fit_weibull_mle
from .intraday import IntradayPattern, intraday_pattern
from .scaling import (FluctuationCurve, build_profile, dfa_fluctuation, dma_fluctuation,
                      estimate_hurst, exponent_relations)
from .multifractal import MultifractalResult, legendre_spectrum, mfdfa, mfdma
from .synth import SyntheticSpec, gen_binomial_cascade, gen_fgn, gen_iid, generate, shuffle
