import math

import numpy as np
import pytest

from intertrade.distfit import (compare_fits, fit_qexp_nls, fit_weibull_mle, weibull_loglik,
                                weibull_score, QExpFit)
from intertrade.errors import DataError
from intertrade.stats import EmpiricalPdf, log_binned_pdf
from intertrade.synth import gen_iid


def qexp_density(g, g0, gamma):
    # normalized shifted Pareto: gamma g0**gamma (g + g0)**-(gamma + 1)
    return gamma * g0 ** gamma * (g + g0) ** (-(gamma + 1))


def test_exponential_recovers_beta_one():
    fit = fit_weibull_mle(gen_iid("exponential", {}, 10**6, 1))
    assert fit.beta == pytest.approx(1.0, abs=0.01)
    assert fit.alpha == pytest.approx(1.0, abs=0.01)


def test_weibull_stationarity():
    x = gen_iid("weibull", {"alpha": 1.22, "beta": 1.41}, 200_000, 2)
    fit = fit_weibull_mle(x)
    score = weibull_score(x, fit.alpha, fit.beta)
    assert np.abs(score).max() < 1e-6 * x.size
    # profile score, normalized per observation, vanishes
    assert abs(score[1]) / x.size < 1e-6


def test_weibull_score_matches_finite_difference():
    x = gen_iid("weibull", {"alpha": 0.75, "beta": 0.97}, 10_000, 3)
    a, b = 0.8, 1.1
    h = 1e-6
    fd_a = (weibull_loglik(x, a + h, b) - weibull_loglik(x, a - h, b)) / (2 * h)
    fd_b = (weibull_loglik(x, a, b + h) - weibull_loglik(x, a, b - h)) / (2 * h)
    sa, sb = weibull_score(x, a, b)
    assert fd_a == pytest.approx(sa, rel=1e-4)
    assert fd_b == pytest.approx(sb, rel=1e-4)


def test_weibull_permutation_invariant():
    x = gen_iid("weibull", {"alpha": 1.22, "beta": 1.41}, 5000, 4)
    a = fit_weibull_mle(x)
    b = fit_weibull_mle(np.random.default_rng(0).permutation(x))
    assert a.beta == pytest.approx(b.beta, rel=1e-12)
    assert a.alpha == pytest.approx(b.alpha, rel=1e-12)


def test_weibull_errors():
    with pytest.raises(DataError):
        fit_weibull_mle(np.ones(50))
    with pytest.raises(DataError, match="degenerate"):
        fit_weibull_mle(np.full(500, 2.0))


def test_weibull_ignores_zeros():
    x = gen_iid("weibull", {"alpha": 1.0, "beta": 2.0}, 5000, 5)
    a = fit_weibull_mle(x)
    b = fit_weibull_mle(np.concatenate([x, np.zeros(3000)]))
    assert a.beta == b.beta


def test_qexp_exact_density_table():
    c = np.geomspace(0.01, 100, 41)
    pdf = EmpiricalPdf.from_density(c, qexp_density(c, 3.76, 5.70))
    fit = fit_qexp_nls(pdf)
    assert fit.sse < 1e-10
    assert fit.g0 == pytest.approx(3.76, rel=1e-5)
    assert fit.gamma == pytest.approx(5.70, rel=1e-5)
    assert fit.a == pytest.approx(5.70 * 3.76 ** 5.70, rel=1e-4)


def test_qexp_sample_recovery():
    x = gen_iid("qexp", {"g0": 4.09, "gamma": 5.50}, 10**6, 6)
    fit = fit_qexp_nls(log_binned_pdf(x))
    assert fit.g0 == pytest.approx(4.09, rel=0.05)
    assert fit.gamma == pytest.approx(5.50, rel=0.05)
    assert fit.weighting == "counts"


def test_qexp_tail_slope():
    fit = QExpFit(a=1.0, g0=4.09, gamma=5.5, sse=0.0)
    g = np.array([1e3, 2e3])
    slope = np.diff(np.log(fit.pdf(g))) / np.diff(np.log(g))
    assert slope[0] == pytest.approx(-6.5, rel=0.02)


def test_qexp_too_few_bins():
    with pytest.raises(DataError):
        fit_qexp_nls(EmpiricalPdf.from_density(np.geomspace(1, 2, 5), np.ones(5)))


def test_compare_fits_identifies_models():
    q = gen_iid("qexp", {"g0": 4.09, "gamma": 5.5}, 10**6, 8)
    cmp = compare_fits(q, fit_weibull_mle(q), fit_qexp_nls(log_binned_pdf(q)))
    assert cmp.qexp_error[-1] < cmp.weibull_error[-1]
    assert cmp.tail_winner == "qexp"
    w = gen_iid("weibull", {"alpha": 1.22, "beta": 1.41}, 10**6, 9)
    cmp = compare_fits(w, fit_weibull_mle(w), fit_qexp_nls(log_binned_pdf(w)))
    assert cmp.weibull_overall < cmp.qexp_overall


def test_compare_fits_mixture_report():
    r = np.random.default_rng(10)
    x = np.concatenate([gen_iid("weibull", {"alpha": 1.0, "beta": 0.8}, 50_000, 11),
                        gen_iid("qexp", {"g0": 2.0, "gamma": 3.0}, 50_000, 12)])
    x = r.permutation(x)
    cmp = compare_fits(x, fit_weibull_mle(x), fit_qexp_nls(log_binned_pdf(x)))
    d = cmp.to_dict()
    assert len(d["weibull_error"]) == len(d["qexp_error"]) == len(d["decades"])
    assert all(math.isfinite(v) for v in d["weibull_error"])
