import math

import numpy as np
import pytest
from scipy import integrate

from dopinfo.bayes import (
    differential_entropy, gain_ratio, gain_row, mean_info_gain, outcome_probability, posterior,
)
from dopinfo.errors import DegenerateError, DomainError
from dopinfo.measurement import COHERENT, INCOHERENT, OutcomeModel
from dopinfo.montecarlo import mutual_information_mc, sample_ensemble
from dopinfo.pmd import DopPrior, prior_table, uniform_prior

# -int 1.5(1-m^2) log2(1.5(1-m^2)) dm on [0, 1], 30-digit mpmath quadrature
ENTROPY_PARABOLA = -0.180470765906217169187197808945
# uniform-prior mutual information, mpmath quadrature of sum_o P(o|m) log2(P(o|m)/P_o)
UNIFORM_MI_COHERENT = 0.0348087077705333922961330912158
UNIFORM_MI_INCOHERENT = 0.0072762410265773292776492860092


@pytest.fixture(scope="module")
def prior30(pulse):
    return prior_table(30.0, pulse)


def test_posterior_uniform_singlet():
    prior = uniform_prior()
    post = posterior(prior, COHERENT, "singlet")
    assert post.density == pytest.approx(1.5 * (1 - prior.grid**2), abs=1e-6)
    assert post.p_outcome == pytest.approx(1 / 6, abs=1e-7)


def test_posterior_uninformative(prior30):
    model = OutcomeModel.constant([0.4, 0.6])
    post = posterior(prior30, model, "o0")
    assert np.max(np.abs(post.density - prior30.density)) < 1e-12


def test_posterior_shifts_down(prior30):
    assert posterior(prior30, COHERENT, "singlet").mean() < prior30.mean()
    assert posterior(prior30, COHERENT, "triplet").mean() > prior30.mean()


def test_posterior_normalized(prior30):
    for model in (COHERENT, INCOHERENT):
        for o in model.outcomes:
            post = posterior(prior30, model, o)
            assert np.trapezoid(post.density, post.grid) == pytest.approx(1.0, abs=1e-4)
            assert np.all(post.density >= 0)


def test_bayes_consistency(prior30):
    for model in (COHERENT, INCOHERENT):
        mix = sum(outcome_probability(prior30, model, o) * posterior(prior30, model, o).density
                  for o in model.outcomes)
        assert np.max(np.abs(mix - prior30.density)) < 1e-9


def test_degenerate_outcome():
    grid = np.linspace(0, 1, 201)
    prior = DopPrior(grid, np.ones_like(grid), math.inf, 1.0)
    model = OutcomeModel.constant([0.0, 1.0])
    with pytest.raises(DegenerateError):
        posterior(prior, model, "o0")


class TestEntropy:
    def test_uniform(self):
        grid = np.linspace(0, 1, 2001)
        assert differential_entropy(np.ones_like(grid), grid) == pytest.approx(0.0, abs=1e-15)

    def test_half_interval(self):
        grid = np.linspace(0, 1, 20_001)
        dens = np.where(grid <= 0.5, 2.0, 0.0)
        # the step smears over one trapezoid panel
        assert differential_entropy(dens, grid) == pytest.approx(-1.0, abs=1e-3)

    def test_half_interval_on_own_support(self):
        grid = np.linspace(0, 0.5, 1001)
        assert differential_entropy(np.full_like(grid, 2.0), grid) == pytest.approx(-1.0)

    def test_parabola_against_quadrature(self):
        grid = np.linspace(0, 1, 100_001)
        h = differential_entropy(1.5 * (1 - grid**2), grid)
        val, _ = integrate.quad(lambda m: -1.5 * (1 - m * m) * math.log2(1.5 * (1 - m * m)),
                                0, 1)
        assert h == pytest.approx(val, abs=1e-8)
        assert h == pytest.approx(ENTROPY_PARABOLA, abs=1e-8)

    def test_rejects_unnormalized(self):
        grid = np.linspace(0, 1, 101)
        with pytest.raises(DomainError):
            differential_entropy(np.full_like(grid, 1.1), grid)
        with pytest.raises(DomainError):
            differential_entropy(-np.ones_like(grid), grid)

    def test_zero_density_regions(self):
        grid = np.linspace(0, 1, 2001)
        dens = np.where(grid < 0.5, 1e-320, 2.0)
        dens /= np.trapezoid(dens, grid)
        assert np.isfinite(differential_entropy(dens, grid))


class TestGain:
    def test_uninformative(self, prior30):
        report = mean_info_gain(prior30, OutcomeModel.constant([0.2, 0.8]))
        assert report.mean_gain == pytest.approx(0.0, abs=1e-12)

    def test_report_fields(self, prior30):
        report = mean_info_gain(prior30, COHERENT)
        assert report.model_label == "coherent"
        assert sum(report.p_outcome.values()) == pytest.approx(1.0, abs=1e-9)
        assert report.mean_gain == pytest.approx(
            sum(report.p_outcome[o] * report.gain_per_outcome[o] for o in COHERENT.outcomes))
        # a singlet moves mass off the high-DOP peak, so that posterior is wider
        assert report.gain_per_outcome["singlet"] < 0 < report.gain_per_outcome["triplet"]

    def test_uniform_prior_closed_form(self):
        prior = uniform_prior()
        assert mean_info_gain(prior, COHERENT).mean_gain == pytest.approx(UNIFORM_MI_COHERENT,
                                                                         rel=1e-5)
        assert mean_info_gain(prior, INCOHERENT).mean_gain == pytest.approx(
            UNIFORM_MI_INCOHERENT, rel=1e-5)

    def test_uniform_prior_vs_monte_carlo(self, pulse):
        sample = sample_ensemble(1_000_000, 1e4, pulse, seed=101, keep_realizations=False)
        est = mutual_information_mc(sample, COHERENT)
        exact = mean_info_gain(uniform_prior(), COHERENT).mean_gain
        assert abs(est.value - exact) <= 2 * est.stderr

    @pytest.mark.parametrize("pmd", [10.0, 20.0, 30.0, 40.0, 100.0, 1e4])
    def test_nonnegative_and_coherent_dominates(self, pulse, pmd):
        prior = prior_table(pmd, pulse)
        coh = mean_info_gain(prior, COHERENT).mean_gain
        incoh = mean_info_gain(prior, INCOHERENT).mean_gain
        assert coh >= -1e-9 and incoh >= -1e-9
        assert coh > incoh

    def test_grid_convergence(self, pulse):
        for model in (COHERENT, INCOHERENT):
            a = mean_info_gain(prior_table(30.0, pulse, 2001), model).mean_gain
            b = mean_info_gain(prior_table(30.0, pulse, 4001), model).mean_gain
            assert abs(a - b) < 1e-3

    @pytest.mark.parametrize("pmd,expected", [(20.0, 7.08), (30.0, 5.69), (40.0, 5.23),
                                              (math.inf, 4.82)])
    def test_paper_ratios(self, pulse, pmd, expected):
        assert gain_ratio(pmd, pulse) == pytest.approx(expected, rel=0.05)

    def test_gain_row(self, pulse):
        coh, incoh, ratio = gain_row(20.0, pulse)
        assert ratio == pytest.approx(coh / incoh)
