"""Posterior DOP densities and Shannon information gain of a measurement.

All integrals over m are trapezoid sums on the prior's grid.  Entropies are
differential entropies h = -int rho log2 rho, so the mean gain
h(prior) - sum_o P_o h(posterior_o) is the mutual information between the
outcome and the DOP, in bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dopinfo.errors import DegenerateError, DomainError
from dopinfo.measurement import COHERENT, INCOHERENT, OutcomeModel
from dopinfo.pmd import DEFAULT_GRID_POINTS, DopPrior, GaussianPulse, prior_table

# densities below this are treated as exact zeros
DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class PosteriorDensity:
    grid: np.ndarray
    density: np.ndarray
    conditioning_outcome: str
    p_outcome: float

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))


@dataclass(frozen=True)
class GainReport:
    model_label: str
    p_outcome: dict[str, float]
    gain_per_outcome: dict[str, float]
    mean_gain: float
    prior_entropy: float


def outcome_probability(prior: DopPrior, model: OutcomeModel, outcome: str) -> float:
    """Marginal P_o = int rho(m) P(o|m) dm, relative to the grid mass of rho.

    Dividing by the trapezoid mass of the prior (1 within 1e-4) makes the
    marginals of a model sum to 1 to rounding.
    """
    mass = np.trapezoid(prior.density * model.likelihood(outcome, prior.grid), prior.grid)
    return float(mass / prior.normalization)


def posterior(prior: DopPrior, model: OutcomeModel, outcome: str) -> PosteriorDensity:
    like = model.likelihood(outcome, prior.grid)
    p_o = outcome_probability(prior, model, outcome)
    if p_o < 1e-15:
        raise DegenerateError(f"outcome {outcome!r} has probability {p_o!r}")
    dens = prior.density * like / p_o
    dens.flags.writeable = False
    return PosteriorDensity(prior.grid, dens, outcome, p_o)


def differential_entropy(density, grid) -> float:
    """-int rho log2 rho over the grid, with 0 log 0 = 0.  Returns bits."""
    rho = np.asarray(density, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if rho.shape != grid.shape or np.any(rho < 0.0):
        raise DomainError("density must be non-negative and match the grid")
    total = float(np.trapezoid(rho, grid))
    if abs(total - 1.0) > 1e-4:
        raise DomainError(f"density integrates to {total!r}, not 1")
    rho = np.where(rho < DENSITY_FLOOR, 0.0, rho)
    safe = np.where(rho > 0.0, rho, 1.0)
    return float(-np.trapezoid(rho * np.log2(safe), grid))


def mean_info_gain(prior: DopPrior, model: OutcomeModel) -> GainReport:
    h0 = differential_entropy(prior.density, prior.grid)
    probs, gains = {}, {}
    for o in model.outcomes:
        post = posterior(prior, model, o)
        probs[o] = post.p_outcome
        gains[o] = h0 - differential_entropy(post.density, post.grid)
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"outcome marginals sum to {total!r}")
    mean = sum(probs[o] * gains[o] for o in model.outcomes)
    return GainReport(model.label, probs, gains, mean, h0)


def gain_row(pmd_rms: float, pulse: GaussianPulse,
             n_points: int = DEFAULT_GRID_POINTS) -> tuple[float, float, float]:
    """(coherent gain, incoherent gain, ratio) in bits for the PMD prior.

    ``pmd_rms = math.inf`` gives the uniform-prior limit.
    """
    prior = prior_table(pmd_rms, pulse, n_points)
    coh = mean_info_gain(prior, COHERENT).mean_gain
    incoh = mean_info_gain(prior, INCOHERENT).mean_gain
    if incoh < 1e-12:
        raise DegenerateError(f"incoherent gain {incoh!r} is too small for a ratio")
    return coh, incoh, coh / incoh


def gain_ratio(pmd_rms: float, pulse: GaussianPulse,
               n_points: int = DEFAULT_GRID_POINTS) -> float:
    """Coherent over incoherent mean information gain."""
    return gain_row(pmd_rms, pulse, n_points)[2]
