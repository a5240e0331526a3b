"""Brute-force counterparts of the analytic DOP statistics.

Ensembles are drawn in fixed-size chunks, each from its own generator spawned
from ``numpy.random.SeedSequence(seed)``.  The chunk layout depends only on
``n``, so results are a pure function of ``(n, pmd_rms, sigma, seed)`` and the
chunks may be generated in any order or in parallel.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from dopinfo.errors import DomainError
from dopinfo.measurement import OutcomeModel
from dopinfo.pmd import DopPrior, FiberPmd, GaussianPulse, PmdRealization, dop, sample_dgd

CHUNK_SIZE = 1 << 18


class MCEstimate(NamedTuple):
    value: float
    stderr: float


@dataclass(frozen=True)
class EnsembleSample:
    """Realizations stored column-wise; ``realization(i)`` rebuilds one.

    Ensembles drawn with ``keep_realizations=False`` hold only the DOPs and
    have ``None`` in the other columns.
    """

    dgd: np.ndarray | None
    eta: np.ndarray | None
    ps_axis: np.ndarray | None
    phase: np.ndarray | None
    dops: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.dops)

    def realization(self, i: int) -> PmdRealization:
        if self.dgd is None:
            raise DomainError("ensemble was drawn without keeping realizations")
        return PmdRealization(float(self.dgd[i]), float(self.eta[i]),
                              tuple(self.ps_axis[i]), float(self.phase[i]))

    def realizations(self) -> Iterator[PmdRealization]:
        return (self.realization(i) for i in range(len(self)))


def chunk_generators(n: int, seed: int) -> list[tuple[int, np.random.Generator]]:
    """(chunk length, generator) pairs covering n draws."""
    sizes = [CHUNK_SIZE] * (n // CHUNK_SIZE)
    if n % CHUNK_SIZE:
        sizes.append(n % CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(size, np.random.default_rng(ss)) for size, ss in zip(sizes, children)]


def _draw_chunk(size: int, rng: np.random.Generator, pmd_rms: float, pulse: GaussianPulse):
    dgd = sample_dgd(pmd_rms, rng, size)
    eta = rng.uniform(-1.0, 1.0, size)
    axis = rng.normal(size=(size, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    phase = rng.uniform(0.0, 2.0 * math.pi, size)
    return dgd, eta, axis, phase, dop(dgd, eta, pulse)


def sample_ensemble(n: int, pmd_rms: float, pulse: GaussianPulse, seed: int,
                    workers: int = 1, keep_realizations: bool = True) -> EnsembleSample:
    """Draw n independent fiber realizations and their DOPs.

    DGD from the Maxwell sampler, eta uniform on [-1, 1], PS axis uniform on
    the sphere (normalized Gaussian vector), phase uniform on [0, 2 pi).
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    pmd_rms = FiberPmd(pmd_rms).pmd_rms

    def draw(job):
        part = _draw_chunk(*job, pmd_rms, pulse)
        return part if keep_realizations else (None, None, None, None, part[4])

    jobs = chunk_generators(int(n), int(seed))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, jobs))
    else:
        parts = [draw(job) for job in jobs]
    cols = [None if parts[0][i] is None else np.concatenate([p[i] for p in parts])
            for i in range(5)]
    return EnsembleSample(*cols, seed=int(seed))


def empirical_survival(sample: EnsembleSample, m: float) -> float:
    """Fraction of the ensemble with DOP >= m."""
    if not (0.0 <= m <= 1.0):
        raise DomainError(f"m must lie in [0, 1], got {m!r}")
    return float(np.count_nonzero(sample.dops >= m)) / len(sample)


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def empirical_density(sample: EnsembleSample, bins: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of the DOPs on [0, 1]: (bin centers, density)."""
    counts, edges = np.histogram(sample.dops, bins=bins, range=(0.0, 1.0))
    width = edges[1] - edges[0]
    return 0.5 * (edges[:-1] + edges[1:]), counts / (len(sample) * width)


def prior_bin_masses(prior: DopPrior, bins: int) -> np.ndarray:
    """Probability of each of ``bins`` equal bins on [0, 1] under a tabulated prior."""
    grid, dens = prior.grid, prior.density
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    edges = np.linspace(0.0, 1.0, bins + 1)
    return np.diff(np.interp(edges, grid, cum)) / prior.normalization


def histogram_l1(sample: EnsembleSample, prior: DopPrior, bins: int = 100) -> float:
    """L1 distance between the empirical and analytic DOP laws, binned.

    Equals int |empirical density - binned analytic density| dm, i.e. the sum
    over bins of |observed fraction - predicted mass|.
    """
    counts, _ = np.histogram(sample.dops, bins=bins, range=(0.0, 1.0))
    return float(np.abs(counts / len(sample) - prior_bin_masses(prior, bins)).sum())


def mutual_information_mc(sample: EnsembleSample, model: OutcomeModel) -> MCEstimate:
    """Mutual information between outcome and DOP, averaging exact likelihoods.

    P_o is estimated as the sample mean of P(o|m); the per-sample information
    sum_o P(o|m) log2(P(o|m) / P_o) is then averaged.  The standard error is
    that of the mean of the per-sample terms.
    """
    probs = model.probabilities(sample.dops)
    marg = probs.mean(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0.0, probs * np.log2(probs / marg), 0.0).sum(axis=0)
    n = len(terms)
    stderr = float(terms.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(float(terms.mean()), stderr)


def mean_dop(sample: EnsembleSample) -> MCEstimate:
    n = len(sample)
    se = float(sample.dops.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(float(sample.dops.mean()), se)
