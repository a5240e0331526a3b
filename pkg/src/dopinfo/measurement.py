"""Likelihoods of the two-photon measurements, as functions of the DOP m = |M|.

Both photons are in the state (1 + M.sigma)/2 with M pointing anywhere.

* coherent: projection on the singlet, P(singlet|m) = (1 - m**2)/4, and its
  complement "triplet".
* incoherent: both photons measured in the same random basis,
  P(same|m) = (3 + m**2)/6, and its complement "different".
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from dopinfo.errors import DomainError


def _check_m(m):
    arr = np.asarray(m, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"DOP must lie in [0, 1], got {m!r}")
    return arr


def _out(arr):
    return arr if arr.ndim else float(arr)


def p_singlet(m):
    """Weight of the singlet in two copies of a qubit with Bloch length m."""
    m = _check_m(m)
    return _out((1.0 - m**2) / 4.0)


def p_triplet(m):
    m = _check_m(m)
    return _out((3.0 + m**2) / 4.0)


def p_same(m):
    """Both photons agree when measured in a common, isotropically random basis.

    With p = (1 + m cos(theta))/2, averaging p**2 + (1 - p)**2 over
    cos(theta) uniform on [-1, 1] gives (3 + m**2)/6.
    """
    m = _check_m(m)
    return _out((3.0 + m**2) / 6.0)


def p_different(m):
    m = _check_m(m)
    return _out((3.0 - m**2) / 6.0)


@dataclass(frozen=True)
class OutcomeModel:
    """Finite set of outcomes with likelihoods P(outcome | m)."""

    label: str
    outcomes: tuple[str, ...]
    likelihoods: tuple[Callable, ...]

    def __post_init__(self):
        if len(self.outcomes) != len(self.likelihoods) or not self.outcomes:
            raise DomainError("need one likelihood per outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise DomainError("outcome labels must be unique")
        probs = self.probabilities(np.linspace(0.0, 1.0, 1001))
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise DomainError(f"{self.label}: likelihoods must lie in [0, 1]")
        if np.max(np.abs(probs.sum(axis=0) - 1.0)) > 1e-12:
            raise DomainError(f"{self.label}: likelihoods do not sum to 1")

    def likelihood(self, outcome: str, m):
        try:
            f = self.likelihoods[self.outcomes.index(outcome)]
        except ValueError:
            raise DomainError(f"{outcome!r} is not an outcome of {self.label}") from None
        m = _check_m(m)
        return _out(np.broadcast_to(np.asarray(f(m), dtype=float), m.shape).copy())

    def probabilities(self, m) -> np.ndarray:
        """Array of shape (n_outcomes, *m.shape)."""
        m = _check_m(m)
        return np.stack([np.broadcast_to(np.asarray(f(m), dtype=float), m.shape)
                         for f in self.likelihoods])

    @classmethod
    def constant(cls, weights: Sequence[float], label: str = "uninformative") -> OutcomeModel:
        """Outcomes that do not depend on m."""
        return cls(label, tuple(f"o{i}" for i in range(len(weights))),
                   tuple((lambda m, w=float(w): np.full(np.shape(m), w)) for w in weights))


COHERENT = OutcomeModel("coherent", ("singlet", "triplet"), (p_singlet, p_triplet))
INCOHERENT = OutcomeModel("incoherent", ("same", "different"), (p_same, p_different))


def sample_outcomes(model: OutcomeModel, m, rng: np.random.Generator, size=None):
    """Draw outcome labels at DOP m; with ``size`` returns an array of indices."""
    probs = model.probabilities(float(m))
    cdf = np.cumsum(probs)
    u = rng.random(size)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return idx if size is not None else model.outcomes[int(idx)]


def sample_outcome(model: OutcomeModel, m: float, rng: np.random.Generator) -> str:
    return sample_outcomes(model, m, rng)
