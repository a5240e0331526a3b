"""PMD-induced depolarization of Gaussian pulses.

Everything is in picoseconds.  A fiber realization splits the pulse between
the two principal states (PS) with relative intensity ``eta`` and delays them
by the DGD.  The loss of temporal overlap between the two replicas is what
depolarizes the light::

    DOP = sqrt(eta**2 + (1 - eta**2) * exp(-dgd**2 / (4 sigma**2)))

The DGD is Maxwell distributed with rms ``pmd_rms`` and ``eta`` is uniform on
[-1, 1].  ``survival`` and ``prior_density`` give the resulting distribution
of the DOP; ``pmd_rms = math.inf`` is accepted everywhere as the uniform limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from dopinfo.errors import DomainError

MAXWELL_NORM = 3.0 * math.sqrt(6.0 / math.pi)
# the Maxwell tail beyond this many rms DGDs carries < 1e-20 of the mass
TAIL_CUTOFF = 6.0
DEFAULT_GRID_POINTS = 2001
MIN_GRID_POINTS = 101

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def _positive_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def _check_pmd(pmd_rms: float) -> float:
    """Validate an rms DGD; ``inf`` is allowed and means the uniform limit."""
    pmd_rms = float(pmd_rms)
    if math.isnan(pmd_rms) or pmd_rms <= 0.0:
        raise DomainError(f"pmd_rms must be positive, got {pmd_rms!r}")
    return pmd_rms


@dataclass(frozen=True)
class GaussianPulse:
    """Pulse with intensity I(t) = I0 exp(-t**2 / (2 sigma**2))."""

    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive_finite("sigma", self.sigma))


@dataclass(frozen=True)
class FiberPmd:
    """Fiber characterized by its PMD, the rms differential group delay."""

    pmd_rms: float

    def __post_init__(self):
        object.__setattr__(self, "pmd_rms", _positive_finite("pmd_rms", self.pmd_rms))


@dataclass(frozen=True)
class PmdRealization:
    """One state of the fiber.

    ``ps_axis`` is the slow/fast principal state on the Poincare sphere and
    ``phase`` the relative optical phase of the two PS amplitudes.  Neither
    changes the DOP; they only orient the Bloch vector.
    """

    dgd: float
    eta: float
    ps_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    phase: float = 0.0

    def __post_init__(self):
        if not (self.dgd >= 0.0):
            raise DomainError(f"dgd must be >= 0, got {self.dgd!r}")
        if not (-1.0 <= self.eta <= 1.0):
            raise DomainError(f"eta must lie in [-1, 1], got {self.eta!r}")
        axis = tuple(float(c) for c in self.ps_axis)
        if len(axis) != 3 or abs(math.sqrt(sum(c * c for c in axis)) - 1.0) > 1e-12:
            raise DomainError(f"ps_axis must be a unit 3-vector, got {self.ps_axis!r}")
        object.__setattr__(self, "ps_axis", axis)
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * math.pi))


@dataclass(frozen=True)
class BlochState:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3,):
            raise DomainError("Bloch vector must have 3 components")
        if np.linalg.norm(m) > 1.0 + 1e-12:
            raise DomainError(f"|M| = {np.linalg.norm(m)!r} exceeds 1")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @property
    def dop(self) -> float:
        return float(np.linalg.norm(self.m))

    def density_matrix(self) -> np.ndarray:
        """(1 + M.sigma) / 2 in the basis where sigma_z is diagonal."""
        x, y, z = self.m
        return 0.5 * np.array([[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]])


@dataclass(frozen=True)
class DopPrior:
    """Tabulated a-priori DOP density on a grid over [0, 1]."""

    grid: np.ndarray
    density: np.ndarray
    pmd_rms: float
    sigma: float
    normalization: float = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        density = np.array(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != density.shape:
            raise DomainError("grid and density must be 1-D arrays of equal length")
        if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0.0):
            raise DomainError("grid must increase strictly from 0 to 1")
        if np.any(density < 0.0) or not np.all(np.isfinite(density)):
            raise DomainError("density must be finite and non-negative")
        total = float(np.trapezoid(density, grid))
        if abs(total - 1.0) > 1e-4:
            raise DomainError(f"density integrates to {total!r}, not 1")
        grid.flags.writeable = False
        density.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "normalization", total)

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))


# --------------------------------------------------------------------------
# DGD statistics
# --------------------------------------------------------------------------

def maxwell_pdf(dgd, pmd_rms: float):
    """Maxwell density of the DGD, normalized so its rms equals ``pmd_rms``."""
    pmd_rms = _positive_finite("pmd_rms", pmd_rms)
    x = np.asarray(dgd, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("dgd must be >= 0")
    out = MAXWELL_NORM * x**2 / pmd_rms**3 * np.exp(-1.5 * x**2 / pmd_rms**2)
    return out if out.ndim else float(out)


def _maxwell(x: float, pmd_rms: float) -> float:
    return MAXWELL_NORM * x * x / pmd_rms**3 * math.exp(-1.5 * x * x / (pmd_rms * pmd_rms))


def maxwell_cdf(dgd, pmd_rms: float):
    pmd_rms = _positive_finite("pmd_rms", pmd_rms)
    x = np.asarray(dgd, dtype=float)
    # z = x / a with a = pmd_rms / sqrt(3) the per-axis standard deviation
    z = x * math.sqrt(3.0) / pmd_rms
    out = special.erf(z / math.sqrt(2.0)) - math.sqrt(2.0 / math.pi) * z * np.exp(-0.5 * z**2)
    out = np.where(x > 0.0, out, 0.0)
    return out if out.ndim else float(out)


def sample_dgd(pmd_rms: float, rng: np.random.Generator, size=None):
    """Draw DGDs as the norm of a 3-D isotropic Gaussian with std pmd_rms/sqrt(3)."""
    pmd_rms = _positive_finite("pmd_rms", pmd_rms)
    shape = (3,) if size is None else (*np.atleast_1d(size), 3)
    v = rng.normal(0.0, pmd_rms / math.sqrt(3.0), size=shape)
    out = np.linalg.norm(v, axis=-1)
    return float(out) if size is None else out


# --------------------------------------------------------------------------
# single realization
# --------------------------------------------------------------------------

def coherence_factor(dgd, pulse: GaussianPulse):
    """k = exp(-dgd**2 / (4 sigma**2)), the squared overlap of the PS replicas."""
    x = np.asarray(dgd, dtype=float)
    out = np.exp(-(x**2) / (4.0 * pulse.sigma**2))
    return out if out.ndim else float(out)


def dop(dgd, eta, pulse: GaussianPulse):
    """Vectorized DOP for arrays of (dgd, eta)."""
    k = coherence_factor(dgd, pulse)
    eta2 = np.asarray(eta, dtype=float) ** 2
    out = np.sqrt(eta2 + (1.0 - eta2) * k)
    return out if np.ndim(out) else float(out)


def dop_of_realization(r: PmdRealization, pulse: GaussianPulse) -> float:
    return dop(r.dgd, r.eta, pulse)


def transverse_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair (e1, e2) spanning the plane orthogonal to ``axis``.

    e1 is the projection of z (or of x when the axis is within ~26 degrees of
    z) onto that plane and e2 = axis x e1, so (e1, e2, axis) is right handed.
    """
    a = np.asarray(axis, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[2]) > 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = helper - np.dot(helper, a) * a
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(a, e1)


def bloch_of_realization(r: PmdRealization, pulse: GaussianPulse) -> BlochState:
    """Bloch vector of the output photon.

    The PS populations give the component eta along ``ps_axis``; the
    coherence between the two delayed replicas, of modulus
    sqrt((1 - eta**2) k), points at azimuth ``phase`` in the transverse plane.
    """
    axis = np.array(r.ps_axis)
    k = coherence_factor(r.dgd, pulse)
    e1, e2 = transverse_frame(axis)
    t = math.cos(r.phase) * e1 + math.sin(r.phase) * e2
    m = r.eta * axis + math.sqrt((1.0 - r.eta**2) * k) * t
    norm = np.linalg.norm(m)
    if norm > 1.0:
        # rounding only; |M| <= 1 holds exactly
        m = m / norm
    return BlochState(m)


# --------------------------------------------------------------------------
# DOP distribution
# --------------------------------------------------------------------------

def _check_m(m: float) -> float:
    m = float(m)
    if not (0.0 <= m <= 1.0):
        raise DomainError(f"DOP value must lie in [0, 1], got {m!r}")
    return m


def dgd_threshold(m: float, pulse: GaussianPulse) -> float:
    """Smallest DGD for which the DOP can fall below ``m``: k(dgd) = m**2."""
    if m >= 1.0:
        return 0.0
    return 2.0 * pulse.sigma * math.sqrt(-2.0 * math.log(m))


def survival(m: float, pmd_rms: float, pulse: GaussianPulse) -> float:
    """Prob(DOP >= m), averaging the eta-measure 1 - eta_min over the DGD."""
    m = _check_m(m)
    pmd_rms = _check_pmd(pmd_rms)
    if m == 0.0:
        return 1.0
    if m == 1.0:
        return 0.0
    if math.isinf(pmd_rms):
        return 1.0 - m
    s2 = pulse.sigma**2

    def eta_min_weighted(x):
        one_minus_k = -math.expm1(-x * x / (4.0 * s2))
        k = 1.0 - one_minus_k
        return _maxwell(x, pmd_rms) * math.sqrt(max(0.0, m * m - k) / one_minus_k)

    lo = dgd_threshold(m, pulse)
    hi = TAIL_CUTOFF * pmd_rms
    if lo >= hi:
        return 1.0
    points = [pmd_rms] if lo < pmd_rms < hi else None
    val, _ = integrate.quad(eta_min_weighted, lo, hi, points=points, **_QUAD_OPTS)
    return min(1.0, max(0.0, 1.0 - val))


def prior_density(m: float, pmd_rms: float, pulse: GaussianPulse) -> float:
    """A-priori density of the DOP at ``m`` in (0, 1].

    rho(m) = int_{dgd_min}^inf maxwell(x) m / sqrt((1 - k)(m**2 - k)) dx.
    The integrand blows up like an inverse square root at dgd_min, where
    k = m**2.  The stretch next to it, k in [m**2/2, m**2], is integrated in
    u = sqrt(m**2 - k), where the integrand is bounded; the rest (k < m**2/2)
    is smooth and integrated directly in the DGD up to the tail cutoff.
    """
    m = float(m)
    if not (0.0 < m <= 1.0):
        raise DomainError(f"prior density is defined on (0, 1], got {m!r}")
    pmd_rms = _check_pmd(pmd_rms)
    if math.isinf(pmd_rms):
        return 1.0
    sigma = pulse.sigma
    s2 = sigma * sigma
    d2 = pmd_rms * pmd_rms
    one_minus_m2 = (1.0 - m) * (1.0 + m)
    # maxwell(x) dx in terms of L = -ln k = x**2 / (4 s2), x = 2 sigma sqrt(L)
    scale = 2.0 * sigma * m * MAXWELL_NORM * 4.0 * s2 / pmd_rms**3

    def near(u):
        one_minus_k = one_minus_m2 + u * u
        k = m * m - u * u
        big_l = -math.log1p(-one_minus_k)
        return scale * math.sqrt(big_l) * math.exp(-6.0 * s2 * big_l / d2) / (
            math.sqrt(one_minus_k) * k
        )

    u_split = m / math.sqrt(2.0)
    total, _ = integrate.quad(near, 0.0, u_split, **_QUAD_OPTS)

    x_split = 2.0 * sigma * math.sqrt(math.log(2.0 / (m * m)))
    x_max = TAIL_CUTOFF * pmd_rms
    if x_split < x_max:
        def far(x):
            e = x * x / (4.0 * s2)
            k = math.exp(-e)
            return _maxwell(x, pmd_rms) * m / math.sqrt(-math.expm1(-e) * (m * m - k))

        points = [pmd_rms] if x_split < pmd_rms < x_max else None
        val, _ = integrate.quad(far, x_split, x_max, points=points, **_QUAD_OPTS)
        total += val
    return max(0.0, total)


def prior_table(pmd_rms: float, pulse: GaussianPulse,
                n_points: int = DEFAULT_GRID_POINTS) -> DopPrior:
    """Tabulate ``prior_density`` on a uniform grid over [0, 1].

    The density is not evaluated at m = 0 (its limit is 0 for finite PMD but
    approached arbitrarily steeply as pmd_rms/sigma grows).  The endpoint is
    instead chosen so the first trapezoid panel carries the exact mass
    1 - survival(h), clipped at zero.
    """
    return _prior_table(_check_pmd(pmd_rms), pulse, int(n_points))


@lru_cache(maxsize=64)
def _prior_table(pmd_rms: float, pulse: GaussianPulse, n_points: int) -> DopPrior:
    if n_points < MIN_GRID_POINTS:
        raise DomainError(f"n_points must be >= {MIN_GRID_POINTS}, got {n_points}")
    grid = np.linspace(0.0, 1.0, n_points)
    if math.isinf(pmd_rms):
        return DopPrior(grid, np.ones(n_points), pmd_rms, pulse.sigma)
    density = np.empty(n_points)
    density[1:] = [prior_density(m, pmd_rms, pulse) for m in grid[1:]]
    h = grid[1]
    first_panel = 1.0 - survival(h, pmd_rms, pulse)
    density[0] = max(0.0, 2.0 * first_panel / h - density[1])
    return DopPrior(grid, density, pmd_rms, pulse.sigma)


def uniform_prior(n_points: int = DEFAULT_GRID_POINTS, sigma: float = 1.0) -> DopPrior:
    """The pmd_rms/sigma -> inf limit, in which the DOP equals |eta|."""
    return prior_table(math.inf, GaussianPulse(sigma), n_points)
