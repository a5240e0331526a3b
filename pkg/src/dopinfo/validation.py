"""Self-check suite behind ``dopinfo validate``.

Each check compares a computed quantity with a reference value.  Reference
values live in ``REFERENCE`` and can be overridden by name, which is how the
CLI tests prove that a wrong constant is caught.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from dopinfo.bayes import gain_row, mean_info_gain
from dopinfo.errors import DomainError
from dopinfo.measurement import COHERENT, INCOHERENT, p_same, p_singlet
from dopinfo.montecarlo import (binomial_stderr, empirical_survival, histogram_l1,
                                mutual_information_mc, sample_ensemble)
from dopinfo.pmd import (DEFAULT_GRID_POINTS, GaussianPulse, maxwell_cdf, prior_density,
                         prior_table, sample_dgd, survival)

SIGMA = 10.0
PMD_CASES = (20.0, 30.0, 40.0)
DOMINANCE_CASES = (10.0, 20.0, 30.0, 40.0, 100.0, 1e4)

REFERENCE = {
    "ratio_20": 7.08,
    "ratio_30": 5.69,
    "ratio_40": 5.23,
    "ratio_inf": 4.82,
    "ratio_rtol": 0.05,
    "normalization": 1.0,
    "normalization_tol": 1e-4,
    "l1_max": 0.02,
    "survival_nse": 3.0,
    "mi_nse": 2.0,
    "p_singlet_0": 0.25,
    "p_singlet_1": 0.0,
    "p_same_tol": 1e-10,
    "maxwell_rms_rtol": 0.005,
    "maxwell_ks_max": 0.002,
    "derivative_tol": 1e-4,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    target: float
    detail: str = ""


def _basis_averaged_same(m: float) -> float:
    """Average of p**2 + (1-p)**2 with p = (1 + m c)/2 over c uniform on [-1, 1]."""
    val, _ = integrate.quad(lambda c: ((1 + m * c) / 2) ** 2 + ((1 - m * c) / 2) ** 2,
                            -1.0, 1.0, epsabs=1e-13, epsrel=1e-12)
    return val / 2.0


def run_checks(samples: int = 1_000_000, seed: int = 7,
               grid_points: int = DEFAULT_GRID_POINTS,
               overrides: dict[str, float] | None = None) -> list[CheckResult]:
    ref = dict(REFERENCE)
    for key, value in (overrides or {}).items():
        if key not in ref:
            raise DomainError(f"unknown reference constant {key!r}")
        ref[key] = value
    pulse = GaussianPulse(SIGMA)
    out: list[CheckResult] = []
    seeds = np.random.SeedSequence(seed).generate_state(8)

    def add(name, value, target, ok, detail=""):
        out.append(CheckResult(name, bool(ok), float(value), float(target), detail))

    # normalization and paper ratios
    for pmd in PMD_CASES:
        tab = prior_table(pmd, pulse, grid_points)
        add(f"prior_normalization[{pmd:g}]", tab.normalization, ref["normalization"],
            abs(tab.normalization - ref["normalization"]) <= ref["normalization_tol"])
    for pmd in (*PMD_CASES, math.inf):
        key = f"ratio_{pmd:g}"
        ratio = gain_row(pmd, pulse, grid_points)[2]
        add(f"gain_ratio[{pmd:g}]", ratio, ref[key],
            abs(ratio / ref[key] - 1.0) <= ref["ratio_rtol"])

    # coherent dominance
    for pmd in DOMINANCE_CASES:
        coh, incoh, _ = gain_row(pmd, pulse, grid_points)
        add(f"coherent_dominance[{pmd:g}]", coh - incoh, 0.0, coh > incoh,
            f"coh={coh:.6g} incoh={incoh:.6g}")

    # likelihood identities
    add("p_singlet(0)", p_singlet(0.0), ref["p_singlet_0"], p_singlet(0.0) == ref["p_singlet_0"])
    add("p_singlet(1)", p_singlet(1.0), ref["p_singlet_1"], p_singlet(1.0) == ref["p_singlet_1"])
    worst = max(abs(p_same(m) - _basis_averaged_same(m)) for m in (0.2, 0.5, 0.8))
    add("p_same_basis_average", worst, ref["p_same_tol"], worst <= ref["p_same_tol"])

    # analytic density vs numerical derivative of the survival function
    h = 1e-4
    worst = max(abs(prior_density(m, 30.0, pulse)
                    + (survival(m + h, 30.0, pulse) - survival(m - h, 30.0, pulse)) / (2 * h))
                for m in (0.3, 0.6, 0.9))
    add("density_vs_survival_derivative", worst, ref["derivative_tol"],
        worst < ref["derivative_tol"])

    # Maxwell sampler
    pmd = 30.0
    dgd = sample_dgd(pmd, np.random.default_rng(seeds[0]), samples)
    rms = math.sqrt(float(np.mean(dgd**2)))
    add("maxwell_rms", rms, pmd, abs(rms / pmd - 1.0) <= ref["maxwell_rms_rtol"])
    ks = stats.kstest(dgd, lambda x: maxwell_cdf(x, pmd)).statistic
    add("maxwell_ks", ks, ref["maxwell_ks_max"], ks < ref["maxwell_ks_max"])
    del dgd

    # Monte Carlo oracle for the prior
    for i, pmd in enumerate(PMD_CASES):
        sample = sample_ensemble(samples, pmd, pulse, int(seeds[1 + i]), keep_realizations=False)
        tab = prior_table(pmd, pulse, grid_points)
        l1 = histogram_l1(sample, tab, bins=100)
        add(f"prior_vs_mc_l1[{pmd:g}]", l1, ref["l1_max"], l1 < ref["l1_max"])
        worst = 0.0
        for m in np.arange(1, 10) / 10.0:
            s = survival(m, pmd, pulse)
            se = binomial_stderr(s, len(sample))
            worst = max(worst, abs(empirical_survival(sample, m) - s) / se)
        add(f"survival_deciles[{pmd:g}]", worst, ref["survival_nse"],
            worst <= ref["survival_nse"], "worst deviation in standard errors")
        if pmd == 20.0:
            for model in (COHERENT, INCOHERENT):
                est = mutual_information_mc(sample, model)
                exact = mean_info_gain(tab, model).mean_gain
                z = abs(est.value - exact) / est.stderr
                add(f"mi_mc[{model.label}]", z, ref["mi_nse"], z <= ref["mi_nse"],
                    f"mc={est.value:.6g}+-{est.stderr:.2g} grid={exact:.6g}")
        del sample
    return out


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  {'value':>12}  {'target':>12}  detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.value:>12.6g}  {r.target:>12.6g}"
                     f"  {r.detail}".rstrip())
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
