"""Command line front end: ``dopinfo {prior,infogain,simulate,validate}``.

Exit codes: 0 success, 1 validation failure, 2 bad arguments, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from dopinfo import validation
from dopinfo.bayes import gain_row
from dopinfo.errors import DegenerateError, DomainError
from dopinfo.measurement import COHERENT, INCOHERENT
from dopinfo.montecarlo import empirical_density, mutual_information_mc, sample_ensemble
from dopinfo.pmd import DEFAULT_GRID_POINTS, MIN_GRID_POINTS, GaussianPulse, prior_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 7
COMMANDS = ("prior", "infogain", "simulate", "validate")


@dataclass
class RunConfig:
    command: str
    pmd_rms: list[float] = field(default_factory=lambda: [20.0])
    sigma: float = 10.0
    grid_points: int = DEFAULT_GRID_POINTS
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    output_path: str | None = None
    format: str = "csv"
    bins: int = 100
    jobs: int = 1
    overrides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if not self.pmd_rms or any(not (p > 0.0) for p in self.pmd_rms):
            raise DomainError("--pmd-ps values must be positive")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise DomainError("--sigma-ps must be positive and finite")
        if self.grid_points < MIN_GRID_POINTS:
            raise DomainError(f"--grid-points must be >= {MIN_GRID_POINTS}")
        if self.samples < 1:
            raise DomainError("--samples must be >= 1")
        if self.bins < 1:
            raise DomainError("--bins must be >= 1")
        if self.format not in ("csv", "tsv"):
            raise DomainError("--format must be csv or tsv")

    @property
    def delimiter(self) -> str:
        return "," if self.format == "csv" else "\t"

    @property
    def pulse(self) -> GaussianPulse:
        return GaussianPulse(self.sigma)


def fmt(x: float) -> str:
    return f"{x:.6g}"


class Table:
    """Delimited text with a header row and '\\n' line endings."""

    def __init__(self, columns, delimiter=","):
        self.delimiter = delimiter
        self.buf = io.StringIO(newline="")
        self._line(columns)

    def _line(self, fields):
        self.buf.write(self.delimiter.join(fields) + "\n")

    def row(self, *values):
        self._line(v if isinstance(v, str) else fmt(v) for v in values)

    def comment(self, text):
        self.buf.write(f"# {text}\n")

    def getvalue(self) -> str:
        return self.buf.getvalue()


def _parallel_map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _prior_columns(args):
    pmd, sigma, n = args
    tab = prior_table(pmd, GaussianPulse(sigma), n)
    return tab.grid, tab.density


def cmd_prior(cfg: RunConfig) -> str:
    multi = len(cfg.pmd_rms) > 1
    table = Table((["pmd_ps"] if multi else []) + ["m", "density"], cfg.delimiter)
    results = _parallel_map(_prior_columns,
                            [(p, cfg.sigma, cfg.grid_points) for p in cfg.pmd_rms], cfg.jobs)
    for pmd, (grid, density) in zip(cfg.pmd_rms, results):
        lead = (pmd,) if multi else ()
        for m, d in zip(grid, density):
            table.row(*lead, m, d)
    return table.getvalue()


def _gain_row(args):
    pmd, sigma, n = args
    return gain_row(pmd, GaussianPulse(sigma), n)


def cmd_infogain(cfg: RunConfig) -> str:
    table = Table(["pmd_ps", "sigma_ps", "i_coh_bits", "i_incoh_bits", "ratio"], cfg.delimiter)
    rows = _parallel_map(_gain_row, [(p, cfg.sigma, cfg.grid_points) for p in cfg.pmd_rms],
                         cfg.jobs)
    for pmd, (coh, incoh, ratio) in zip(cfg.pmd_rms, rows):
        table.row(pmd, cfg.sigma, coh, incoh, ratio)
    return table.getvalue()


def cmd_simulate(cfg: RunConfig) -> str:
    if any(math.isinf(p) for p in cfg.pmd_rms):
        raise DomainError("simulate needs finite --pmd-ps values")
    multi = len(cfg.pmd_rms) > 1
    table = Table((["pmd_ps"] if multi else []) + ["m_bin_center", "empirical_density"],
                  cfg.delimiter)
    trailer = []
    for pmd in cfg.pmd_rms:
        sample = sample_ensemble(cfg.samples, pmd, cfg.pulse, cfg.seed,
                                 workers=cfg.jobs, keep_realizations=False)
        lead = (pmd,) if multi else ()
        for c, d in zip(*empirical_density(sample, cfg.bins)):
            table.row(*lead, c, d)
        coh = mutual_information_mc(sample, COHERENT)
        incoh = mutual_information_mc(sample, INCOHERENT)
        trailer.append(f"pmd_ps={fmt(pmd)} sigma_ps={fmt(cfg.sigma)} "
                       f"samples={cfg.samples} seed={cfg.seed}")
        trailer.append(f"pmd_ps={fmt(pmd)} mi_coh_bits={fmt(coh.value)} +- {fmt(coh.stderr)}")
        trailer.append(f"pmd_ps={fmt(pmd)} mi_incoh_bits={fmt(incoh.value)} "
                       f"+- {fmt(incoh.stderr)}")
    for line in trailer:
        table.comment(line)
    return table.getvalue()


def parse_pmd_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(math.isnan(v) or v <= 0.0 for v in values):
        raise argparse.ArgumentTypeError(f"PMD values must be positive: {text!r}")
    return values


def parse_override(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pmd-ps", type=parse_pmd_list, default=[20.0],
                        help="rms DGD in ps; comma-separated list, 'inf' for the uniform limit")
    common.add_argument("--sigma-ps", type=float, default=10.0, help="pulse spread in ps")
    common.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: $DOP_SEED or {DEFAULT_SEED})")
    common.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "tsv"), default="csv")
    common.add_argument("--bins", type=int, default=100, help="histogram bins for simulate")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    # test hook: override a reference constant of the validation suite
    common.add_argument("--inject", type=parse_override, action="append", default=[],
                        help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="dopinfo",
        description="DOP statistics under PMD and information gain of two-photon measurements.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prior", parents=[common], help="tabulate the a-priori DOP density")
    sub.add_parser("infogain", parents=[common], help="coherent vs incoherent information gain")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo DOP histogram and MI")
    sub.add_parser("validate", parents=[common], help="run the invariant and reference checks")
    return parser


def config_from_args(ns: argparse.Namespace, environ=os.environ) -> RunConfig:
    seed = ns.seed
    if seed is None:
        env = environ.get("DOP_SEED")
        try:
            seed = int(env) if env not in (None, "") else DEFAULT_SEED
        except ValueError:
            raise DomainError(f"DOP_SEED is not an integer: {env!r}")
    return RunConfig(command=ns.command, pmd_rms=ns.pmd_ps, sigma=ns.sigma_ps,
                     grid_points=ns.grid_points, samples=ns.samples, seed=seed,
                     output_path=ns.output, format=ns.format, bins=ns.bins,
                     jobs=max(1, ns.jobs), overrides=dict(ns.inject))


def write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
        if cfg.command == "validate":
            results = validation.run_checks(cfg.samples, cfg.seed, cfg.grid_points,
                                            overrides=cfg.overrides)
            report = validation.format_report(results)
            write_output(report, cfg.output_path)
            failed = [r.name for r in results if not r.passed]
            if failed:
                print("FAILED: " + ", ".join(failed), file=sys.stderr)
                return EXIT_FAIL
            return EXIT_OK
        handler = {"prior": cmd_prior, "infogain": cmd_infogain, "simulate": cmd_simulate}
        text = handler[cfg.command](cfg)
    except (DomainError, DegenerateError) as exc:
        print(f"dopinfo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dopinfo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        write_output(text, cfg.output_path)
    except OSError as exc:
        print(f"dopinfo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
