"""Command-line front end: simulate, estimate, diagnose, mc.

Exit codes: 0 success, 1 usage error, 2 data validation error,
3 numerical failure. All randomness enters through explicit --seed
flags; nothing is seeded from the clock.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import harness, kernels, krr, phenosim, spectra
from .exceptions import ConditionNotMet, DataError, KernheritError, NumericalError
from .genotypes import (
    GenotypeMatrix,
    MafLaw,
    read_genotype_csv,
    simulate_hwe,
    subsample,
    write_genotype_csv,
)
from .phenosim import SimulationSpec, build_population, export_population


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage problems to exit code 1
        raise UsageError(message)


def _read_vector(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=1)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: could not parse numeric column: {exc}") from None
    if data.ndim != 1:
        raise DataError(f"{path}: expected a single column, got shape {data.shape}")
    return data

def _read_matrix(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: could not parse numeric matrix: {exc}") from None
    return data


def _gaussian_bandwidth_arg(raw: str):
    if raw == "auto":
        return None
    try:
        value = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {raw!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _resolve_bandwidth(arg, standardize: bool, n_snps: int) -> float:
    if arg is not None:
        return float(arg)
    return n_snps / 2.0 if standardize else 1.0


def _design(g: GenotypeMatrix, standardize: bool) -> np.ndarray:
    return g.standardized() if standardize else g.as_float()


def _add_pipeline_flags(parser) -> None:
    parser.add_argument(
        "--no-standardize",
        dest="standardize",
        action="store_false",
        help="build kernels on raw allele counts instead of column-standardized ones",
    )
    parser.set_defaults(standardize=True)
    parser.add_argument(
        "--gaussian-bandwidth",
        type=_gaussian_bandwidth_arg,
        default=None,
        metavar="auto|FLOAT",
        help="Gaussian kernel bandwidth; 'auto' means p/2 standardized, 1 raw",
    )


def _kernel_kinds(arg: str) -> tuple[str, ...]:
    return kernels.KERNEL_KINDS if arg == "all" else (arg,)


def cmd_simulate(args) -> int:
    if args.preset is not None:
        cfg = harness.preset_config(args.preset)
        n, p = cfg.population_size, cfg.snp_count
        sigma_g, sigma_eps, family = cfg.sigma_g, cfg.sigma_eps, cfg.family
        scenario = cfg.scenario
    else:
        missing = [
            name
            for name, value in (
                ("--n-individuals", args.n_individuals),
                ("--n-snps", args.n_snps),
                ("--sigma-g", args.sigma_g),
                ("--family", args.family),
            )
            if value is None
        ]
        if missing:
            raise UsageError(f"missing {', '.join(missing)} (or use --preset)")
        n, p = args.n_individuals, args.n_snps
        sigma_g, sigma_eps, family = args.sigma_g, args.sigma_eps, args.family
        scenario = "hwe"
    try:
        spec_probe = SimulationSpec(
            n_individuals=n, n_snps=p, sigma_g=sigma_g, sigma_eps=sigma_eps,
            family=family, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    geno_seed, pheno_seed = harness.derive_population_seeds(args.seed)
    if scenario == "external":
        if args.genotypes is None:
            raise UsageError("this preset samples from real data; pass --genotypes")
        source = read_genotype_csv(args.genotypes)
        genotypes = subsample(source, n, cols=p, seed=geno_seed)
    else:
        genotypes = simulate_hwe(n, p, MafLaw(), seed=geno_seed)
    spec = dataclasses.replace(spec_probe, seed=pheno_seed)
    pop = build_population(spec, genotypes)

    prefix = args.out
    geno_path = prefix + ".genotypes.csv"
    write_genotype_csv(genotypes, geno_path)
    paths = export_population(pop, spec, prefix)
    print(f"wrote {geno_path}")
    for path in paths.values():
        print(f"wrote {path}")
    print(f"true_h2={pop.true_h2!r}")
    return 0


def cmd_estimate(args) -> int:
    genotypes = read_genotype_csv(args.genotypes)
    y = _read_vector(args.phenotypes)
    if y.shape[0] != genotypes.n:
        raise DataError(
            f"phenotype length {y.shape[0]} does not match genotype rows {genotypes.n}"
        )
    if args.covariates is not None:
        y = krr.residualize(y, _read_matrix(args.covariates))
    design = _design(genotypes, args.standardize)
    bandwidth = _resolve_bandwidth(args.gaussian_bandwidth, args.standardize, genotypes.p)
    grid = tuple(args.nlambda) if args.nlambda else krr.DEFAULT_NLAMBDA_GRID

    lines = [krr.estimate_csv_header()]
    for kind in _kernel_kinds(args.kernel):
        kernel = kernels.make_kernel(kind, design, gaussian_bandwidth=bandwidth)
        for fit_res in krr.lambda_grid_fit(kernel, y, grid):
            lines.append(krr.estimate_csv_row(kind, fit_res))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_diagnose(args) -> int:
    genotypes = read_genotype_csv(args.genotypes)
    y = _read_vector(args.phenotypes)
    if y.shape[0] != genotypes.n:
        raise DataError(
            f"phenotype length {y.shape[0]} does not match genotype rows {genotypes.n}"
        )
    design = _design(genotypes, args.standardize)
    bandwidth = _resolve_bandwidth(args.gaussian_bandwidth, args.standardize, genotypes.p)
    kernel = kernels.make_kernel(args.kernel, design, gaussian_bandwidth=bandwidth)
    fit_res = krr.fit(kernel, y, args.nlambda)
    if args.true_g is not None:
        g = _read_vector(args.true_g)
        if g.shape[0] != genotypes.n:
            raise DataError(
                f"signal length {g.shape[0]} does not match genotype rows {genotypes.n}"
            )
        proxy = False
        resid = y - g
        sigma_eps2 = float(resid @ resid) / genotypes.n
    else:
        g = fit_res.g_hat
        proxy = True
        sigma_eps2 = fit_res.sigma_eps2_hat

    cond = spectra.check_conditions(kernel, g, g_is_proxy=proxy)
    bound = spectra.bound_report(kernel, y, g, args.nlambda, sigma_eps2, cond)
    lines = [spectra.report_text(cond, bound).rstrip("\n")]
    tag = ".proxy" if proxy else ""
    try:
        p3 = spectra.prop3_check(kernel, g, args.nlambda, cond)
        lines.append(f"alignment_bound_lhs{tag}={p3.lhs!r}")
        lines.append(f"alignment_bound_rhs{tag}={p3.rhs!r}")
        lines.append(f"alignment_bound_holds{tag}={'true' if p3.holds else 'false'}")
    except ConditionNotMet as exc:
        lines.append(f"alignment_bound{tag}=refused: {exc}")
    lines.append(f"sigma_g2_hat={fit_res.sigma_g2_hat!r}")
    lines.append(f"sigma_eps2_hat={fit_res.sigma_eps2_hat!r}")
    lines.append(f"h2_hat={fit_res.h2_hat!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_mc(args) -> int:
    if args.config is not None:
        cfg = harness.read_config(args.config)
    elif args.preset is not None:
        cfg = harness.preset_config(args.preset)
    else:
        raise UsageError("pass --config FILE or --preset NAME")
    overrides = {}
    if args.reps is not None:
        overrides["repetitions"] = args.reps
    if args.kernels is not None:
        overrides["kernels"] = tuple(part.strip() for part in args.kernels.split(","))
    if args.nlambda:
        overrides["lambda_grid"] = tuple(args.nlambda)
    if args.sizes is not None:
        overrides["sample_sizes"] = tuple(int(s) for s in args.sizes.split(","))
    if args.population_seed is not None:
        overrides["population_seed"] = args.population_seed
    if args.sampling_seed is not None:
        overrides["sampling_seed"] = args.sampling_seed
    if args.out is not None:
        overrides["output_path"] = args.out
    try:
        cfg = dataclasses.replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.output_path is None:
        raise UsageError("no output directory: pass --out or set output_path in the config")

    source = read_genotype_csv(args.genotypes) if args.genotypes is not None else None
    table = harness.run_mc(cfg, genotype_source=source, workers=args.workers)

    os.makedirs(cfg.output_path, exist_ok=True)
    table_path = os.path.join(cfg.output_path, "table.csv")
    manifest_path = os.path.join(cfg.output_path, "manifest.txt")
    harness.write_table_csv(table, table_path)
    harness.write_manifest(cfg, manifest_path, workers=args.workers)
    excluded = sum(c.excluded for c in table.rows)
    print(f"wrote {table_path} ({len(table.rows)} rows)")
    print(f"wrote {manifest_path}")
    print(
        f"true_h2={table.true_h2!r} repetitions={cfg.repetitions} "
        f"excluded_estimates={excluded}"
    )
    if cfg.repetitions == 1:
        print("note: single repetition; sd columns are 0 by convention")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="kernherit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a genotype/phenotype population")
    p_sim.add_argument("--preset", choices=sorted(harness.PRESETS), default=None)
    p_sim.add_argument("--n-individuals", type=int, default=None)
    p_sim.add_argument("--n-snps", type=int, default=None)
    p_sim.add_argument("--sigma-g", type=float, default=None)
    p_sim.add_argument("--sigma-eps", type=float, default=0.5)
    p_sim.add_argument("--family", choices=phenosim.FAMILIES, default=None)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--genotypes", default=None, help="source matrix for external presets")
    p_sim.add_argument("--out", required=True, help="output path prefix")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate heritability from files")
    p_est.add_argument("--genotypes", required=True)
    p_est.add_argument("--phenotypes", required=True)
    p_est.add_argument("--covariates", default=None)
    p_est.add_argument("--kernel", choices=kernels.KERNEL_KINDS + ("all",), default="all")
    p_est.add_argument(
        "--nlambda", type=float, action="append", default=None,
        help="regularization strength n*lambda (repeatable; default: stock grid)",
    )
    _add_pipeline_flags(p_est)
    p_est.add_argument("--out", default=None)
    p_est.set_defaults(func=cmd_estimate)

    p_diag = sub.add_parser("diagnose", help="spectral condition and bound report")
    p_diag.add_argument("--genotypes", required=True)
    p_diag.add_argument("--phenotypes", required=True)
    p_diag.add_argument("--kernel", choices=kernels.KERNEL_KINDS, required=True)
    p_diag.add_argument("--nlambda", type=float, required=True)
    p_diag.add_argument("--true-g", default=None, help="signal values from simulation")
    _add_pipeline_flags(p_diag)
    p_diag.add_argument("--out", default=None)
    p_diag.set_defaults(func=cmd_diagnose)

    p_mc = sub.add_parser("mc", help="run the Monte Carlo harness")
    p_mc.add_argument("--config", default=None)
    p_mc.add_argument("--preset", default=None)
    p_mc.add_argument("--genotypes", default=None, help="matrix for the external scenario")
    p_mc.add_argument("--reps", type=int, default=None)
    p_mc.add_argument("--kernels", default=None, help="comma-separated kernel kinds")
    p_mc.add_argument("--nlambda", type=float, action="append", default=None)
    p_mc.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    p_mc.add_argument("--population-seed", type=int, default=None)
    p_mc.add_argument("--sampling-seed", type=int, default=None)
    p_mc.add_argument("--workers", type=int, default=1)
    p_mc.add_argument("--out", default=None, help="output directory")
    p_mc.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except KernheritError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
