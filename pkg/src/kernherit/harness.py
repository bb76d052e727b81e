"""Monte Carlo engine for evaluating the heritability estimator.

One population is generated per configuration (genotypes, effects and
noise are all fixed by ``population_seed``); each repetition then
redraws only the row subsample, builds the requested kernels on the
sample, sweeps the regularization grid, and records the heritability
estimate. Cell aggregates are the mean and standard deviation (divisor
reps-1) over repetitions, with undefined estimates counted and excluded
rather than silently dropped.

Seed discipline (documented so runs are exactly reproducible):

* ``SeedSequence(population_seed).generate_state(2)`` yields the
  genotype seed and the phenotype seed, in that order;
* repetition r at sample-size index i subsamples rows with the seed
  ``SeedSequence(sampling_seed).generate_state(sizes * reps)`` reshaped
  to (sizes, reps) and indexed [i, r].

Because subsampled row indices are sorted, drawing n = N rows always
reproduces the whole population bitwise, so those cells have exactly
zero standard deviation. Repetitions with identical row sets are
computed once and shared, both serially and in parallel; parallel and
serial runs produce bitwise identical tables.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import multiprocessing
from dataclasses import dataclass

import numpy as np

from . import __version__
from .exceptions import DataError
from .genotypes import GenotypeMatrix, MafLaw, simulate_hwe, subsample, subsample_indices
from .kernels import KERNEL_KINDS, make_kernel
from .krr import DEFAULT_NLAMBDA_GRID, lambda_grid_fit
from .phenosim import FAMILIES, Population, SimulationSpec, build_population

LOW_DIM_SAMPLE_SIZES = (600, 700, 800, 900, 1000)
HIGH_DIM_SAMPLE_SIZES = (100, 200, 300, 400, 500)

SCENARIOS = ("hwe", "external")


@dataclass(frozen=True)
class McConfig:
    """Full recipe for one Monte Carlo run."""

    scenario: str = "hwe"
    dimensionality: str = "low"
    family: str = "linear"
    kernels: tuple[str, ...] = KERNEL_KINDS
    lambda_grid: tuple[float, ...] = DEFAULT_NLAMBDA_GRID
    sample_sizes: tuple[int, ...] = LOW_DIM_SAMPLE_SIZES
    repetitions: int = 500
    population_seed: int = 0
    sampling_seed: int = 1
    population_size: int = 1000
    snp_count: int = 500
    sigma_g: float = 0.02
    sigma_eps: float = 0.5
    standardize: bool = True
    gaussian_bandwidth: float | None = None  # None: p/2 standardized, 1 raw
    output_path: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.dimensionality not in ("low", "high"):
            raise ValueError(f"dimensionality must be 'low' or 'high', got {self.dimensionality!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not self.kernels:
            raise ValueError("at least one kernel kind is required")
        for kind in self.kernels:
            if kind not in KERNEL_KINDS:
                raise ValueError(f"unknown kernel kind {kind!r}")
        if not self.lambda_grid or any(v <= 0 for v in self.lambda_grid):
            raise ValueError("lambda_grid must be non-empty and positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.sample_sizes:
            raise ValueError("at least one sample size is required")
        for n in self.sample_sizes:
            if not (1 <= n <= self.population_size):
                raise ValueError(
                    f"sample size {n} outside [1, population size {self.population_size}]"
                )
        if self.gaussian_bandwidth is not None and self.gaussian_bandwidth <= 0:
            raise ValueError("gaussian_bandwidth must be positive when given")

    def resolved_gaussian_bandwidth(self) -> float:
        """Bandwidth actually used for the Gaussian kernel.

        Defaults to p/2 on standardized inputs (the scale at which
        pairwise squared distances between standardized rows
        concentrate) and to 1 on raw allele counts.
        """
        if self.gaussian_bandwidth is not None:
            return float(self.gaussian_bandwidth)
        return self.snp_count / 2.0 if self.standardize else 1.0


@dataclass(frozen=True)
class McCell:
    kernel: str
    nlambda: float
    n: int
    mean: float
    sd: float
    reps: int
    true_h2: float
    excluded: int


@dataclass(frozen=True)
class McResultTable:
    rows: tuple[McCell, ...]
    true_h2: float


def derive_population_seeds(population_seed: int) -> tuple[int, int]:
    """(genotype seed, phenotype seed) from the population seed."""
    state = np.random.SeedSequence(population_seed).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def derive_sampling_seeds(sampling_seed: int, n_sizes: int, reps: int) -> np.ndarray:
    """(n_sizes, reps) array of per-repetition subsampling seeds."""
    state = np.random.SeedSequence(sampling_seed).generate_state(
        n_sizes * reps, dtype=np.uint64
    )
    return state.reshape(n_sizes, reps)


def build_mc_population(cfg: McConfig, genotype_source: GenotypeMatrix | None = None) -> Population:
    """Materialize the configured population once.

    HWE scenario simulates genotypes; the external scenario subsamples
    the supplied matrix down to (population_size, snp_count) first.
    """
    geno_seed, pheno_seed = derive_population_seeds(cfg.population_seed)
    if cfg.scenario == "hwe":
        genotypes = simulate_hwe(cfg.population_size, cfg.snp_count, MafLaw(), seed=geno_seed)
    else:
        if genotype_source is None:
            raise DataError("the external scenario requires a genotype matrix")
        if genotype_source.n < cfg.population_size or genotype_source.p < cfg.snp_count:
            raise DataError(
                f"external genotypes are {genotype_source.n}x{genotype_source.p}, "
                f"need at least {cfg.population_size}x{cfg.snp_count}"
            )
        genotypes = subsample(
            genotype_source, cfg.population_size, cols=cfg.snp_count, seed=geno_seed
        )
    spec = SimulationSpec(
        n_individuals=cfg.population_size,
        n_snps=cfg.snp_count,
        sigma_g=cfg.sigma_g,
        sigma_eps=cfg.sigma_eps,
        family=cfg.family,
        seed=pheno_seed,
    )
    return build_population(spec, genotypes)


# Worker state shared through fork(); set once in the parent before the
# pool is created, read-only afterwards.
_WORKER_STATE: dict = {}


def _rep_estimates(row_idx: np.ndarray) -> np.ndarray:
    """Heritability estimates for one subsample: shape (kernels, grid), NaN = undefined."""
    cfg: McConfig = _WORKER_STATE["cfg"]
    pop: Population = _WORKER_STATE["pop"]
    z_rows = GenotypeMatrix(pop.genotypes.data[row_idx], maf=pop.genotypes.maf)
    design = z_rows.standardized() if cfg.standardize else z_rows.as_float()
    y = pop.phenotypes[row_idx]
    bandwidth = cfg.resolved_gaussian_bandwidth()
    out = np.empty((len(cfg.kernels), len(cfg.lambda_grid)))
    for i, kind in enumerate(cfg.kernels):
        kernel = make_kernel(kind, design, gaussian_bandwidth=bandwidth)
        for j, fit_res in enumerate(lambda_grid_fit(kernel, y, cfg.lambda_grid)):
            out[i, j] = fit_res.h2_hat if fit_res.h2_defined else np.nan
    return out


def _task(item):
    key, row_idx = item
    return key, _rep_estimates(row_idx)


def run_mc(
    cfg: McConfig,
    genotype_source: GenotypeMatrix | None = None,
    workers: int = 1,
) -> McResultTable:
    """Execute the Monte Carlo protocol and aggregate per-cell results."""
    pop = build_mc_population(cfg, genotype_source)
    seeds = derive_sampling_seeds(cfg.sampling_seed, len(cfg.sample_sizes), cfg.repetitions)

    # Map each (size, rep) to its sorted row set; identical row sets are
    # computed once (at n = N every repetition draws the whole
    # population, which is what makes those cells exactly degenerate).
    rep_keys: dict[tuple[int, int], bytes] = {}
    unique_rows: dict[bytes, np.ndarray] = {}
    for i, n in enumerate(cfg.sample_sizes):
        for r in range(cfg.repetitions):
            idx = subsample_indices(cfg.population_size, n, seed=int(seeds[i, r]))
            key = idx.tobytes()
            rep_keys[(i, r)] = key
            unique_rows.setdefault(key, idx)

    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["pop"] = pop
    try:
        items = list(unique_rows.items())
        if workers > 1:
            ctx = multiprocessing.get_context("fork")
            with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers, mp_context=ctx
            ) as pool:
                results = dict(pool.map(_task, items, chunksize=max(1, len(items) // (4 * workers))))
        else:
            results = dict(_task(item) for item in items)
    finally:
        _WORKER_STATE.clear()

    rows: list[McCell] = []
    for i_kind, kind in enumerate(cfg.kernels):
        for j_lam, nlam in enumerate(cfg.lambda_grid):
            for i_size, n in enumerate(cfg.sample_sizes):
                values = np.array(
                    [
                        results[rep_keys[(i_size, r)]][i_kind, j_lam]
                        for r in range(cfg.repetitions)
                    ]
                )
                defined = values[~np.isnan(values)]
                excluded = int(values.size - defined.size)
                if defined.size == 0:
                    mean = float("nan")
                    sd = float("nan")
                elif defined.size == 1 or np.all(defined == defined[0]):
                    # Bitwise-identical repetitions (always the case when the
                    # sample is the whole population) have exactly zero spread;
                    # averaging would reintroduce one-ulp noise.
                    mean = float(defined[0])
                    sd = 0.0
                else:
                    mean = float(np.mean(defined))
                    sd = float(np.std(defined, ddof=1))
                rows.append(
                    McCell(
                        kernel=kind,
                        nlambda=float(nlam),
                        n=int(n),
                        mean=mean,
                        sd=sd,
                        reps=cfg.repetitions,
                        true_h2=pop.true_h2,
                        excluded=excluded,
                    )
                )
    return McResultTable(rows=tuple(rows), true_h2=pop.true_h2)


TABLE_HEADER = "kernel,nlambda,n,mean,sd,reps,true_h2,excluded"


def write_table_csv(table: McResultTable, path) -> None:
    """Write the result table with a stable column order."""
    with open(path, "w") as fh:
        fh.write(TABLE_HEADER + "\n")
        for c in table.rows:
            fh.write(
                f"{c.kernel},{c.nlambda!r},{c.n},{c.mean!r},{c.sd!r},"
                f"{c.reps},{c.true_h2!r},{c.excluded}\n"
            )


def read_table_csv(path) -> McResultTable:
    """Parse a table written by :func:`write_table_csv` (round-trips exactly)."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TABLE_HEADER:
            raise DataError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            kernel, nlam, n, mean, sd, reps, true_h2, excluded = line.split(",")
            rows.append(
                McCell(
                    kernel=kernel,
                    nlambda=float(nlam),
                    n=int(n),
                    mean=float(mean),
                    sd=float(sd),
                    reps=int(reps),
                    true_h2=float(true_h2),
                    excluded=int(excluded),
                )
            )
    true_h2 = rows[0].true_h2 if rows else float("nan")
    return McResultTable(rows=tuple(rows), true_h2=true_h2)


# ---------------------------------------------------------------------------
# Flat key=value run configuration files.

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(McConfig)}


def _format_value(name: str, value) -> str:
    if name in ("kernels",):
        return ",".join(value)
    if name in ("lambda_grid",):
        return ",".join(repr(v) for v in value)
    if name in ("sample_sizes",):
        return ",".join(str(v) for v in value)
    if name == "gaussian_bandwidth":
        return "auto" if value is None else repr(float(value))
    if name == "output_path":
        return "" if value is None else str(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name == "kernels":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if name == "lambda_grid":
        return tuple(float(part) for part in raw.split(",") if part.strip())
    if name == "sample_sizes":
        return tuple(int(part) for part in raw.split(",") if part.strip())
    if name == "gaussian_bandwidth":
        return None if raw in ("auto", "") else float(raw)
    if name == "output_path":
        return raw or None
    if name == "standardize":
        if raw not in ("true", "false"):
            raise ValueError(f"expected true/false, got {raw!r}")
        return raw == "true"
    if name in ("repetitions", "population_seed", "sampling_seed", "population_size", "snp_count"):
        return int(raw)
    if name in ("sigma_g", "sigma_eps"):
        return float(raw)
    return raw


def serialize_config(cfg: McConfig) -> str:
    """Canonical key=value form; parse(serialize(cfg)) == cfg."""
    lines = [
        f"{name}={_format_value(name, getattr(cfg, name))}" for name in _CONFIG_FIELDS
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<config>") -> McConfig:
    """Parse a flat key=value run configuration.

    Blank lines and '#' comments are allowed; unknown keys and malformed
    values are rejected with their line number.
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"{source}:{lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise DataError(f"{source}:{lineno}: unknown configuration key {key!r}")
        if key in values:
            raise DataError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise DataError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return McConfig(**values)
    except ValueError as exc:
        raise DataError(f"{source}: {exc}") from None


def read_config(path) -> McConfig:
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))


def write_manifest(cfg: McConfig, path, workers: int = 1) -> None:
    """Config echo plus seeds and library versions, as key=value."""
    with open(path, "w") as fh:
        fh.write(f"kernherit_version={__version__}\n")
        fh.write(f"numpy_version={np.__version__}\n")
        fh.write(f"workers={workers}\n")
        geno_seed, pheno_seed = derive_population_seeds(cfg.population_seed)
        fh.write(f"derived_genotype_seed={geno_seed}\n")
        fh.write(f"derived_phenotype_seed={pheno_seed}\n")
        fh.write(serialize_config(cfg))


# ---------------------------------------------------------------------------
# Named presets mirroring the stock simulation settings.


def _preset(**kwargs) -> McConfig:
    return McConfig(**kwargs)


PRESETS: dict[str, McConfig] = {
    # Hardy-Weinberg scenario, low-dimensional (N > p).
    "hwe-linear-low": _preset(family="linear", population_size=1000, snp_count=500, sigma_g=0.02),
    "hwe-quadratic-low": _preset(
        family="quadratic", population_size=1000, snp_count=500, sigma_g=0.03
    ),
    "hwe-trigonometric-low": _preset(
        family="trigonometric", population_size=1000, snp_count=500, sigma_g=0.02
    ),
    # Hardy-Weinberg scenario, high-dimensional (N < p).
    "hwe-linear-high": _preset(
        family="linear",
        dimensionality="high",
        population_size=500,
        snp_count=1000,
        sigma_g=0.01,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    "hwe-quadratic-high": _preset(
        family="quadratic",
        dimensionality="high",
        population_size=500,
        snp_count=1000,
        sigma_g=0.02,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    "hwe-trigonometric-high": _preset(
        family="trigonometric",
        dimensionality="high",
        population_size=500,
        snp_count=1000,
        sigma_g=0.05,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    # External-genotype scenario (user-supplied matrix), low-dimensional.
    "kgp-linear-low": _preset(
        scenario="external", family="linear", population_size=1092, snp_count=500, sigma_g=0.02
    ),
    "kgp-quadratic-low": _preset(
        scenario="external", family="quadratic", population_size=1092, snp_count=500, sigma_g=0.03
    ),
    "kgp-trigonometric-low": _preset(
        scenario="external",
        family="trigonometric",
        population_size=1092,
        snp_count=500,
        sigma_g=0.05,
    ),
    # External-genotype scenario, high-dimensional.
    "kgp-linear-high": _preset(
        scenario="external",
        family="linear",
        dimensionality="high",
        population_size=1092,
        snp_count=1500,
        sigma_g=0.01,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    "kgp-quadratic-high": _preset(
        scenario="external",
        family="quadratic",
        dimensionality="high",
        population_size=1092,
        snp_count=1500,
        sigma_g=0.015,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    "kgp-trigonometric-high": _preset(
        scenario="external",
        family="trigonometric",
        dimensionality="high",
        population_size=1092,
        snp_count=1500,
        sigma_g=0.05,
        sample_sizes=HIGH_DIM_SAMPLE_SIZES,
    ),
    # Small configuration that exercises the full pipeline in seconds.
    "desk": _preset(
        family="linear",
        population_size=300,
        snp_count=60,
        sigma_g=0.05,
        lambda_grid=(0.8, 1.5, 2.3),
        sample_sizes=(100, 150, 200, 250, 300),
        repetitions=50,
    ),
}


def preset_config(name: str) -> McConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise DataError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
