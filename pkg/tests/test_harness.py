import numpy as np
import pytest

from kernherit.exceptions import DataError
from kernherit.genotypes import GenotypeMatrix, subsample_indices
from kernherit.harness import (
    McCell,
    McConfig,
    McResultTable,
    PRESETS,
    build_mc_population,
    derive_sampling_seeds,
    parse_config,
    preset_config,
    read_config,
    read_table_csv,
    run_mc,
    serialize_config,
    write_manifest,
    write_table_csv,
)
from kernherit.kernels import make_kernel
from kernherit.krr import lambda_grid_fit


def tiny_config(**overrides) -> McConfig:
    base = dict(
        family="linear",
        kernels=("linear", "poly2", "gaussian"),
        lambda_grid=(0.8, 1.5, 2.3),
        sample_sizes=(20, 30, 40, 50, 60),
        repetitions=3,
        population_seed=5,
        sampling_seed=6,
        population_size=60,
        snp_count=12,
        sigma_g=0.1,
    )
    base.update(overrides)
    return McConfig(**base)


class TestRunMc:
    def test_deterministic_bitwise(self, tmp_path):
        cfg = tiny_config()
        a = run_mc(cfg)
        b = run_mc(cfg)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_table_csv(a, pa)
        write_table_csv(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        cfg = tiny_config()
        serial = run_mc(cfg, workers=1)
        parallel = run_mc(cfg, workers=2)
        ps, pp = tmp_path / "s.csv", tmp_path / "p.csv"
        write_table_csv(serial, ps)
        write_table_csv(parallel, pp)
        assert ps.read_bytes() == pp.read_bytes()

    def test_full_population_cells_have_zero_sd(self):
        cfg = tiny_config(repetitions=4)
        table = run_mc(cfg)
        full = [c for c in table.rows if c.n == 60]
        assert full
        for cell in full:
            assert cell.sd == 0.0

    def test_single_repetition_sd_zero_by_convention(self):
        cfg = tiny_config(repetitions=1, sample_sizes=(30,))
        table = run_mc(cfg)
        for cell in table.rows:
            assert cell.sd == 0.0
            assert cell.reps == 1

    def test_row_count_matches_grid(self):
        cfg = tiny_config()
        table = run_mc(cfg)
        assert len(table.rows) == 3 * 3 * 5

    def test_cell_means_in_unit_interval(self):
        table = run_mc(tiny_config())
        for cell in table.rows:
            assert 0.0 <= cell.mean <= 1.0
            assert cell.sd >= 0.0

    def test_matches_straight_line_script(self):
        # The harness must agree bitwise with a direct loop over the
        # library primitives.
        cfg = tiny_config(kernels=("poly2",), lambda_grid=(1.0, 2.0), sample_sizes=(25, 60))
        table = run_mc(cfg)

        pop = build_mc_population(cfg)
        seeds = derive_sampling_seeds(cfg.sampling_seed, 2, cfg.repetitions)
        expected = {}
        for i, n in enumerate(cfg.sample_sizes):
            values = {nlam: [] for nlam in cfg.lambda_grid}
            for r in range(cfg.repetitions):
                idx = subsample_indices(cfg.population_size, n, seed=int(seeds[i, r]))
                rows = GenotypeMatrix(pop.genotypes.data[idx], maf=pop.genotypes.maf)
                design = rows.standardized()
                kernel = make_kernel(
                    "poly2", design, gaussian_bandwidth=cfg.resolved_gaussian_bandwidth()
                )
                for nlam, res in zip(
                    cfg.lambda_grid, lambda_grid_fit(kernel, pop.phenotypes[idx], cfg.lambda_grid)
                ):
                    values[nlam].append(res.h2_hat)
            for nlam in cfg.lambda_grid:
                vals = np.array(values[nlam])
                if np.all(vals == vals[0]):  # degenerate cell: exact collapse
                    expected[(nlam, n)] = (float(vals[0]), 0.0)
                else:
                    expected[(nlam, n)] = (float(np.mean(vals)), float(np.std(vals, ddof=1)))
        for cell in table.rows:
            mean, sd = expected[(cell.nlambda, cell.n)]
            assert cell.mean == mean
            assert cell.sd == sd

    def test_undefined_estimates_counted_and_excluded(self):
        # A monomorphic external population with zero noise makes every
        # phenotype identically zero under the quadratic family, so every
        # repetition's estimate is undefined.
        source = GenotypeMatrix(np.ones((20, 4), dtype=np.int8))
        cfg = McConfig(
            scenario="external",
            family="quadratic",
            kernels=("linear",),
            lambda_grid=(1.0,),
            sample_sizes=(10,),
            repetitions=3,
            population_size=20,
            snp_count=4,
            sigma_g=0.1,
            sigma_eps=0.0,
        )
        table = run_mc(cfg, genotype_source=source)
        cell = table.rows[0]
        assert cell.excluded == 3
        assert np.isnan(cell.mean)

    def test_external_scenario_requires_source(self):
        cfg = tiny_config(scenario="external")
        with pytest.raises(DataError, match="external scenario"):
            run_mc(cfg)

    def test_external_scenario_subsamples_wider_source(self):
        from kernherit.genotypes import simulate_hwe

        source = simulate_hwe(80, 30, seed=44)  # wider than the configured population
        cfg = tiny_config(
            scenario="external",
            kernels=("poly2",),
            lambda_grid=(1.0,),
            sample_sizes=(25, 50),
            population_size=50,
            snp_count=10,
        )
        table = run_mc(cfg, genotype_source=source)
        assert len(table.rows) == 2
        assert all(0.0 <= c.mean <= 1.0 for c in table.rows)
        # same source and seeds reproduce the subsample exactly
        again = run_mc(cfg, genotype_source=source)
        assert again.rows == table.rows

    def test_external_scenario_rejects_small_source(self):
        from kernherit.genotypes import simulate_hwe

        source = simulate_hwe(10, 5, seed=1)
        cfg = tiny_config(scenario="external", population_size=50, snp_count=10,
                          sample_sizes=(20,))
        with pytest.raises(DataError, match="need at least"):
            run_mc(cfg, genotype_source=source)

    def test_sample_size_exceeding_population_rejected(self):
        with pytest.raises(ValueError, match="sample size"):
            tiny_config(sample_sizes=(100,))


class TestTableCsv:
    def test_round_trip(self, tmp_path):
        cfg = tiny_config(kernels=("linear",), lambda_grid=(1.0,), sample_sizes=(20,))
        table = run_mc(cfg)
        path = tmp_path / "t.csv"
        write_table_csv(table, path)
        back = read_table_csv(path)
        assert back.rows == table.rows

    def test_empty_table_is_header_only(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table_csv(McResultTable(rows=(), true_h2=float("nan")), path)
        assert path.read_text() == "kernel,nlambda,n,mean,sd,reps,true_h2,excluded\n"

    def test_single_row_parses(self, tmp_path):
        cell = McCell("linear", 1.0, 10, 0.5, 0.1, 7, 0.6, 0)
        path = tmp_path / "t.csv"
        write_table_csv(McResultTable(rows=(cell,), true_h2=0.6), path)
        assert read_table_csv(path).rows == (cell,)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("nope\n")
        with pytest.raises(DataError, match="header"):
            read_table_csv(path)


class TestConfigFile:
    def test_serialize_parse_idempotent(self):
        cfg = tiny_config()
        text = serialize_config(cfg)
        parsed = parse_config(text)
        assert parsed == cfg
        assert serialize_config(parsed) == text

    def test_unknown_key_names_line(self):
        with pytest.raises(DataError, match=":2: unknown configuration key"):
            parse_config("family=linear\nbogus=1\n")

    def test_duplicate_key_names_line(self):
        with pytest.raises(DataError, match=":2: duplicate key"):
            parse_config("family=linear\nfamily=linear\n")

    def test_bad_value_names_line(self):
        with pytest.raises(DataError, match=":1: bad value"):
            parse_config("repetitions=three\n")

    def test_comments_and_blanks_allowed(self):
        cfg = parse_config("# comment\n\nfamily=quadratic\n")
        assert cfg.family == "quadratic"

    def test_invalid_combination_reported(self):
        with pytest.raises(DataError, match="sample size"):
            parse_config("population_size=10\nsample_sizes=20\n")

    def test_read_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(serialize_config(tiny_config()))
        assert read_config(path) == tiny_config()

    def test_auto_gaussian_bandwidth_round_trip(self):
        cfg = tiny_config(gaussian_bandwidth=None)
        assert "gaussian_bandwidth=auto" in serialize_config(cfg)
        assert parse_config(serialize_config(cfg)).gaussian_bandwidth is None
        assert cfg.resolved_gaussian_bandwidth() == cfg.snp_count / 2.0
        raw = tiny_config(standardize=False)
        assert raw.resolved_gaussian_bandwidth() == 1.0


class TestPresets:
    def test_all_presets_valid(self):
        for name in PRESETS:
            cfg = preset_config(name)
            assert cfg.repetitions >= 1

    def test_stock_low_dim_preset_shape(self):
        cfg = preset_config("hwe-linear-low")
        assert (cfg.population_size, cfg.snp_count, cfg.sigma_g) == (1000, 500, 0.02)
        assert cfg.sample_sizes == (600, 700, 800, 900, 1000)
        assert len(cfg.lambda_grid) == 11

    def test_high_dim_preset_shape(self):
        cfg = preset_config("hwe-trigonometric-high")
        assert (cfg.population_size, cfg.snp_count, cfg.sigma_g) == (500, 1000, 0.05)
        assert cfg.sample_sizes == (100, 200, 300, 400, 500)

    def test_unknown_preset(self):
        with pytest.raises(DataError, match="unknown preset"):
            preset_config("nope")


def test_manifest_contents(tmp_path):
    cfg = tiny_config()
    path = tmp_path / "manifest.txt"
    write_manifest(cfg, path, workers=3)
    text = path.read_text()
    assert "kernherit_version=" in text
    assert "workers=3" in text
    assert "derived_genotype_seed=" in text
    assert "population_seed=5" in text
