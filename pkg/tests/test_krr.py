import numpy as np
import pytest

from kernherit.genotypes import simulate_hwe
from kernherit.kernels import KernelMatrix, make_kernel
from kernherit.krr import (
    DEFAULT_NLAMBDA_GRID,
    CovariateMatrix,
    fit,
    lambda_grid_fit,
    residualize,
)
from kernherit.matrixcore import SymMatrix
from kernherit.phenosim import SimulationSpec, build_population

from helpers import cramer_solve, rel_err


def identity_kernel(n: int) -> KernelMatrix:
    return KernelMatrix("linear", SymMatrix(np.eye(n)))


def random_instance(seed: int, n: int = 12, p: int = 5, kind: str = "poly2"):
    """Small genotype-backed instance with known signal."""
    rng_seed = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    g = simulate_hwe(n, p, seed=int(rng_seed[0]))
    spec = SimulationSpec(
        n_individuals=n, n_snps=p, sigma_g=0.3, family="linear", seed=int(rng_seed[1])
    )
    pop = build_population(spec, g)
    kernel = make_kernel(kind, g.standardized())
    return kernel, pop


class TestFit:
    def test_identity_kernel_closed_form(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=9)
        res = fit(identity_kernel(9), y, 1.0)
        assert np.allclose(res.alpha_hat, y / 2.0, atol=1e-14)
        assert np.allclose(res.g_hat, y / 2.0, atol=1e-14)
        assert np.isclose(res.sigma_eps2_hat, np.sum((y / 2.0) ** 2) / 9.0)
        assert np.isclose(res.sigma_g2_hat, np.var(y / 2.0, ddof=1))

    def test_enormous_ridge_shrinks_h2_to_zero(self):
        kernel, pop = random_instance(1)
        res = fit(kernel, pop.phenotypes, 1e12)
        assert res.h2_defined
        assert res.h2_hat < 1e-6

    @pytest.mark.parametrize("seed", range(8))
    def test_alpha_matches_cramer_oracle(self, seed):
        n = 2 + seed % 5
        kernel, pop = random_instance(seed, n=n, p=3)
        nlam = 0.8
        res = fit(kernel, pop.phenotypes, nlam)
        expected = cramer_solve(
            kernel.matrix.data + nlam * np.eye(n), np.asarray(pop.phenotypes)
        )
        assert np.max(np.abs(res.alpha_hat - expected)) < 1e-9

    def test_spectral_and_cholesky_agree(self):
        kernel, pop = random_instance(2, n=25)
        a = fit(kernel, pop.phenotypes, 1.3, method="cholesky")
        b = fit(kernel, pop.phenotypes, 1.3, method="spectral")
        scale = max(1.0, np.max(np.abs(a.alpha_hat)))
        assert np.max(np.abs(a.alpha_hat - b.alpha_hat)) <= 1e-8 * scale
        assert rel_err(a.sigma_g2_hat, b.sigma_g2_hat) < 1e-8
        assert rel_err(a.sigma_eps2_hat, b.sigma_eps2_hat) < 1e-8

    def test_residual_form_equals_spectral_form(self):
        kernel, pop = random_instance(3, n=10)
        nlam = 2.3
        res = fit(kernel, pop.phenotypes, nlam)
        y = np.asarray(pop.phenotypes)
        m = np.linalg.inv(kernel.matrix.data + nlam * np.eye(10))
        spectral = nlam**2 * float(y @ m @ m @ y) / 10.0
        assert rel_err(res.sigma_eps2_hat, spectral) < 1e-10

    def test_sigma_g2_is_centering_sandwich(self):
        kernel, pop = random_instance(4, n=14)
        res = fit(kernel, pop.phenotypes, 0.5)
        k = kernel.matrix.data
        n = 14
        c = np.eye(n) - np.ones((n, n)) / n
        sandwich = float(res.alpha_hat @ k @ c @ k @ res.alpha_hat) / (n - 1)
        assert rel_err(res.sigma_g2_hat, sandwich) < 1e-10

    def test_stationarity(self):
        kernel, pop = random_instance(5, n=16)
        nlam = 1.5
        res = fit(kernel, pop.phenotypes, nlam)
        k = kernel.matrix.data
        grad = k @ ((k + nlam * np.eye(16)) @ res.alpha_hat - pop.phenotypes)
        assert np.max(np.abs(grad)) <= 1e-8 * max(1.0, np.max(np.abs(pop.phenotypes)))

    def test_h2_in_unit_interval(self):
        for seed in range(5):
            kernel, pop = random_instance(seed + 10, n=13)
            res = fit(kernel, pop.phenotypes, 1.0)
            assert res.h2_defined
            assert 0.0 <= res.h2_hat <= 1.0

    def test_undefined_h2_flagged_not_raised(self):
        res = fit(identity_kernel(4), np.zeros(4), 1.0)
        assert not res.h2_defined
        assert np.isnan(res.h2_hat)

    def test_rejects_bad_nlambda(self):
        with pytest.raises(ValueError, match="nlambda"):
            fit(identity_kernel(3), np.ones(3), 0.0)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            fit(identity_kernel(3), np.ones(4), 1.0)

    def test_rejects_nonfinite_phenotypes(self):
        with pytest.raises(ValueError, match="finite"):
            fit(identity_kernel(3), np.array([1.0, np.nan, 0.0]), 1.0)


class TestLambdaGrid:
    def test_singleton_equals_fit(self):
        kernel, pop = random_instance(6)
        grid_res = lambda_grid_fit(kernel, pop.phenotypes, [1.0])
        single = fit(kernel, pop.phenotypes, 1.0)  # spectral: eig now cached
        assert len(grid_res) == 1
        assert np.array_equal(grid_res[0].alpha_hat, single.alpha_hat)

    def test_default_grid_has_eleven_points(self):
        kernel, pop = random_instance(7)
        assert len(lambda_grid_fit(kernel, pop.phenotypes, DEFAULT_NLAMBDA_GRID)) == 11

    def test_matches_independent_fits(self):
        kernel, pop = random_instance(8)
        grid = (0.5, 1.0, 2.0)
        grid_res = lambda_grid_fit(kernel, pop.phenotypes, grid)
        for nlam, res in zip(grid, grid_res):
            indep = fit(kernel, pop.phenotypes, nlam, method="spectral")
            assert np.array_equal(res.alpha_hat, indep.alpha_hat)
            assert res.sigma_g2_hat == indep.sigma_g2_hat

    def test_sigma_eps2_nondecreasing_on_ascending_grid(self):
        kernel, pop = random_instance(9, n=20)
        values = [r.sigma_eps2_hat for r in lambda_grid_fit(kernel, pop.phenotypes, DEFAULT_NLAMBDA_GRID)]
        for a, b in zip(values, values[1:]):
            assert b >= a - 1e-12 * max(1.0, abs(a))

    def test_rejects_empty_or_nonpositive(self):
        kernel, pop = random_instance(10)
        with pytest.raises(ValueError):
            lambda_grid_fit(kernel, pop.phenotypes, [])
        with pytest.raises(ValueError):
            lambda_grid_fit(kernel, pop.phenotypes, [1.0, -1.0])


class TestResidualize:
    def test_intercept_only_centers(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=15)
        out = residualize(y, None)
        assert np.allclose(out, y - y.mean(), atol=1e-12)

    def test_perfect_fit_gives_zero(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(20, 2))
        y = 3.0 + x @ np.array([1.5, -2.0])
        out = residualize(y, x)
        assert np.linalg.norm(out) <= 1e-8 * np.linalg.norm(y)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(3)
        x_raw = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        out = residualize(y, x_raw)
        x = np.hstack([np.ones((20, 1)), x_raw])
        coef = np.linalg.inv(x.T @ x) @ (x.T @ y)
        assert np.max(np.abs(out - (y - x @ coef))) < 1e-9

    def test_output_orthogonal_to_covariates(self):
        rng = np.random.default_rng(4)
        x_raw = rng.normal(size=(30, 4))
        y = rng.normal(size=30) * 10
        out = residualize(y, x_raw)
        x = np.hstack([np.ones((30, 1)), x_raw])
        for j in range(x.shape[1]):
            bound = 1e-8 * np.linalg.norm(y) * np.linalg.norm(x[:, j])
            assert abs(out @ x[:, j]) <= bound

    def test_rank_deficiency_names_column(self):
        x = np.ones((10, 1))  # exactly constant columns are absorbed
        rng = np.random.default_rng(5)
        a = rng.normal(size=10)
        dup = np.column_stack([a, 2.0 * a])  # column 2 duplicates column 1
        with pytest.raises(ValueError, match="column 2"):
            residualize(rng.normal(size=10), dup)
        # constant covariate columns are dropped into the intercept
        out = residualize(np.arange(10.0), x)
        assert np.allclose(out, np.arange(10.0) - 4.5)

    def test_needs_more_rows_than_coefficients(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError, match="more observations"):
            residualize(rng.normal(size=4), rng.normal(size=(4, 3)))


class TestCovariateMatrix:
    def test_prepends_intercept(self):
        cm = CovariateMatrix.from_raw(np.arange(6.0).reshape(6, 1), 6)
        assert cm.values.shape == (6, 2)
        assert np.array_equal(cm.values[:, 0], np.ones(6))
        assert cm.q == 1

    def test_row_mismatch(self):
        with pytest.raises(ValueError, match="rows"):
            CovariateMatrix.from_raw(np.zeros((3, 1)), 4)


def test_fit_uses_cached_spectrum_automatically():
    kernel, pop = random_instance(11)
    assert not kernel.has_eig
    res_chol = fit(kernel, pop.phenotypes, 1.0)  # auto -> cholesky
    kernel.eig
    res_spec = fit(kernel, pop.phenotypes, 1.0)  # auto -> spectral
    assert np.max(np.abs(res_chol.alpha_hat - res_spec.alpha_hat)) <= 1e-8
