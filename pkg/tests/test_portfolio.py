import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskshap.errors import InfeasibleError, IterationLimitError, UnboundedError
from riskshap.portfolio import grid_oracle, min_cvar_weights, simplex_lattice
from riskshap.risk_measures import RiskKind, RiskMeasureSpec, evaluate
from riskshap.simplex import solve_lp


def cvar(y, alpha=0.05):
    return evaluate(RiskMeasureSpec(RiskKind.CVAR, alpha), y)


def three_assets(seed, n=500):
    rng = np.random.default_rng(seed)
    vols = rng.uniform(0.005, 0.03, size=3)
    corr = np.array([[1.0, 0.3, -0.2], [0.3, 1.0, 0.1], [-0.2, 0.1, 1.0]])
    cov = corr * np.outer(vols, vols)
    mean = rng.uniform(-0.001, 0.002, size=3)
    return rng.multivariate_normal(mean, cov, size=n)


class TestSimplex:
    def test_textbook_max(self):
        # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        res = solve_lp([-3.0, -5.0], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        np.testing.assert_allclose(res.x, [2.0, 6.0], atol=1e-12)
        assert res.objective == pytest.approx(-36.0)

    def test_equality_and_negative_rhs(self):
        # min x + y st x + y >= 2 (as -x - y <= -2), x - y = 0
        res = solve_lp([1.0, 1.0], [[-1, -1]], [-2], [[1, -1]], [0])
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-12)

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_lp([1.0], [[1.0]], [1.0], [[1.0]], [2.0])

    def test_unbounded(self):
        with pytest.raises(UnboundedError):
            solve_lp([-1.0, 0.0], [[0.0, 1.0]], [1.0])

    def test_redundant_equalities(self):
        res = solve_lp([1.0, 2.0], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
        np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-12)

    def test_iteration_cap(self):
        with pytest.raises(IterationLimitError):
            solve_lp([-3.0, -5.0], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], max_iter=1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_against_scipy_linprog(self, seed):
        from scipy.optimize import linprog

        rng = np.random.default_rng(seed)
        A = rng.uniform(-1, 2, size=(6, 4))
        b = rng.uniform(0.5, 3, size=6)
        c = rng.normal(size=4)
        A_eq = np.ones((1, 4))
        ref = linprog(c, A_ub=A, b_ub=b, A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs")
        assert ref.status in (0, 2)
        if ref.status == 2:
            with pytest.raises(InfeasibleError):
                solve_lp(c, A, b, A_eq, [1.0])
        else:
            assert solve_lp(c, A, b, A_eq, [1.0]).objective == pytest.approx(ref.fun, abs=1e-9)


class TestMinCvar:
    def test_risk_free_asset_dominates(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.zeros(200), rng.normal(-0.001, 0.02, size=200)])
        opt = min_cvar_weights(X, 0.05)
        np.testing.assert_allclose(opt.weights, [1.0, 0.0], atol=1e-12)
        assert opt.optimal_cvar == pytest.approx(0.0, abs=1e-12)

    def test_identical_assets(self):
        x = np.random.default_rng(1).normal(0, 0.01, size=300)
        opt = min_cvar_weights(np.column_stack([x, x]), 0.05)
        assert opt.optimal_cvar == pytest.approx(cvar(x), abs=1e-12)
        np.testing.assert_allclose(opt.weights, [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_ru_identity_and_feasibility(self, seed):
        X = three_assets(seed)
        opt = min_cvar_weights(X, 0.05)
        assert np.all(opt.weights >= 0)
        assert opt.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert opt.lp_objective == pytest.approx(cvar(X @ opt.weights), abs=1e-8)
        assert opt.optimal_cvar == cvar(X @ opt.weights)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_grid(self, seed):
        X = three_assets(seed)
        opt = min_cvar_weights(X, 0.05)
        grid = grid_oracle(X, 0.05, 0.01)
        assert abs(opt.optimal_cvar - grid.cvar) <= 1e-3
        assert opt.optimal_cvar <= grid.cvar + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_never_worse_than_single_asset(self, seed):
        X = three_assets(seed)
        opt = min_cvar_weights(X, 0.05)
        assert opt.optimal_cvar <= min(cvar(X[:, j]) for j in range(3)) + 1e-12

    def test_row_permutation_invariance(self):
        X = three_assets(11)
        perm = np.random.default_rng(2).permutation(X.shape[0])
        a = min_cvar_weights(X, 0.05)
        b = min_cvar_weights(X[perm], 0.05)
        assert a.optimal_cvar == pytest.approx(b.optimal_cvar, abs=1e-12)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)

    def test_five_assets(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(400, 5)) @ rng.normal(size=(5, 5)) * 0.01
        opt = min_cvar_weights(X, 0.05)
        assert opt.lp_objective == pytest.approx(opt.optimal_cvar, abs=1e-8)
        for _ in range(200):
            w = rng.dirichlet(np.ones(5))
            assert opt.optimal_cvar <= cvar(X @ w) + 1e-12

    def test_tail_too_small(self):
        with pytest.raises(ValueError):
            min_cvar_weights(np.zeros((10, 2)), 0.05)

    def test_non_finite(self):
        X = np.zeros((100, 2))
        X[3, 1] = np.nan
        with pytest.raises(ValueError):
            min_cvar_weights(X, 0.05)

    def test_iteration_cap_reports_best_point(self):
        X = three_assets(3)
        full = min_cvar_weights(X, 0.05).iterations
        with pytest.raises(IterationLimitError) as info:
            min_cvar_weights(X, 0.05, max_iter=full - 1)
        best = info.value.best_x
        assert best.sum() == pytest.approx(1.0)
        assert np.all(best >= 0)

    def test_iteration_cap_in_phase_one_has_no_point(self):
        with pytest.raises(IterationLimitError) as info:
            min_cvar_weights(three_assets(3), 0.05, max_iter=1)
        assert info.value.best_x is None


class TestGridOracle:
    def test_single_asset(self):
        g = grid_oracle(np.random.default_rng(0).normal(size=(100, 1)), 0.05)
        np.testing.assert_array_equal(g.weights, [1.0])

    def test_step_too_large(self):
        with pytest.raises(ValueError):
            grid_oracle(np.zeros((100, 2)), 0.05, step=1.5)

    def test_step_must_divide_one(self):
        with pytest.raises(ValueError):
            simplex_lattice(2, 0.3)

    def test_lattice_size(self):
        assert simplex_lattice(3, 0.01).shape == (5151, 3)
        np.testing.assert_allclose(simplex_lattice(3, 0.5).sum(axis=1), 1.0)

    def test_too_many_assets(self):
        with pytest.raises(ValueError):
            grid_oracle(np.zeros((100, 4)), 0.05)
