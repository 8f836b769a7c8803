"""Unit tests for the LP container, the dense simplex and the HiGHS backend."""

import math

import numpy as np
import pytest

from src.lp.program import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    make_backend,
    solve,
    write_lp_file,
)
from src.lp.simplex import DenseSimplex
from src.utils.errors import SolverError


def _build(sense, cost, rows, lower=0.0, upper=math.inf):
    """rows: list of (coefficients, sense, rhs)."""
    lp = LinearProgram(sense, name="case")
    cols = lp.add_variables([f"x{j}" for j in range(len(cost))], cost, lower, upper)
    for k, (coefficients, row_sense, rhs) in enumerate(rows):
        (r,) = lp.add_rows([f"c{k}"], row_sense, rhs)
        lp.set_coefficients(r, cols, coefficients)
    return lp


def _production():
    return _build("max", [3, 5], [([1, 0], "<=", 4), ([0, 2], "<=", 12), ([3, 2], "<=", 18)])


def _diet():
    return _build("min", [1, 1], [([1, 2], ">=", 4), ([3, 1], ">=", 6)])


def _equality():
    return _build("min", [2, 3], [([1, 1], "=", 5), ([1, 0], "<=", 3)])


def _free_variable():
    return _build("min", [1], [([1], ">=", -3)], lower=-math.inf)


def _boxed():
    return _build("max", [1, 1], [([1, 1], "<=", 4)], lower=[0, 1], upper=[2, 3])


def _negative_rhs():
    return _build("min", [1], [([-1], "<=", -2)])


def _beale():
    return _build("min", [-0.75, 20, -0.5, 6], [
        ([0.25, -8, -1, 9], "<=", 0),
        ([0.5, -12, -0.5, 3], "<=", 0),
        ([0, 0, 1, 0], "<=", 1),
    ])


def _degenerate_vertex():
    return _build("max", [1, 1], [([1, 0], "<=", 1), ([0, 1], "<=", 1), ([1, 1], "<=", 2)])


def _redundant_equalities():
    return _build("min", [1, 1], [([1, 1], "=", 2), ([2, 2], "=", 4), ([1, -1], "=", 0)])


def _upper_only():
    return _build("max", [1], [], lower=-math.inf, upper=5)


ANALYTIC_CASES = [
    pytest.param(_production, 36.0, id="production"),
    pytest.param(_diet, 2.8, id="diet"),
    pytest.param(_equality, 12.0, id="equality"),
    pytest.param(_free_variable, -3.0, id="free-variable"),
    pytest.param(_boxed, 4.0, id="boxed"),
    pytest.param(_negative_rhs, 2.0, id="negative-rhs"),
    pytest.param(_beale, -1.25, id="beale-cycling"),
    pytest.param(_degenerate_vertex, 2.0, id="degenerate-vertex"),
    pytest.param(_redundant_equalities, 2.0, id="redundant-equalities"),
    pytest.param(_upper_only, 5.0, id="upper-bound-only"),
]


class TestDenseSimplex:
    """Test suite for the built-in simplex on LPs with known optima."""

    @pytest.mark.parametrize("factory,expected", ANALYTIC_CASES)
    def test_analytic_optimum(self, factory, expected):
        """Test the optimum matches the hand-computed value."""
        lp = factory()
        solution = solve(lp, backend="simplex")
        assert solution.status == OPTIMAL
        assert solution.objective == pytest.approx(expected, abs=1e-9)
        assert lp.max_violation(solution.x) <= 1e-9

    @pytest.mark.parametrize("factory,expected", ANALYTIC_CASES)
    def test_bland_from_the_start(self, factory, expected):
        """Test Bland's rule alone reaches the same optimum."""
        lp = factory()
        solution = solve(lp, backend="simplex", bland_factor=0)
        assert solution.objective == pytest.approx(expected, abs=1e-9)

    def test_production_point(self):
        """Test the optimal vertex itself."""
        solution = solve(_production(), backend="simplex")
        assert np.allclose(solution.x, [2.0, 6.0])

    def test_infeasible(self):
        """Test contradictory rows are reported infeasible."""
        lp = _build("min", [1, 1], [([1, 1], "<=", 1), ([1, 1], ">=", 3)])
        solution = solve(lp, backend="simplex")
        assert solution.status == INFEASIBLE
        assert math.isnan(solution.objective)
        with pytest.raises(SolverError):
            solution.require_optimal("test LP")

    def test_unbounded(self):
        """Test an open direction is reported unbounded."""
        lp = _build("max", [1, 0], [([1, -1], "<=", 1)])
        assert solve(lp, backend="simplex").status == UNBOUNDED

    def test_iteration_limit(self):
        """Test a zero iteration budget stops before the first pivot."""
        solution = solve(_production(), backend="simplex", iteration_factor=0)
        assert solution.status == ITERATION_LIMIT

    def test_engine_counts_iterations(self):
        """Test the engine reports its pivot count."""
        engine = DenseSimplex()
        lp = _production()
        lower, upper = lp.bounds()
        result = engine.solve(
            -lp.objective(), lp.matrix().toarray(), lp.row_senses(), lp.rhs(), lower, upper
        )
        assert result.status == OPTIMAL
        assert result.iterations >= 2
        assert result.objective == pytest.approx(-36.0)

    def test_phase_one_skips_columns_without_pivot(self):
        """Test a Phase I column with no positive entry is skipped and the row is left intact."""
        engine = DenseSimplex()
        engine.iteration_limit = 100
        engine.bland_threshold = 100
        # columns: x0 (no positive entry), x1, artificial a; rhs last
        tableau = np.array([
            [-1.0, 1.0, 1.0, 1.0],
            [-2.0, -1.0, 0.0, -1.0],
        ])
        basis = np.array([2])
        status = engine._run_phase(tableau, basis, allowed=3, phase=1)
        assert status == OPTIMAL
        assert basis.tolist() == [1]
        assert engine.iterations == 1
        assert tableau[1, -1] == pytest.approx(0.0)
        assert tableau[1, 0] == pytest.approx(-3.0)


class TestHighsBackend:
    """Test suite for agreement between the two backends."""

    @pytest.mark.parametrize("factory,expected", ANALYTIC_CASES)
    def test_matches_simplex(self, factory, expected):
        """Test HiGHS and the dense simplex agree on every analytic case."""
        highs = solve(factory(), backend="highs")
        simplex = solve(factory(), backend="simplex")
        assert highs.status == OPTIMAL
        assert highs.objective == pytest.approx(expected, abs=1e-7)
        assert highs.objective == pytest.approx(simplex.objective, abs=1e-7)

    def test_infeasible_and_unbounded(self):
        """Test status codes map onto the shared contract."""
        infeasible = _build("min", [1, 1], [([1, 1], "<=", 1), ([1, 1], ">=", 3)])
        unbounded = _build("max", [1, 0], [([1, -1], "<=", 1)])
        assert solve(infeasible, backend="highs").status == INFEASIBLE
        assert solve(unbounded, backend="highs").status == UNBOUNDED

    def test_random_lps_agree(self):
        """Test bounded random packing LPs give the same optimum on both backends."""
        rng = np.random.default_rng(0)
        for _ in range(10):
            cost = rng.uniform(0, 5, size=6)
            matrix = rng.uniform(0, 2, size=(4, 6))
            rows = [(matrix[i], "<=", float(rng.uniform(1, 4))) for i in range(4)]
            lp_a = _build("max", cost, rows, upper=3.0)
            lp_b = _build("max", cost, rows, upper=3.0)
            a = solve(lp_a, backend="simplex")
            b = solve(lp_b, backend="highs")
            assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-7)


class TestLinearProgram:
    """Test suite for the LP container and export."""

    def test_duplicate_triplets_are_summed(self):
        """Test repeated coefficients accumulate."""
        lp = LinearProgram()
        cols = lp.add_variables(["x"], 1.0)
        (row,) = lp.add_rows(["c"], ">=", 1.0)
        lp.set_coefficients(row, cols, 0.5)
        lp.set_coefficients(row, cols, 0.5)
        assert lp.matrix().toarray().tolist() == [[1.0]]

    def test_bad_senses(self):
        """Test unknown objective and row senses are rejected."""
        with pytest.raises(ValueError):
            LinearProgram("maximise")
        with pytest.raises(ValueError):
            LinearProgram().add_rows(["c"], "<")

    def test_auto_backend_selection(self):
        """Test auto picks the dense simplex for small tableaus and HiGHS otherwise."""
        lp = _production()
        assert make_backend(lp).name == "simplex"
        assert make_backend(lp, dense_cell_limit=1).name == "highs"
        with pytest.raises(ValueError):
            make_backend(lp, backend="cplex")

    def test_max_violation(self):
        """Test row and bound violations are measured."""
        lp = _production()
        assert lp.max_violation(np.array([2.0, 6.0])) == pytest.approx(0.0)
        assert lp.max_violation(np.array([5.0, 0.0])) == pytest.approx(1.0)
        assert lp.max_violation(np.array([-1.0, 0.0])) == pytest.approx(1.0)

    def test_write_lp_file(self, temp_dir):
        """Test the CPLEX LP export lists objective, rows and bounds."""
        path = write_lp_file(_boxed(), temp_dir / "out" / "boxed.lp")
        text = path.read_text(encoding="utf-8")
        assert text.startswith("\\ case\nMaximize\n obj: x0 + x1\n")
        assert " c0: x0 + x1 <= 4.0" in text
        assert " 0.0 <= x0 <= 2.0" in text
        assert " 1.0 <= x1 <= 3.0" in text
        assert text.rstrip().endswith("End")

    def test_write_free_variable(self, temp_dir):
        """Test free variables are declared free."""
        text = write_lp_file(_free_variable(), temp_dir / "free.lp").read_text(encoding="utf-8")
        assert " x0 free" in text
