"""Linear programs in triplet form, solver backends and LP-file export."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Protocol, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..utils.errors import SolverError
from .simplex import DenseSimplex

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"

ROW_SENSES = ("<=", "=", ">=")


class LinearProgram:
    """
    A linear program assembled incrementally.

    Variables and rows are added in blocks; coefficients are kept as sparse
    triplets and duplicate entries are summed when the matrix is built.
    """

    def __init__(self, sense: str = "min", name: str = "lp"):
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.name = name
        self.variable_names: List[str] = []
        self.row_names: List[str] = []
        self._cost: List[np.ndarray] = []
        self._lower: List[np.ndarray] = []
        self._upper: List[np.ndarray] = []
        self._row_sense: List[str] = []
        self._rhs: List[np.ndarray] = []
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []

    @property
    def num_variables(self) -> int:
        return len(self.variable_names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    def add_variables(
        self,
        names: Sequence[str],
        cost: Union[float, Sequence[float]] = 0.0,
        lower: Union[float, Sequence[float]] = 0.0,
        upper: Union[float, Sequence[float]] = math.inf,
    ) -> np.ndarray:
        """Append variables and return their column indices."""
        count = len(names)
        start = self.num_variables
        self.variable_names.extend(names)
        self._cost.append(np.broadcast_to(np.asarray(cost, dtype=float), (count,)).copy())
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), (count,)).copy())
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), (count,)).copy())
        return np.arange(start, start + count)

    def add_rows(
        self, names: Sequence[str], sense: str, rhs: Union[float, Sequence[float]] = 0.0
    ) -> np.ndarray:
        """Append empty rows with a common sense and return their indices."""
        if sense not in ROW_SENSES:
            raise ValueError(f"row sense must be one of {ROW_SENSES}, got {sense!r}")
        count = len(names)
        start = self.num_rows
        self.row_names.extend(names)
        self._row_sense.extend([sense] * count)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (count,)).copy())
        return np.arange(start, start + count)

    def set_coefficients(self, rows, cols, values) -> None:
        """Add coefficient triplets; rows, cols and values broadcast together."""
        rows, cols, values = np.broadcast_arrays(
            np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(values, dtype=float),
        )
        keep = values != 0
        self._rows.append(rows[keep].ravel())
        self._cols.append(cols[keep].ravel())
        self._vals.append(values[keep].ravel())

    def objective(self) -> np.ndarray:
        return np.concatenate(self._cost) if self._cost else np.zeros(0)

    def bounds(self) -> tuple:
        if not self._lower:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(self._lower), np.concatenate(self._upper)

    def rhs(self) -> np.ndarray:
        return np.concatenate(self._rhs) if self._rhs else np.zeros(0)

    def row_senses(self) -> np.ndarray:
        return np.array(self._row_sense, dtype=object)

    def matrix(self) -> sparse.csr_matrix:
        shape = (self.num_rows, self.num_variables)
        if not self._vals:
            return sparse.csr_matrix(shape)
        coo = sparse.coo_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=shape,
        )
        return coo.tocsr()

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.objective() @ x)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest violation of any row or bound by the point x."""
        activity = self.matrix() @ x
        rhs = self.rhs()
        senses = self.row_senses()
        excess = np.zeros_like(rhs)
        excess = np.where(senses == "<=", activity - rhs, excess)
        excess = np.where(senses == ">=", rhs - activity, excess)
        excess = np.where(senses == "=", np.abs(activity - rhs), excess)
        lower, upper = self.bounds()
        worst = [0.0]
        if excess.size:
            worst.append(float(excess.max()))
        if x.size:
            worst.append(float(np.max(lower - x)))
            worst.append(float(np.max(x - upper)))
        return max(worst)

    def __repr__(self) -> str:
        return (
            f"LinearProgram(name={self.name!r}, sense={self.sense!r}, "
            f"variables={self.num_variables}, rows={self.num_rows})"
        )


@dataclass
class LpSolution:
    """Solver output under a common contract for every backend."""
    status: str
    objective: float
    x: np.ndarray
    iterations: int = 0
    backend: str = ""
    solve_seconds: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def require_optimal(self, what: str = "LP") -> "LpSolution":
        if not self.is_optimal:
            raise SolverError(f"{what} solve ended with status {self.status!r}")
        return self


class SolverBackend(Protocol):
    name: str

    def solve(self, lp: LinearProgram) -> LpSolution:
        ...


@dataclass
class DenseSimplexBackend:
    """Built-in two-phase dense tableau simplex."""
    pivot_tol: float = 1e-9
    feas_tol: float = 1e-7
    bland_factor: int = 2
    iteration_factor: int = 50
    name: str = field(default="simplex", init=False)

    def solve(self, lp: LinearProgram) -> LpSolution:
        lower, upper = lp.bounds()
        sign = 1.0 if lp.sense == "min" else -1.0
        engine = DenseSimplex(
            pivot_tol=self.pivot_tol,
            feas_tol=self.feas_tol,
            bland_factor=self.bland_factor,
            iteration_factor=self.iteration_factor,
        )
        result = engine.solve(
            sign * lp.objective(), lp.matrix().toarray(), lp.row_senses(), lp.rhs(), lower, upper
        )
        objective = lp.evaluate(result.x) if result.status == OPTIMAL else math.nan
        return LpSolution(result.status, objective, result.x, result.iterations, self.name)


@dataclass
class HighsBackend:
    """scipy's HiGHS interface behind the same contract."""
    name: str = field(default="highs", init=False)

    _STATUS = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}

    def solve(self, lp: LinearProgram) -> LpSolution:
        sign = 1.0 if lp.sense == "min" else -1.0
        matrix = lp.matrix()
        senses = lp.row_senses()
        rhs = lp.rhs()
        upper_rows = np.flatnonzero(senses == "<=")
        lower_rows = np.flatnonzero(senses == ">=")
        equal_rows = np.flatnonzero(senses == "=")

        inequality = upper_rows.size + lower_rows.size
        a_ub = (
            sparse.vstack([matrix[upper_rows], -matrix[lower_rows]]).tocsr() if inequality else None
        )
        b_ub = np.concatenate([rhs[upper_rows], -rhs[lower_rows]])
        lower, upper = lp.bounds()
        bounds = np.column_stack([
            np.where(np.isfinite(lower), lower, -np.inf),
            np.where(np.isfinite(upper), upper, np.inf),
        ])
        result = linprog(
            sign * lp.objective(),
            A_ub=a_ub,
            b_ub=b_ub if inequality else None,
            A_eq=matrix[equal_rows] if equal_rows.size else None,
            b_eq=rhs[equal_rows] if equal_rows.size else None,
            bounds=bounds if lp.num_variables else None,
            method="highs",
        )
        status = self._STATUS.get(result.status)
        if status is None:
            raise SolverError(f"HiGHS failed on {lp.name}: {result.message}")
        if result.x is None:
            x = np.zeros(lp.num_variables)
        else:
            x = np.asarray(result.x, dtype=float)
        objective = lp.evaluate(x) if status == OPTIMAL else math.nan
        return LpSolution(status, objective, x, int(getattr(result, "nit", 0)), self.name)


def make_backend(
    lp: LinearProgram,
    backend: str = "auto",
    pivot_tol: float = 1e-9,
    feas_tol: float = 1e-7,
    bland_factor: int = 2,
    iteration_factor: int = 50,
    dense_cell_limit: int = 5_000_000,
) -> SolverBackend:
    """Pick a backend; ``auto`` uses the dense simplex when the tableau fits the cell limit."""
    if backend == "auto":
        cells = lp.num_rows * (lp.num_rows + lp.num_variables)
        backend = "simplex" if cells <= dense_cell_limit else "highs"
    if backend == "simplex":
        return DenseSimplexBackend(pivot_tol, feas_tol, bland_factor, iteration_factor)
    if backend == "highs":
        return HighsBackend()
    raise ValueError(f"unknown solver backend {backend!r}")


def solve(
    lp: LinearProgram,
    backend: str = "auto",
    pivot_tol: float = 1e-9,
    feas_tol: float = 1e-7,
    bland_factor: int = 2,
    iteration_factor: int = 50,
    dense_cell_limit: int = 5_000_000,
) -> LpSolution:
    """
    Solve a linear program.

    Args:
        lp: Program to solve
        backend: "auto", "simplex" or "highs"
        pivot_tol: Smallest pivot magnitude accepted by the dense simplex
        feas_tol: Primal feasibility tolerance
        bland_factor: Bland's rule takes over after this many times
            (rows + cols) consecutive degenerate pivots
        iteration_factor: Iteration limit as a multiple of (rows + cols)
        dense_cell_limit: Largest tableau ``auto`` hands to the dense simplex

    Returns:
        LpSolution with status, objective and primal point
    """
    engine = make_backend(
        lp, backend, pivot_tol, feas_tol, bland_factor, iteration_factor, dense_cell_limit
    )
    logger.info(
        "Solving %s with %s: %d variables, %d rows",
        lp.name, engine.name, lp.num_variables, lp.num_rows,
    )
    start = time.perf_counter()
    solution = engine.solve(lp)
    solution.solve_seconds = time.perf_counter() - start

    if solution.is_optimal:
        violation = lp.max_violation(solution.x)
        if violation > feas_tol:
            logger.warning("%s solution violates constraints by %.3g", lp.name, violation)
    logger.info(
        "%s: status=%s objective=%.10g iterations=%d (%.2fs)",
        lp.name, solution.status, solution.objective, solution.iterations, solution.solve_seconds,
    )
    return solution


def _format_terms(coefficients: Dict[str, float]) -> str:
    if not coefficients:
        return "0"
    parts = []
    for k, (name, value) in enumerate(coefficients.items()):
        sign = "-" if value < 0 else "+"
        magnitude = abs(value)
        term = name if magnitude == 1.0 else f"{magnitude!r} {name}"
        parts.append(f"{'- ' if sign == '-' else ''}{term}" if k == 0 else f"{sign} {term}")
    return " ".join(parts)


def write_lp_file(lp: LinearProgram, path: Union[str, Path]) -> Path:
    """Export in CPLEX LP text format."""
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    names = lp.variable_names
    cost = lp.objective()
    matrix = lp.matrix()
    senses = lp.row_senses()
    rhs = lp.rhs()
    lower, upper = lp.bounds()

    lines = [f"\\ {lp.name}", "Minimize" if lp.sense == "min" else "Maximize"]
    objective_terms = {names[j]: float(cost[j]) for j in np.flatnonzero(cost)}
    lines.append(f" obj: {_format_terms(objective_terms)}")
    lines.append("Subject To")
    for r in range(lp.num_rows):
        start, end = matrix.indptr[r], matrix.indptr[r + 1]
        row = zip(matrix.indices[start:end], matrix.data[start:end])
        terms = {names[c]: float(v) for c, v in row}
        lines.append(f" {lp.row_names[r]}: {_format_terms(terms)} {senses[r]} {float(rhs[r])!r}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = lower[j], upper[j]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lines.append(f" {name} free")
        elif lo == 0 and not np.isfinite(hi):
            continue
        else:
            lo_text = "-inf" if not np.isfinite(lo) else repr(float(lo))
            hi_text = "+inf" if not np.isfinite(hi) else repr(float(hi))
            lines.append(f" {lo_text} <= {name} <= {hi_text}")
    lines.append("End")
    output_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return output_path
