"""Dense two-phase tableau simplex."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int


class DenseSimplex:
    """
    Primal simplex on a dense tableau for min c'x s.t. rows, bounds.

    Phase I starts from slacks where possible and artificials elsewhere.
    Pricing is Dantzig's most negative reduced cost; after
    ``bland_factor * (rows + cols)`` consecutive degenerate pivots the
    current phase switches to Bland's rule, which cannot cycle.
    """

    def __init__(
        self,
        pivot_tol: float = 1e-9,
        feas_tol: float = 1e-7,
        bland_factor: int = 2,
        iteration_factor: int = 50,
    ):
        self.pivot_tol = pivot_tol
        self.feas_tol = feas_tol
        self.bland_factor = bland_factor
        self.iteration_factor = iteration_factor
        self.iterations = 0

    def solve(
        self,
        cost: np.ndarray,
        matrix: np.ndarray,
        senses: np.ndarray,
        rhs: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
    ) -> SimplexResult:
        """
        Minimize ``cost @ x`` subject to ``matrix @ x (senses) rhs`` and bounds.

        Returns:
            SimplexResult with status optimal, infeasible, unbounded or
            iteration-limit
        """
        self.iterations = 0
        num_vars = cost.shape[0]
        offset, transform, std_matrix, std_rhs, std_cost, num_struct = self._standard_form(
            cost, matrix, senses, rhs, lower, upper
        )
        rows, cols = std_matrix.shape
        self.iteration_limit = self.iteration_factor * (rows + cols)
        self.bland_threshold = self.bland_factor * (rows + cols)

        # Initial basis: a +1 slack column that is a unit vector, else an artificial.
        basis = np.full(rows, -1, dtype=np.int64)
        for c in range(num_struct, cols):
            column = std_matrix[:, c]
            hits = np.flatnonzero(column)
            if hits.size == 1 and column[hits[0]] == 1.0 and basis[hits[0]] < 0:
                basis[hits[0]] = c
        needs_artificial = np.flatnonzero(basis < 0)
        num_art = needs_artificial.size

        tableau = np.zeros((rows + 1, cols + num_art + 1))
        tableau[:rows, :cols] = std_matrix
        tableau[:rows, -1] = std_rhs
        for k, r in enumerate(needs_artificial):
            tableau[r, cols + k] = 1.0
            basis[r] = cols + k

        if num_art:
            tableau[rows, cols:cols + num_art] = 1.0
            tableau[rows] -= tableau[needs_artificial].sum(axis=0)
            status = self._run_phase(tableau, basis, allowed=cols + num_art, phase=1)
            if status != "optimal":
                return self._result(status, num_vars)
            if -tableau[rows, -1] > self.feas_tol:
                return self._result("infeasible", num_vars)
            tableau, basis = self._drop_artificials(tableau, basis, cols)
            rows = tableau.shape[0] - 1

        # Phase II objective row: c - c_B B^-1 A.
        objective_row = np.zeros(tableau.shape[1])
        objective_row[:cols] = std_cost
        objective_row -= std_cost[basis] @ tableau[:rows]
        tableau[rows] = objective_row

        status = self._run_phase(tableau, basis, allowed=cols, phase=2)
        if status != "optimal":
            return self._result(status, num_vars)

        y = np.zeros(cols)
        y[basis] = np.maximum(tableau[:rows, -1], 0.0)
        x = offset + transform @ y[:num_struct]
        return SimplexResult("optimal", x, float(cost @ x), self.iterations)

    def _result(self, status: str, num_vars: int) -> SimplexResult:
        return SimplexResult(status, np.zeros(num_vars), float("nan"), self.iterations)

    def _standard_form(self, cost, matrix, senses, rhs, lower, upper):
        """
        Rewrite as min c'y s.t. A y = b, y >= 0, b >= 0.

        Returns:
            (offset, transform, A, b, c, number of structural columns) with
            x = offset + transform @ y_structural
        """
        num_rows, num_vars = matrix.shape
        offset = np.zeros(num_vars)
        columns: List[np.ndarray] = []
        signs: List[Tuple[int, float]] = []
        bound_rows: List[Tuple[int, float]] = []

        for j in range(num_vars):
            lo, hi = lower[j], upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                signs.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(signs) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                signs.append((j, -1.0))
            else:
                signs.append((j, 1.0))
                signs.append((j, -1.0))

        num_struct = len(signs)
        transform = np.zeros((num_vars, num_struct))
        for k, (j, sign) in enumerate(signs):
            transform[j, k] = sign

        base = matrix @ transform
        base_rhs = rhs - matrix @ offset
        row_senses = list(senses)
        if bound_rows:
            extra = np.zeros((len(bound_rows), num_struct))
            for r, (k, width) in enumerate(bound_rows):
                extra[r, k] = 1.0
            base = np.vstack([base, extra])
            base_rhs = np.concatenate([base_rhs, [w for _, w in bound_rows]])
            row_senses.extend(["<="] * len(bound_rows))

        total_rows = base.shape[0]
        slack_count = sum(1 for s in row_senses if s != "=")
        std_matrix = np.zeros((total_rows, num_struct + slack_count))
        std_matrix[:, :num_struct] = base
        col = num_struct
        for r, sense in enumerate(row_senses):
            if sense == "<=":
                std_matrix[r, col] = 1.0
                col += 1
            elif sense == ">=":
                std_matrix[r, col] = -1.0
                col += 1

        std_rhs = base_rhs.astype(float).copy()
        negative = std_rhs < 0
        std_matrix[negative] *= -1.0
        std_rhs[negative] *= -1.0

        std_cost = np.zeros(std_matrix.shape[1])
        std_cost[:num_struct] = cost @ transform
        return offset, transform, std_matrix, std_rhs, std_cost, num_struct

    def _run_phase(self, tableau: np.ndarray, basis: np.ndarray, allowed: int, phase: int) -> str:
        rows = tableau.shape[0] - 1
        degenerate_run = 0
        use_bland = False
        # Phase I columns with no positive entry, skipped until the next pivot
        blocked = np.zeros(allowed, dtype=bool)
        while True:
            reduced = tableau[rows, :allowed]
            candidates = np.flatnonzero((reduced < -self.pivot_tol) & ~blocked)
            if candidates.size == 0:
                return "optimal"
            if self.iterations >= self.iteration_limit:
                logger.debug("Phase %d hit the iteration limit %d", phase, self.iteration_limit)
                return "iteration-limit"

            if use_bland:
                entering = int(candidates[0])
            else:
                entering = int(candidates[np.argmin(reduced[candidates])])
            column = tableau[:rows, entering]
            eligible = np.flatnonzero(column > self.pivot_tol)
            if eligible.size == 0:
                if phase == 2:
                    return "unbounded"
                # Phase I objective is bounded below by zero, so this reduced cost is round-off.
                blocked[entering] = True
                continue

            ratios = np.maximum(tableau[eligible, -1], 0.0) / column[eligible]
            best = ratios.min()
            ties = eligible[ratios <= best + self.pivot_tol]
            leaving = int(ties[np.argmin(basis[ties])])

            self._pivot(tableau, leaving, entering)
            basis[leaving] = entering
            self.iterations += 1
            blocked[:] = False

            if best <= self.feas_tol:
                degenerate_run += 1
                if not use_bland and degenerate_run >= self.bland_threshold:
                    use_bland = True
                    logger.debug(
                        "Phase %d: %d degenerate pivots, switching to Bland's rule",
                        phase, degenerate_run,
                    )
            else:
                degenerate_run = 0

    @staticmethod
    def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
        tableau[row] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])

    def _drop_artificials(self, tableau: np.ndarray, basis: np.ndarray, cols: int):
        """Pivot artificials out of the basis; rows where that is impossible are redundant."""
        rows = tableau.shape[0] - 1
        keep = []
        for r in range(rows):
            if basis[r] < cols:
                keep.append(r)
                continue
            candidates = np.flatnonzero(np.abs(tableau[r, :cols]) > self.pivot_tol)
            if candidates.size:
                entering = int(candidates[0])
                self._pivot(tableau, r, entering)
                basis[r] = entering
                keep.append(r)
        if len(keep) < rows:
            logger.debug("Dropped %d redundant rows after phase I", rows - len(keep))
        tableau = np.vstack([tableau[keep], tableau[rows:rows + 1]])
        tableau = np.hstack([tableau[:, :cols], tableau[:, -1:]])
        return tableau, basis[keep]
