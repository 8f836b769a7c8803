"""ADP weights: extraction from an LP solution and direct feasibility checking."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..assortment.choice import DEFAULT_MAX_FAMILY, ChoiceModel
from ..model.instance import Instance
from .builders import AdpIndex
from .program import LpSolution

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AdpWeights:
    """
    Linear value-function weights.

    ``theta[t, s]`` and ``beta[t, i, s]`` for t = 1..T+1; slot 0 is unused
    and slot T+1 is zero.
    """
    theta: np.ndarray
    beta: np.ndarray

    @property
    def horizon(self) -> int:
        return self.theta.shape[0] - 2

    @classmethod
    def zeros(cls, instance: Instance) -> "AdpWeights":
        horizon, m, num_states = instance.horizon, instance.num_resources, instance.num_states
        return cls(np.zeros((horizon + 2, num_states)), np.zeros((horizon + 2, m, num_states)))

    def to_dict(self) -> Dict[str, Any]:
        return {"theta": self.theta[1:].tolist(), "beta": self.beta[1:].tolist()}


def extract_weights(solution: LpSolution, index: AdpIndex) -> AdpWeights:
    """
    Read theta and beta from an optimal ADP LP solution; epigraph variables are dropped.

    Raises:
        SolverError: If the solution is not optimal
    """
    solution.require_optimal("ADP LP")
    horizon = index.horizon
    theta = np.zeros((horizon + 2,) + index.theta.shape[1:])
    beta = np.zeros((horizon + 2,) + index.beta.shape[1:])
    theta[1:horizon + 1] = solution.x[index.theta[1:]]
    beta[1:horizon + 1] = solution.x[index.beta[1:]]
    return AdpWeights(theta, beta)


@dataclass
class FeasibilityReport:
    """Minimum slack of the ADP constraints and the objective of the weights."""
    min_slack: float
    objective: float
    worst: Optional[Tuple[int, int]] = None

    @property
    def max_violation(self) -> float:
        return max(0.0, -self.min_slack)

    @property
    def feasible(self) -> bool:
        return self.min_slack >= -FEASIBILITY_TOL


def check_adp_feasibility(
    weights: AdpWeights,
    instance: Instance,
    choice: Optional[ChoiceModel] = None,
    max_family: int = DEFAULT_MAX_FAMILY,
) -> FeasibilityReport:
    """
    Evaluate the ADP constraints with both positive parts computed directly.

    For every (t, s) the slack is theta^t(s) - sum_s' p_t theta^{t+1}
    - [r_{j(s)} - sum_s' p_t sum_i a_{i,j(s)} beta^{t+1}_i]^+
    - sum_i C_i [sum_s' p_t beta^{t+1}_i - beta^t_i]^+. With a choice model
    the reward bracket becomes the worst assortment
    max_A sum_{j in A} phi_j(A, s)[r_j - ...]^+.

    Raises:
        ValueError: If the weight tables do not match the instance
    """
    horizon, m, num_states = instance.horizon, instance.num_resources, instance.num_states
    if weights.theta.shape != (horizon + 2, num_states) or weights.beta.shape != (
        horizon + 2, m, num_states
    ):
        raise ValueError(
            f"weights of shape {weights.theta.shape}/{weights.beta.shape} do not match "
            f"T={horizon}, m={m}, |S|={num_states}"
        )

    A = instance.consumption
    rewards = instance.rewards
    state_types = instance.state_types
    caps = np.array(instance.capacities, dtype=float)
    phi = None
    if choice is not None:
        phi = np.stack([
            np.stack([choice.phi(a, s) for s in range(num_states)])
            for a in choice.assortments(max_family)
        ])  # (|F|, S, n)

    min_slack, worst = np.inf, None
    for t in range(1, horizon + 1):
        P = instance.arrival.transition(t)
        backup = P @ weights.theta[t + 1]
        expected_beta = weights.beta[t + 1] @ P.T  # (m, S)
        if phi is None:
            bracket = np.maximum(
                rewards[state_types] - (A[:, state_types] * expected_beta).sum(axis=0), 0.0
            )
        else:
            adjusted = np.maximum(rewards[:, None] - A.T @ expected_beta, 0.0)  # (n, S)
            bracket = (phi * adjusted.T[None, :, :]).sum(axis=2).max(axis=0)
        capacity = caps @ np.maximum(expected_beta - weights.beta[t], 0.0)
        slack = weights.theta[t] - backup - bracket - capacity
        s = int(np.argmin(slack))
        if slack[s] < min_slack:
            min_slack, worst = float(slack[s]), (t, s)

    p1 = instance.arrival.initial
    objective = float(p1 @ (weights.theta[1] + caps @ weights.beta[1]))
    report = FeasibilityReport(min_slack=float(min_slack), objective=objective, worst=worst)
    if not report.feasible:
        logger.debug("ADP weights violate constraint (t, s)=%s by %.3g", worst, -min_slack)
    return report
