"""ADP heuristic: threshold decisions read from optimal ADP LP weights."""

from __future__ import annotations

import logging
from typing import Any, Optional, Sequence

import numpy as np

from ..lp.builders import build_adp_lp
from ..lp.program import solve
from ..lp.weights import AdpWeights, extract_weights
from ..model.instance import Instance
from .base import Decision, DecisionPolicy, threshold_decision

logger = logging.getLogger(__name__)


def heuristic_costs(weights: AdpWeights, instance: Instance) -> np.ndarray:
    """
    Thresholds sum_s' p_t(s,s') sum_i a_{i,j(s)} beta^{t+1}_i(s') as a (T+1, |S|) table.

    Row 0 is unused; row T is zero because beta^{T+1} = 0.
    """
    horizon = instance.horizon
    usage = instance.consumption[:, instance.state_types]  # (m, S)
    costs = np.zeros((horizon + 1, instance.num_states))
    for t in range(1, horizon):
        expected_beta = weights.beta[t + 1] @ instance.arrival.transition(t).T
        costs[t] = (usage * expected_beta).sum(axis=0)
    return costs


def decide_adp_heuristic(
    weights: AdpWeights, instance: Instance, t: int, s: int, c: Sequence[int]
) -> Decision:
    """Serve iff the request fits and r_{j(s)} covers the expected next-period resource weights."""
    if t >= instance.horizon:
        cost = 0.0
    else:
        expected_beta = weights.beta[t + 1] @ instance.arrival.transition(t)[s]
        cost = float(instance.consumption[:, instance.arrival.state_type[s]] @ expected_beta)
    return threshold_decision(instance, s, c, cost)


class AdpHeuristicPolicy(DecisionPolicy):
    """ADP heuristic over weights from an optimal ADP LP solve."""

    name = "adp"

    def __init__(self, instance: Instance, weights: AdpWeights):
        super().__init__(instance)
        self.weights = weights
        self.costs = heuristic_costs(weights, instance)
        self.lp_value: Optional[float] = None

    @classmethod
    def from_lp(cls, instance: Instance, **solver_kwargs: Any) -> "AdpHeuristicPolicy":
        """Solve the ADP LP and wrap whichever optimal vertex the solver returns."""
        lp, index = build_adp_lp(instance)
        solution = solve(lp, **solver_kwargs)
        policy = cls(instance, extract_weights(solution, index))
        policy.lp_value = solution.objective
        return policy

    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        return threshold_decision(self.instance, s, c, float(self.costs[t, s]))
