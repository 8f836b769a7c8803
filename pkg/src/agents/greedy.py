"""Baseline policies."""

from typing import Sequence

from ..model.instance import Instance
from .base import NO_OP, Decision, DecisionPolicy, threshold_decision


def decide_greedy(instance: Instance, t: int, s: int, c: Sequence[int]) -> Decision:
    """Serve every feasible arrival with a positive reward."""
    decision = threshold_decision(instance, s, c, 0.0)
    if decision.serve and instance.type_of(s).reward <= 0:
        return Decision(serve=False, opportunity_cost=0.0, feasible=decision.feasible)
    return decision


class GreedyPolicy(DecisionPolicy):
    name = "greedy"

    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        return decide_greedy(self.instance, t, s, c)


class NeverServePolicy(DecisionPolicy):
    name = "never"

    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        return NO_OP
