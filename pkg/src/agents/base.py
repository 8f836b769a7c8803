"""Decision types and the policy interfaces consumed by the oracle and the simulator."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..model.instance import Instance, feasible


@dataclass(frozen=True)
class Decision:
    """Accept/reject outcome for one arrival."""
    serve: bool
    opportunity_cost: float = 0.0
    feasible: bool = True

    def __post_init__(self):
        if self.serve and not self.feasible:
            raise ValueError("a decision cannot serve an infeasible request")


NO_OP = Decision(serve=False, opportunity_cost=0.0, feasible=True)


class DecisionPolicy(ABC):
    """Single-product policy: (t, s, c) -> Decision."""

    name = "policy"

    def __init__(self, instance: Instance):
        self.instance = instance

    @abstractmethod
    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        """Decide whether to serve the arrival in state s at period t with capacity c."""

    def __call__(self, t: int, s: int, c: Sequence[int]) -> Decision:
        return self.decide(t, s, c)


class AssortmentPolicy(ABC):
    """Assortment policy: (t, s, c) -> offered assortment."""

    name = "assortment-policy"

    def __init__(self, instance: Instance):
        self.instance = instance

    @abstractmethod
    def offer(self, t: int, s: int, c: Sequence[int]) -> Tuple[int, ...]:
        """Assortment offered in state s at period t with capacity c."""

    def __call__(self, t: int, s: int, c: Sequence[int]) -> Tuple[int, ...]:
        return self.offer(t, s, c)


def threshold_decision(instance: Instance, s: int, c: Sequence[int], cost: float) -> Decision:
    """Serve iff the request fits and its reward is at least ``cost`` (ties serve)."""
    ctype = instance.type_of(s)
    if ctype.is_null:
        return NO_OP
    fits = feasible(np.asarray(c), np.asarray(ctype.consumes))
    return Decision(
        serve=fits and ctype.reward >= cost, opportunity_cost=float(cost), feasible=fits
    )
