"""Bid-price recursion, the bid-price policy and the feasible ADP weights built from it."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import numpy as np

from ..lp.weights import AdpWeights
from ..model.instance import Instance, MarkovArrival
from ..utils.errors import PolicyError
from .base import Decision, DecisionPolicy, threshold_decision

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BidPriceTable:
    """
    Bid prices nu^t_j(s), stored as ``nu[t, j, s]`` for t = 1..T+1.

    ``opportunity[t, s]`` caches the opportunity cost of the type arriving in
    state s at period t. Slot 0 of both tables is unused.
    """
    nu: np.ndarray
    opportunity: np.ndarray

    @property
    def horizon(self) -> int:
        return self.nu.shape[0] - 2

    def to_dict(self) -> Dict[str, Any]:
        return {"nu": self.nu[1:].tolist()}

    def write_json(self, path: Union[str, Path]) -> Path:
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")
        return output_path


def compute_bid_prices(instance: Instance) -> BidPriceTable:
    """
    Run the bid-price backward recursion.

    For t = T..1, nu^t_j(s) = sum_s' p_t(s,s') nu^{t+1}_j(s') plus, for the
    arriving type j = j(s), the margin [r_j - opp_t(s)]^+, where opp_t(s) is
    the expected next-period price of the resources j consumes.
    """
    horizon, n, num_states = instance.horizon, instance.num_types, instance.num_states
    A = instance.consumption
    inverse_capacity = instance.inverse_capacity
    state_types = instance.state_types
    states = np.arange(num_states)
    arriving_reward = instance.rewards[state_types]
    typed = np.array([not instance.is_null_state(s) for s in states])

    nu = np.zeros((horizon + 2, n, num_states))
    opportunity = np.zeros((horizon + 1, num_states))
    for t in range(horizon, 0, -1):
        P = instance.arrival.transition(t)
        following = nu[t + 1]
        prices = inverse_capacity[:, None] * (A @ following)  # (m, S')
        type_cost = A.T @ prices @ P.T  # (n, S)
        opportunity[t] = type_cost[state_types, states]
        nu[t] = following @ P.T
        margin = np.maximum(arriving_reward - opportunity[t], 0.0) * typed
        nu[t][state_types, states] += margin

    logger.debug("Computed bid prices for T=%d, n=%d, |S|=%d", horizon, n, num_states)
    return BidPriceTable(nu=nu, opportunity=opportunity)


def opportunity_cost(table: BidPriceTable, instance: Instance, t: int, s: int) -> float:
    """
    Expected next-period bid-price mass of the resources the state-s arrival consumes.

    Raises:
        PolicyError: For a null-type state, where no decision exists
    """
    if not 1 <= t <= instance.horizon:
        raise PolicyError(f"period {t} outside 1..{instance.horizon}")
    if instance.is_null_state(s):
        raise PolicyError(f"state {instance.arrival.states[s]!r} carries no arrival")
    return float(table.opportunity[t, s])


def decide_bid_price(
    table: BidPriceTable, instance: Instance, t: int, s: int, c: Sequence[int]
) -> Decision:
    """Serve iff the request fits and r_{j(s)} >= opportunity cost."""
    if instance.is_null_state(s):
        return threshold_decision(instance, s, c, 0.0)
    return threshold_decision(instance, s, c, opportunity_cost(table, instance, t, s))


def lower_bound_value(table: BidPriceTable, arrival: MarkovArrival) -> float:
    """sum_s p_1(s) sum_j nu^1_j(s), a lower bound on the bid-price policy's value."""
    return float(arrival.initial @ table.nu[1].sum(axis=0))


def construct_lp_solution(table: Any, instance: Instance) -> AdpWeights:
    """
    ADP weights built from bid prices.

    beta^t_i(s) = (1/C_i) sum_{j in B_i} nu^t_j(s) and theta^t(s) = sum_j nu^t_j(s).
    Works for any table exposing ``nu[t, j, s]``, including assortment bid prices.
    """
    nu = table.nu
    theta = nu.sum(axis=1)
    beta = np.einsum("i,ij,tjs->tis", instance.inverse_capacity, instance.consumption, nu)
    theta[0] = 0.0
    beta[0] = 0.0
    return AdpWeights(theta=theta, beta=beta)


class BidPricePolicy(DecisionPolicy):
    """The bid-price control policy over a precomputed table."""

    name = "bbp"

    def __init__(self, instance: Instance, table: BidPriceTable | None = None):
        super().__init__(instance)
        self.table = table if table is not None else compute_bid_prices(instance)

    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        return decide_bid_price(self.table, self.instance, t, s, c)
