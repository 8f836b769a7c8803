"""Assortment bid prices, the adjusted-assortment argmax and the offer policy."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..agents.base import AssortmentPolicy
from ..model.instance import Instance
from ..utils.errors import InvalidInstanceError
from .choice import DEFAULT_MAX_FAMILY, Assortment, ChoiceModel, check_substitutability

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AssortBidPriceTable:
    """
    Assortment bid prices ``nu[t, j, s]`` (t = 1..T+1) and the chosen
    assortments ``chosen[t][s]`` (t = 1..T; index 0 unused).
    """
    nu: np.ndarray
    chosen: Tuple[Tuple[Assortment, ...], ...]

    @property
    def horizon(self) -> int:
        return self.nu.shape[0] - 2

    def to_dict(self):
        chosen = [[list(a) for a in row] for row in self.chosen[1:]]
        return {"nu": self.nu[1:].tolist(), "chosen": chosen}


def _resolve_choice(instance: Instance, choice: Optional[ChoiceModel]) -> ChoiceModel:
    choice = choice or instance.choice
    if choice is None:
        raise InvalidInstanceError("instance carries no choice model")
    return choice


def adjusted_rewards(instance: Instance, t: int, nu_next: np.ndarray) -> np.ndarray:
    """
    [r_j - opp_j(t, s)]^+ for every (j, s), shape (n, |S|).

    opp_j(t, s) = sum_s' p_t(s,s') sum_{i in A_j} (1/C_i) sum_{j' in B_i} nu^{t+1}_{j'}(s').
    """
    A = instance.consumption
    prices = instance.inverse_capacity[:, None] * (A @ nu_next)
    opp = A.T @ prices @ instance.arrival.transition(t).T
    return np.maximum(instance.rewards[:, None] - opp, 0.0)


def _phi_tensor(choice: ChoiceModel, family: Sequence[Assortment], num_states: int) -> np.ndarray:
    return np.stack([np.stack([choice.phi(a, s) for s in range(num_states)]) for a in family])


def _pick(values: np.ndarray, family: Sequence[Assortment]) -> Tuple[Assortment, float]:
    """Largest value; ties within TIE_TOL go to the lexicographically smallest assortment."""
    best = float(values.max())
    tied = [family[k] for k in np.flatnonzero(values >= best - TIE_TOL)]
    winner = min(tied)
    return winner, best


def revenue_ordered_assortment(
    choice: ChoiceModel, s: int, adjusted: np.ndarray
) -> Tuple[Assortment, float]:
    """
    Best MNL assortment among nested prefixes of products sorted by adjusted reward.

    Args:
        choice: MNL choice model
        s: Arrival state
        adjusted: Nonnegative adjusted reward per type

    Returns:
        (assortment, value) over the prefixes, including the null-only assortment
    """
    if not choice.is_mnl:
        raise ValueError("revenue-ordered search applies to MNL models only")
    weights = choice.mnl_weights[s]
    null = choice.null_product
    products = sorted(choice.products, key=lambda j: (-adjusted[j], j))
    prefixes: List[Assortment] = [(null,)]
    values = [0.0]
    numerator, denominator = 0.0, weights[null]
    for k, j in enumerate(products):
        numerator += weights[j] * adjusted[j]
        denominator += weights[j]
        prefixes.append(tuple(sorted([null] + products[: k + 1])))
        values.append(numerator / denominator)
    return _pick(np.array(values), prefixes)


def best_adjusted_assortment(
    instance: Instance,
    choice: Optional[ChoiceModel],
    t: int,
    s: int,
    nu_next: np.ndarray,
    max_family: int = DEFAULT_MAX_FAMILY,
    revenue_ordered: bool = False,
) -> Tuple[Assortment, float]:
    """
    Maximize sum_{j in A} phi_j(A, s)[r_j - opp_j(t, s)]^+ over A in F.

    The family is enumerated exhaustively. For MNL models the revenue-ordered
    search is used when ``revenue_ordered`` is set or when the implicit
    power-set family exceeds ``max_family``.

    Raises:
        FamilyTooLargeError: If F exceeds the cap and no MNL shortcut applies
    """
    choice = _resolve_choice(instance, choice)
    adjusted = adjusted_rewards(instance, t, nu_next)[:, s]
    if choice.is_mnl and choice.family is None and (
        revenue_ordered or choice.family_size > max_family
    ):
        return revenue_ordered_assortment(choice, s, adjusted)
    family = choice.assortments(max_family)
    values = np.array([choice.phi(a, s) @ adjusted for a in family])
    return _pick(values, family)


def compute_assort_bid_prices(
    instance: Instance,
    choice: Optional[ChoiceModel] = None,
    max_family: int = DEFAULT_MAX_FAMILY,
    revenue_ordered: bool = False,
) -> AssortBidPriceTable:
    """
    Assortment bid-price recursion with per-product increments.

    nu^t_j(s) = sum_s' p_t(s,s') nu^{t+1}_j(s')
    + 1{j in A_t(s)} phi_j(A_t(s), s) [r_j - opp_j(t, s)]^+,
    where A_t(s) is the best adjusted assortment.

    Raises:
        InvalidInstanceError: If the choice model fails the substitutability check
    """
    choice = _resolve_choice(instance, choice)
    horizon, n, num_states = instance.horizon, instance.num_types, instance.num_states
    implicit = choice.is_mnl and choice.family is None and (
        revenue_ordered or choice.family_size > max_family
    )
    family: Sequence[Assortment] = ()
    phi = None
    if not implicit:
        family = choice.assortments(max_family)
        report = check_substitutability(choice, num_states, max_family)
        if not report.ok:
            raise InvalidInstanceError(f"choice model is not substitutable: {report.violation}")
        phi = _phi_tensor(choice, family, num_states)  # (|F|, S, n)

    nu = np.zeros((horizon + 2, n, num_states))
    chosen: List[Tuple[Assortment, ...]] = [()] * (horizon + 1)
    for t in range(horizon, 0, -1):
        adjusted = adjusted_rewards(instance, t, nu[t + 1])  # (n, S)
        nu[t] = nu[t + 1] @ instance.arrival.transition(t).T
        picks = []
        for s in range(num_states):
            if implicit:
                best, _ = revenue_ordered_assortment(choice, s, adjusted[:, s])
                probs = choice.phi(best, s)
            else:
                values = phi[:, s, :] @ adjusted[:, s]
                best, _ = _pick(values, family)
                probs = phi[family.index(best), s]
            members = list(best)
            nu[t][members, s] += probs[members] * adjusted[members, s]
            picks.append(best)
        chosen[t] = tuple(picks)

    logger.debug("Computed assortment bid prices for T=%d over %s", horizon,
                 "revenue-ordered MNL" if implicit else f"{len(family)} assortments")
    return AssortBidPriceTable(nu=nu, chosen=tuple(chosen))


def offer(
    table: AssortBidPriceTable, instance: Instance, t: int, s: int, c: Sequence[int]
) -> Assortment:
    """Chosen assortment restricted to products that fit in c; the null product always stays."""
    capacity = np.asarray(c)
    A = instance.consumption
    return tuple(j for j in table.chosen[t][s] if np.all(capacity >= A[:, j]))


class AssortmentBidPricePolicy(AssortmentPolicy):
    """Offer the capacity-filtered best adjusted assortment."""

    name = "bbp-assort"

    def __init__(
        self,
        instance: Instance,
        choice: Optional[ChoiceModel] = None,
        table: Optional[AssortBidPriceTable] = None,
        max_family: int = DEFAULT_MAX_FAMILY,
        revenue_ordered: bool = False,
    ):
        super().__init__(instance)
        self.choice = _resolve_choice(instance, choice)
        self.table = table if table is not None else compute_assort_bid_prices(
            instance, self.choice, max_family, revenue_ordered
        )

    def offer(self, t: int, s: int, c: Sequence[int]) -> Assortment:
        return offer(self.table, self.instance, t, s, c)
