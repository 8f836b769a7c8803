"""Exact finite-horizon DP and exact policy evaluation over the capacity lattice."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from ..agents.base import NO_OP, Decision, DecisionPolicy
from ..assortment.choice import DEFAULT_MAX_FAMILY, ChoiceModel
from ..model.instance import Instance
from ..utils.errors import InvalidInstanceError, LatticeTooLargeError, PolicyError

logger = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 10_000_000

PolicyFn = Callable[[int, int, Tuple[int, ...]], Union[Decision, Tuple[int, ...]]]


@dataclass(frozen=True)
class CapacityLattice:
    """
    Mixed-radix enumeration of {0..C_1} x ... x {0..C_m} in C order.

    ``grid[k]`` is the capacity vector of cell k; the full-capacity cell is the last one.
    """
    capacities: Tuple[int, ...]
    grid: np.ndarray
    strides: np.ndarray

    @classmethod
    def build(cls, capacities: Sequence[int]) -> "CapacityLattice":
        dims = tuple(int(c) + 1 for c in capacities)
        grid = np.indices(dims).reshape(len(dims), -1).T if dims else np.zeros((1, 0), dtype=int)
        strides = np.array(
            [int(np.prod(dims[i + 1:])) for i in range(len(dims))], dtype=np.int64
        )
        return cls(tuple(int(c) for c in capacities), grid.astype(np.int64), strides)

    @property
    def size(self) -> int:
        return self.grid.shape[0]

    @property
    def full(self) -> int:
        return self.size - 1

    def index(self, c: Sequence[int]) -> int:
        return int(np.asarray(c, dtype=np.int64) @ self.strides)

    def shifts(self, consumption: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-column landing cells after consuming each column of ``consumption``.

        Returns:
            (fits, target): boolean (cells, k) and int (cells, k) arrays; target
            is clipped to 0 where the column does not fit
        """
        fits = np.all(self.grid[:, :, None] >= consumption[None, :, :], axis=1)
        offsets = consumption.T.astype(np.int64) @ self.strides
        target = np.arange(self.size)[:, None] - offsets[None, :]
        return fits, np.where(fits, target, 0)


@dataclass(frozen=True, eq=False)
class DpTable:
    """Optimal values ``values[t, cell, s]`` for t = 1..T+1 (slot 0 unused, slot T+1 zero)."""
    values: np.ndarray
    lattice: CapacityLattice

    def value(self, t: int, c: Sequence[int], s: int) -> float:
        return float(self.values[t, self.lattice.index(c), s])

    def is_monotone(self, tol: float = 1e-12) -> bool:
        """V_t(c, s) <= V_t(c + e_i, s) for every unit step inside the lattice."""
        for i, stride in enumerate(self.lattice.strides):
            below = np.flatnonzero(self.lattice.grid[:, i] < self.lattice.capacities[i])
            if np.any(self.values[:, below, :] > self.values[:, below + stride, :] + tol):
                return False
        return True


def _check_lattice(instance: Instance, max_cells: int) -> CapacityLattice:
    if any(c < 0 for c in instance.capacities):
        raise InvalidInstanceError("capacities must be nonnegative")
    cells = int(np.prod([c + 1 for c in instance.capacities], dtype=float))
    work = cells * instance.num_states * instance.horizon
    if work > max_cells:
        raise LatticeTooLargeError(
            f"exact DP needs {work:.3g} cells (cap {max_cells:.3g}); "
            "use Monte-Carlo simulation instead"
        )
    return CapacityLattice.build(instance.capacities)


def exact_dp(instance: Instance, max_cells: int = DEFAULT_MAX_CELLS) -> Tuple[float, DpTable]:
    """
    Optimal expected reward by backward induction.

    V_t(c, s) = max(r_{j(s)} + E V_{t+1}(c - a_{j(s)}, .) if a_{j(s)} fits,
    E V_{t+1}(c, .)); null-type states always take the skip branch.

    Raises:
        LatticeTooLargeError: If (prod_i (C_i+1)) * |S| * T exceeds ``max_cells``
    """
    lattice = _check_lattice(instance, max_cells)
    horizon, num_states = instance.horizon, instance.num_states
    states = np.arange(num_states)
    state_types = instance.state_types
    typed = np.array([not instance.is_null_state(s) for s in states])
    fits, target = lattice.shifts(instance.consumption[:, state_types])  # (cells, S)
    reward = instance.rewards[state_types]
    can_serve = fits & typed[None, :]

    values = np.zeros((horizon + 2, lattice.size, num_states))
    for t in range(horizon, 0, -1):
        expected = values[t + 1] @ instance.arrival.transition(t).T  # (cells, S)
        serve = reward[None, :] + expected[target, states[None, :]]
        values[t] = np.where(can_serve, np.maximum(expected, serve), expected)

    value = float(instance.arrival.initial @ values[1, lattice.full])
    logger.info("Exact DP over %d capacity cells: value %.10g", lattice.size, value)
    return value, DpTable(values, lattice)


def exact_dp_assort(
    instance: Instance,
    choice: Optional[ChoiceModel] = None,
    max_cells: int = DEFAULT_MAX_CELLS,
    max_family: int = DEFAULT_MAX_FAMILY,
) -> Tuple[float, DpTable]:
    """
    Optimal expected reward when offering assortments.

    V_t(c, s) = max over A in F(c) of sum_{j in A} phi_j(A, s)(r_j + E V_{t+1}(c - a_j, .)),
    where F(c) holds the assortments whose every product fits in c.
    """
    choice = choice or instance.choice
    if choice is None:
        raise InvalidInstanceError("assortment DP needs a choice model")
    lattice = _check_lattice(instance, max_cells)
    family = choice.assortments(max_family)
    horizon, n, num_states = instance.horizon, instance.num_types, instance.num_states
    states = np.arange(num_states)
    fits, target = lattice.shifts(instance.consumption)  # (cells, n)
    rewards = instance.rewards
    phi = np.stack([np.stack([choice.phi(a, s) for s in states]) for a in family])  # (F, S, n)
    offered_fits = np.stack([fits[:, list(a)].all(axis=1) for a in family])  # (F, cells)

    values = np.zeros((horizon + 2, lattice.size, num_states))
    for t in range(horizon, 0, -1):
        expected = values[t + 1] @ instance.arrival.transition(t).T  # (cells, S)
        # gain[j, c, s] = r_j + E V_{t+1}(c - a_j, s), zero where a_j does not fit
        gain = rewards[:, None, None] + expected[target.T]  # (n, cells, S)
        gain = np.where(fits.T[:, :, None], gain, 0.0)
        per_assortment = np.einsum("fsj,jcs->fcs", phi, gain)
        per_assortment = np.where(offered_fits[:, :, None], per_assortment, -np.inf)
        values[t] = per_assortment.max(axis=0)

    value = float(instance.arrival.initial @ values[1, lattice.full])
    logger.info("Exact assortment DP over %d cells and %d assortments: value %.10g",
                lattice.size, len(family), value)
    return value, DpTable(values, lattice)


def exact_policy_value(
    instance: Instance,
    policy: PolicyFn,
    choice: Optional[ChoiceModel] = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> float:
    """
    Exact expected reward of a deterministic policy by backward recursion over (t, c, s).

    Without ``choice`` the policy returns a Decision; with it the policy
    returns an assortment and the expectation runs over the purchase outcome.

    Raises:
        PolicyError: If the policy serves or offers something that does not fit
    """
    lattice = _check_lattice(instance, max_cells)
    horizon, num_states = instance.horizon, instance.num_states
    A = instance.consumption.astype(np.int64)
    rewards = instance.rewards
    offsets = A.T @ lattice.strides

    current = np.zeros((lattice.size, num_states))
    for t in range(horizon, 0, -1):
        expected = current @ instance.arrival.transition(t).T
        values = np.empty_like(expected)
        for cell in range(lattice.size):
            c = tuple(int(x) for x in lattice.grid[cell])
            for s in range(num_states):
                if choice is None:
                    values[cell, s] = _decision_value(
                        instance, policy, t, s, c, cell, expected, offsets
                    )
                else:
                    assortment = choice.canonical(policy(t, s, c))
                    probs = choice.phi(assortment, s)
                    total = 0.0
                    for j in assortment:
                        if np.any(lattice.grid[cell] < A[:, j]):
                            raise PolicyError(
                                f"offered product {j} does not fit capacity {c} at t={t}"
                            )
                        total += probs[j] * (rewards[j] + expected[cell - offsets[j], s])
                    values[cell, s] = total
        current = values
    return float(instance.arrival.initial @ current[lattice.full])


def _decision_value(instance, policy, t, s, c, cell, expected, offsets) -> float:
    decision = policy(t, s, c)
    if not decision.serve:
        return expected[cell, s]
    j = instance.arrival.state_type[s]
    if np.any(np.asarray(c) < instance.consumption[:, j]):
        raise PolicyError(f"policy served type {j} without capacity {c} at t={t}")
    return instance.rewards[j] + expected[cell - offsets[j], s]


class OptimalDpPolicy(DecisionPolicy):
    """Serves iff the serve branch of the DP is at least the skip branch."""

    name = "optimal"

    def __init__(self, instance: Instance, table: DpTable):
        super().__init__(instance)
        self.table = table
        self.offsets = instance.consumption.T.astype(np.int64) @ table.lattice.strides

    def decide(self, t: int, s: int, c: Sequence[int]) -> Decision:
        if self.instance.is_null_state(s):
            return NO_OP
        j = self.instance.arrival.state_type[s]
        ctype = self.instance.types[j]
        cell = self.table.lattice.index(c)
        row = self.instance.arrival.transition(t)[s]
        keep = float(self.table.values[t + 1, cell] @ row)
        fits = bool(np.all(np.asarray(c) >= np.asarray(ctype.consumes)))
        if not fits:
            return Decision(serve=False, opportunity_cost=0.0, feasible=False)
        spend = float(self.table.values[t + 1, cell - self.offsets[j]] @ row)
        cost = keep - spend
        return Decision(serve=ctype.reward >= cost, opportunity_cost=cost, feasible=True)


def optimal_policy_from_table(table: DpTable, instance: Instance) -> OptimalDpPolicy:
    """Decision policy read off an exact DP table."""
    return OptimalDpPolicy(instance, table)
