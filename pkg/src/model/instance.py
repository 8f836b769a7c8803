"""Core domain types: customer types, the Markov arrival process and instances."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence, Tuple

import numpy as np

if TYPE_CHECKING:
    from ..assortment.choice import ChoiceModel

logger = logging.getLogger(__name__)

# Rows whose sum is within RENORMALIZE_TOL of one are rescaled; larger
# deviations are left untouched and reported by validation. Rows already within
# EXACT_TOL are kept as-is so that rescaling is idempotent.
RENORMALIZE_TOL = 1e-9
EXACT_TOL = 1e-12


def _frozen_array(values: Any, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _renormalize(array: np.ndarray) -> np.ndarray:
    sums = array.sum(axis=-1, keepdims=True)
    deviation = np.abs(sums - 1.0)
    close = (deviation <= RENORMALIZE_TOL) & (deviation > EXACT_TOL)
    safe = np.where(close & (sums > 0), sums, 1.0)
    if close.any():
        logger.warning(
            "Renormalized %d probability rows within %g of one",
            int(close.sum()),
            RENORMALIZE_TOL,
        )
    return array / safe


@dataclass(frozen=True)
class CustomerType:
    """A customer type j with reward r_j and binary consumption vector a_j."""
    id: int
    reward: float
    consumes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "consumes", tuple(int(a) for a in self.consumes))

    @property
    def is_null(self) -> bool:
        """True for the zero-reward, zero-consumption no-op type."""
        return self.reward == 0.0 and not any(self.consumes)

    @property
    def size(self) -> int:
        """Number of resources consumed."""
        return sum(self.consumes)


@dataclass(frozen=True, eq=False)
class MarkovArrival:
    """
    Time-inhomogeneous Markov chain driving customer arrivals.

    ``transitions[t-1]`` is the matrix p_t(s, s') moving from period t to t+1,
    for t = 1..T-1.
    """
    horizon: int
    states: Tuple[str, ...]
    initial: np.ndarray
    transitions: np.ndarray
    state_type: Tuple[int, ...]

    def __post_init__(self):
        num_states = len(self.states)
        initial = _renormalize(np.asarray(self.initial, dtype=float))
        transitions = np.asarray(self.transitions, dtype=float)
        if transitions.size == 0:
            transitions = transitions.reshape(0, num_states, num_states)
        transitions = _renormalize(transitions)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "initial", _frozen_array(initial))
        object.__setattr__(self, "transitions", _frozen_array(transitions))
        object.__setattr__(self, "state_type", tuple(int(j) for j in self.state_type))

    @property
    def num_states(self) -> int:
        return len(self.states)

    def transition(self, t: int) -> np.ndarray:
        """Matrix p_t for 1 <= t <= T; the zero matrix at t = T."""
        if not 1 <= t <= self.horizon:
            raise IndexError(f"period {t} outside 1..{self.horizon}")
        if t == self.horizon:
            return np.zeros((self.num_states, self.num_states))
        return self.transitions[t - 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarkovArrival):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.states == other.states
            and self.state_type == other.state_type
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.transitions, other.transitions)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Instance:
    """A network revenue management instance."""
    resource_names: Tuple[str, ...]
    capacities: Tuple[int, ...]
    types: Tuple[CustomerType, ...]
    arrival: MarkovArrival
    choice: Optional["ChoiceModel"] = None
    _cache: Dict[str, np.ndarray] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, "resource_names", tuple(str(r) for r in self.resource_names))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        object.__setattr__(self, "types", tuple(self.types))

    @property
    def num_resources(self) -> int:
        return len(self.resource_names)

    @property
    def num_types(self) -> int:
        return len(self.types)

    @property
    def num_states(self) -> int:
        return self.arrival.num_states

    @property
    def horizon(self) -> int:
        return self.arrival.horizon

    @property
    def consumption(self) -> np.ndarray:
        """Matrix A with A[i, j] = a_{i,j}, shape (m, n)."""
        if "consumption" not in self._cache:
            matrix = np.zeros((self.num_resources, self.num_types))
            for j, ctype in enumerate(self.types):
                matrix[: len(ctype.consumes), j] = ctype.consumes[: self.num_resources]
            self._cache["consumption"] = _frozen_array(matrix)
        return self._cache["consumption"]

    @property
    def rewards(self) -> np.ndarray:
        if "rewards" not in self._cache:
            self._cache["rewards"] = _frozen_array([t.reward for t in self.types])
        return self._cache["rewards"]

    @property
    def capacity_vector(self) -> np.ndarray:
        return np.array(self.capacities, dtype=np.int64)

    @property
    def inverse_capacity(self) -> np.ndarray:
        """1/C_i, with zero for zero-capacity resources."""
        caps = np.array(self.capacities, dtype=float)
        return np.divide(1.0, caps, out=np.zeros_like(caps), where=caps > 0)

    @property
    def state_types(self) -> np.ndarray:
        return np.array(self.arrival.state_type, dtype=np.int64)

    def type_of(self, state: int) -> CustomerType:
        return self.types[self.arrival.state_type[state]]

    def is_null_state(self, state: int) -> bool:
        return self.type_of(state).is_null

    def null_type_index(self) -> Optional[int]:
        """Index of the first null type, if any."""
        for j, ctype in enumerate(self.types):
            if ctype.is_null:
                return j
        return None

    def with_capacities(self, capacities: Sequence[int]) -> "Instance":
        return dataclasses.replace(self, capacities=tuple(capacities))

    def with_choice(self, choice: Optional["ChoiceModel"]) -> "Instance":
        return dataclasses.replace(self, choice=choice)

    def without_idle_resources(self) -> "Instance":
        """Drop zero-capacity resources that no type consumes."""
        used = self.consumption.sum(axis=1) > 0
        keep = [i for i in range(self.num_resources) if self.capacities[i] > 0 or used[i]]
        if len(keep) == self.num_resources:
            return self
        logger.info("Stripping %d idle zero-capacity resources", self.num_resources - len(keep))
        types = tuple(
            CustomerType(t.id, t.reward, tuple(t.consumes[i] for i in keep)) for t in self.types
        )
        return dataclasses.replace(
            self,
            resource_names=tuple(self.resource_names[i] for i in keep),
            capacities=tuple(self.capacities[i] for i in keep),
            types=types,
        )

    def summary(self) -> Dict[str, Any]:
        """Headline dimensions of the instance."""
        return {
            "T": self.horizon,
            "m": self.num_resources,
            "n": self.num_types,
            "states": self.num_states,
            "L": bundle_size_L(self),
            "capacities": list(self.capacities),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.resource_names == other.resource_names
            and self.capacities == other.capacities
            and self.types == other.types
            and self.arrival == other.arrival
            and self.choice == other.choice
        )

    __hash__ = None  # type: ignore[assignment]


def bundle_size_L(instance: Instance) -> int:
    """L = max_j sum_i a_{i,j}."""
    if instance.num_types == 0:
        return 0
    return int(max(t.size for t in instance.types))


def state_marginals(arrival: MarkovArrival) -> np.ndarray:
    """
    Forward Chapman-Kolmogorov push of the initial distribution.

    Returns:
        Array of shape (T+1, |S|); row t holds P(s_t = s) for t = 1..T.
        Row 0 is unused.
    """
    marginals = np.zeros((arrival.horizon + 1, arrival.num_states))
    marginals[1] = arrival.initial
    for t in range(1, arrival.horizon):
        marginals[t + 1] = marginals[t] @ arrival.transitions[t - 1]
    return marginals


def feasible(c: Sequence[float], a: Sequence[float]) -> bool:
    """True iff c_i >= a_i for every resource."""
    c_arr = np.asarray(c)
    a_arr = np.asarray(a)
    if c_arr.shape != a_arr.shape:
        raise ValueError(f"length mismatch: capacity {c_arr.shape} vs consumption {a_arr.shape}")
    return bool(np.all(c_arr >= a_arr))
