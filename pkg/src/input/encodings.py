"""Arrival-process encodings: the high-variance survival model and independent arrivals."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..model.instance import CustomerType, Instance, MarkovArrival

logger = logging.getLogger(__name__)

DISTRIBUTION_TOL = 1e-9
NULL_STATE = "0"


def _check_lambdas(lambdas: np.ndarray) -> None:
    if lambdas.ndim != 2:
        raise ValueError(f"lambdas must be a (T, n) table, got shape {lambdas.shape}")
    if np.any(lambdas < 0):
        raise ValueError("lambdas contain negative probabilities")
    sums = lambdas.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > DISTRIBUTION_TOL)
    if bad.size:
        t = int(bad[0]) + 1
        raise ValueError(f"type distribution for period {t} sums to {sums[bad[0]]:.12g}")


@dataclass(frozen=True, eq=False)
class SurvivalSpec:
    """
    Survival-rate description of a random total demand D.

    Attributes:
        rho: rho_t = P(D >= t+1 | D >= t) for t = 1..T-1
        lambdas: (T, n) table; row t-1 is the type distribution of customer t
    """
    rho: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).reshape(-1)
        lambdas = np.asarray(self.lambdas, dtype=float)
        _check_lambdas(lambdas)
        if rho.shape[0] != lambdas.shape[0] - 1:
            raise ValueError(
                f"{rho.shape[0]} survival rates for a horizon of {lambdas.shape[0]} periods"
            )
        if np.any(rho < 0) or np.any(rho > 1):
            raise ValueError("survival rates must lie in [0, 1]")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def horizon(self) -> int:
        return int(self.lambdas.shape[0])

    @property
    def num_types(self) -> int:
        return int(self.lambdas.shape[1])


def _resource_names(types: Sequence[CustomerType], names: Optional[Sequence[str]]) -> List[str]:
    m = len(types[0].consumes) if types else 0
    return list(names) if names is not None else [f"r{i}" for i in range(m)]


def _capacities(names: Sequence[str], capacities: Optional[Sequence[int]]) -> List[int]:
    return list(capacities) if capacities is not None else [1] * len(names)


def encode_high_variance(
    spec: SurvivalSpec,
    types: Sequence[CustomerType],
    capacities: Optional[Sequence[int]] = None,
    resource_names: Optional[Sequence[str]] = None,
) -> Instance:
    """
    Encode the high-variance demand model as a Markov arrival process.

    States are {0} U [n]; state 0 means no arrival and is absorbing. The null
    type is prepended as type 0 and typed state k maps to type k.

    Args:
        spec: Survival rates and per-period type distributions
        types: The n arriving customer types
        capacities: Resource capacities (defaults to 1 each)
        resource_names: Resource names (defaults to r0, r1, ...)

    Returns:
        Instance with transitions p_t(j, j') = rho_t * lambda_{j',t+1},
        p_t(j, 0) = 1 - rho_t and p_t(0, 0) = 1
    """
    if len(types) != spec.num_types:
        raise ValueError(f"{len(types)} types for a distribution over {spec.num_types}")
    names = _resource_names(types, resource_names)
    m, n, horizon = len(names), spec.num_types, spec.horizon

    all_types = [CustomerType(0, 0.0, (0,) * m)] + [
        CustomerType(k + 1, t.reward, t.consumes) for k, t in enumerate(types)
    ]
    initial = np.concatenate([[0.0], spec.lambdas[0]])
    transitions = np.zeros((horizon - 1, n + 1, n + 1))
    transitions[:, 0, 0] = 1.0
    transitions[:, 1:, 0] = (1.0 - spec.rho)[:, None]
    transitions[:, 1:, 1:] = spec.rho[:, None, None] * spec.lambdas[1:, None, :]

    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple([NULL_STATE] + [str(k) for k in range(1, n + 1)]),
        initial=initial,
        transitions=transitions,
        state_type=tuple(range(n + 1)),
    )
    return Instance(
        resource_names=tuple(names),
        capacities=tuple(_capacities(names, capacities)),
        types=tuple(all_types),
        arrival=arrival,
    )


def encode_independent(
    lambdas: np.ndarray,
    types: Sequence[CustomerType],
    capacities: Optional[Sequence[int]] = None,
    resource_names: Optional[Sequence[str]] = None,
) -> Instance:
    """
    Encode independent arrivals: one state per type with state-independent rows.

    Row t of every transition matrix equals lambda_{., t+1}.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    _check_lambdas(lambdas)
    horizon, n = lambdas.shape
    if len(types) != n:
        raise ValueError(f"{len(types)} types for a distribution over {n}")
    names = _resource_names(types, resource_names)

    transitions = np.repeat(lambdas[1:, None, :], n, axis=1)
    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple(f"j{k}" for k in range(n)),
        initial=lambdas[0],
        transitions=transitions,
        state_type=tuple(range(n)),
    )
    return Instance(
        resource_names=tuple(names),
        capacities=tuple(_capacities(names, capacities)),
        types=tuple(CustomerType(k, t.reward, t.consumes) for k, t in enumerate(types)),
        arrival=arrival,
    )


def recover_survival_spec(instance: Instance, tol: float = 1e-9) -> SurvivalSpec:
    """
    Read the survival rates and type distributions back from a high-variance instance.

    Raises:
        ValueError: If the instance is not in high-variance form (absorbing
            null state 0, every typed state sharing one row per period).
    """
    arrival = instance.arrival
    num_states = arrival.num_states
    if num_states < 2 or not instance.is_null_state(0):
        raise ValueError("high-variance form needs a null state 0 and at least one typed state")
    if any(instance.is_null_state(s) for s in range(1, num_states)):
        raise ValueError("high-variance form allows only state 0 to be null")
    if arrival.initial[0] > tol:
        raise ValueError("high-variance form requires at least one arrival (p_1(0) = 0)")

    horizon, n = arrival.horizon, num_states - 1
    rho = np.zeros(horizon - 1)
    lambdas = np.zeros((horizon, n))
    lambdas[0] = arrival.initial[1:]
    for t in range(1, horizon):
        matrix = arrival.transitions[t - 1]
        if abs(matrix[0, 0] - 1.0) > tol:
            raise ValueError(f"state 0 is not absorbing at period {t}")
        rows = matrix[1:]
        if np.max(np.abs(rows - rows[0])) > tol:
            raise ValueError(f"typed states have different transition rows at period {t}")
        rho[t - 1] = 1.0 - rows[0, 0]
        if rho[t - 1] > tol:
            lambdas[t] = rows[0, 1:] / rho[t - 1]
        else:
            # No arrivals after t; the distribution is never used.
            lambdas[t] = 1.0 / n
    rho = np.clip(rho, 0.0, 1.0)
    lambdas = lambdas / lambdas.sum(axis=1, keepdims=True)
    return SurvivalSpec(rho=rho, lambdas=lambdas)
