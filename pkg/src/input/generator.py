"""Instance generators: the hub-and-spoke airline network and random small instances."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import norm

from ..model.instance import CustomerType, Instance, MarkovArrival, state_marginals
from .encodings import NULL_STATE, SurvivalSpec, encode_high_variance

logger = logging.getLogger(__name__)

HORIZON_QUANTILE = 0.9
NUM_SPOKES = 4
HUB = "H"

# Leg capacity as a multiple of expected leg demand. Calibrated so the mean
# bid-price gap over the eight airline configurations lands near 6.6%.
DEFAULT_CAPACITY_KAPPA = 1.5

# Horizons printed in the published experiment tables, keyed by (mu, sigma).
PUBLISHED_HORIZONS = {
    (30, 15): 56,
    (40, 15): 66,
    (50, 15): 76,
    (60, 15): 86,
    (40, 10): 53,
    (40, 25): 79,
    (40, 30): 92,
}


@dataclass(frozen=True)
class AirlineConfig:
    """Parameters of one airline experiment configuration."""
    mu: float
    sigma: float
    seed: int = 0
    capacity_kappa: float = DEFAULT_CAPACITY_KAPPA
    horizon_override: Optional[int] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.capacity_kappa > 0:
            raise ValueError(f"capacity_kappa must be positive, got {self.capacity_kappa}")
        if self.horizon_override is not None and self.horizon_override < 1:
            raise ValueError(f"horizon_override must be >= 1, got {self.horizon_override}")


@dataclass(frozen=True)
class RandomBounds:
    """Upper bounds for :func:`gen_random_small`."""
    max_resources: int = 3
    max_types: int = 4
    max_horizon: int = 6
    max_states: int = 5
    max_capacity: int = 3
    max_reward: float = 10.0

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "RandomBounds":
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def quantile_horizon(mu: float, sigma: float, quantile: float = HORIZON_QUANTILE) -> int:
    """Smallest integer T >= 1 with P(D <= T) >= quantile for D ~ Normal(mu, sigma)."""
    horizon = max(1, math.ceil(mu + sigma * norm.ppf(quantile)))
    while horizon > 1 and norm.cdf((horizon - 1 - mu) / sigma) >= quantile:
        horizon -= 1
    while norm.cdf((horizon - mu) / sigma) < quantile:
        horizon += 1
    return horizon


def survival_rates(mu: float, sigma: float, horizon: int) -> np.ndarray:
    """rho_t = S(t+1)/S(t) for t = 1..T-1 with S(t) = 1 - Phi((t - mu)/sigma)."""
    periods = np.arange(1, horizon + 1, dtype=float)
    survival = norm.sf((periods - mu) / sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(survival[:-1] > 0, survival[1:] / survival[:-1], 0.0)
    return np.clip(rho, 0.0, 1.0)


def fare_split(horizon: int) -> np.ndarray:
    """(T, 2) table of (low, high) fare probabilities; high fare is 1/2 + t/(2T)."""
    periods = np.arange(1, horizon + 1, dtype=float)
    high = 0.5 + periods / (2.0 * horizon)
    return np.stack([1.0 - high, high], axis=1)


def airline_network() -> Tuple[List[str], List[Tuple[str, str]], List[Tuple[int, ...]]]:
    """
    Build the one-hub, four-spoke network.

    Returns:
        Tuple of (leg names, origin-destination pairs, leg usage per pair)
    """
    locations = [HUB] + [f"S{k}" for k in range(1, NUM_SPOKES + 1)]
    legs: List[Tuple[str, str]] = []
    for spoke in locations[1:]:
        legs.append((spoke, HUB))
        legs.append((HUB, spoke))
    leg_index = {leg: i for i, leg in enumerate(legs)}

    od_pairs = list(permutations(locations, 2))
    usage = []
    for origin, destination in od_pairs:
        row = [0] * len(legs)
        if HUB in (origin, destination):
            row[leg_index[(origin, destination)]] = 1
        else:
            row[leg_index[(origin, HUB)]] = 1
            row[leg_index[(HUB, destination)]] = 1
        usage.append(tuple(row))
    return [f"{a}-{b}" for a, b in legs], od_pairs, usage


def _normalize_rows(weights: np.ndarray) -> np.ndarray:
    return weights / weights.sum(axis=-1, keepdims=True)


def scaled_capacities(instance: Instance, kappa: float) -> List[int]:
    """C_i = max(1, ceil(kappa * expected arrivals consuming resource i))."""
    marginals = state_marginals(instance.arrival)[1:]
    state_usage = instance.consumption[:, instance.state_types]
    expected = state_usage @ marginals.sum(axis=0)
    return [max(1, int(math.ceil(kappa * e - 1e-9))) for e in expected]


def gen_airline(setting: str, config: AirlineConfig) -> Instance:
    """
    Generate the hub-and-spoke airline instance for Setting A or B.

    Args:
        setting: "A" (period-wise OD distribution) or "B" (OD distribution
            conditioned on the previous customer's OD pair)
        config: Demand parameters, seed and capacity scaling

    Returns:
        Instance with 41 states, 41 types (null plus 40 fare classes) and 8 legs
    """
    setting = setting.upper()
    if setting not in ("A", "B"):
        raise ValueError(f"unknown airline setting {setting!r}")

    horizon = quantile_horizon(config.mu, config.sigma)
    published = PUBLISHED_HORIZONS.get((config.mu, config.sigma))
    if published is not None and published != horizon and config.horizon_override is None:
        logger.warning(
            "Horizon rule gives T=%d for (mu=%g, sigma=%g); published table uses %d",
            horizon, config.mu, config.sigma, published,
        )
    if config.horizon_override is not None:
        horizon = config.horizon_override

    rng = np.random.default_rng(config.seed)
    leg_names, od_pairs, usage = airline_network()
    num_od = len(od_pairs)
    low_rewards = rng.uniform(0.0, 1.0, size=num_od)

    types = []
    for od in range(num_od):
        types.append(CustomerType(len(types) + 1, low_rewards[od], usage[od]))
        types.append(CustomerType(len(types) + 1, 2.0 * low_rewards[od], usage[od]))

    rho = survival_rates(config.mu, config.sigma, horizon)
    fares = fare_split(horizon)
    od_probs = _normalize_rows(rng.uniform(0.0, 1.0, size=(horizon, num_od)))
    # Type distribution per period: OD probability times fare split, interleaved low/high.
    lambdas = (od_probs[:, :, None] * fares[:, None, :]).reshape(horizon, 2 * num_od)

    if setting == "A":
        instance = encode_high_variance(
            SurvivalSpec(rho=rho, lambdas=lambdas), types, resource_names=leg_names
        )
    else:
        conditional = _normalize_rows(rng.uniform(0.0, 1.0, size=(horizon, num_od, num_od)))
        instance = _setting_b_instance(types, leg_names, rho, fares, lambdas[0], conditional)

    capacities = scaled_capacities(instance, config.capacity_kappa)
    instance = instance.with_capacities(capacities)
    logger.info(
        "Generated airline setting %s (mu=%g, sigma=%g, seed=%d): T=%d, capacities=%s",
        setting, config.mu, config.sigma, config.seed, horizon, capacities,
    )
    return instance


def _setting_b_instance(
    types: List[CustomerType],
    leg_names: List[str],
    rho: np.ndarray,
    fares: np.ndarray,
    first_period: np.ndarray,
    conditional: np.ndarray,
) -> Instance:
    """Setting B: transition rows depend on the current customer's OD pair."""
    horizon, num_od = conditional.shape[0], conditional.shape[1]
    n = 2 * num_od
    # Next-type distribution given the current OD pair, for periods 2..T.
    next_types = (conditional[1:, :, :, None] * fares[1:, None, None, :]).reshape(
        horizon - 1, num_od, n
    )
    transitions = np.zeros((horizon - 1, n + 1, n + 1))
    transitions[:, 0, 0] = 1.0
    transitions[:, 1:, 0] = (1.0 - rho)[:, None]
    # Typed state k belongs to OD pair (k-1)//2.
    od_of_state = np.repeat(np.arange(num_od), 2)
    transitions[:, 1:, 1:] = rho[:, None, None] * next_types[:, od_of_state, :]

    m = len(leg_names)
    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple([NULL_STATE] + [str(k) for k in range(1, n + 1)]),
        initial=np.concatenate([[0.0], first_period]),
        transitions=transitions,
        state_type=tuple(range(n + 1)),
    )
    return Instance(
        resource_names=tuple(leg_names),
        capacities=(1,) * m,
        types=tuple([CustomerType(0, 0.0, (0,) * m)] + types),
        arrival=arrival,
    )


def gen_random_small(seed: int, bounds: Optional[RandomBounds] = None) -> Instance:
    """
    Draw a small random instance for property checks.

    Every non-null type consumes at least one resource and every capacity is
    at least 1, so the result always validates. A null type is included with
    probability one half.
    """
    bounds = bounds or RandomBounds()
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, bounds.max_resources + 1))
    n = int(rng.integers(1, bounds.max_types + 1))
    horizon = int(rng.integers(1, bounds.max_horizon + 1))
    num_states = int(rng.integers(1, bounds.max_states + 1))
    capacities = [int(c) for c in rng.integers(1, bounds.max_capacity + 1, size=m)]

    types = []
    for j in range(n):
        consumes = rng.integers(0, 2, size=m)
        if not consumes.any():
            consumes[rng.integers(0, m)] = 1
        reward = float(rng.uniform(0.0, bounds.max_reward))
        types.append(CustomerType(j, reward, tuple(int(a) for a in consumes)))
    if rng.random() < 0.5:
        types.append(CustomerType(len(types), 0.0, (0,) * m))

    state_type = tuple(int(j) for j in rng.integers(0, len(types), size=num_states))
    initial = rng.dirichlet(np.ones(num_states))
    if horizon > 1:
        transitions = rng.dirichlet(np.ones(num_states), size=(horizon - 1, num_states))
    else:
        transitions = np.zeros((0, num_states, num_states))
    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple(f"s{k}" for k in range(num_states)),
        initial=initial,
        transitions=transitions.reshape(horizon - 1, num_states, num_states),
        state_type=state_type,
    )
    return Instance(
        resource_names=tuple(f"r{i}" for i in range(m)),
        capacities=tuple(capacities),
        types=tuple(types),
        arrival=arrival,
    )


def gen_random_high_variance(seed: int, bounds: Optional[RandomBounds] = None) -> Instance:
    """
    Draw a small random instance from the high-variance demand model.

    States are the null state plus one per type, so ``max_types + 1`` states at
    most; ``max_states`` does not apply.
    """
    bounds = bounds or RandomBounds()
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, bounds.max_resources + 1))
    n = int(rng.integers(1, bounds.max_types + 1))
    horizon = int(rng.integers(1, bounds.max_horizon + 1))
    capacities = [int(c) for c in rng.integers(1, bounds.max_capacity + 1, size=m)]

    types = []
    for j in range(n):
        consumes = rng.integers(0, 2, size=m)
        if not consumes.any():
            consumes[rng.integers(0, m)] = 1
        reward = float(rng.uniform(0.0, bounds.max_reward))
        types.append(CustomerType(j, reward, tuple(int(a) for a in consumes)))

    spec = SurvivalSpec(
        rho=rng.uniform(0.2, 1.0, size=horizon - 1),
        lambdas=rng.dirichlet(np.ones(n), size=horizon),
    )
    return encode_high_variance(spec, types, capacities=capacities)


@dataclass(frozen=True)
class AssortmentBounds:
    """Upper bounds for :func:`gen_random_assortment`."""
    max_products: int = 3
    max_family: int = 8
    max_resources: int = 2
    max_horizon: int = 4
    max_states: int = 3
    max_capacity: int = 2
    max_reward: float = 10.0

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "AssortmentBounds":
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def _downward_closure(assortments: List[Tuple[int, ...]], null: int) -> List[Tuple[int, ...]]:
    closed = {(null,)}
    for assortment in assortments:
        products = [j for j in assortment if j != null]
        for mask in range(1 << len(products)):
            subset = [products[k] for k in range(len(products)) if mask >> k & 1]
            closed.add(tuple(sorted([null] + subset)))
    return sorted(closed, key=lambda a: (len(a), a))


def gen_random_assortment(seed: int, bounds: Optional[AssortmentBounds] = None) -> Instance:
    """
    Draw a small instance carrying an explicit, substitutable choice model.

    Choice probabilities are tabulated from random state-dependent MNL
    weights over a random downward-closed family, so the substitutability
    check always passes. Type 0 is the null product.
    """
    from ..assortment.choice import ChoiceModel, mnl_choice

    bounds = bounds or AssortmentBounds()
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, bounds.max_resources + 1))
    n_products = int(rng.integers(1, bounds.max_products + 1))
    horizon = int(rng.integers(1, bounds.max_horizon + 1))
    num_states = int(rng.integers(1, bounds.max_states + 1))
    capacities = [int(c) for c in rng.integers(1, bounds.max_capacity + 1, size=m)]

    types = [CustomerType(0, 0.0, (0,) * m)]
    for j in range(1, n_products + 1):
        consumes = rng.integers(0, 2, size=m)
        if not consumes.any():
            consumes[rng.integers(0, m)] = 1
        reward = float(rng.uniform(0.0, bounds.max_reward))
        types.append(CustomerType(j, reward, tuple(int(a) for a in consumes)))

    picks = int(rng.integers(1, 2 ** n_products + 1))
    seeds = [
        tuple(sorted([0] + [j for j in range(1, n_products + 1) if rng.random() < 0.5]))
        for _ in range(picks)
    ]
    family = _downward_closure(seeds, 0)
    while len(family) > bounds.max_family:
        family = family[:-1]

    weights = rng.uniform(0.1, 1.0, size=(num_states, n_products + 1))
    model = mnl_choice(weights, null_product=0)
    table = np.stack([np.stack([model.phi(a, s) for s in range(num_states)]) for a in family])
    choice = ChoiceModel(null_product=0, family=tuple(family), table=table)

    initial = rng.dirichlet(np.ones(num_states))
    if horizon > 1:
        transitions = rng.dirichlet(np.ones(num_states), size=(horizon - 1, num_states))
    else:
        transitions = np.zeros((0, num_states, num_states))
    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple(f"s{k}" for k in range(num_states)),
        initial=initial,
        transitions=transitions,
        # The arriving type is irrelevant under a choice model; states map to the null type.
        state_type=(0,) * num_states,
    )
    return Instance(
        resource_names=tuple(f"r{i}" for i in range(m)),
        capacities=tuple(capacities),
        types=tuple(types),
        arrival=arrival,
        choice=choice,
    )
