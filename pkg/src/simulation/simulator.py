"""Seeded trajectory sampling, policy execution and Monte-Carlo aggregation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..assortment.choice import ChoiceModel
from ..model.instance import Instance, MarkovArrival
from ..utils.errors import PolicyError
from ..utils.seeding import GENERATOR_ID, make_rng, replication_seed

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    A sampled arrival path.

    ``states[t-1]`` is s_t. ``purchase_draws[t-1]`` is the uniform used to
    pick the purchased product when an assortment is offered at period t.
    """
    states: Tuple[int, ...]
    seed: int
    purchase_draws: np.ndarray

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class TraceStep:
    t: int
    state: int
    offered: Tuple[int, ...]
    served: Optional[int]
    reward: float
    capacity: Tuple[int, ...]


def _inverse_cdf(probabilities: np.ndarray, draw: float) -> int:
    """Index k with cumsum[k-1] <= draw < cumsum[k], clipped to the last positive entry."""
    cdf = np.cumsum(probabilities)
    k = int(np.searchsorted(cdf, draw, side="right"))
    if k >= probabilities.shape[0]:
        # Rounding left the cumulative sum just below the draw.
        k = int(np.flatnonzero(probabilities > 0)[-1])
    return k


def sample_trajectory(arrival: MarkovArrival, seed: int) -> Trajectory:
    """
    Draw s_1 ~ p_1 and s_{t+1} ~ p_t(s_t, .) by inverse CDF, one uniform per step.

    The path and the purchase draws are a function of ``seed`` alone.
    """
    rng = make_rng(seed)
    step_draws = rng.random(arrival.horizon)
    purchase_draws = rng.random(arrival.horizon)
    states = [_inverse_cdf(arrival.initial, step_draws[0])]
    for t in range(1, arrival.horizon):
        row = arrival.transitions[t - 1, states[-1]]
        states.append(_inverse_cdf(row, step_draws[t]))
    purchase_draws.setflags(write=False)
    return Trajectory(tuple(states), seed, purchase_draws)


def run_policy(
    instance: Instance,
    policy,
    trajectory: Trajectory,
    choice: Optional[ChoiceModel] = None,
) -> Tuple[float, List[TraceStep]]:
    """
    Execute a policy along a trajectory with capacity accounting.

    Returns:
        (total reward, per-period trace)

    Raises:
        PolicyError: If the policy serves or offers a product that does not fit
    """
    A = instance.consumption.astype(np.int64)
    capacity = np.array(instance.capacities, dtype=np.int64)
    total = 0.0
    trace: List[TraceStep] = []
    for t, s in enumerate(trajectory.states, start=1):
        c = tuple(int(x) for x in capacity)
        served: Optional[int] = None
        offered: Tuple[int, ...] = ()
        if choice is None:
            decision = policy(t, s, c)
            if decision.serve:
                served = instance.arrival.state_type[s]
                offered = (served,)
        else:
            offered = choice.canonical(policy(t, s, c))
            for j in offered:
                if np.any(capacity < A[:, j]):
                    raise PolicyError(f"offered product {j} does not fit capacity {c} at t={t}")
            probs = choice.phi(offered, s)[list(offered)]
            pick = offered[_inverse_cdf(probs, trajectory.purchase_draws[t - 1])]
            if pick != choice.null_product:
                served = pick

        reward = 0.0
        if served is not None:
            if np.any(capacity < A[:, served]):
                raise PolicyError(f"policy served type {served} without capacity {c} at t={t}")
            capacity = capacity - A[:, served]
            reward = instance.rewards[served]
            total += reward
        remaining = tuple(int(x) for x in capacity)
        trace.append(TraceStep(t, s, offered, served, float(reward), remaining))
    return total, trace


@dataclass
class SimResult:
    """Monte-Carlo estimate over K independent replications."""
    rewards: np.ndarray
    seeds: np.ndarray
    base_seed: int
    policy: str = ""
    generator: str = GENERATOR_ID
    mean: float = field(init=False)
    stderr: float = field(init=False)
    ci: Tuple[float, float] = field(init=False)

    def __post_init__(self):
        reps = self.rewards.shape[0]
        self.mean = float(np.sum(self.rewards) / reps)
        self.stderr = float(np.std(self.rewards, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        self.ci = (self.mean - Z_95 * self.stderr, self.mean + Z_95 * self.stderr)

    @property
    def reps(self) -> int:
        return int(self.rewards.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "policy": self.policy,
            "mean": self.mean,
            "stderr": self.stderr,
            "ci95": list(self.ci),
            "reps": self.reps,
            "base_seed": self.base_seed,
            "generator": self.generator,
        }

    def write_trace_csv(self, path: Union[str, Path]) -> Path:
        """Per-replication seeds and rewards as CSV."""
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame({
            "replication": np.arange(self.reps),
            "seed": [str(int(s)) for s in self.seeds],
            "reward": self.rewards,
        })
        frame.to_csv(output_path, index=False, float_format="%.6g")
        return output_path


def monte_carlo(
    instance: Instance,
    policy,
    reps: int,
    base_seed: int,
    choice: Optional[ChoiceModel] = None,
    progress: bool = False,
) -> SimResult:
    """
    Average a policy's reward over ``reps`` replications.

    Replication r samples its trajectory with seed splitmix64(base_seed XOR r),
    so results do not depend on execution order.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    name = getattr(policy, "name", getattr(policy, "__name__", "policy"))
    seeds = np.array([replication_seed(base_seed, r) for r in range(reps)], dtype=np.uint64)
    rewards = np.empty(reps)
    iterator = tqdm(range(reps), desc=f"simulate {name}", disable=not progress, leave=False)
    for r in iterator:
        trajectory = sample_trajectory(instance.arrival, int(seeds[r]))
        rewards[r], _ = run_policy(instance, policy, trajectory, choice)
    result = SimResult(rewards=rewards, seeds=seeds, base_seed=base_seed, policy=name)
    logger.info(
        "Monte-Carlo %s: mean %.6g +/- %.3g over %d replications",
        name,
        result.mean,
        result.stderr,
        reps,
    )
    return result
