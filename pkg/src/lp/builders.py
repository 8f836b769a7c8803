"""Upper-bound LPs: the linear ADP LP, its assortment variant and the fluid LP."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..assortment.choice import DEFAULT_MAX_FAMILY, ChoiceModel
from ..input.encodings import recover_survival_spec
from ..model.instance import Instance, state_marginals
from ..utils.errors import InvalidInstanceError
from .program import LinearProgram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdpIndex:
    """
    Column indices of the ADP LP variables.

    ``theta[t, s]``, ``beta[t, i, s]``, ``w[t, i, s]`` and ``u[t, s]`` (or
    ``u[t, s, j]`` for the assortment LP, -1 for the null product) for
    t = 1..T; slot 0 is unused.
    """
    horizon: int
    theta: np.ndarray
    beta: np.ndarray
    u: np.ndarray
    w: np.ndarray


def _block(lp: LinearProgram, prefix: str, shape: Tuple[int, ...], cost=0.0) -> np.ndarray:
    """Add one variable per entry of ``shape`` (leading axis is t = 1..T)."""
    names = [
        f"{prefix}_" + "_".join(str(k + 1 if axis == 0 else k) for axis, k in enumerate(idx))
        for idx in np.ndindex(*shape)
    ]
    if np.ndim(cost):
        cost = np.broadcast_to(cost, shape).ravel()
    cols = lp.add_variables(names, cost=cost)
    table = np.full((shape[0] + 1,) + shape[1:], -1, dtype=np.int64)
    table[1:] = cols.reshape(shape)
    return table


def _add_weight_variables(lp: LinearProgram, instance: Instance):
    horizon, m, num_states = instance.horizon, instance.num_resources, instance.num_states
    caps = np.array(instance.capacities, dtype=float)
    p1 = instance.arrival.initial

    theta_cost = np.zeros((horizon, num_states))
    theta_cost[0] = p1
    beta_cost = np.zeros((horizon, m, num_states))
    beta_cost[0] = caps[:, None] * p1[None, :]

    theta = _block(lp, "theta", (horizon, num_states), theta_cost)
    beta = _block(lp, "beta", (horizon, m, num_states), beta_cost)
    w = _block(lp, "w", (horizon, m, num_states))
    return theta, beta, w


def _add_capacity_rows(lp: LinearProgram, instance: Instance, beta: np.ndarray, w: np.ndarray):
    """w_{t,i}(s) - sum_s' p_t(s,s') beta^{t+1}_i(s') + beta^t_i(s) >= 0."""
    horizon, m, num_states = instance.horizon, instance.num_resources, instance.num_states
    for t in range(1, horizon + 1):
        names = [f"cap_{t}_{i}_{s}" for i in range(m) for s in range(num_states)]
        rows = lp.add_rows(names, ">=", 0.0).reshape(m, num_states)
        lp.set_coefficients(rows, w[t], 1.0)
        lp.set_coefficients(rows, beta[t], 1.0)
        if t < horizon:
            P = instance.arrival.transition(t)
            lp.set_coefficients(
                rows[:, :, None], beta[t + 1][:, None, :], -P[None, :, :]
            )


def _add_reward_rows(
    lp: LinearProgram, instance: Instance, beta: np.ndarray, u: np.ndarray, products: np.ndarray
):
    """u_{t,j}(s) + sum_s' p_t(s,s') sum_i a_{i,j} beta^{t+1}_i(s') >= r_j for each (t, s, j)."""
    horizon, num_states = instance.horizon, instance.num_states
    A = instance.consumption
    rewards = instance.rewards
    for t in range(1, horizon + 1):
        # products[s] lists the product index per reward row of state s
        names = [f"rew_{t}_{s}_{j}" for s in range(num_states) for j in products[s]]
        if not names:
            continue
        rhs = np.concatenate([rewards[products[s]] for s in range(num_states)])
        rows = lp.add_rows(names, ">=", rhs)
        state_of_row = np.concatenate(
            [np.full(len(products[s]), s) for s in range(num_states)]
        ).astype(np.int64)
        product_of_row = np.concatenate([products[s] for s in range(num_states)]).astype(np.int64)
        lp.set_coefficients(rows, u[t][state_of_row, product_of_row], 1.0)
        if t < horizon:
            P = instance.arrival.transition(t)
            # (rows, m, S'): P[s, s'] * a_{i, j}
            values = P[state_of_row][:, None, :] * A[:, product_of_row].T[:, :, None]
            lp.set_coefficients(rows[:, None, None], beta[t + 1][None, :, :], values)


def build_adp_lp(instance: Instance) -> Tuple[LinearProgram, AdpIndex]:
    """
    Build the linear ADP upper-bound LP with epigraph variables.

    Minimizes sum_s p_1(s)(theta^1(s) + sum_i C_i beta^1_i(s)) subject to,
    for every (t, s), theta^t(s) - sum_s' p_t(s,s') theta^{t+1}(s')
    >= u_t(s) + sum_i C_i w_{t,i}(s) with u and w bounding the two positive
    parts from above. Terminal weights are fixed at zero.
    """
    horizon, num_states = instance.horizon, instance.num_states
    lp = LinearProgram("min", name="adp_lp")
    theta, beta, w = _add_weight_variables(lp, instance)
    u = _block(lp, "u", (horizon, num_states))
    caps = np.array(instance.capacities, dtype=float)

    for t in range(1, horizon + 1):
        rows = lp.add_rows([f"main_{t}_{s}" for s in range(num_states)], ">=", 0.0)
        lp.set_coefficients(rows, theta[t], 1.0)
        lp.set_coefficients(rows, u[t], -1.0)
        lp.set_coefficients(rows[None, :], w[t], -caps[:, None])
        if t < horizon:
            P = instance.arrival.transition(t)
            lp.set_coefficients(rows[:, None], theta[t + 1][None, :], -P)

    # Reward rows, one per state, for the arriving type j(s).
    state_types = instance.state_types
    u_by_product = np.full((horizon + 1, num_states, instance.num_types), -1, dtype=np.int64)
    for s in range(num_states):
        u_by_product[:, s, state_types[s]] = u[:, s]
    _add_reward_rows(
        lp, instance, beta, u_by_product, [np.array([state_types[s]]) for s in range(num_states)]
    )
    _add_capacity_rows(lp, instance, beta, w)

    logger.info("Built ADP LP: %d variables, %d rows", lp.num_variables, lp.num_rows)
    return lp, AdpIndex(horizon, theta, beta, u, w)


def build_assort_adp_lp(
    instance: Instance, choice: Optional[ChoiceModel] = None, max_family: int = DEFAULT_MAX_FAMILY
) -> Tuple[LinearProgram, AdpIndex]:
    """
    Build the assortment ADP LP: one main row per (t, s, A in F).

    The reward bracket of each non-null product gets its own epigraph
    variable u_{t,j}(s), weighted by phi_j(A, s) in the main rows.

    Raises:
        FamilyTooLargeError: If F exceeds ``max_family``
    """
    choice = choice or instance.choice
    if choice is None:
        raise InvalidInstanceError("assortment LP needs a choice model")
    family = choice.assortments(max_family)
    horizon, num_states, n = instance.horizon, instance.num_states, instance.num_types
    products = np.array(choice.products, dtype=np.int64)
    caps = np.array(instance.capacities, dtype=float)

    lp = LinearProgram("min", name="assort_adp_lp")
    theta, beta, w = _add_weight_variables(lp, instance)
    u = np.full((horizon + 1, num_states, n), -1, dtype=np.int64)
    if products.size:
        u_cols = _block(lp, "u", (horizon, num_states, products.size))
        u[:, :, products] = u_cols

    phi = np.stack([
        np.stack([choice.phi(a, s) for s in range(num_states)]) for a in family
    ])  # (|F|, S, n)

    for t in range(1, horizon + 1):
        names = [f"main_{t}_{s}_{k}" for s in range(num_states) for k in range(len(family))]
        rows = lp.add_rows(names, ">=", 0.0).reshape(num_states, len(family))
        lp.set_coefficients(rows, theta[t][:, None], 1.0)
        lp.set_coefficients(rows[:, :, None], w[t].T[:, None, :], -caps[None, None, :])
        if products.size:
            weights = -np.transpose(phi[:, :, products], (1, 0, 2))  # (S, |F|, products)
            lp.set_coefficients(rows[:, :, None], u[t][:, None, products], weights)
        if t < horizon:
            P = instance.arrival.transition(t)
            lp.set_coefficients(rows[:, :, None], theta[t + 1][None, None, :], -P[:, None, :])

    _add_reward_rows(lp, instance, beta, u, [products for _ in range(num_states)])
    _add_capacity_rows(lp, instance, beta, w)

    logger.info(
        "Built assortment ADP LP over %d assortments: %d variables, %d rows",
        len(family), lp.num_variables, lp.num_rows,
    )
    return lp, AdpIndex(horizon, theta, beta, u, w)


def build_fluid_uf_lp(instance: Instance) -> LinearProgram:
    """
    Build the fluid upper bound for a high-variance instance.

    Maximizes sum_t sum_j P(s_t > 0) r_j x_{j,t} subject to
    sum_t sum_{j uses i} x_{j,t} <= C_i and 0 <= x_{j,t} <= lambda_{j,t}.

    Raises:
        InvalidInstanceError: If the instance is not in high-variance form
    """
    try:
        spec = recover_survival_spec(instance)
    except ValueError as e:
        raise InvalidInstanceError(f"instance is not in high-variance form: {e}") from e

    horizon, n = spec.horizon, spec.num_types
    arrived = 1.0 - state_marginals(instance.arrival)[1:, 0]
    state_types = instance.state_types[1:]
    rewards = instance.rewards[state_types]
    usage = instance.consumption[:, state_types]  # (m, n)

    lp = LinearProgram("max", name="fluid_uf_lp")
    names = [f"x_{k + 1}_{t}" for t in range(1, horizon + 1) for k in range(n)]
    cost = (arrived[:, None] * rewards[None, :]).ravel()
    cols = lp.add_variables(names, cost=cost, lower=0.0, upper=spec.lambdas.ravel())
    cols = cols.reshape(horizon, n)

    capacities = np.array(instance.capacities, dtype=float)
    rows = lp.add_rows(list(instance.resource_names), "<=", capacities)
    lp.set_coefficients(rows[:, None, None], cols[None, :, :], usage[:, None, :])
    logger.info("Built fluid LP: %d variables, %d rows", lp.num_variables, lp.num_rows)
    return lp
