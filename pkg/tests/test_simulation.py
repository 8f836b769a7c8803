"""Unit tests for trajectory sampling and Monte-Carlo estimation."""

import numpy as np
import pandas as pd
import pytest

from src.agents.base import Decision
from src.agents.bid_price import BidPricePolicy
from src.agents.greedy import GreedyPolicy
from src.assortment.bid_price import AssortmentBidPricePolicy
from src.simulation.simulator import (
    Trajectory,
    monte_carlo,
    run_policy,
    sample_trajectory,
)
from src.utils.errors import PolicyError
from src.utils.seeding import GENERATOR_ID, replication_seed, splitmix64


def _fixed(states):
    return Trajectory(tuple(states), seed=0, purchase_draws=np.zeros(len(states)))


class TestSeeding:
    """Test suite for seed derivation."""

    def test_splitmix_reference_value(self):
        """Test the first splitmix64 output for seed 0."""
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_replication_seeds_differ(self):
        """Test each replication gets its own stream."""
        seeds = {replication_seed(42, r) for r in range(100)}
        assert len(seeds) == 100


class TestSampleTrajectory:
    """Test suite for arrival path sampling."""

    def test_support_and_length(self, tiny):
        """Test every path alternates between A and B."""
        for seed in range(50):
            path = sample_trajectory(tiny.arrival, seed).states
            assert len(path) == 2
            assert path[1] == 1 - path[0]

    def test_deterministic(self, tiny):
        """Test the path is a function of the seed."""
        first = sample_trajectory(tiny.arrival, 123)
        second = sample_trajectory(tiny.arrival, 123)
        assert first.states == second.states
        assert np.array_equal(first.purchase_draws, second.purchase_draws)

    def test_initial_frequencies(self, tiny):
        """Test state A starts roughly half the time."""
        starts = [
            sample_trajectory(tiny.arrival, replication_seed(7, r)).states[0] for r in range(2000)
        ]
        assert abs(np.mean(starts) - 0.5) < 0.05


class TestRunPolicy:
    """Test suite for executing a policy along one path."""

    def test_bid_price_paths(self, tiny):
        """Test both alternating paths earn 5 under bid prices."""
        policy = BidPricePolicy(tiny)
        for path in ((0, 1), (1, 0)):
            total, trace = run_policy(tiny, policy, _fixed(path))
            assert total == 5.0
            assert trace[-1].capacity == (0,)

    def test_greedy_path(self, tiny):
        """Test greedy spends the unit on the first arrival."""
        total, trace = run_policy(tiny, GreedyPolicy(tiny), _fixed((1, 0)))
        assert total == 2.0
        assert trace[0].served == 1
        assert trace[1].served is None

    def test_overselling_raises(self, tiny):
        """Test serving without capacity is caught."""
        with pytest.raises(PolicyError):
            run_policy(tiny, lambda t, s, c: Decision(serve=True), _fixed((0, 1)))

    def test_assortment_purchase(self, assort_instance):
        """Test a zero purchase draw buys the first offered product with positive share."""
        policy = AssortmentBidPricePolicy(assort_instance)
        total, trace = run_policy(
            assort_instance, policy, _fixed((0,)), choice=assort_instance.choice
        )
        # phi over (0, 1, 2) is (0.3, 0.4, 0.3); a draw of 0 lands on the null product
        assert total == 0.0
        assert trace[0].offered == (0, 1, 2)

    def test_assortment_purchase_high_draw(self, assort_instance):
        """Test a draw near one buys the last product."""
        policy = AssortmentBidPricePolicy(assort_instance)
        trajectory = Trajectory((0,), seed=0, purchase_draws=np.array([0.99]))
        total, trace = run_policy(
            assort_instance, policy, trajectory, choice=assort_instance.choice
        )
        assert total == 2.0
        assert trace[0].served == 2
        assert trace[0].capacity == (1, 0)

    def test_assortment_without_null_product(self, assort_instance):
        """Test an offer missing the null product is completed before the purchase draw."""
        trajectory = Trajectory((0,), seed=0, purchase_draws=np.array([0.5]))
        total, trace = run_policy(
            assort_instance, lambda t, s, c: (2, 1), trajectory, choice=assort_instance.choice
        )
        # cdf over (0, 1, 2) is (0.3, 0.7, 1.0)
        assert trace[0].offered == (0, 1, 2)
        assert trace[0].served == 1
        assert total == 5.0


class TestMonteCarlo:
    """Test suite for replicated simulation."""

    def test_deterministic(self, tiny):
        """Test the same base seed reproduces every replication."""
        first = monte_carlo(tiny, GreedyPolicy(tiny), reps=200, base_seed=5)
        second = monte_carlo(tiny, GreedyPolicy(tiny), reps=200, base_seed=5)
        assert np.array_equal(first.rewards, second.rewards)
        assert first.mean == second.mean

    def test_bid_price_mean(self, tiny):
        """Test the estimate for bid prices is exactly 5 on every path."""
        result = monte_carlo(tiny, BidPricePolicy(tiny), reps=500, base_seed=1)
        assert result.mean == pytest.approx(5.0)
        assert result.stderr == 0.0

    def test_greedy_mean_within_ci(self, tiny):
        """Test the greedy estimate lies within four standard errors of 3.5."""
        result = monte_carlo(tiny, GreedyPolicy(tiny), reps=4000, base_seed=11)
        assert abs(result.mean - 3.5) <= 4 * result.stderr
        assert result.ci[0] < result.mean < result.ci[1]

    def test_reps_must_be_positive(self, tiny):
        """Test zero replications are rejected."""
        with pytest.raises(ValueError):
            monte_carlo(tiny, GreedyPolicy(tiny), reps=0, base_seed=1)

    def test_to_dict(self, tiny):
        """Test the summary carries the generator and base seed."""
        data = monte_carlo(tiny, GreedyPolicy(tiny), reps=10, base_seed=3).to_dict()
        assert data["generator"] == GENERATOR_ID
        assert data["base_seed"] == 3
        assert data["reps"] == 10
        assert data["policy"] == "greedy"

    def test_trace_csv(self, tiny, temp_dir):
        """Test per-replication rows with seeds as exact integers."""
        result = monte_carlo(tiny, GreedyPolicy(tiny), reps=5, base_seed=9)
        path = result.write_trace_csv(temp_dir / "trace" / "greedy.csv")
        frame = pd.read_csv(path, dtype={"seed": str})
        assert list(frame.columns) == ["replication", "seed", "reward"]
        assert frame["seed"].tolist() == [str(replication_seed(9, r)) for r in range(5)]
        assert np.allclose(frame["reward"], result.rewards)
