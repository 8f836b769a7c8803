"""Invariant suite behind ``nrm verify``: exact-DP checks of the bid-price guarantees."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..agents.bid_price import (
    BidPricePolicy,
    BidPriceTable,
    compute_bid_prices,
    construct_lp_solution,
    lower_bound_value,
)
from ..assortment.bid_price import (
    AssortmentBidPricePolicy,
    best_adjusted_assortment,
    compute_assort_bid_prices,
)
from ..assortment.choice import DEFAULT_MAX_FAMILY, check_substitutability
from ..input.encodings import recover_survival_spec
from ..input.generator import (
    AssortmentBounds,
    RandomBounds,
    gen_random_assortment,
    gen_random_high_variance,
    gen_random_small,
)
from ..input.instance_io import write_instance
from ..lp.builders import build_adp_lp, build_assort_adp_lp, build_fluid_uf_lp
from ..lp.program import solve
from ..lp.weights import check_adp_feasibility, extract_weights
from ..model.instance import Instance, bundle_size_L
from ..model.validation import validate
from ..utils.errors import NrmError
from ..utils.seeding import replication_seed
from .oracle import (
    DEFAULT_MAX_CELLS,
    exact_dp,
    exact_dp_assort,
    exact_policy_value,
    optimal_policy_from_table,
)

logger = logging.getLogger(__name__)

POLICY_TOL = 1e-9
LP_TOL = 1e-7
FLUID_TOL = 1e-6
TABLE_TOL = 1e-12
HIGH_VARIANCE_EVERY = 4

Corpus = Iterable[Tuple[str, Instance]]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class InstanceReport:
    """Outcome of the invariant suite on one instance."""
    label: str
    checks: List[CheckResult] = field(default_factory=list)
    values: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None
    triage_path: Optional[str] = None

    @property
    def success(self) -> bool:
        return self.error is None and all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def record(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, bool(passed), detail))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "values": self.values,
            "failed": [dataclasses.asdict(check) for check in self.failed_checks],
            "error": self.error,
            "triage_path": self.triage_path,
            "metadata": {"success": self.success, "checks": len(self.checks)},
        }


@dataclass
class VerificationReport:
    instances: List[InstanceReport]

    @property
    def passed(self) -> bool:
        return all(report.success for report in self.instances)

    @property
    def failures(self) -> List[InstanceReport]:
        return [report for report in self.instances if not report.success]

    def worst_ratio(self) -> Optional[float]:
        """Smallest policy/LP ratio seen, next to which the 1/(1+L) bound is reported."""
        ratios = [r.values["ratio"] for r in self.instances if "ratio" in r.values]
        return min(ratios) if ratios else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "instances": len(self.instances),
            "failures": len(self.failures),
            "worst_ratio": self.worst_ratio(),
            "reports": [report.to_dict() for report in self.instances],
        }


def random_corpus(
    size: int, seed: int, bounds: Optional[RandomBounds] = None
) -> List[Tuple[str, Instance]]:
    """
    ``size`` random small instances, instance k drawn from seed ``replication_seed(seed, k)``.

    Every fourth instance is drawn from the high-variance model.
    """
    corpus = []
    for k in range(size):
        high_variance = k % HIGH_VARIANCE_EVERY == HIGH_VARIANCE_EVERY - 1
        draw = gen_random_high_variance if high_variance else gen_random_small
        corpus.append((f"random-{seed}-{k}", draw(replication_seed(seed, k), bounds)))
    return corpus


def random_assortment_corpus(
    size: int, seed: int, bounds: Optional[AssortmentBounds] = None
) -> List[Tuple[str, Instance]]:
    return [
        (f"assort-{seed}-{k}", gen_random_assortment(replication_seed(seed, k), bounds))
        for k in range(size)
    ]


class VerificationRunner:
    """
    Runs the exact-DP invariant suite over a corpus of small instances.

    Instances without a choice model get the single-product checks; those
    carrying one get the assortment checks. Every instance yields an
    InstanceReport; exceptions raised by the library are recorded on the
    report instead of aborting the batch.
    """

    def __init__(
        self,
        solver_kwargs: Optional[Dict[str, Any]] = None,
        max_cells: int = DEFAULT_MAX_CELLS,
        max_family: int = DEFAULT_MAX_FAMILY,
        corrupt_bid_prices: bool = False,
        triage_dir: Optional[Union[str, Path]] = None,
        progress: bool = False,
    ):
        """
        Args:
            solver_kwargs: Keyword arguments forwarded to :func:`src.lp.program.solve`
            max_cells: Lattice cap for the exact DP
            max_family: Cap on enumerated assortment families
            corrupt_bid_prices: Debug switch inflating every bid price by a
                factor of 2 + L so the lower-bound check must fail
            triage_dir: Directory receiving failing instances as JSON
            progress: Show a tqdm progress bar
        """
        self.solver_kwargs = dict(solver_kwargs or {})
        self.max_cells = max_cells
        self.max_family = max_family
        self.corrupt_bid_prices = corrupt_bid_prices
        self.triage_dir = Path(triage_dir) if triage_dir is not None else None
        self.progress = progress

    def _corrupt(self, table, instance: Instance):
        """Scale the bid prices and rebuild every decision cache from the scaled table."""
        if not self.corrupt_bid_prices:
            return table
        factor = 2.0 + bundle_size_L(instance)
        logger.warning("Corrupting bid prices by a factor of %g", factor)
        nu = table.nu * factor
        if isinstance(table, BidPriceTable):
            # opportunity costs are linear in nu
            return dataclasses.replace(table, nu=nu, opportunity=table.opportunity * factor)
        chosen: List[Tuple[Tuple[int, ...], ...]] = [()]
        for t in range(1, instance.horizon + 1):
            chosen.append(tuple(
                best_adjusted_assortment(
                    instance, instance.choice, t, s, nu[t + 1], self.max_family
                )[0]
                for s in range(instance.num_states)
            ))
        return dataclasses.replace(table, nu=nu, chosen=tuple(chosen))

    def verify_instance(self, instance: Instance, label: str = "instance") -> InstanceReport:
        report = InstanceReport(label)
        validation = validate(instance)
        report.record("validation", validation.ok, "; ".join(validation.errors))
        if not validation.ok:
            return report

        L = bundle_size_L(instance)
        report.values["L"] = float(L)
        report.values["bound"] = 1.0 / (1.0 + L)
        if instance.choice is None:
            self._single_product_checks(instance, report, L)
        else:
            self._assortment_checks(instance, report, L)
        return report

    def _single_product_checks(self, instance: Instance, report: InstanceReport, L: int) -> None:
        table = self._corrupt(compute_bid_prices(instance), instance)
        nu = table.nu
        report.record("bid_prices_nonnegative", nu.min() >= -TABLE_TOL, f"min nu = {nu.min():.6g}")
        worst_backup = 0.0
        for t in range(1, instance.horizon + 1):
            backup = nu[t + 1] @ instance.arrival.transition(t).T
            worst_backup = max(worst_backup, float(np.max(backup - nu[t])))
        report.record(
            "monotone_backup", worst_backup <= TABLE_TOL, f"worst deficit {worst_backup:.3g}"
        )

        dp_value, dp_table = exact_dp(instance, self.max_cells)
        report.values["dp"] = dp_value
        report.record("dp_monotone", dp_table.is_monotone())

        optimal_value = exact_policy_value(
            instance, optimal_policy_from_table(dp_table, instance), max_cells=self.max_cells
        )
        report.record(
            "optimal_policy_matches_dp",
            abs(optimal_value - dp_value) <= POLICY_TOL * max(1.0, abs(dp_value)),
            f"{optimal_value:.12g} vs {dp_value:.12g}",
        )

        lp, index = build_adp_lp(instance)
        solution = solve(lp, **self.solver_kwargs).require_optimal("ADP LP")
        lp_value = solution.objective
        report.values["lp"] = lp_value
        self._record_upper_bound(report, lp_value, dp_value)
        extracted = check_adp_feasibility(extract_weights(solution, index), instance)
        slack = extracted.min_slack
        report.record("lp_weights_feasible", slack >= -LP_TOL, f"min slack {slack:.3g}")

        self._fluid_check(instance, report, lp_value)

        bbp_value = exact_policy_value(
            instance, BidPricePolicy(instance, table), max_cells=self.max_cells
        )
        lower = lower_bound_value(table, instance.arrival)
        report.values["bbp"] = bbp_value
        report.values["lower_bound"] = lower
        self._guarantee_checks(report, instance, table, L, dp_value, bbp_value, lower, lp_value)

    def _assortment_checks(self, instance: Instance, report: InstanceReport, L: int) -> None:
        choice = instance.choice
        substitutable = check_substitutability(choice, instance.num_states, self.max_family)
        report.record("substitutability", substitutable.ok, substitutable.violation or "")
        if not substitutable.ok:
            return

        table = self._corrupt(
            compute_assort_bid_prices(instance, choice, self.max_family), instance
        )
        low = table.nu.min()
        report.record("bid_prices_nonnegative", low >= -TABLE_TOL, f"min nu = {low:.6g}")

        dp_value, dp_table = exact_dp_assort(instance, choice, self.max_cells, self.max_family)
        report.values["dp"] = dp_value
        report.record("dp_monotone", dp_table.is_monotone())

        lp, _ = build_assort_adp_lp(instance, choice, self.max_family)
        lp_value = solve(lp, **self.solver_kwargs).require_optimal("assortment ADP LP").objective
        report.values["lp"] = lp_value
        self._record_upper_bound(report, lp_value, dp_value)

        policy = AssortmentBidPricePolicy(instance, choice, table, self.max_family)
        bbp_value = exact_policy_value(instance, policy, choice=choice, max_cells=self.max_cells)
        lower = lower_bound_value(table, instance.arrival)
        report.values["bbp"] = bbp_value
        report.values["lower_bound"] = lower
        self._guarantee_checks(
            report, instance, table, L, dp_value, bbp_value, lower, lp_value, choice
        )

    @staticmethod
    def _record_upper_bound(report: InstanceReport, lp_value: float, dp_value: float) -> None:
        report.record(
            "lp_upper_bound",
            lp_value >= dp_value - LP_TOL,
            f"LP {lp_value:.10g} < DP {dp_value:.10g}",
        )

    def _guarantee_checks(
        self, report, instance, table, L, dp_value, bbp_value, lower, lp_value, choice=None
    ) -> None:
        report.record(
            "lower_bound",
            bbp_value >= lower - POLICY_TOL,
            f"policy {bbp_value:.10g} < lower bound {lower:.10g}",
        )
        report.record(
            "ratio_guarantee",
            bbp_value >= dp_value / (1.0 + L) - POLICY_TOL,
            f"policy {bbp_value:.10g} < DP/(1+L) = {dp_value / (1.0 + L):.10g}",
        )
        constructed = check_adp_feasibility(
            construct_lp_solution(table, instance), instance, choice, self.max_family
        )
        report.values["constructed_objective"] = constructed.objective
        report.record("constructed_weights_feasible", constructed.feasible,
                      f"min slack {constructed.min_slack:.3g} at {constructed.worst}")
        report.record(
            "constructed_objective_bound",
            constructed.objective <= (1.0 + L) * lower + POLICY_TOL,
            f"objective {constructed.objective:.10g} > (1+L) x {lower:.10g}",
        )
        if lp_value > 0:
            report.values["ratio"] = bbp_value / lp_value

    def _fluid_check(self, instance: Instance, report: InstanceReport, lp_value: float) -> None:
        try:
            recover_survival_spec(instance)
        except ValueError:
            return
        fluid = solve(build_fluid_uf_lp(instance), **self.solver_kwargs).require_optimal("fluid LP")
        report.values["fluid"] = fluid.objective
        report.record(
            "fluid_upper_bound",
            lp_value <= fluid.objective + FLUID_TOL,
            f"ADP LP {lp_value:.10g} > fluid LP {fluid.objective:.10g}",
        )

    def _triage(self, instance: Instance, report: InstanceReport) -> None:
        if self.triage_dir is None:
            return
        path = write_instance(instance, self.triage_dir / f"{report.label}.json")
        report.triage_path = str(path)
        logger.info("Wrote failing instance %s to %s", report.label, path)

    def run(self, corpus: Corpus) -> VerificationReport:
        """
        Verify every (label, instance) pair of a corpus.

        Returns:
            VerificationReport with one InstanceReport per instance
        """
        reports = []
        for label, instance in tqdm(list(corpus), desc="verify", disable=not self.progress):
            try:
                report = self.verify_instance(instance, label)
            except NrmError as e:
                logger.error("Verification of %s raised: %s", label, e)
                report = InstanceReport(label, error=f"{type(e).__name__}: {e}")
            if not report.success:
                for check in report.failed_checks:
                    logger.error("%s failed %s: %s", label, check.name, check.detail)
                self._triage(instance, report)
            reports.append(report)

        result = VerificationReport(reports)
        logger.info(
            "Verified %d instances: %d failures, worst policy/LP ratio %s",
            len(reports), len(result.failures), result.worst_ratio(),
        )
        return result
