"""Instance validation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..utils.errors import InvalidInstanceError
from .instance import Instance

logger = logging.getLogger(__name__)

ERROR = "error"
WARNING = "warning"

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class Issue:
    severity: str
    message: str


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`; ``ok`` is true iff no issue has severity ``error``."""
    issues: List[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def errors(self) -> List[str]:
        return [i.message for i in self.issues if i.severity == ERROR]

    @property
    def warnings(self) -> List[str]:
        return [i.message for i in self.issues if i.severity == WARNING]

    def error(self, message: str) -> None:
        self.issues.append(Issue(ERROR, message))

    def warn(self, message: str) -> None:
        self.issues.append(Issue(WARNING, message))

    def as_tuples(self) -> List[Tuple[str, str]]:
        return [(i.severity, i.message) for i in self.issues]


def _check_distribution(report: ValidationReport, label: str, row: np.ndarray) -> None:
    if np.any(row < 0) or np.any(row > 1) or not np.all(np.isfinite(row)):
        report.error(f"{label} has probabilities outside [0, 1]")
        return
    total = float(row.sum())
    if abs(total - 1.0) > STOCHASTIC_TOL:
        report.error(f"{label} sums to {total:.12g}")


def validate(instance: Instance) -> ValidationReport:
    """
    Check an instance for structural and numerical consistency.

    Args:
        instance: Instance to check

    Returns:
        ValidationReport listing every problem found
    """
    report = ValidationReport()
    arrival = instance.arrival
    m, n, num_states = instance.num_resources, instance.num_types, arrival.num_states

    if arrival.horizon < 1:
        report.error(f"horizon must be >= 1, got {arrival.horizon}")

    # Types
    for j, ctype in enumerate(instance.types):
        if ctype.reward < 0 or not np.isfinite(ctype.reward):
            report.error(f"type {j} has negative reward {ctype.reward}")
        if len(ctype.consumes) != m:
            report.error(f"type {j} consumption has length {len(ctype.consumes)}, expected {m}")
        if any(a not in (0, 1) for a in ctype.consumes):
            report.error(f"type {j} consumption entries must be 0 or 1")

    # Capacities
    if len(instance.capacities) != m:
        report.error(f"{len(instance.capacities)} capacities for {m} resources")
    consumed = instance.consumption.sum(axis=1) > 0 if n else np.zeros(m, dtype=bool)
    for i, cap in enumerate(instance.capacities[:m]):
        if cap < 0:
            report.error(f"resource {instance.resource_names[i]} has negative capacity {cap}")
        elif cap == 0 and consumed[i]:
            report.error(
                f"consumed resource has zero capacity: {instance.resource_names[i]}"
            )
        elif cap == 0:
            report.warn(f"idle resource {instance.resource_names[i]} has zero capacity")

    # Arrival process
    if len(arrival.state_type) != num_states:
        report.error(f"state_type has {len(arrival.state_type)} entries for {num_states} states")
    for s, j in enumerate(arrival.state_type):
        if not 0 <= j < n:
            report.error(f"state {s} maps to type {j}, outside 0..{n - 1}")

    if arrival.initial.shape != (num_states,):
        report.error(
            f"initial distribution has shape {arrival.initial.shape}, "
            f"expected ({num_states},)"
        )
    else:
        _check_distribution(report, "initial distribution", arrival.initial)

    expected = (max(arrival.horizon - 1, 0), num_states, num_states)
    if arrival.transitions.shape != expected:
        report.error(
            f"transitions have shape {arrival.transitions.shape}; horizon {arrival.horizon} "
            f"requires {expected}"
        )
    else:
        for t in range(1, arrival.horizon):
            for s in range(num_states):
                label = f"transition row (t={t}, s={arrival.states[s]})"
                _check_distribution(report, label, arrival.transitions[t - 1, s])

    if instance.choice is not None:
        for message in instance.choice.structural_issues(instance):
            report.error(message)

    for issue in report.issues:
        if issue.severity == WARNING:
            logger.warning(issue.message)
    return report


def require_valid(instance: Instance) -> Instance:
    """Return the instance unchanged or raise InvalidInstanceError."""
    report = validate(instance)
    if not report.ok:
        raise InvalidInstanceError("; ".join(report.errors))
    return instance
