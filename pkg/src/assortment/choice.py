"""Choice models over assortments and the substitutability check."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..model.instance import CustomerType
from ..utils.errors import FamilyTooLargeError

if TYPE_CHECKING:
    from ..model.instance import Instance

logger = logging.getLogger(__name__)

Assortment = Tuple[int, ...]

CHOICE_SUM_TOL = 1e-10
DEFAULT_MAX_FAMILY = 4096


def _canonical(assortment: Sequence[int], null_product: int) -> Assortment:
    return tuple(sorted(set(int(j) for j in assortment) | {null_product}))


@dataclass(frozen=True, eq=False)
class ChoiceModel:
    """
    Assortment family F with choice probabilities phi_j(A, s).

    Products are type indices of the instance. Every assortment contains the
    null product. Probabilities come either from an explicit table of shape
    (|F|, |S|, n), zero outside each assortment, or from MNL weights of shape
    (|S|, n). An MNL model without a family offers every subset of
    ``products``.
    """
    null_product: int
    family: Optional[Tuple[Assortment, ...]] = None
    table: Optional[np.ndarray] = None
    mnl_weights: Optional[np.ndarray] = None
    products: Tuple[int, ...] = ()

    def __post_init__(self):
        if (self.table is None) == (self.mnl_weights is None):
            raise ValueError("a choice model needs exactly one of an explicit table or MNL weights")
        if self.table is not None and self.family is None:
            raise ValueError("an explicit choice table needs an explicit family")
        family = None
        if self.family is not None:
            family = tuple(_canonical(a, self.null_product) for a in self.family)
            object.__setattr__(self, "family", family)
        for name in ("table", "mnl_weights"):
            value = getattr(self, name)
            if value is not None:
                array = np.array(value, dtype=float)
                array.setflags(write=False)
                object.__setattr__(self, name, array)
        products = set(int(j) for j in self.products)
        if family is not None:
            products.update(j for a in family for j in a)
        products.discard(self.null_product)
        object.__setattr__(self, "products", tuple(sorted(products)))

    @property
    def is_mnl(self) -> bool:
        return self.mnl_weights is not None

    @property
    def family_size(self) -> int:
        if self.family is not None:
            return len(self.family)
        return 2 ** len(self.products)

    def assortments(self, max_family: int = DEFAULT_MAX_FAMILY) -> Tuple[Assortment, ...]:
        """The family in stored order; implicit power-set families are enumerated."""
        if self.family is not None:
            if len(self.family) > max_family:
                raise FamilyTooLargeError(
                    f"assortment family has {len(self.family)} members, cap is {max_family}"
                )
            return self.family
        if self.family_size > max_family:
            raise FamilyTooLargeError(
                f"power-set family over {len(self.products)} products exceeds cap {max_family}"
            )
        return tuple(
            _canonical(subset, self.null_product)
            for size in range(len(self.products) + 1)
            for subset in combinations(self.products, size)
        )

    def canonical(self, assortment: Sequence[int]) -> Assortment:
        """Sorted, duplicate-free assortment with the null product added."""
        return _canonical(assortment, self.null_product)

    def phi(self, assortment: Sequence[int], state: int) -> np.ndarray:
        """Choice probabilities phi_j(A, s) for every type j (zero outside A)."""
        key = _canonical(assortment, self.null_product)
        if self.mnl_weights is not None:
            weights = self.mnl_weights[state]
            probs = np.zeros(weights.shape[0])
            members = list(key)
            denominator = weights[self.null_product] + sum(
                weights[j] for j in members if j != self.null_product
            )
            probs[members] = weights[members] / denominator
            return probs
        index = self._family_index().get(key)
        if index is None:
            raise KeyError(f"assortment {key} is not in the family")
        return self.table[index, state]

    def _family_index(self) -> Dict[Assortment, int]:
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {a: k for k, a in enumerate(self.family or ())}
            object.__setattr__(self, "_index", cached)
        return cached

    def contains(self, assortment: Sequence[int]) -> bool:
        key = _canonical(assortment, self.null_product)
        if self.family is None:
            return set(key) - {self.null_product} <= set(self.products)
        return key in self._family_index()

    def structural_issues(self, instance: "Instance") -> List[str]:
        """Problems that make the model unusable with ``instance``."""
        issues = []
        n, num_states = instance.num_types, instance.num_states
        if not 0 <= self.null_product < n:
            return [f"null product {self.null_product} is not a type index"]
        if not instance.types[self.null_product].is_null:
            issues.append(f"null product {self.null_product} has nonzero reward or consumption")
        for j in self.products:
            if not 0 <= j < n:
                issues.append(f"product {j} is not a type index")
        if issues:
            return issues
        if self.mnl_weights is not None:
            if self.mnl_weights.shape != (num_states, n):
                issues.append(
                    f"MNL weights have shape {self.mnl_weights.shape}, expected {(num_states, n)}"
                )
            elif np.any(self.mnl_weights < 0) or np.any(
                self.mnl_weights[:, self.null_product] <= 0
            ):
                issues.append("MNL weights must be nonnegative with a positive null weight")
        if self.family is not None and (self.null_product,) not in self._family_index():
            issues.append("family does not contain the null assortment")
        if self.table is not None:
            expected = (len(self.family), num_states, n)
            if self.table.shape != expected:
                issues.append(f"choice table has shape {self.table.shape}, expected {expected}")
                return issues
            for k, assortment in enumerate(self.family):
                outside = np.ones(n, dtype=bool)
                outside[list(assortment)] = False
                if np.any(self.table[k][:, outside] != 0):
                    issues.append(f"assortment {assortment} assigns probability outside itself")
                sums = self.table[k].sum(axis=1)
                if np.any(self.table[k] < 0) or np.any(np.abs(sums - 1.0) > CHOICE_SUM_TOL):
                    issues.append(
                        f"choice probabilities for assortment {assortment} do not sum to 1"
                    )
        return issues

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"null_product": self.null_product}
        if self.family is not None:
            data["family"] = [list(a) for a in self.family]
        if self.table is not None:
            data["phi"] = {"table": self.table.tolist()}
        else:
            data["phi"] = {"mnl": {"weights": self.mnl_weights.tolist()}}
            data["products"] = list(self.products)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChoiceModel":
        phi = data["phi"]
        family = data.get("family")
        family = tuple(tuple(a) for a in family) if family is not None else None
        if "table" in phi:
            return cls(null_product=int(data["null_product"]), family=family, table=phi["table"])
        return cls(
            null_product=int(data["null_product"]),
            family=family,
            mnl_weights=phi["mnl"]["weights"],
            products=tuple(data.get("products", ())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChoiceModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SubstitutabilityReport:
    ok: bool
    violation: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def check_substitutability(
    choice: ChoiceModel, num_states: int, max_family: int = DEFAULT_MAX_FAMILY
) -> SubstitutabilityReport:
    """
    Check downward closure of F and phi_j(A, s) >= phi_j(A + {j'}, s).

    Args:
        choice: Choice model with an enumerable family
        num_states: Number of arrival states
        max_family: Cap on the enumerated family

    Returns:
        Report carrying the first violation found, if any
    """
    family = choice.assortments(max_family)
    members = set(family)
    null = choice.null_product

    for assortment in family:
        products = [j for j in assortment if j != null]
        for size in range(len(products)):
            for subset in combinations(products, size):
                candidate = _canonical(subset, null)
                if candidate not in members:
                    return SubstitutabilityReport(
                        False, f"family is not downward closed: {assortment} without {candidate}"
                    )

    candidates = sorted(set(choice.products))
    for s in range(num_states):
        for assortment in family:
            base = choice.phi(assortment, s)
            for extra in candidates:
                if extra in assortment:
                    continue
                larger = _canonical(assortment + (extra,), null)
                if larger not in members:
                    continue
                grown = choice.phi(larger, s)
                for j in assortment:
                    if base[j] < grown[j] - CHOICE_SUM_TOL:
                        return SubstitutabilityReport(
                            False,
                            f"phi_{j}({assortment}, s={s}) = {base[j]:.6g} < "
                            f"phi_{j}({larger}, s={s}) = {grown[j]:.6g}",
                        )
    return SubstitutabilityReport(True)


def mnl_choice(
    weights: np.ndarray,
    null_product: int,
    products: Optional[Sequence[int]] = None,
    full_family: bool = False,
) -> ChoiceModel:
    """
    Build an MNL choice model.

    With ``full_family`` the power set of ``products`` is stored explicitly;
    otherwise it stays implicit and only the revenue-ordered search can scan it
    once it exceeds the family cap.
    """
    weights = np.asarray(weights, dtype=float)
    if products is None:
        products = [j for j in range(weights.shape[1]) if j != null_product]
    model = ChoiceModel(null_product=null_product, mnl_weights=weights, products=tuple(products))
    if full_family:
        family = model.assortments(max_family=2 ** len(model.products))
        model = dataclasses.replace(model, family=family)
    return model


def single_product_choice(instance: "Instance") -> Tuple["Instance", ChoiceModel]:
    """
    Express single-product arrivals as a choice model.

    F = {{null}} U {{null, j}}, where the arriving type j(s) buys product j
    with probability 1 when offered. A null type is appended if the instance
    has none.
    """
    null = instance.null_type_index()
    if null is None:
        null = instance.num_types
        instance = dataclasses.replace(
            instance,
            types=instance.types + (CustomerType(null, 0.0, (0,) * instance.num_resources),),
        )
    n, num_states = instance.num_types, instance.num_states
    products = [j for j in range(n) if j != null]
    family = [(null,)] + [tuple(sorted((null, j))) for j in products]
    table = np.zeros((len(family), num_states, n))
    table[0, :, null] = 1.0
    state_types = instance.arrival.state_type
    for k, j in enumerate(products, start=1):
        hit = np.array([state_types[s] == j for s in range(num_states)], dtype=float)
        table[k, :, j] = hit
        table[k, :, null] = 1.0 - hit
    choice = ChoiceModel(null_product=null, family=tuple(family), table=table)
    return instance, choice
