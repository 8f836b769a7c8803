"""JSON instance files (schema version ``nrm-instance/1``)."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..assortment.choice import ChoiceModel
from ..model.instance import CustomerType, Instance, MarkovArrival
from ..utils.errors import InstanceFormatError
from .encodings import SurvivalSpec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "nrm-instance/1"
REQUIRED_FIELDS = ("horizon", "resources", "types", "states", "initial", "transitions")


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    """Plain-JSON representation; every state carries an explicit type index."""
    arrival = instance.arrival
    data: Dict[str, Any] = {
        "version": SCHEMA_VERSION,
        "horizon": arrival.horizon,
        "resources": [
            {"name": name, "capacity": cap}
            for name, cap in zip(instance.resource_names, instance.capacities)
        ],
        "types": [{"reward": t.reward, "consumes": list(t.consumes)} for t in instance.types],
        "states": [
            {"name": name, "type": j} for name, j in zip(arrival.states, arrival.state_type)
        ],
        "initial": arrival.initial.tolist(),
        "transitions": arrival.transitions.tolist(),
    }
    if instance.choice is not None:
        data["choice"] = instance.choice.to_dict()
    return data


def dumps_instance(instance: Instance) -> str:
    # repr-based float output is the shortest string that round-trips exactly.
    return json.dumps(instance_to_dict(instance), indent=1) + "\n"


def write_instance(instance: Instance, path: Union[str, Path]) -> Path:
    """Write an instance as JSON, creating parent directories."""
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(dumps_instance(instance))
    logger.debug("Wrote instance to %s", output_path)
    return output_path


def _require(data: Dict[str, Any], name: str) -> Any:
    if name not in data:
        raise InstanceFormatError("missing required field", field=name)
    return data[name]


def instance_from_dict(data: Dict[str, Any]) -> Instance:
    """Build an Instance from its JSON representation."""
    if not isinstance(data, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    version = data.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(
            f"unsupported schema version {version!r}, expected {SCHEMA_VERSION!r}", field="version"
        )
    for name in REQUIRED_FIELDS:
        _require(data, name)

    try:
        resources = data["resources"]
        names = [str(r["name"]) for r in resources]
        capacities = [int(r["capacity"]) for r in resources]
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceFormatError(f"malformed resource entry: {e}", field="resources") from e

    try:
        types: List[CustomerType] = [
            CustomerType(j, float(t["reward"]), tuple(int(a) for a in t["consumes"]))
            for j, t in enumerate(data["types"])
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceFormatError(f"malformed type entry: {e}", field="types") from e

    null_index: Optional[int] = next((j for j, t in enumerate(types) if t.is_null), None)
    state_names, state_type = [], []
    try:
        for entry in data["states"]:
            state_names.append(str(entry["name"]))
            j = entry.get("type")
            if j is None:
                if null_index is None:
                    null_index = len(types)
                    types.append(CustomerType(null_index, 0.0, (0,) * len(names)))
                j = null_index
            state_type.append(int(j))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InstanceFormatError(f"malformed state entry: {e}", field="states") from e

    try:
        horizon = int(data["horizon"])
        initial = np.asarray(data["initial"], dtype=float)
        transitions = np.asarray(data["transitions"], dtype=float)
    except (TypeError, ValueError) as e:
        raise InstanceFormatError(f"non-numeric probability data: {e}", field="transitions") from e
    if transitions.size == 0:
        transitions = transitions.reshape(0, len(state_names), len(state_names))
    if transitions.ndim != 3:
        raise InstanceFormatError(
            f"transitions must be a list of matrices, got {transitions.ndim} dimensions",
            field="transitions",
        )

    choice = None
    if data.get("choice") is not None:
        try:
            choice = ChoiceModel.from_dict(data["choice"])
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"malformed choice block: {e}", field="choice") from e

    arrival = MarkovArrival(
        horizon=horizon,
        states=tuple(state_names),
        initial=initial,
        transitions=transitions,
        state_type=tuple(state_type),
    )
    return Instance(
        resource_names=tuple(names),
        capacities=tuple(capacities),
        types=tuple(types),
        arrival=arrival,
        choice=choice,
    )


def read_instance(path: Union[str, Path]) -> Instance:
    """
    Read an instance JSON file.

    Raises:
        InstanceFormatError: On malformed JSON (with line number), missing
            fields or an unsupported schema version
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: {e.msg}", line=e.lineno) from e
    return instance_from_dict(data)


def read_survival_spec(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read the encoding input used by ``nrm generate --setting hv|indep``.

    The file holds ``lambdas`` (T x n), ``types`` and optionally ``rho``
    (T-1 values) and ``capacities``.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"{path}: {e.msg}", line=e.lineno) from e
    for name in ("lambdas", "types"):
        _require(data, name)
    types = [
        CustomerType(j, float(t["reward"]), tuple(int(a) for a in t["consumes"]))
        for j, t in enumerate(data["types"])
    ]
    result: Dict[str, Any] = {
        "types": types,
        "lambdas": np.asarray(data["lambdas"], dtype=float),
        "capacities": data.get("capacities"),
    }
    if "rho" in data:
        result["spec"] = SurvivalSpec(rho=data["rho"], lambdas=data["lambdas"])
    return result
