"""Unit tests for reading and writing instance files."""

import json

import pytest

from src.input.instance_io import (
    SCHEMA_VERSION,
    dumps_instance,
    instance_from_dict,
    instance_to_dict,
    read_instance,
    read_survival_spec,
    write_instance,
)
from src.utils.errors import InstanceFormatError


class TestInstanceFiles:
    """Test suite for the JSON instance format."""

    def test_round_trip(self, tiny, temp_dir):
        """Test a written instance reads back equal."""
        path = write_instance(tiny, temp_dir / "nested" / "tiny.json")
        assert path.exists()
        assert read_instance(path) == tiny

    def test_round_trip_with_choice(self, assort_instance, temp_dir):
        """Test the choice block survives a round trip."""
        path = write_instance(assort_instance, temp_dir / "assort.json")
        loaded = read_instance(path)
        assert loaded.choice is not None
        assert loaded.choice.family == assort_instance.choice.family
        assert loaded == assort_instance

    def test_dump_is_stable(self, tiny):
        """Test serialisation is deterministic and carries the schema version."""
        text = dumps_instance(tiny)
        assert text == dumps_instance(tiny)
        assert json.loads(text)["version"] == SCHEMA_VERSION

    def test_missing_field_is_named(self, tiny):
        """Test a missing transitions block reports the field name."""
        data = instance_to_dict(tiny)
        del data["transitions"]
        with pytest.raises(InstanceFormatError, match="transitions") as excinfo:
            instance_from_dict(data)
        assert excinfo.value.field == "transitions"

    def test_version_mismatch(self, tiny):
        """Test an unknown schema version is rejected."""
        data = instance_to_dict(tiny)
        data["version"] = "nrm-instance/99"
        with pytest.raises(InstanceFormatError, match="unsupported schema version"):
            instance_from_dict(data)

    def test_null_state_type_adds_null_type(self, tiny):
        """Test ``"type": null`` maps the state to an appended null type."""
        data = instance_to_dict(tiny)
        data["states"][1]["type"] = None
        instance = instance_from_dict(data)
        assert instance.num_types == 3
        assert instance.is_null_state(1)
        assert instance.types[2].reward == 0.0
        assert instance.types[2].consumes == (0,)

    def test_malformed_json_reports_line(self, temp_dir):
        """Test a JSON syntax error carries its line number."""
        path = temp_dir / "broken.json"
        path.write_text('{\n "horizon": 2,\n "resources": [\n', encoding="utf-8")
        with pytest.raises(InstanceFormatError) as excinfo:
            read_instance(path)
        assert excinfo.value.line is not None
        assert "line" in str(excinfo.value)

    def test_malformed_resource(self, tiny):
        """Test a resource without a capacity is reported against resources."""
        data = instance_to_dict(tiny)
        data["resources"] = [{"name": "r"}]
        with pytest.raises(InstanceFormatError) as excinfo:
            instance_from_dict(data)
        assert excinfo.value.field == "resources"

    def test_not_an_object(self):
        """Test a top-level list is rejected."""
        with pytest.raises(InstanceFormatError):
            instance_from_dict([1, 2, 3])

    def test_single_period_empty_transitions(self, single_type):
        """Test T=1 instances serialise with an empty transition list."""
        data = instance_to_dict(single_type)
        assert data["transitions"] == []
        assert instance_from_dict(data) == single_type


class TestSurvivalSpecFile:
    """Test suite for the encoding input file."""

    def test_reads_rho_and_types(self, temp_dir):
        """Test a survival file yields types, lambdas and a SurvivalSpec."""
        path = temp_dir / "hv.json"
        path.write_text(json.dumps({
            "types": [{"reward": 3.0, "consumes": [1]}],
            "lambdas": [[1.0], [1.0]],
            "rho": [0.5],
            "capacities": [2],
        }), encoding="utf-8")
        data = read_survival_spec(path)
        assert data["capacities"] == [2]
        assert data["types"][0].reward == 3.0
        assert data["spec"].rho.tolist() == [0.5]

    def test_missing_lambdas(self, temp_dir):
        """Test lambdas are required."""
        path = temp_dir / "hv.json"
        path.write_text(json.dumps({"types": []}), encoding="utf-8")
        with pytest.raises(InstanceFormatError, match="lambdas"):
            read_survival_spec(path)
