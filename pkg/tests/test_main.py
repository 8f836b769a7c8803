"""Integration tests for the nrm command line."""

import io
import json
from unittest.mock import patch

import pandas as pd
import pytest
import yaml

from src.analysis.experiments import TABLE_COLUMNS
from src.input.generator import gen_random_small
from src.input.instance_io import instance_from_dict, read_instance, write_instance
from src.main import EXIT_GENERATION, EXIT_INVARIANT, EXIT_OK, EXIT_SOLVE, main


@pytest.fixture
def cli_config(temp_dir):
    """Config file with quiet logging and the dense simplex."""
    path = temp_dir / "config.yaml"
    path.write_text(yaml.dump({
        "solver": {"backend": "simplex"},
        "simulation": {"reps": 20, "seed": 1},
        "experiments": {"reps": 5, "configs": [[30, 15], [40, 10]]},
        "verification": {"corpus_size": 5},
        "output": {"results_dir": str(temp_dir / "results")},
        "logging": {"level": "WARNING", "console": False},
    }), encoding="utf-8")
    return str(path)


@pytest.fixture
def tiny_file(tiny, temp_dir):
    return str(write_instance(tiny, temp_dir / "tiny.json"))


def _run(cli_config, *argv):
    return main(["--config", cli_config, *argv])


class TestGenerate:
    """Test suite for ``nrm generate``."""

    def test_to_stdout(self, cli_config, capsys):
        """Test the instance JSON is printed and depends only on the seed."""
        assert _run(cli_config, "generate", "--setting", "random", "--seed", "4") == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert instance_from_dict(printed) == gen_random_small(4)

    def test_to_file_with_manifest(self, cli_config, temp_dir, capsys):
        """Test -o writes the instance and a manifest next to it."""
        output = temp_dir / "out" / "inst.json"
        code = _run(cli_config, "generate", "--setting", "random", "--seed", "4", "-o", str(output))
        assert code == EXIT_OK
        assert "Instance written to" in capsys.readouterr().out
        data = json.loads(output.read_text(encoding="utf-8"))
        assert data["manifest"] == "inst.json.manifest.json"
        manifest_path = temp_dir / "out" / "inst.json.manifest.json"
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["command"] == "generate"
        assert manifest["seeds"] == {"seed": 4}
        assert "numpy" in manifest["versions"]
        assert read_instance(output) == gen_random_small(4)

    def test_seed_from_environment(self, cli_config, capsys, monkeypatch):
        """Test NRM_SEED replaces the configured seed."""
        monkeypatch.setenv("NRM_SEED", "9")
        assert _run(cli_config, "generate", "--setting", "random") == EXIT_OK
        assert instance_from_dict(json.loads(capsys.readouterr().out)) == gen_random_small(9)

    def test_missing_demand_parameters(self, cli_config):
        """Test setting a without --mu and --sigma is a generation failure."""
        assert _run(cli_config, "generate", "--setting", "a") == EXIT_GENERATION

    def test_unknown_setting(self, cli_config):
        """Test argparse rejects an unknown setting."""
        with pytest.raises(SystemExit) as excinfo:
            _run(cli_config, "generate", "--setting", "c")
        assert excinfo.value.code == 2


class TestUpperBound:
    """Test suite for ``nrm upper-bound``."""

    def test_tiny(self, cli_config, tiny_file, capsys):
        """Test the alternating fixture prints 7."""
        assert _run(cli_config, "upper-bound", tiny_file) == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["status"] == "optimal"
        assert result["lp_value"] == pytest.approx(7.0)

    def test_assort_flag(self, cli_config, tiny_file, capsys):
        """Test the assortment LP over the single-product choice model gives the same value."""
        assert _run(cli_config, "upper-bound", tiny_file, "--assort") == EXIT_OK
        assert json.loads(capsys.readouterr().out)["lp_value"] == pytest.approx(7.0)

    def test_lp_file_and_output(self, cli_config, tiny_file, temp_dir, capsys):
        """Test the LP export and the JSON output file."""
        lp_path = temp_dir / "tiny.lp"
        output = temp_dir / "bound.json"
        code = _run(
            cli_config, "upper-bound", tiny_file, "--lp-file", str(lp_path), "-o", str(output)
        )
        assert code == EXIT_OK
        assert lp_path.read_text(encoding="utf-8").startswith("\\ adp_lp")
        assert json.loads(output.read_text(encoding="utf-8"))["lp_value"] == pytest.approx(7.0)
        assert (temp_dir / "bound.json.manifest.json").exists()

    def test_missing_file(self, cli_config, temp_dir):
        """Test an unreadable instance exits with the solve code."""
        assert _run(cli_config, "upper-bound", str(temp_dir / "missing.json")) == EXIT_SOLVE

    def test_bad_config(self, temp_dir, tiny_file):
        """Test a missing config file is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            main(["--config", str(temp_dir / "nope.yaml"), "upper-bound", tiny_file])
        assert excinfo.value.code == 2


class TestSimulate:
    """Test suite for ``nrm simulate``."""

    def test_bid_price(self, cli_config, tiny_file, capsys):
        """Test bid prices earn 5 on every path."""
        assert _run(cli_config, "simulate", tiny_file, "--reps", "30", "--seed", "2") == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["mean"] == pytest.approx(5.0)
        assert result["reps"] == 30
        assert result["base_seed"] == 2

    def test_reps_default_from_config(self, cli_config, tiny_file, capsys):
        """Test the configured number of replications is used."""
        assert _run(cli_config, "simulate", tiny_file, "--policy", "greedy") == EXIT_OK
        assert json.loads(capsys.readouterr().out)["reps"] == 20

    def test_adp_policy_and_trace(self, cli_config, tiny_file, temp_dir, capsys):
        """Test the ADP heuristic runs and writes its trace CSV."""
        trace = temp_dir / "trace.csv"
        code = _run(cli_config, "simulate", tiny_file, "--policy", "adp", "--reps", "10",
                    "--trace-csv", str(trace))
        assert code == EXIT_OK
        assert len(pd.read_csv(trace)) == 10

    def test_zero_reps(self, cli_config, tiny_file):
        """Test --reps 0 is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            _run(cli_config, "simulate", tiny_file, "--reps", "0")
        assert excinfo.value.code == 2

    def test_assort_needs_bbp(self, cli_config, tiny_file):
        """Test --assort is refused for other policies."""
        with pytest.raises(SystemExit) as excinfo:
            _run(cli_config, "simulate", tiny_file, "--assort", "--policy", "greedy")
        assert excinfo.value.code == 2


class TestVerify:
    """Test suite for ``nrm verify``."""

    def test_file_passes(self, cli_config, tiny_file, capsys):
        """Test the alternating fixture passes every check."""
        assert _run(cli_config, "verify", tiny_file) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True
        assert report["instances"] == 1

    def test_corrupted_prices_fail(self, cli_config, tiny_file, temp_dir, capsys):
        """Test the negative control exits with the invariant code and triages the instance."""
        triage = temp_dir / "triage"
        code = _run(
            cli_config, "verify", tiny_file, "--corrupt-bid-prices", "--triage-dir", str(triage)
        )
        assert code == EXIT_INVARIANT
        assert json.loads(capsys.readouterr().out)["failures"] == 1
        assert (triage / "tiny.json").exists()

    def test_default_random_corpus(self, cli_config, capsys):
        """Test the configured corpus size is used without a file."""
        assert _run(cli_config, "verify", "--seed", "3") == EXIT_OK
        assert json.loads(capsys.readouterr().out)["instances"] == 5

    def test_capacity_scaling(self, cli_config, tiny_file, capsys):
        """Test the scaling study is reported alongside the invariant checks."""
        assert _run(cli_config, "verify", tiny_file, "--capacity-scaling", "1", "2") == EXIT_OK
        scaling = json.loads(capsys.readouterr().out)["capacity_scaling"]
        assert scaling["dp_ratio_nondecreasing"] is True
        assert [row["k"] for row in scaling["rows"]] == [1, 2]
        assert scaling["rows"][0]["dp"] == pytest.approx(5.0)
        assert scaling["rows"][1]["dp"] == pytest.approx(7.0)

    def test_capacity_scaling_needs_file(self, cli_config):
        """Test the scaling study is refused for a random corpus."""
        with pytest.raises(SystemExit) as excinfo:
            _run(cli_config, "verify", "--capacity-scaling", "1", "2")
        assert excinfo.value.code == 2


class TestReproduce:
    """Test suite for ``nrm reproduce`` with the experiment runner stubbed out."""

    @pytest.fixture
    def table(self):
        return pd.DataFrame(
            [
                [30, 15, 48, 100.0, 90.0, 80.0, 10.0, 20.0],
                [40, 10, 53, 120.0, 114.0, 96.0, 5.0, 20.0],
            ],
            columns=TABLE_COLUMNS,
        )

    @patch("src.main.ExperimentRunner")
    def test_csv_to_stdout(self, mock_runner, cli_config, table, capsys):
        """Test the table is printed as CSV with configured reps and configs."""
        mock_runner.return_value.run_table.return_value = table
        assert _run(cli_config, "reproduce", "--table", "1", "--seed", "8") == EXIT_OK
        printed = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert list(printed.columns) == TABLE_COLUMNS
        assert printed["bbp_gap"].tolist() == [10.0, 5.0]

        kwargs = mock_runner.call_args.kwargs
        assert kwargs["reps"] == 5
        assert kwargs["configs"] == [[30, 15], [40, 10]]
        mock_runner.return_value.run_table.assert_called_once_with("A", 8)

    @patch("src.main.ExperimentRunner")
    def test_csv_to_file(self, mock_runner, cli_config, table, temp_dir, capsys):
        """Test -o writes the CSV and manifest and prints the gap summary."""
        mock_runner.return_value.run_table.return_value = table
        output = temp_dir / "table2.csv"
        code = _run(cli_config, "reproduce", "--table", "2", "--reps", "3", "-o", str(output))
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["setting"] == "B"
        assert summary["bbp_gap"]["mean"] == pytest.approx(7.5)
        assert mock_runner.call_args.kwargs["reps"] == 3
        assert len(pd.read_csv(output)) == 2
        assert (temp_dir / "table2.csv.manifest.json").exists()
