"""Command-line entry point: generate, upper-bound, simulate, verify and reproduce."""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy
import yaml
from dotenv import load_dotenv

from src.agents.adp_heuristic import AdpHeuristicPolicy
from src.agents.bid_price import BidPricePolicy
from src.agents.greedy import GreedyPolicy
from src.analysis.experiments import (
    TABLE_SETTINGS,
    ExperimentRunner,
    capacity_scaling,
    dp_ratio_nondecreasing,
    summarize,
)
from src.analysis.verification import (
    VerificationRunner,
    random_assortment_corpus,
    random_corpus,
)
from src.assortment.bid_price import AssortmentBidPricePolicy
from src.assortment.choice import DEFAULT_MAX_FAMILY, single_product_choice
from src.input.encodings import encode_high_variance, encode_independent
from src.input.generator import (
    DEFAULT_CAPACITY_KAPPA,
    AirlineConfig,
    AssortmentBounds,
    RandomBounds,
    gen_airline,
    gen_random_assortment,
    gen_random_small,
)
from src.input.instance_io import (
    SCHEMA_VERSION,
    instance_to_dict,
    read_instance,
    read_survival_spec,
)
from src.lp.builders import build_adp_lp, build_assort_adp_lp
from src.lp.program import solve, write_lp_file
from src.lp.weights import extract_weights
from src.model.instance import Instance
from src.model.validation import require_valid
from src.simulation.simulator import monte_carlo
from src.utils.config import get_config_value, load_config, solver_options
from src.utils.errors import NrmError
from src.utils.logging_setup import setup_logging

logger = logging.getLogger("src.main")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GENERATION = 3
EXIT_SOLVE = 4
EXIT_INVARIANT = 5

CSV_FLOAT_FORMAT = "%.6g"


@dataclass
class RunManifest:
    """Provenance of one command run, written next to its primary output."""
    command: str
    flags: Dict[str, Any]
    seeds: Dict[str, Any] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    outputs: List[str] = field(default_factory=list)

    @staticmethod
    def manifest_path(output: Path) -> Path:
        return output.with_name(output.name + ".manifest.json")

    def write(self, output: Path) -> Path:
        self.finished = _now()
        path = self.manifest_path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _versions(config: Dict[str, Any]) -> Dict[str, str]:
    return {
        "nrm": str(get_config_value(config, "project", "version", default="unknown")),
        "instance_schema": SCHEMA_VERSION,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _default_seed(config: Dict[str, Any]) -> int:
    env = os.getenv("NRM_SEED")
    if env is not None:
        return int(env)
    return int(get_config_value(config, "simulation", "seed", default=1))


class Command:
    """Shared state of one CLI invocation."""

    def __init__(self, args: argparse.Namespace, config: Dict[str, Any]):
        self.args = args
        self.config = config
        self.seed = args.seed if getattr(args, "seed", None) is not None else _default_seed(config)
        self.solver_kwargs = solver_options(config)
        if getattr(args, "backend", None):
            self.solver_kwargs["backend"] = args.backend
        self.manifest = RunManifest(
            command=args.command,
            flags={k: v for k, v in vars(args).items() if k != "handler"},
            seeds={"seed": self.seed},
            versions=_versions(config),
            started=_now(),
        )

    def emit_json(self, payload: Dict[str, Any]) -> None:
        """Print ``payload``; with ``-o`` also write it plus its manifest."""
        output = getattr(self.args, "output", None)
        if output:
            path = Path(output)
            payload = {**payload, "manifest": RunManifest.manifest_path(path).name}
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
            self.manifest.outputs.append(str(path))
            self.manifest.write(path)
        print(json.dumps(payload, indent=2))

    def max_family(self) -> int:
        return int(
            get_config_value(self.config, "assortment", "max_family", default=DEFAULT_MAX_FAMILY)
        )

    def revenue_ordered(self) -> bool:
        return bool(
            get_config_value(self.config, "assortment", "revenue_ordered_mnl", default=True)
        )

    def capacity_kappa(self) -> float:
        return float(
            get_config_value(
                self.config, "instances", "capacity_kappa", default=DEFAULT_CAPACITY_KAPPA
            )
        )

    def random_bounds(self) -> RandomBounds:
        return RandomBounds.from_dict(
            get_config_value(self.config, "instances", "random_small", default={})
        )

    def max_cells(self) -> int:
        return int(get_config_value(self.config, "oracle", "max_cells", default=10_000_000))


def _build_instance(cmd: Command) -> Instance:
    args, config = cmd.args, cmd.config
    setting = args.setting
    if setting in ("a", "b"):
        if args.mu is None or args.sigma is None:
            raise ValueError(f"--setting {setting} needs --mu and --sigma")
        kappa = args.capacity_kappa
        if kappa is None:
            kappa = cmd.capacity_kappa()
        return gen_airline(setting.upper(), AirlineConfig(
            args.mu, args.sigma, seed=cmd.seed, capacity_kappa=kappa,
            horizon_override=args.horizon_override,
        ))
    if setting in ("hv", "indep"):
        if not args.spec_file:
            raise ValueError(f"--setting {setting} needs --spec-file")
        data = read_survival_spec(args.spec_file)
        if setting == "indep":
            return encode_independent(data["lambdas"], data["types"], data["capacities"])
        if "spec" not in data:
            raise ValueError("--setting hv needs survival rates 'rho' in the spec file")
        return encode_high_variance(data["spec"], data["types"], data["capacities"])
    if setting == "random":
        return gen_random_small(cmd.seed, cmd.random_bounds())
    bounds = AssortmentBounds.from_dict(
        get_config_value(config, "verification", "random_assortment", default={})
    )
    return gen_random_assortment(cmd.seed, bounds)


def cmd_generate(cmd: Command) -> int:
    try:
        instance = require_valid(_build_instance(cmd))
    except (NrmError, ValueError, OSError) as e:
        logger.error("Generation failed: %s", e)
        return EXIT_GENERATION

    summary = instance.summary()
    logger.info("Generated instance: %s", summary)
    if not cmd.args.output:
        print(json.dumps(instance_to_dict(instance), indent=1))
        return EXIT_OK

    path = Path(cmd.args.output)
    data = instance_to_dict(instance)
    data["manifest"] = RunManifest.manifest_path(path).name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    cmd.manifest.outputs.append(str(path))
    cmd.manifest.write(path)

    print("=" * 60)
    print(f"Instance written to: {path}")
    print("=" * 60)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _load(cmd: Command) -> Instance:
    return require_valid(read_instance(cmd.args.file))


def cmd_upper_bound(cmd: Command) -> int:
    try:
        instance = _load(cmd)
        if cmd.args.assort:
            choice = instance.choice
            if choice is None:
                instance, choice = single_product_choice(instance)
            lp, _ = build_assort_adp_lp(instance, choice, cmd.max_family())
        else:
            lp, _ = build_adp_lp(instance)
        if cmd.args.lp_file:
            write_lp_file(lp, cmd.args.lp_file)
            logger.info("Wrote LP to %s", cmd.args.lp_file)
        solution = solve(lp, **cmd.solver_kwargs)
    except (NrmError, ValueError, OSError) as e:
        logger.error("Upper bound failed: %s", e)
        return EXIT_SOLVE

    cmd.emit_json({
        "lp_value": solution.objective if solution.is_optimal else None,
        "status": solution.status,
    })
    return EXIT_OK if solution.is_optimal else EXIT_SOLVE


def _policy(cmd: Command, instance: Instance):
    name = cmd.args.policy
    if name == "bbp":
        return BidPricePolicy(instance)
    if name == "greedy":
        return GreedyPolicy(instance)
    lp, index = build_adp_lp(instance)
    solution = solve(lp, **cmd.solver_kwargs).require_optimal("ADP LP")
    return AdpHeuristicPolicy(instance, extract_weights(solution, index))


def cmd_simulate(cmd: Command) -> int:
    args = cmd.args
    try:
        instance = _load(cmd)
        choice = None
        if args.assort:
            choice = instance.choice
            if choice is None:
                instance, choice = single_product_choice(instance)
            policy = AssortmentBidPricePolicy(
                instance,
                choice,
                max_family=cmd.max_family(),
                revenue_ordered=cmd.revenue_ordered(),
            )
        else:
            policy = _policy(cmd, instance)
        result = monte_carlo(instance, policy, args.reps, cmd.seed, choice, progress=args.progress)
        if args.trace_csv:
            result.write_trace_csv(args.trace_csv)
    except (NrmError, ValueError, OSError) as e:
        logger.error("Simulation failed: %s", e)
        return EXIT_SOLVE

    cmd.emit_json(result.to_dict())
    return EXIT_OK


def cmd_verify(cmd: Command) -> int:
    args, config = cmd.args, cmd.config
    corpus = []
    try:
        if args.file:
            corpus.append((Path(args.file).stem, read_instance(args.file)))
        if args.random_corpus or not (args.file or args.assortment_corpus):
            size = args.random_corpus or int(
                get_config_value(config, "verification", "corpus_size", default=200)
            )
            corpus.extend(random_corpus(size, cmd.seed, cmd.random_bounds()))
        if args.assortment_corpus:
            bounds = AssortmentBounds.from_dict(
                get_config_value(config, "verification", "random_assortment", default={})
            )
            corpus.extend(random_assortment_corpus(args.assortment_corpus, cmd.seed, bounds))
    except (NrmError, ValueError, OSError) as e:
        logger.error("Could not assemble the verification corpus: %s", e)
        return EXIT_SOLVE

    triage_dir = args.triage_dir or str(
        Path(get_config_value(config, "output", "results_dir", default="results")) / "triage"
    )
    runner = VerificationRunner(
        solver_kwargs=cmd.solver_kwargs,
        max_cells=cmd.max_cells(),
        max_family=cmd.max_family(),
        corrupt_bid_prices=args.corrupt_bid_prices,
        triage_dir=triage_dir,
        progress=args.progress,
    )
    report = runner.run(corpus)
    payload = report.to_dict()
    passed = report.passed
    if args.capacity_scaling:
        try:
            frame = capacity_scaling(
                corpus[0][1],
                factors=args.capacity_scaling,
                max_cells=cmd.max_cells(),
                solver_kwargs=cmd.solver_kwargs,
            )
        except (NrmError, ValueError) as e:
            logger.error("Capacity scaling failed: %s", e)
            return EXIT_SOLVE
        monotone = dp_ratio_nondecreasing(frame)
        payload["capacity_scaling"] = {
            "dp_ratio_nondecreasing": monotone,
            "rows": frame.astype(object).where(frame.notna(), None).to_dict("records"),
        }
        passed = passed and monotone
    cmd.emit_json(payload)
    return EXIT_OK if passed else EXIT_INVARIANT


def cmd_reproduce(cmd: Command) -> int:
    args, config = cmd.args, cmd.config
    reps = args.reps or int(get_config_value(config, "experiments", "reps", default=1000))
    configs = get_config_value(config, "experiments", "configs")
    runner = ExperimentRunner(
        reps=reps,
        capacity_kappa=cmd.capacity_kappa(),
        solver_kwargs=cmd.solver_kwargs,
        progress=args.progress,
        **({"configs": configs} if configs else {}),
    )
    setting = TABLE_SETTINGS[args.table]
    try:
        df = runner.run_table(setting, cmd.seed)
    except (NrmError, ValueError, OSError) as e:
        logger.error("Reproduction of table %d failed: %s", args.table, e)
        return EXIT_SOLVE

    stats = summarize(df)
    logger.info("Table %d (setting %s): %s", args.table, setting, stats)
    if not args.output:
        print(df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT), end="")
        return EXIT_OK

    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    cmd.manifest.outputs.append(str(path))
    cmd.manifest.write(path)
    summary = {"table": args.table, "setting": setting, "output": str(path), **stats}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrm",
        description="Bid-price control for network revenue management with Markovian arrivals",
    )
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="Path to configuration file (default: $NRM_CONFIG or config/config.yaml)",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(
        name: str, handler: Callable[[Command], int], help_text: str
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--seed", type=int, default=None, help="Seed (default: $NRM_SEED or config)")
        p.add_argument(
            "-o", "--output", type=str, default=None, help="Output file (default: stdout)"
        )
        return p

    p = add("generate", cmd_generate, "Generate an instance file")
    p.add_argument(
        "--setting", required=True, choices=["a", "b", "hv", "indep", "random", "random-assort"]
    )
    p.add_argument("--mu", type=float, help="Mean total demand (settings a, b)")
    p.add_argument("--sigma", type=float, help="Standard deviation of total demand (settings a, b)")
    p.add_argument("--capacity-kappa", type=float, default=None, help="Capacity scaling factor")
    p.add_argument("--horizon-override", type=positive_int, default=None)
    p.add_argument(
        "--spec-file", type=str, help="Survival-rate/type file for settings hv and indep"
    )

    p = add("upper-bound", cmd_upper_bound, "Solve the ADP LP upper bound")
    p.add_argument("file")
    p.add_argument("--assort", action="store_true", help="Use the assortment LP")
    p.add_argument("--backend", choices=["auto", "simplex", "highs"], default=None)
    p.add_argument(
        "--lp-file", type=str, default=None, help="Also export the LP in CPLEX LP format"
    )

    p = add("simulate", cmd_simulate, "Monte-Carlo a policy")
    p.add_argument("file")
    p.add_argument("--policy", choices=["bbp", "adp", "greedy"], default="bbp")
    p.add_argument("--reps", type=positive_int, default=None)
    p.add_argument("--assort", action="store_true", help="Offer assortments (bbp only)")
    p.add_argument("--backend", choices=["auto", "simplex", "highs"], default=None)
    p.add_argument("--trace-csv", type=str, default=None, help="Per-replication reward CSV")
    p.add_argument("--progress", action="store_true")

    p = add("verify", cmd_verify, "Run the invariant suite")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("--random-corpus", type=positive_int, default=None, metavar="N")
    p.add_argument("--assortment-corpus", type=positive_int, default=None, metavar="N")
    p.add_argument("--corrupt-bid-prices", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--triage-dir", type=str, default=None)
    p.add_argument(
        "--capacity-scaling",
        type=positive_int,
        nargs="+",
        default=None,
        metavar="K",
        help="Also scale the file's capacities by each K and compare exact DP with the LP",
    )
    p.add_argument("--backend", choices=["auto", "simplex", "highs"], default=None)
    p.add_argument("--progress", action="store_true")

    p = add("reproduce", cmd_reproduce, "Reproduce an airline result table")
    p.add_argument("--table", type=int, choices=[1, 2], required=True)
    p.add_argument("--reps", type=positive_int, default=None)
    p.add_argument("--backend", choices=["auto", "simplex", "highs"], default=None)
    p.add_argument("--progress", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, configure logging and dispatch; returns the exit code."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "simulate":
        if args.assort and args.policy != "bbp":
            parser.error("--assort supports only --policy bbp")
    if args.command == "verify" and args.capacity_scaling and not args.file:
        parser.error("--capacity-scaling needs an instance file")

    try:
        config = load_config(args.config)
    except (OSError, yaml.YAMLError) as e:
        parser.error(str(e))
    setup_logging(config, args.verbose)

    if args.command == "simulate" and args.reps is None:
        args.reps = int(get_config_value(config, "simulation", "reps", default=1000))
    return args.handler(Command(args, config))


if __name__ == "__main__":
    sys.exit(main())
