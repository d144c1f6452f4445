"""Command-line pipeline: train, merge, evaluate, tvsa, report.

Every subcommand is deterministic given its inputs and seed, and every
output set carries a manifest (JSON next to the outputs) recording the
tool version, argument values, and SHA-256 digests of all input and output
files.  Data outputs (archive CSVs, sidecars, traces, SVGs) are
byte-reproducible on rerun; only the manifest's wall-clock field varies.

Exit codes: 0 success, 2 usage or input error, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .batch import BatchEvaluator
from .data import ScenarioLoadError, load_scenarios
from .environment import decision_dim, decision_names, export_trace, simulate_day
from .grid_model import (
    MicrogridConfig,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
)
from .moea import (
    EpsilonArchive,
    MoeaConfig,
    merge_archives,
    read_archive_csv,
    run,
    write_archive_csv,
)
from .plots import pareto_scatter_svg, tvsa_stacked_bars_svg
from .policy import (
    DEFAULT_HIDDEN_DIM,
    InputNormalization,
    PolicyNetwork,
    load_policy,
)
from .tvsa import build_report, export_report_csv

OBJECTIVE_NAMES = ("cost", "emission", "heat_waste")
DEFAULT_EPSILONS = (10.0, 1.0, 0.01)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_manifest(
    path: Path,
    command: str,
    arguments: dict,
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    started: float,
) -> None:
    _write_json(
        path,
        {
            "tool": "chpdispatch",
            "version": __version__,
            "command": command,
            "arguments": arguments,
            "input_digests": {str(p): _digest(Path(p)) for p in inputs},
            "output_digests": {str(p): _digest(Path(p)) for p in outputs},
            "wall_clock_s": round(time.monotonic() - started, 3),
        },
    )


def _resolve_config(config_path: str | None) -> tuple[MicrogridConfig, list[Path]]:
    if config_path is None:
        return default_config("winter"), []
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return load_config(path), [path]


def _sidecar_path(archive_csv: Path) -> Path:
    return archive_csv.with_suffix(".json")


def _load_sidecar(archive_csv: Path) -> dict:
    sidecar = _sidecar_path(archive_csv)
    if not sidecar.exists():
        raise FileNotFoundError(f"archive sidecar not found: {sidecar}")
    return json.loads(sidecar.read_text())


def _parse_epsilons(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad epsilon list {text!r}") from exc
    if len(values) != 3:
        raise ValueError("exactly three epsilons are required (cost,emission,heat_waste)")
    return values


def _train_one_seed(
    scenarios_path: str,
    config_path: str | None,
    hidden_dim: int,
    epsilons: tuple[float, ...],
    nfe: int,
    population: int,
    bound: float,
    seed: int,
) -> EpsilonArchive:
    scenarios = load_scenarios(scenarios_path)
    config = _resolve_config(config_path)[0]
    normalization = InputNormalization.from_scenarios(scenarios)
    evaluator = BatchEvaluator(scenarios, config, normalization, hidden_dim=hidden_dim)
    moea_config = MoeaConfig(
        genome_length=evaluator.genome_length,
        epsilons=epsilons,
        max_nfe=nfe,
        population_size=population,
        bound=bound,
    )
    return run(moea_config, evaluator, seed)


def _cmd_train(args: argparse.Namespace) -> int:
    started = time.monotonic()
    scenarios_path = Path(args.scenarios)
    scenarios = load_scenarios(scenarios_path)
    config, config_inputs = _resolve_config(args.config)
    epsilons = _parse_epsilons(args.epsilons)
    seeds = args.seed if args.seed else [0]
    normalization = InputNormalization.from_scenarios(scenarios)
    evaluator = BatchEvaluator(scenarios, config, normalization, hidden_dim=args.hidden)

    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("CHPDISPATCH_WORKERS", "1"))
    job = (
        str(scenarios_path),
        args.config,
        args.hidden,
        epsilons,
        args.nfe,
        args.population,
        args.bound,
    )
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            archives = list(pool.map(_train_one_seed, *zip(*[job + (s,) for s in seeds])))
    else:
        archives = [_train_one_seed(*job, s) for s in seeds]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    for seed, archive in zip(seeds, archives):
        stem = out if len(seeds) == 1 else out.with_name(f"{out.name}_seed{seed}")
        csv_path = stem.with_suffix(".csv")
        write_archive_csv(archive, csv_path, OBJECTIVE_NAMES)
        _write_json(
            _sidecar_path(csv_path),
            _sidecar_doc(config, normalization, args.hidden, evaluator, epsilons, [seed], args),
        )
        outputs += [csv_path, _sidecar_path(csv_path)]
        feasible = sum(1 for m in archive if m.feasible)
        print(f"seed {seed}: archive size {len(archive)}, feasible {feasible}")
    _write_manifest(
        out.with_suffix(".manifest.json"),
        "train",
        {
            "scenarios": str(scenarios_path),
            "config": args.config,
            "seeds": seeds,
            "nfe": args.nfe,
            "population": args.population,
            "epsilons": list(epsilons),
            "bound": args.bound,
            "hidden": args.hidden,
        },
        [scenarios_path, *config_inputs],
        outputs,
        started,
    )
    return 0


def _sidecar_doc(
    config: MicrogridConfig,
    normalization: InputNormalization,
    hidden_dim: int,
    evaluator: BatchEvaluator,
    epsilons: tuple[float, ...],
    seeds: list[int],
    args: argparse.Namespace | None,
) -> dict:
    return {
        "objective_names": list(OBJECTIVE_NAMES),
        "epsilons": list(epsilons),
        "seeds": seeds,
        "nfe": args.nfe if args is not None else None,
        "population_size": args.population if args is not None else None,
        "bound": args.bound if args is not None else None,
        "hidden_dim": hidden_dim,
        "genome_length": evaluator.genome_length,
        "decision_names": decision_names(config),
        "normalization": {
            "offsets": list(normalization.offsets),
            "scales": list(normalization.scales),
        },
        "microgrid_config": config_to_dict(config),
    }


def _cmd_merge(args: argparse.Namespace) -> int:
    started = time.monotonic()
    paths = [Path(p) for p in args.archives]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"archive not found: {p}")
    sidecars = [_load_sidecar(p) for p in paths]
    epsilons = tuple(sidecars[0]["epsilons"])
    for p, sc in zip(paths[1:], sidecars[1:]):
        if tuple(sc["epsilons"]) != epsilons:
            raise ValueError(f"{p}: epsilon vector differs from {paths[0]}")
        for key in ("normalization", "microgrid_config", "hidden_dim", "genome_length"):
            if sc[key] != sidecars[0][key]:
                raise ValueError(f"{p}: {key} differs from {paths[0]}; archives are incompatible")
    merged = merge_archives([read_archive_csv(p, epsilons) for p in paths])

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_suffix(".csv")
    write_archive_csv(merged, csv_path, OBJECTIVE_NAMES)
    doc = dict(sidecars[0])
    doc["seeds"] = sorted({s for sc in sidecars for s in sc["seeds"]})
    doc["nfe"] = sum(sc["nfe"] for sc in sidecars if sc.get("nfe"))
    doc["merged_from"] = [str(p) for p in paths]
    _write_json(_sidecar_path(csv_path), doc)
    _write_manifest(
        out.with_suffix(".manifest.json"),
        "merge",
        {"archives": [str(p) for p in paths]},
        paths + [_sidecar_path(p) for p in paths],
        [csv_path, _sidecar_path(csv_path)],
        started,
    )
    print(f"merged archive size {len(merged)}")
    return 0


def _policy_from_args(
    args: argparse.Namespace,
) -> tuple[PolicyNetwork, MicrogridConfig, list[Path]]:
    """Resolve the policy and microgrid config from either an archive row
    or a standalone policy artifact."""
    if args.archive is not None:
        archive_path = Path(args.archive)
        if not archive_path.exists():
            raise FileNotFoundError(f"archive not found: {archive_path}")
        sidecar = _load_sidecar(archive_path)
        epsilons = tuple(sidecar["epsilons"])
        archive = read_archive_csv(archive_path, epsilons)
        members = archive.members
        if not 0 <= args.row < len(members):
            raise ValueError(f"row {args.row} out of range for archive of {len(members)}")
        config = config_from_dict(sidecar["microgrid_config"])
        normalization = InputNormalization(
            offsets=tuple(sidecar["normalization"]["offsets"]),
            scales=tuple(sidecar["normalization"]["scales"]),
        )
        genome = members[args.row].genome
        policy = PolicyNetwork.decode(
            genome,
            input_dim=len(normalization.offsets),
            hidden_dim=sidecar["hidden_dim"],
            output_dim=len(sidecar["decision_names"]),
            normalization=normalization,
        )
        return policy, config, [archive_path, _sidecar_path(archive_path)]
    policy_path = Path(args.policy)
    if not policy_path.exists():
        raise FileNotFoundError(f"policy artifact not found: {policy_path}")
    policy = load_policy(policy_path)
    config, config_inputs = _resolve_config(args.config)
    return policy, config, [policy_path, *config_inputs]


def _check_architecture(policy: PolicyNetwork, config: MicrogridConfig) -> None:
    expected = decision_dim(config)
    if policy.output_dim != expected:
        raise ValueError(
            f"policy has {policy.output_dim} outputs but the config needs {expected}"
        )


def _cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    scenarios_path = Path(args.scenarios)
    scenarios = load_scenarios(scenarios_path)
    policy, config, inputs = _policy_from_args(args)
    _check_architecture(policy, config)

    evaluator = BatchEvaluator(
        scenarios, config, policy.normalization, hidden_dim=policy.hidden_dim
    )
    objectives, violation = evaluator(policy.encode())

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    doc = {name: float(v) for name, v in zip(OBJECTIVE_NAMES, objectives)}
    doc["violation"] = violation
    objective_path = out / "objectives.json"
    _write_json(objective_path, doc)
    outputs.append(objective_path)
    for scenario in scenarios:
        day = simulate_day(policy, scenario, config)
        trace_path = out / f"trace_{scenario.label}.csv"
        export_trace(day.trace, trace_path)
        outputs.append(trace_path)
    print(
        "cost={!r} emission={!r} heat_waste={!r} violation={!r}".format(
            float(objectives[0]), float(objectives[1]), float(objectives[2]), violation
        )
    )
    _write_manifest(
        out / "manifest.json",
        "evaluate",
        {
            "scenarios": str(scenarios_path),
            "archive": args.archive,
            "row": args.row,
            "policy": args.policy,
            "config": args.config,
        },
        [scenarios_path, *inputs],
        outputs,
        started,
    )
    return 0


def _cmd_tvsa(args: argparse.Namespace) -> int:
    started = time.monotonic()
    scenarios_path = Path(args.scenarios)
    scenarios = load_scenarios(scenarios_path)
    if len(scenarios) < 2:
        raise ValueError("TVSA needs at least 2 scenarios")
    policy, config, inputs = _policy_from_args(args)
    _check_architecture(policy, config)

    report = build_report(
        policy, scenarios, gradient_at=args.gradient_at.replace("-", "_"), config=config
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    csv_path = out / "tvsa.csv"
    export_report_csv(report, csv_path)
    outputs.append(csv_path)
    for d, label in enumerate(report.decision_labels):
        svg_path = out / f"tvsa_{label}.svg"
        svg_path.write_text(tvsa_stacked_bars_svg(report, d))
        outputs.append(svg_path)
    _write_manifest(
        out / "manifest.json",
        "tvsa",
        {
            "scenarios": str(scenarios_path),
            "archive": args.archive,
            "row": args.row,
            "policy": args.policy,
            "config": args.config,
            "gradient_at": args.gradient_at,
        },
        [scenarios_path, *inputs],
        outputs,
        started,
    )
    print(f"wrote TVSA for {len(report.decision_labels)} decisions to {out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    started = time.monotonic()
    archive_path = Path(args.archive)
    if not archive_path.exists():
        raise FileNotFoundError(f"archive not found: {archive_path}")
    sidecar = _load_sidecar(archive_path)
    archive = read_archive_csv(archive_path, tuple(sidecar["epsilons"]))
    members = archive.members
    if not members:
        raise ValueError(f"{archive_path}: archive is empty")
    reference = None
    if args.reference is not None:
        reference = [float(x) for x in args.reference.split(",")]
        if len(reference) != 3:
            raise ValueError("reference point needs exactly three values")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    objectives = np.array([m.objectives for m in members])
    svg_path = out / "pareto.svg"
    svg_path.write_text(pareto_scatter_svg(objectives, OBJECTIVE_NAMES, reference))

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", *OBJECTIVE_NAMES, "violation", "operator"])
        for i, m in enumerate(members):
            writer.writerow(
                [i]
                + [repr(float(o)) for o in m.objectives]
                + [repr(m.violation), m.operator_tag]
            )
    _write_manifest(
        out / "manifest.json",
        "report",
        {"archive": str(archive_path), "reference": args.reference},
        [archive_path, _sidecar_path(archive_path)],
        [svg_path, summary_path],
        started,
    )
    print(f"report for {len(members)} solutions written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chpdispatch",
        description="Train, merge, evaluate, and explain microgrid dispatch policies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run the evolutionary policy search")
    train.add_argument("--scenarios", required=True, help="training scenario CSV")
    train.add_argument("--config", default=None, help="microgrid config JSON")
    train.add_argument(
        "--seed", type=int, action="append", help="random seed (repeat for multi-seed runs)"
    )
    train.add_argument("--nfe", type=int, default=20000, help="evaluation budget per seed")
    train.add_argument("--population", type=int, default=100)
    train.add_argument(
        "--epsilons",
        default=",".join(str(e) for e in DEFAULT_EPSILONS),
        help="archive epsilons: cost,emission,heat_waste",
    )
    train.add_argument("--bound", type=float, default=10.0, help="weight search half-width")
    train.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN_DIM)
    train.add_argument(
        "--workers",
        type=int,
        default=None,
        help="process count for multi-seed runs (default: CHPDISPATCH_WORKERS or 1)",
    )
    train.add_argument("--out", required=True, help="output path prefix")
    train.set_defaults(func=_cmd_train)

    merge = sub.add_parser("merge", help="merge archives into a joint frontier")
    merge.add_argument("archives", nargs="+", help="archive CSVs to merge")
    merge.add_argument("--out", required=True)
    merge.set_defaults(func=_cmd_merge)

    def add_policy_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("--archive", default=None, help="archive CSV holding the policy")
        p.add_argument("--row", type=int, default=0, help="archive row index")
        p.add_argument("--policy", default=None, help="standalone policy artifact JSON")
        p.add_argument("--config", default=None, help="microgrid config JSON (policy mode)")

    evaluate = sub.add_parser("evaluate", help="evaluate one policy on scenarios")
    evaluate.add_argument("--scenarios", required=True)
    add_policy_source(evaluate)
    evaluate.add_argument("--out", required=True, help="output directory")
    evaluate.set_defaults(func=_cmd_evaluate)

    tvsa = sub.add_parser("tvsa", help="time-varying sensitivity analysis of a policy")
    tvsa.add_argument("--scenarios", required=True)
    add_policy_source(tvsa)
    tvsa.add_argument(
        "--gradient-at",
        choices=("mean", "per-scenario"),
        default="mean",
        help="gradient evaluation point",
    )
    tvsa.add_argument("--out", required=True, help="output directory")
    tvsa.set_defaults(func=_cmd_tvsa)

    report = sub.add_parser("report", help="Pareto scatter and summary table")
    report.add_argument("--archive", required=True)
    report.add_argument(
        "--reference", default=None, help="objective triple to overlay, e.g. 15784,189.79,0.79"
    )
    report.add_argument("--out", required=True, help="output directory")
    report.set_defaults(func=_cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("evaluate", "tvsa"):
        if (args.archive is None) == (args.policy is None):
            print("error: provide exactly one of --archive or --policy", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 2
    except (ScenarioLoadError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
