"""Command-line entry points for validation, analysis, simulation, and the
API service.

Exit codes: 0 success, 1 constraint violations or failed checks, 2 parse or
I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import (
    compare,
    derive_rules,
    export_plot_data,
    find_crossovers,
    partition_greenest,
    savings,
    simplify_partition,
)
from .errors import (
    ConflictError,
    EcoloopError,
    ModelError,
    ProfileError,
    RuleConfigError,
    UnmonitoredParameterError,
    WorkloadError,
)
from .model import load_model, propagate_selection, structural_closure, validate_configuration
from .profiles import chain as make_chain, check_repository_against_model, load_repository
from .rules import dump_rules, load_rules
from .simulation import (
    Phase,
    RuntimeParams,
    WorkloadTrace,
    generate_workload,
    oracle_lower_bound,
    report,
    run_adaptive,
    run_static,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2

CODECS = ("Compression.LAME", "Compression.Vorbis", "Compression.Speex")


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ECOLOOP_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_grid(text: str | None, repo) -> list[float]:
    if text is None:
        # default: union of codec profile knots
        knots: set[float] = set()
        for key in repo.keys():
            if key[0] == "Compression":
                knots.update(repo.get(*key).knots)
        return sorted(knots)
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise WorkloadError(f"--grid expects lo:hi:steps, got {text!r}") from exc
    if steps < 1 or hi <= lo:
        raise WorkloadError("--grid needs hi > lo and steps >= 1")
    return [lo + (hi - lo) * i / steps for i in range(steps + 1)]


def _write_json(path: Path, document) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return path


def cmd_validate(args) -> int:
    model = load_model(args.model)
    selection = [s for s in args.select.split(",") if s]
    closed = structural_closure(model, selection)
    result = validate_configuration(model, closed)
    if result.ok:
        print("valid")
        return EXIT_OK
    for violation in result.violations:
        print(f"violation [{violation.rule}]: {violation.message}")
    return EXIT_VIOLATION


def cmd_analyze(args) -> int:
    model = load_model(args.model)
    repo = load_repository(args.profiles)
    check_repository_against_model(repo, model)
    out = _out_dir(args)
    grid = _parse_grid(args.grid, repo)

    artifacts: list[str] = []
    rules = []
    crossover_doc = []
    partition_doc = {}

    if args.mode in ("local", "both"):
        series = compare(repo, model, [make_chain(("Compression", c)) for c in CODECS], grid)
        artifacts.append(str(export_plot_data(series, out / "local_comparison.csv")))
        for i in range(len(series)):
            for j in range(i + 1, len(series)):
                crossover_doc.append({
                    "a": series[i].label, "b": series[j].label, "mode": "local",
                    "crossovers": [c.to_json() for c in find_crossovers(series[i], series[j])],
                })
        partition = partition_greenest(series)
        partition_doc["local"] = partition.to_json()
        rules.extend(derive_rules(partition, guard={"storage": "local"},
                                  hysteresis=args.hysteresis, priority_base=1))

    if args.mode in ("remote", "both"):
        chains = [make_chain(("Compression", c, "output_size"), ("Communication",), label=c)
                  for c in CODECS]
        series = compare(repo, model, chains, grid)
        artifacts.append(str(export_plot_data(series, out / "remote_comparison.csv")))
        for i in range(len(series)):
            for j in range(i + 1, len(series)):
                crossover_doc.append({
                    "a": series[i].label, "b": series[j].label, "mode": "remote",
                    "crossovers": [c.to_json() for c in find_crossovers(series[i], series[j])],
                })
        partition = simplify_partition(partition_greenest(series), series)
        partition_doc["remote"] = partition.to_json()
        rules.extend(derive_rules(partition, guard={"storage": "remote"},
                                  hysteresis=args.hysteresis,
                                  priority_base=1 + len(rules)))

    artifacts.append(str(_write_json(out / "crossovers.json", {"pairs": crossover_doc})))
    artifacts.append(str(_write_json(out / "partition.json", partition_doc)))
    artifacts.append(str(_write_json(out / "rules.json", dump_rules(rules))))

    baseline_label = CODECS[0]
    savings_docs = []
    for alt in CODECS[1:]:
        local_report = savings(repo, make_chain(("Compression", baseline_label)),
                               make_chain(("Compression", alt)), grid)
        savings_docs.append(local_report.to_json())
    artifacts.append(str(_write_json(out / "savings.json", {"reports": savings_docs})))

    for path in artifacts:
        print(path)
    return EXIT_OK


def _load_initial(model, text: str):
    selection = [s for s in text.split(",") if s]
    result = propagate_selection(model, selection)
    config = result.configuration
    check = validate_configuration(model, config)
    if not check.ok:
        raise ConflictError("initial configuration is invalid",
                            violations=check.violations)
    return config


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    repo = load_repository(args.profiles)
    check_repository_against_model(repo, model)
    out = _out_dir(args)

    if args.workload == "reference":
        from .simulation import reference_workload
        trace = reference_workload()
    else:
        trace = WorkloadTrace.load_jsonl(args.workload)

    initial = _load_initial(model, args.initial)
    params = RuntimeParams(window=args.window,
                           monitor_cost_j=args.monitor_cost,
                           reconfig_cost_j=args.reconfig_cost)

    artifacts: list[str] = []
    if args.compare:
        rules = load_rules(args.rules) if args.rules else []
        if not rules:
            raise RuleConfigError("--compare needs --rules")
        results = [run_adaptive(trace, initial, rules, repo, model, params)]
        labels = ["adaptive"]
        for codec in CODECS:
            static_config = propagate_selection(
                model, {"Store.Remote", codec}).configuration
            results.append(run_static(trace, static_config, repo, model))
            labels.append(f"static-remote-{codec.split('.')[-1]}")
        comparison = report(results, labels)
        artifacts.append(str(_write_json(out / "comparison.json", comparison.to_json())))
        csv_path = out / "comparison.csv"
        csv_path.write_text(comparison.to_csv())
        artifacts.append(str(csv_path))
        text_path = out / "comparison.txt"
        text_path.write_text(comparison.to_text())
        artifacts.append(str(text_path))
        oracle = oracle_lower_bound(trace, repo, model)
        artifacts.append(str(_write_json(out / "oracle.json",
                                         {"lower_bound_j": oracle})))
        result = results[0]
    elif args.static or not args.rules:
        result = run_static(trace, initial, repo, model)
    else:
        rules = load_rules(args.rules)
        result = run_adaptive(trace, initial, rules, repo, model, params)

    artifacts.insert(0, str(_write_json(out / "result.json", result.to_json())))
    log_path = out / "adaptation_log.jsonl"
    log_path.write_text("".join(line + "\n"
                                for line in result.adaptation_log.to_json_lines()))
    artifacts.append(str(log_path))
    for path in artifacts:
        print(path)
    return EXIT_OK


def cmd_workload(args) -> int:
    phases = [Phase.from_json(doc) for doc in json.loads(args.phases)]
    trace = generate_workload(phases, seed=args.seed, capacity=args.capacity)
    path = trace.save_jsonl(args.dest)
    print(path)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = load_model(args.model)
    repo = load_repository(args.profiles)
    check_repository_against_model(repo, model)
    app = create_app(model, repo, queue_bound=args.queue_bound)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_fit_dataset(args) -> int:
    from . import fitting

    out = Path(args.dest)
    profiles_doc = fitting.build_profiles_document()
    checks = fitting.verify_dataset(profiles_doc)
    _write_json(out / "profiles" / "mediastore.json", profiles_doc)
    _write_json(out / "models" / "mediastore.json", fitting.build_model_document())
    _write_json(out / "rules" / "mediastore.json", fitting.build_rules_document())
    print(f"dataset verified ({len(checks)} checks), written under {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecoloop")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a configuration selection")
    p.add_argument("--model", required=True)
    p.add_argument("--select", required=True,
                   help="comma-separated node ids, e.g. Store.Local,Compression.LAME")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="comparison curves, crossovers, partition, rules")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--out", default=None, help="output directory (or $ECOLOOP_OUT)")
    p.add_argument("--grid", default=None, help="lo:hi:steps, default: profile knots")
    p.add_argument("--mode", choices=("local", "remote", "both"), default="both")
    p.add_argument("--hysteresis", type=float, default=0.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="replay a workload statically or adaptively")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--workload", required=True,
                   help="JSONL trace path, or 'reference' for the bundled workload")
    p.add_argument("--rules", default=None)
    p.add_argument("--initial", default="Store.Local,Compression.LAME")
    p.add_argument("--static", action="store_true", help="ignore rules, fixed config")
    p.add_argument("--compare", action="store_true",
                   help="adaptive + static codec baselines + savings report")
    p.add_argument("--out", default=None)
    p.add_argument("--window", type=int, default=RuntimeParams.window)
    p.add_argument("--monitor-cost", type=float, default=RuntimeParams.monitor_cost_j)
    p.add_argument("--reconfig-cost", type=float, default=RuntimeParams.reconfig_cost_j)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("workload", help="generate a workload trace from phases")
    p.add_argument("--phases", required=True,
                   help='JSON list, e.g. [{"count":20,"size":4},{"count":20,"uniform":[96,160]}]')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity", type=float, default=4096.0)
    p.add_argument("--dest", required=True)
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--queue-bound", type=int, default=4)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fit-dataset", help="rebuild and verify the bundled dataset")
    p.add_argument("--dest", default=".")
    p.set_defaults(func=cmd_fit_dataset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnmonitoredParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ConflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for violation in exc.violations:
            print(f"violation [{violation.rule}]: {violation.message}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ModelError, ProfileError, WorkloadError, RuleConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EcoloopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
