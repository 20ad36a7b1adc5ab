"""Deterministic Media Store exemplar.

Generates save-audio workloads, replays them against a static configuration
or through the adaptation runtime, and accounts energy per event from the
profile repository. Storage fills with the compressed output of whatever
codec is bound; remote mode uploads instead of storing.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .analysis import chain_for_configuration
from .errors import WorkloadError
from .model import Configuration, VariabilityModel
from .profiles import ProfileRepository, compose_energy
from .rules import EcaRule
from .runtime import (
    DEFAULT_MONITOR_COST_J,
    DEFAULT_RECONFIG_COST_J,
    DEFAULT_WINDOW,
    AdaptationLog,
    HookRegistry,
    MonitorState,
    check_rules_against_monitors,
    evaluate,
    observe,
    reconfigure,
)

PARAM_FILE_SIZE = "file_size"
PARAM_FREE_CAPACITY = "free_capacity"
OUTPUT_SIZE_METRIC = "output_size"

REFERENCE_SEED = 7
REFERENCE_CAPACITY_MB = 4096.0


@dataclass(frozen=True)
class MediaStoreNames:
    """Node ids the simulator steers by; defaults match the bundled model."""

    store: str = "Store"
    local: str = "Store.Local"
    remote: str = "Store.Remote"
    compression: str = "Compression"
    communication: str = "Communication"


@dataclass(frozen=True)
class SaveAudioEvent:
    seq: int
    size: float  # MB

    def __post_init__(self):
        if self.size <= 0:
            raise WorkloadError(f"event {self.seq} has non-positive size {self.size!r}")


@dataclass(frozen=True)
class WorkloadTrace:
    events: tuple[SaveAudioEvent, ...]
    storage_capacity: float
    seed: int | None = None

    def summary(self) -> dict:
        return {
            "events": len(self.events),
            "capacity_mb": self.storage_capacity,
            "total_mb": sum(e.size for e in self.events),
        }

    def save_jsonl(self, destination: str | Path) -> Path:
        destination = Path(destination)
        destination.parent.mkdir(parents=True, exist_ok=True)
        with destination.open("w") as fh:
            header = {"capacity_mb": self.storage_capacity, "seed": self.seed,
                      "events": len(self.events)}
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for event in self.events:
                fh.write(json.dumps({"seq": event.seq, "size_mb": event.size}) + "\n")
        return destination

    @classmethod
    def load_jsonl(cls, source: str | Path) -> "WorkloadTrace":
        try:
            lines = Path(source).read_text().splitlines()
        except OSError as exc:
            raise WorkloadError(f"cannot read workload: {exc}") from exc
        if not lines:
            raise WorkloadError("workload file is empty (missing header record)")
        try:
            header = json.loads(lines[0])
            events = tuple(
                SaveAudioEvent(seq=int(doc["seq"]), size=float(doc["size_mb"]))
                for doc in (json.loads(line) for line in lines[1:] if line.strip())
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, WorkloadError):
                raise
            raise WorkloadError(f"malformed workload line: {exc}") from exc
        return cls(events=events, storage_capacity=float(header["capacity_mb"]),
                   seed=header.get("seed"))


@dataclass(frozen=True)
class Phase:
    count: int
    distribution: tuple  # ("const", size) | ("uniform", lo, hi)

    @classmethod
    def const(cls, count: int, size: float) -> "Phase":
        return cls(count, ("const", float(size)))

    @classmethod
    def uniform(cls, count: int, lo: float, hi: float) -> "Phase":
        return cls(count, ("uniform", float(lo), float(hi)))

    @classmethod
    def from_json(cls, doc: Mapping) -> "Phase":
        if "size" in doc:
            return cls.const(int(doc["count"]), doc["size"])
        if "uniform" in doc:
            lo, hi = doc["uniform"]
            return cls.uniform(int(doc["count"]), lo, hi)
        raise WorkloadError(f"phase needs 'size' or 'uniform': {doc!r}")


def generate_workload(phases: Sequence[Phase], seed: int,
                      capacity: float = REFERENCE_CAPACITY_MB,
                      size_range: tuple[float, float] = (4.0, 512.0)) -> WorkloadTrace:
    """Reproducible trace from phase descriptions; sizes must stay inside the
    profile-sampled range."""
    rng = random.Random(seed)
    lo_ok, hi_ok = size_range
    events: list[SaveAudioEvent] = []
    seq = 0
    for phase in phases:
        kind = phase.distribution[0]
        for _ in range(phase.count):
            seq += 1
            if kind == "const":
                size = phase.distribution[1]
            elif kind == "uniform":
                size = rng.uniform(phase.distribution[1], phase.distribution[2])
            else:
                raise WorkloadError(f"unknown phase distribution {kind!r}")
            if size < lo_ok or size > hi_ok:
                raise WorkloadError(
                    f"event size {size!r} outside profile range [{lo_ok}, {hi_ok}]")
            events.append(SaveAudioEvent(seq=seq, size=size))
    return WorkloadTrace(events=tuple(events), storage_capacity=capacity, seed=seed)


def reference_workload(seed: int = REFERENCE_SEED) -> WorkloadTrace:
    """Canonical three-phase workload: small songs, then large recordings,
    then enough big files to exhaust a 4096 MB local store."""
    return generate_workload(
        [Phase.const(20, 4.0), Phase.uniform(20, 96.0, 160.0), Phase.const(100, 512.0)],
        seed=seed, capacity=REFERENCE_CAPACITY_MB)


@dataclass
class StorageState:
    capacity: float
    used: float = 0.0
    mode: str = "local"  # "local" | "remote"

    @property
    def free(self) -> float:
        return self.capacity - self.used

    def can_store(self, amount: float) -> bool:
        return self.used + amount <= self.capacity


@dataclass(frozen=True)
class LedgerEntry:
    seq: int
    config: tuple[str, ...]
    energy_j: Mapping[str, float]
    overhead_j: float

    def event_total(self) -> float:
        return sum(self.energy_j[k] for k in sorted(self.energy_j))

    def to_json(self) -> dict:
        return {"seq": self.seq, "config": list(self.config),
                "energy_j": dict(self.energy_j), "overhead_j": self.overhead_j}


@dataclass
class EnergyLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def charge(self, seq: int, config: tuple[str, ...],
               energy_j: Mapping[str, float], overhead_j: float = 0.0) -> None:
        self.entries.append(LedgerEntry(seq, config, dict(energy_j), overhead_j))

    def totals(self) -> dict:
        by_concern: dict[str, float] = {}
        grand = 0.0
        for entry in self.entries:
            for concern in sorted(entry.energy_j):
                joules = entry.energy_j[concern]
                by_concern[concern] = by_concern.get(concern, 0.0) + joules
                grand += joules
        # exactly-rounded sum: a uniform per-event cost stream totals to
        # cost * len(entries) with no drift
        overhead = math.fsum(entry.overhead_j for entry in self.entries)
        grand += overhead
        return {
            "by_concern": {k: by_concern[k] for k in sorted(by_concern)},
            "overhead_j": overhead,
            "grand_total_j": grand,
        }

    @property
    def grand_total(self) -> float:
        return self.totals()["grand_total_j"]

    @property
    def energy_total(self) -> float:
        """Grand total net of overhead."""
        totals = self.totals()
        return totals["grand_total_j"] - totals["overhead_j"]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries], "totals": self.totals()}


@dataclass
class SimulationResult:
    ledger: EnergyLedger
    adaptation_log: AdaptationLog
    final_config: Configuration
    trace_summary: dict
    overflow_seq: int | None = None

    @property
    def reconfig_overhead_j(self) -> float:
        return math.fsum(e.overhead_j for e in self.adaptation_log.entries)

    @property
    def overhead_total_j(self) -> float:
        """Monitoring overhead (ledger) plus reconfiguration overhead (log)."""
        return self.ledger.totals()["overhead_j"] + self.reconfig_overhead_j

    @property
    def grand_total_j(self) -> float:
        return self.ledger.grand_total + self.reconfig_overhead_j

    @property
    def energy_total_j(self) -> float:
        """Total net of all overhead."""
        return self.ledger.energy_total

    def totals(self) -> dict:
        ledger_totals = self.ledger.totals()
        return {
            "by_concern": ledger_totals["by_concern"],
            "monitoring_overhead_j": ledger_totals["overhead_j"],
            "reconfiguration_overhead_j": self.reconfig_overhead_j,
            "overhead_j": self.overhead_total_j,
            "grand_total_j": self.grand_total_j,
        }

    def to_json(self) -> dict:
        return {
            "final_config": sorted(self.final_config.selected),
            "overflow_seq": self.overflow_seq,
            "trace": self.trace_summary,
            "totals": self.totals(),
            "ledger": self.ledger.to_json(),
            "adaptation_log": self.adaptation_log.to_json(),
        }


def _event_energy(repo: ProfileRepository, model: VariabilityModel,
                  config: Configuration, size: float) -> dict[str, float]:
    """Per-concern joules for one save-audio event under a configuration."""
    chain = chain_for_configuration(model, repo, config)
    composition = compose_energy(repo, chain, size)
    per_concern: dict[str, float] = {}
    for stage, breakdown in zip(chain.stages, composition.breakdown):
        per_concern[stage.concern] = per_concern.get(stage.concern, 0.0) + breakdown.energy
    return per_concern


def _stored_size(repo: ProfileRepository, model: VariabilityModel,
                 config: Configuration, names: MediaStoreNames, size: float) -> float:
    codec = config.bindings(model).get(names.compression)
    profile = repo.get(names.compression, codec)
    return profile.output_at(OUTPUT_SIZE_METRIC, size)


def _mode(config: Configuration, names: MediaStoreNames) -> str:
    return "remote" if names.remote in config.selected else "local"


def _require_runnable(model: VariabilityModel, config: Configuration,
                      names: MediaStoreNames) -> None:
    from .model import validate_configuration

    report = validate_configuration(model, config)
    if not report.ok:
        raise WorkloadError(
            "configuration is not valid: "
            + "; ".join(v.message for v in report.violations))
    if names.compression not in config.bindings(model):
        raise WorkloadError(
            f"configuration binds no {names.compression!r} variant")


def run_static(trace: WorkloadTrace, config: Configuration, repo: ProfileRepository,
               model: VariabilityModel,
               names: MediaStoreNames = MediaStoreNames()) -> SimulationResult:
    """Replay a trace under one fixed configuration: no rules, no overhead.

    Local-mode storage overflow halts the run with a partial ledger and the
    offending event's sequence number as the overflow marker.
    """
    _require_runnable(model, config, names)
    ledger = EnergyLedger()
    storage = StorageState(capacity=trace.storage_capacity, mode=_mode(config, names))
    overflow: int | None = None
    snapshot = config.sorted_ids()
    for event in trace.events:
        if storage.mode == "local":
            stored = _stored_size(repo, model, config, names, event.size)
            if not storage.can_store(stored):
                overflow = event.seq
                break
            storage.used += stored
        ledger.charge(event.seq, snapshot,
                      _event_energy(repo, model, config, event.size))
    return SimulationResult(
        ledger=ledger, adaptation_log=AdaptationLog(), final_config=config,
        trace_summary=trace.summary(), overflow_seq=overflow)


@dataclass(frozen=True)
class RuntimeParams:
    window: int = DEFAULT_WINDOW
    monitor_cost_j: float = DEFAULT_MONITOR_COST_J
    reconfig_cost_j: float = DEFAULT_RECONFIG_COST_J


def run_adaptive(trace: WorkloadTrace, initial: Configuration, rules: Sequence[EcaRule],
                 repo: ProfileRepository, model: VariabilityModel,
                 params: RuntimeParams = RuntimeParams(),
                 names: MediaStoreNames = MediaStoreNames()) -> SimulationResult:
    """Replay a trace through the monitoring/analysis/reconfiguration loop.

    Per event: observe the file size and the free local capacity, charge the
    monitoring cost, evaluate the rules, reconfigure when a rule fires, then
    charge the event's energy under the post-reconfiguration configuration.
    """
    _require_runnable(model, initial, names)
    registry = HookRegistry()
    size_hook = registry.register_hook("saveAudio.size", PARAM_FILE_SIZE)
    free_hook = registry.register_hook("storage.free", PARAM_FREE_CAPACITY)

    monitors: dict[str, MonitorState] = {
        PARAM_FILE_SIZE: MonitorState(PARAM_FILE_SIZE, capacity=params.window),
        PARAM_FREE_CAPACITY: MonitorState(PARAM_FREE_CAPACITY, capacity=params.window),
    }
    check_rules_against_monitors(rules, monitors)

    config = initial
    ledger = EnergyLedger()
    log = AdaptationLog()
    storage = StorageState(capacity=trace.storage_capacity, mode=_mode(config, names))
    overflow: int | None = None

    for event in trace.events:
        size_record = registry.notify(size_hook, event.size)
        free_record = registry.notify(free_hook, storage.free)
        monitors[PARAM_FILE_SIZE] = observe(monitors[PARAM_FILE_SIZE], size_record.value)
        monitors[PARAM_FREE_CAPACITY] = observe(monitors[PARAM_FREE_CAPACITY], free_record.value)

        # monitoring cost rides the ledger entry; a reconfiguration cost is
        # recorded on its adaptation-log entry, keeping both streams uniform
        overhead = params.monitor_cost_j
        context = {"storage": _mode(config, names)}
        fired = evaluate(rules, monitors, context, config, model)
        if fired is not None:
            rule, action = fired
            config, _ = reconfigure(
                model, config, action, log, event.seq, rule.id,
                reconfig_cost_j=params.reconfig_cost_j)
            storage.mode = _mode(config, names)

        if storage.mode == "local":
            stored = _stored_size(repo, model, config, names, event.size)
            if not storage.can_store(stored):
                overflow = event.seq
                ledger.charge(event.seq, config.sorted_ids(), {}, overhead)
                break
            storage.used += stored
        ledger.charge(event.seq, config.sorted_ids(),
                      _event_energy(repo, model, config, event.size), overhead)

    return SimulationResult(
        ledger=ledger, adaptation_log=log, final_config=config,
        trace_summary=trace.summary(), overflow_seq=overflow)


def oracle_lower_bound(trace: WorkloadTrace, repo: ProfileRepository,
                       model: VariabilityModel,
                       names: MediaStoreNames = MediaStoreNames()) -> float:
    """Clairvoyant per-event optimum: for every event pick the cheapest valid
    configuration that is storage-feasible given the oracle's own history.
    Ignores overhead and averaging lag; a lower bound for the adaptive run on
    workloads where local choices stay cheapest while storage lasts."""
    from .model import enumerate_configurations

    configs = enumerate_configurations(model)
    storage = StorageState(capacity=trace.storage_capacity)
    total = 0.0
    for event in trace.events:
        best: tuple[float, float | None] | None = None  # (joules, stored-size or None)
        for config in configs:
            local = _mode(config, names) == "local"
            stored = None
            if local:
                stored = _stored_size(repo, model, config, names, event.size)
                if not storage.can_store(stored):
                    continue
            energy = sum(_event_energy(repo, model, config, event.size).values())
            if best is None or energy < best[0]:
                best = (energy, stored)
        if best is None:
            continue  # nothing feasible; the clairvoyant skips nothing else can do
        total += best[0]
        if best[1] is not None:
            storage.used += best[1]
    return total


# -- comparison report -------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    label: str
    events: int
    grand_total_j: float
    energy_j: float
    overhead_j: float
    by_concern: Mapping[str, float]
    reconfigurations: int
    overflow_seq: int | None

    @property
    def overhead_fraction(self) -> float:
        return self.overhead_j / self.grand_total_j if self.grand_total_j > 0 else 0.0


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    savings: Mapping[tuple[str, str], float | None]

    def to_json(self) -> dict:
        return {
            "runs": [
                {
                    "label": r.label,
                    "events": r.events,
                    "grand_total_j": r.grand_total_j,
                    "energy_j": r.energy_j,
                    "overhead_j": r.overhead_j,
                    "overhead_fraction": r.overhead_fraction,
                    "by_concern": dict(r.by_concern),
                    "reconfigurations": r.reconfigurations,
                    "overflow_seq": r.overflow_seq,
                }
                for r in self.rows
            ],
            "savings": [
                {"baseline": a, "alternative": b, "saving_fraction": v}
                for (a, b), v in sorted(self.savings.items())
            ],
        }

    def to_csv(self) -> str:
        lines = ["label,events,grand_total_j,energy_j,overhead_j,overhead_fraction,"
                 "reconfigurations,overflow_seq"]
        for r in self.rows:
            lines.append(
                f"{r.label},{r.events},{r.grand_total_j!r},{r.energy_j!r},"
                f"{r.overhead_j!r},{r.overhead_fraction:.6f},{r.reconfigurations},"
                f"{'' if r.overflow_seq is None else r.overflow_seq}")
        lines.append("")
        lines.append("baseline,alternative,saving_fraction")
        for (a, b), v in sorted(self.savings.items()):
            lines.append(f"{a},{b},{'undefined' if v is None else f'{v:.3f}'}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = []
        for r in self.rows:
            marker = f", overflow at #{r.overflow_seq}" if r.overflow_seq is not None else ""
            out.append(
                f"{r.label}: {r.grand_total_j:.2f} J over {r.events} events "
                f"(overhead {100 * r.overhead_fraction:.3f}%, "
                f"{r.reconfigurations} reconfigurations{marker})")
            for concern in sorted(r.by_concern):
                out.append(f"  {concern}: {r.by_concern[concern]:.2f} J")
        for (a, b), v in sorted(self.savings.items()):
            shown = "undefined" if v is None else f"{100 * v:.1f}%"
            out.append(f"saving {a} -> {b}: {shown}")
        return "\n".join(out) + "\n"


def report(results: Sequence[SimulationResult], labels: Sequence[str]) -> ComparisonReport:
    """Tabulate runs of the same trace and the pairwise savings of each run
    against each other run (net of overhead)."""
    if len(results) != len(labels):
        raise WorkloadError("need one label per result")
    summaries = {json.dumps(r.trace_summary, sort_keys=True) for r in results}
    if len(summaries) > 1:
        raise WorkloadError("results come from different traces")
    rows = []
    for result, label in zip(results, labels):
        totals = result.totals()
        rows.append(ReportRow(
            label=label,
            events=len(result.ledger.entries),
            grand_total_j=totals["grand_total_j"],
            energy_j=totals["grand_total_j"] - totals["overhead_j"],
            overhead_j=totals["overhead_j"],
            by_concern=totals["by_concern"],
            reconfigurations=len(result.adaptation_log.entries),
            overflow_seq=result.overflow_seq,
        ))
    savings: dict[tuple[str, str], float | None] = {}
    for base in rows:
        for alt in rows:
            if base.label == alt.label:
                continue
            if base.energy_j > 0:
                savings[(base.label, alt.label)] = \
                    (base.energy_j - alt.energy_j) / base.energy_j
            else:
                savings[(base.label, alt.label)] = None
    return ComparisonReport(rows=tuple(rows), savings=savings)
