"""HTTP API over the shared analysis/simulation core.

Handlers are thin adapters around the same functions the CLI uses: identical
inputs produce identical artifacts on both surfaces. Simulations run
asynchronously on a bounded worker pool behind a run table; everything else
is stateless over the immutable model and repository.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .analysis import (
    GreenPartition,
    compare,
    derive_rules,
    find_crossovers,
    partition_greenest,
    simplify_partition,
)
from .errors import (
    ConflictError,
    EcoloopError,
    RuleConfigError,
    UnknownNodeError,
    WorkloadError,
)
from .model import Configuration, VariabilityModel, validate_configuration, propagate_selection
from .profiles import CompositionChain, ProfileRepository
from .rules import EcaRule
from .simulation import (
    Phase,
    RuntimeParams,
    WorkloadTrace,
    generate_workload,
    run_adaptive,
    run_static,
)

DEFAULT_QUEUE_BOUND = 4


def _required(body: Mapping, key: str):
    if key not in body:
        raise WorkloadError(f"request body needs {key!r}")
    return body[key]


def _grid_from(doc) -> list[float]:
    if isinstance(doc, Mapping):
        lo, hi, steps = float(doc["lo"]), float(doc["hi"]), int(doc["steps"])
        if steps < 1 or hi <= lo:
            raise WorkloadError("grid needs hi > lo and steps >= 1")
        return [lo + (hi - lo) * i / steps for i in range(steps + 1)]
    return [float(x) for x in doc]


def _items_from(body: Mapping, model: VariabilityModel) -> list:
    items: list = []
    for chain_doc in body.get("chains", ()):
        items.append(CompositionChain.from_json(chain_doc))
    for config_doc in body.get("configurations", ()):
        result = propagate_selection(model, config_doc["selected"])
        items.append(result.configuration)
    if not items:
        raise WorkloadError("request needs 'chains' or 'configurations'")
    return items


def _trace_from(doc: Mapping) -> WorkloadTrace:
    capacity = float(doc.get("capacity_mb", 4096.0))
    if "events" in doc:
        from .simulation import SaveAudioEvent
        events = tuple(SaveAudioEvent(seq=int(e["seq"]), size=float(e["size_mb"]))
                       for e in doc["events"])
        return WorkloadTrace(events=events, storage_capacity=capacity,
                             seed=doc.get("seed"))
    if "phases" in doc:
        phases = [Phase.from_json(p) for p in doc["phases"]]
        return generate_workload(phases, seed=int(doc.get("seed", 0)), capacity=capacity)
    raise WorkloadError("workload needs 'events' or 'phases'")


class RunTable:
    """Mutex-guarded simulation run registry with a bounded executor."""

    def __init__(self, bound: int = DEFAULT_QUEUE_BOUND):
        self._lock = threading.Lock()
        self._runs: dict[str, dict] = {}
        self._pool = ThreadPoolExecutor(max_workers=bound)

    def submit(self, kind: str, job) -> dict:
        run_id = uuid.uuid4().hex
        descriptor = {"id": run_id, "kind": kind, "status": "pending", "artifacts": []}
        with self._lock:
            self._runs[run_id] = descriptor

        def run():
            try:
                artifacts = job()
                with self._lock:
                    descriptor["status"] = "done"
                    descriptor["artifacts"] = artifacts
            except Exception as exc:  # failure lands in the descriptor, not the log
                with self._lock:
                    descriptor["status"] = "failed"
                    descriptor["error"] = str(exc)

        self._pool.submit(run)
        return {"id": run_id, "kind": kind, "status": "pending"}

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            descriptor = self._runs.get(run_id)
            return dict(descriptor) if descriptor is not None else None


def create_app(model: VariabilityModel, repo: ProfileRepository,
               queue_bound: int = DEFAULT_QUEUE_BOUND) -> FastAPI:
    app = FastAPI(title="ecoloop", version="0.1.0")
    runs = RunTable(bound=queue_bound)

    @app.exception_handler(UnknownNodeError)
    @app.exception_handler(WorkloadError)
    @app.exception_handler(RuleConfigError)
    async def bad_input(request: Request, exc: EcoloopError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ConflictError)
    async def conflict(request: Request, exc: ConflictError):
        return JSONResponse(status_code=422, content={
            "error": str(exc),
            "violations": [v.to_json() for v in exc.violations],
        })

    @app.exception_handler(EcoloopError)
    async def other_domain_error(request: Request, exc: EcoloopError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/model")
    def get_model():
        return model.to_json()

    @app.post("/configurations/validate")
    def post_validate(body: dict):
        selected = body.get("selected", [])
        report = validate_configuration(model, selected)
        if report.ok:
            return report.to_json()
        return JSONResponse(status_code=422, content=report.to_json())

    @app.post("/configurations/propagate")
    def post_propagate(body: dict):
        result = propagate_selection(model, body.get("selected", []))
        return result.to_json(model)

    @app.post("/analysis/compare")
    def post_compare(body: dict):
        items = _items_from(body, model)
        grid = _grid_from(body.get("grid", ()))
        series = compare(repo, model, items, grid)
        out: dict = {"series": [s.to_json() for s in series]}
        if body.get("crossovers", True) and len(series) >= 2:
            pairs = []
            for i in range(len(series)):
                for j in range(i + 1, len(series)):
                    pairs.append({
                        "a": series[i].label,
                        "b": series[j].label,
                        "crossovers": [c.to_json() for c in
                                       find_crossovers(series[i], series[j])],
                    })
            out["crossovers"] = pairs
        return out

    @app.post("/analysis/partition")
    def post_partition(body: dict):
        items = _items_from(body, model)
        grid = _grid_from(body.get("grid", ()))
        series = compare(repo, model, items, grid)
        partition = partition_greenest(series)
        out = {"partition": partition.to_json()}
        if body.get("simplify"):
            out["simplified"] = simplify_partition(partition, series).to_json()
        return out

    @app.post("/rules/derive")
    def post_derive(body: dict):
        partition = GreenPartition.from_json(_required(body, "partition"))
        rules = derive_rules(
            partition,
            guard=body.get("guard"),
            hysteresis=float(body.get("hysteresis", 0.0)),
            event=body.get("event", "file_size"),
            priority_base=int(body.get("priority_base", 1)),
        )
        return {"rules": [r.to_json() for r in rules]}

    @app.post("/simulations")
    def post_simulation(body: dict):
        trace = _trace_from(_required(body, "workload"))
        config_doc = _required(body, "config")
        result = propagate_selection(model, config_doc.get("selected", []))
        config: Configuration = result.configuration
        report = validate_configuration(model, config)
        if not report.ok:
            raise ConflictError("initial configuration is invalid",
                                violations=report.violations)
        rule_docs = body.get("rules")
        params_doc = body.get("params", {})
        params = RuntimeParams(
            window=int(params_doc.get("window", RuntimeParams.window)),
            monitor_cost_j=float(params_doc.get("monitor_cost_j",
                                                RuntimeParams.monitor_cost_j)),
            reconfig_cost_j=float(params_doc.get("reconfig_cost_j",
                                                 RuntimeParams.reconfig_cost_j)),
        )
        if rule_docs:
            rules = [EcaRule.from_json(r) for r in rule_docs]
            # fail fast on bad rule wiring before queueing
            from .runtime import MonitorState, check_rules_against_monitors
            from .simulation import PARAM_FILE_SIZE, PARAM_FREE_CAPACITY
            check_rules_against_monitors(rules, {
                PARAM_FILE_SIZE: MonitorState(PARAM_FILE_SIZE),
                PARAM_FREE_CAPACITY: MonitorState(PARAM_FREE_CAPACITY),
            })

            def job():
                return [run_adaptive(trace, config, rules, repo, model, params).to_json()]
        else:
            def job():
                return [run_static(trace, config, repo, model).to_json()]

        return runs.submit("simulation", job)

    @app.get("/simulations/{run_id}")
    def get_simulation(run_id: str):
        descriptor = runs.get(run_id)
        if descriptor is None:
            return JSONResponse(status_code=404,
                                content={"error": f"unknown run id {run_id!r}"})
        return descriptor

    return app
