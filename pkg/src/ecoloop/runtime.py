"""Runtime adaptation loop pieces: parameter monitors with a bounded window
of recent observations, priority-ordered rule evaluation over the window
averages, and atomic reconfiguration with overhead accounting.

Interception points are an explicit hook registry: the instrumented
application (here, the simulator) registers named hook points bound to
monitored parameters and notifies them with observed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import ConflictError, NoDataError, RuleConfigError, UnmonitoredParameterError
from .model import (
    Configuration,
    ReconfigurationAction,
    VariabilityModel,
    action_changes,
    apply_change,
)
from .rules import EcaRule

DEFAULT_WINDOW = 5
# Fixed bookkeeping costs, chosen to keep adaptation overhead well under 1%
# of total energy on the reference workload; both overridable.
DEFAULT_MONITOR_COST_J = 0.01
DEFAULT_RECONFIG_COST_J = 1.0
# "Almost full" threshold: reconfigure away from local storage below this
# fraction of free capacity.
STORAGE_FREE_FRACTION = 0.10


@dataclass(frozen=True)
class MonitorState:
    """Ring buffer of the last ``capacity`` observations of one parameter."""

    parameter: str
    capacity: int = DEFAULT_WINDOW
    window: tuple[float, ...] = ()
    count: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("monitor capacity must be >= 1")


def observe(monitor: MonitorState, value: float) -> MonitorState:
    """Append an observation, evicting the oldest when full."""
    if not math.isfinite(value):
        raise ValueError(f"non-finite observation {value!r} for {monitor.parameter!r}")
    window = monitor.window + (float(value),)
    if len(window) > monitor.capacity:
        window = window[-monitor.capacity:]
    return replace(monitor, window=window, count=monitor.count + 1)


def aggregate(monitor: MonitorState) -> float:
    """Arithmetic mean of the current window."""
    if monitor.count < 1:
        raise NoDataError(f"monitor {monitor.parameter!r} has no observations")
    return sum(monitor.window) / len(monitor.window)


@dataclass(frozen=True)
class EventRecord:
    seq: int
    parameter: str
    value: float
    source: str


class HookRegistry:
    """Named interception points, each bound to one monitored parameter."""

    def __init__(self):
        self._hooks: dict[str, str] = {}
        self._seq = 0

    def register_hook(self, hook_point: str, parameter: str) -> str:
        if hook_point in self._hooks:
            raise RuleConfigError(f"hook point {hook_point!r} already registered")
        self._hooks[hook_point] = parameter
        return hook_point

    def parameter_of(self, hook_id: str) -> str:
        try:
            return self._hooks[hook_id]
        except KeyError:
            raise RuleConfigError(f"unknown hook {hook_id!r}") from None

    def notify(self, hook_id: str, value: float) -> EventRecord:
        parameter = self.parameter_of(hook_id)
        self._seq += 1
        return EventRecord(seq=self._seq, parameter=parameter, value=value, source=hook_id)

    def hooks(self) -> dict[str, str]:
        return dict(self._hooks)


def check_rules_against_monitors(rules: Sequence[EcaRule],
                                 monitors: Mapping[str, MonitorState]) -> None:
    """Configuration-time check: every rule event must have a monitor."""
    missing = sorted({r.event for r in rules} - set(monitors))
    if missing:
        raise UnmonitoredParameterError(
            f"rules reference unmonitored parameters: {', '.join(missing)}")


def evaluate(rules: Sequence[EcaRule], monitors: Mapping[str, MonitorState],
             context: Mapping[str, str], config: Configuration,
             model: VariabilityModel) -> tuple[EcaRule, ReconfigurationAction] | None:
    """Evaluate rules in priority order against the monitor aggregates.

    The first rule whose guard and condition hold decides: its action is
    returned when it would change the configuration, otherwise evaluation
    stops with no action (the prescription already holds, so reconfiguring
    would be a self-swap). Monitors without data never fire a rule.
    """
    check_rules_against_monitors(rules, monitors)
    for rule in sorted(rules, key=lambda r: r.priority):
        if not rule.guard_matches(context):
            continue
        monitor = monitors[rule.event]
        if monitor.count < 1:
            continue
        if not rule.condition.matches(aggregate(monitor)):
            continue
        if action_changes(model, config, rule.action):
            return rule, rule.action
        return None
    return None


@dataclass(frozen=True)
class AdaptationEntry:
    seq: int
    rule: str
    old: tuple[str, ...]
    new: tuple[str, ...]
    overhead_j: float

    def to_json(self) -> dict:
        return {"seq": self.seq, "rule": self.rule, "old": list(self.old),
                "new": list(self.new), "overhead_j": self.overhead_j}


@dataclass
class AdaptationLog:
    entries: list[AdaptationEntry] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_json_lines(self) -> list[str]:
        import json
        return [json.dumps(e.to_json(), sort_keys=True) for e in self.entries]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries], "failures": list(self.failures)}


def reconfigure(model: VariabilityModel, config: Configuration,
                action: ReconfigurationAction, log: AdaptationLog, seq: int,
                rule_id: str, reconfig_cost_j: float = DEFAULT_RECONFIG_COST_J,
                ) -> tuple[Configuration, float]:
    """Apply an action atomically; returns the new configuration and the
    overhead charged (zero when nothing changed or the change conflicted)."""
    if not action_changes(model, config, action):
        return config, 0.0
    try:
        new_config = apply_change(model, config, action)
    except ConflictError as exc:
        log.failures.append({"seq": seq, "rule": rule_id, "error": str(exc)})
        return config, 0.0
    log.entries.append(AdaptationEntry(
        seq=seq, rule=rule_id,
        old=config.sorted_ids(), new=new_config.sorted_ids(),
        overhead_j=reconfig_cost_j,
    ))
    return new_config, reconfig_cost_j
