"""Event-Condition-Action reconfiguration rules as data.

Rules are derived by the analysis layer or written by hand; the adaptation
runtime evaluates them against monitor aggregates. A condition is a single
threshold comparison (``<=``, ``>``, ``<``) or, for interior intervals of a
partition with three or more segments, a half-open ``range`` (lo, hi].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import RuleConfigError
from .model import ReconfigurationAction

OP_LE = "<="
OP_GT = ">"
OP_LT = "<"
OP_RANGE = "range"


@dataclass(frozen=True)
class Condition:
    op: str
    threshold: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.op in (OP_LE, OP_GT, OP_LT):
            if self.threshold is None:
                raise RuleConfigError(f"condition {self.op!r} needs a threshold")
        elif self.op == OP_RANGE:
            if self.lo is None or self.hi is None:
                raise RuleConfigError("range condition needs lo and hi")
        else:
            raise RuleConfigError(f"unknown condition op {self.op!r}")

    def matches(self, value: float) -> bool:
        if self.op == OP_LE:
            return value <= self.threshold
        if self.op == OP_GT:
            return value > self.threshold
        if self.op == OP_LT:
            return value < self.threshold
        return self.lo < value <= self.hi

    def to_json(self) -> dict:
        if self.op == OP_RANGE:
            return {"op": self.op, "lo": self.lo, "hi": self.hi}
        return {"op": self.op, "threshold": self.threshold}

    @classmethod
    def from_json(cls, doc: Mapping) -> "Condition":
        op = doc.get("op")
        if op == OP_RANGE:
            return cls(op=op, lo=doc.get("lo"), hi=doc.get("hi"))
        return cls(op=op, threshold=doc.get("threshold"))


@dataclass(frozen=True)
class EcaRule:
    id: str
    priority: int
    event: str  # monitored parameter name
    condition: Condition
    action: ReconfigurationAction
    guard: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "guard", MappingProxyType(dict(self.guard)))

    def guard_matches(self, context: Mapping[str, str]) -> bool:
        return all(context.get(key) == value for key, value in self.guard.items())

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "priority": self.priority,
            "event": self.event,
            "condition": self.condition.to_json(),
            "action": self.action.to_json(),
        }
        if self.guard:
            doc["guard"] = dict(self.guard)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "EcaRule":
        try:
            return cls(
                id=doc["id"],
                priority=int(doc["priority"]),
                event=doc["event"],
                condition=Condition.from_json(doc["condition"]),
                action=ReconfigurationAction.from_json(doc["action"]),
                guard=doc.get("guard", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RuleConfigError):
                raise
            raise RuleConfigError(f"malformed rule entry: {exc}") from exc


def load_rules(source: str | Path | Mapping) -> list[EcaRule]:
    """Load a rule-set document; rules come back sorted by priority."""
    if isinstance(source, (str, Path)):
        try:
            document = json.loads(Path(source).read_text())
        except OSError as exc:
            raise RuleConfigError(f"cannot read rule document: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise RuleConfigError(f"rule document is not valid JSON: {exc}") from exc
    else:
        document = source
    if not isinstance(document, Mapping) or "rules" not in document:
        raise RuleConfigError("rule document must be an object with a 'rules' list")
    rules = [EcaRule.from_json(raw) for raw in document["rules"]]
    ids = [r.id for r in rules]
    if len(set(ids)) != len(ids):
        raise RuleConfigError("rule ids must be unique")
    rules.sort(key=lambda r: r.priority)
    return rules


def dump_rules(rules: Iterable[EcaRule]) -> dict:
    return {"rules": [r.to_json() for r in sorted(rules, key=lambda r: r.priority)]}
