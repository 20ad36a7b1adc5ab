"""Variability model of energy-consuming concerns.

A model is a tree of concern nodes, variant groups, and variants, plus
cross-tree ``implies``/``excludes`` constraints. Configurations are
selections over node ids; selection closure, validation, enumeration, and
atomic change application all live here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConflictError, ModelError, UnknownNodeError

KIND_CONCERN = "concern"
KIND_GROUP = "variant-group"
KIND_VARIANT = "variant"

RULE_MANDATORY = "mandatory"
RULE_OPTIONAL = "optional"
RULE_ALTERNATIVE = "alternative"
RULE_OR = "or"

_NODE_KINDS = {KIND_CONCERN, KIND_GROUP, KIND_VARIANT}
_CONCERN_RULES = {RULE_MANDATORY, RULE_OPTIONAL}
_GROUP_RULES = {RULE_ALTERNATIVE, RULE_OR}


@dataclass(frozen=True)
class Parameter:
    name: str
    unit: str

    def to_json(self) -> dict:
        return {"name": self.name, "unit": self.unit}


@dataclass(frozen=True)
class ConcernNode:
    id: str
    kind: str
    rule: str
    children: tuple[str, ...] = ()
    parameter: Parameter | None = None


@dataclass(frozen=True)
class Constraint:
    kind: str  # "implies" | "excludes"
    antecedent: str
    consequents: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "antecedent": self.antecedent,
            "consequents": list(self.consequents),
        }


class VariabilityModel:
    """Validated concern tree plus cross-tree constraints.

    Immutable after construction; structural invariants (unique ids, single
    parent, acyclicity, group arities) are checked eagerly and reported with
    the offending node id.
    """

    def __init__(self, nodes: Iterable[ConcernNode], constraints: Iterable[Constraint] = ()):
        self.nodes: dict[str, ConcernNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ModelError(f"duplicate node id: {node.id!r}")
            self.nodes[node.id] = node
        if not self.nodes:
            raise ModelError("model has no nodes")

        self.parent: dict[str, str] = {}
        for node in self.nodes.values():
            for child in node.children:
                if child not in self.nodes:
                    raise ModelError(f"dangling child reference {child!r} in node {node.id!r}")
                if child in self.parent:
                    raise ModelError(f"node {child!r} has more than one parent")
                self.parent[child] = node.id

        roots = [nid for nid in self.nodes if nid not in self.parent]
        if len(roots) != 1:
            raise ModelError(f"model must have exactly one root, found {sorted(roots)!r}")
        self.root = roots[0]

        # reachability doubles as the cycle check: with single parents and
        # one unparented node, unreachable nodes can only sit on a cycle
        reachable: set[str] = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in reachable:
                raise ModelError(f"cyclic parent links at node {nid!r}")
            reachable.add(nid)
            stack.extend(self.nodes[nid].children)
        if reachable != set(self.nodes):
            orphan = sorted(set(self.nodes) - reachable)[0]
            raise ModelError(f"cyclic parent links at node {orphan!r}")

        for node in self.nodes.values():
            self._check_node(node)

        self.constraints: tuple[Constraint, ...] = tuple(constraints)
        for c in self.constraints:
            if c.kind not in ("implies", "excludes"):
                raise ModelError(f"unknown constraint kind {c.kind!r}")
            for nid in (c.antecedent, *c.consequents):
                if nid not in self.nodes:
                    raise ModelError(f"constraint references unknown node {nid!r}")
            if c.antecedent in c.consequents:
                raise ModelError(f"constraint antecedent {c.antecedent!r} appears in its consequents")

    def _check_node(self, node: ConcernNode) -> None:
        if node.kind not in _NODE_KINDS:
            raise ModelError(f"node {node.id!r} has unknown kind {node.kind!r}")
        if node.kind == KIND_VARIANT:
            if node.children:
                raise ModelError(f"variant {node.id!r} must not have children")
            if node.rule not in (RULE_OPTIONAL,):
                raise ModelError(f"variant {node.id!r} must carry rule 'optional'")
        elif node.kind == KIND_GROUP:
            if node.rule not in _GROUP_RULES:
                raise ModelError(f"variant-group {node.id!r} needs rule 'alternative' or 'or'")
            if node.rule == RULE_ALTERNATIVE and len(node.children) < 2:
                raise ModelError(f"alternative group {node.id!r} has fewer than 2 children")
            if not node.children:
                raise ModelError(f"variant-group {node.id!r} has no children")
            for child in node.children:
                if self.nodes[child].kind != KIND_VARIANT:
                    raise ModelError(
                        f"variant-group {node.id!r} child {child!r} must be a variant")
        else:
            if node.rule not in _CONCERN_RULES:
                raise ModelError(f"concern {node.id!r} needs rule 'mandatory' or 'optional'")

    # -- introspection helpers -------------------------------------------------

    def node(self, nid: str) -> ConcernNode:
        try:
            return self.nodes[nid]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {nid!r}") from None

    def require_known(self, ids: Iterable[str]) -> None:
        unknown = sorted(set(ids) - set(self.nodes))
        if unknown:
            raise UnknownNodeError(f"unknown node ids: {', '.join(unknown)}")

    def concerns(self) -> list[str]:
        """Concern ids, root excluded, in sorted order."""
        return sorted(n.id for n in self.nodes.values()
                      if n.kind == KIND_CONCERN and n.id != self.root)

    def variants(self) -> list[str]:
        return sorted(n.id for n in self.nodes.values() if n.kind == KIND_VARIANT)

    def groups(self) -> list[str]:
        return sorted(n.id for n in self.nodes.values() if n.kind == KIND_GROUP)

    def group_of(self, variant_id: str) -> str | None:
        parent = self.parent.get(variant_id)
        if parent is not None and self.nodes[parent].kind == KIND_GROUP:
            return parent
        return None

    def concern_of_group(self, group_id: str) -> str:
        return self.parent[group_id]

    def ancestors(self, nid: str) -> list[str]:
        out = []
        while nid in self.parent:
            nid = self.parent[nid]
            out.append(nid)
        return out

    def subtree(self, nid: str) -> set[str]:
        out = set()
        stack = [nid]
        while stack:
            cur = stack.pop()
            out.add(cur)
            stack.extend(self.nodes[cur].children)
        return out

    def to_json(self) -> dict:
        nodes = []
        for nid in self.nodes:  # insertion order: round-trips the document
            node = self.nodes[nid]
            doc = {"id": node.id, "kind": node.kind, "rule": node.rule,
                   "children": list(node.children)}
            if node.parameter is not None:
                doc["parameter"] = node.parameter.to_json()
            nodes.append(doc)
        return {"nodes": nodes, "constraints": [c.to_json() for c in self.constraints]}


@dataclass(frozen=True)
class Configuration:
    """A selection of node ids; bindings map each concern that owns a
    selected alternative group to its chosen variant."""

    selected: frozenset[str]

    def bindings(self, model: VariabilityModel) -> dict[str, str]:
        out: dict[str, str] = {}
        for gid in model.groups():
            group = model.nodes[gid]
            if gid not in self.selected or group.rule != RULE_ALTERNATIVE:
                continue
            chosen = [c for c in group.children if c in self.selected]
            if len(chosen) == 1:
                out[model.concern_of_group(gid)] = chosen[0]
        return out

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.selected))

    def to_json(self, model: VariabilityModel | None = None) -> dict:
        doc: dict = {"selected": sorted(self.selected)}
        if model is not None:
            doc["bindings"] = self.bindings(model)
        return doc


@dataclass(frozen=True)
class Violation:
    rule: str
    nodes: tuple[str, ...]
    message: str

    def to_json(self) -> dict:
        return {"rule": self.rule, "nodes": list(self.nodes), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"valid": self.ok, "violations": [v.to_json() for v in self.violations]}


@dataclass(frozen=True)
class PropagationResult:
    """Closure of a partial selection: what ended up selected, what the
    closure added, and which groups are still unbound."""

    selected: frozenset[str]
    auto_included: frozenset[str]
    open_choices: tuple[str, ...]

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.selected)

    @property
    def complete(self) -> bool:
        return not self.open_choices

    def to_json(self, model: VariabilityModel | None = None) -> dict:
        doc = {
            "selected": sorted(self.selected),
            "auto_included": sorted(self.auto_included),
            "open_choices": list(self.open_choices),
        }
        if model is not None:
            doc["bindings"] = self.configuration.bindings(model)
        return doc


# -- document loading ---------------------------------------------------------

def load_model(source: str | Path | Mapping) -> VariabilityModel:
    """Load a model document (path or parsed dict) and verify all structural
    invariants."""
    if isinstance(source, (str, Path)):
        try:
            document = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ModelError(f"cannot read model document: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ModelError(f"model document is not valid JSON: {exc}") from exc
    else:
        document = source
    return loads_model(document)


def loads_model(document: Mapping) -> VariabilityModel:
    if not isinstance(document, Mapping) or "nodes" not in document:
        raise ModelError("model document must be an object with a 'nodes' list")
    nodes = []
    for raw in document["nodes"]:
        try:
            parameter = None
            if raw.get("parameter") is not None:
                parameter = Parameter(raw["parameter"]["name"], raw["parameter"]["unit"])
            kind = raw.get("kind", KIND_CONCERN)
            default_rule = RULE_OPTIONAL if kind == KIND_VARIANT else RULE_MANDATORY
            nodes.append(ConcernNode(
                id=raw["id"],
                kind=kind,
                rule=raw.get("rule", default_rule),
                children=tuple(raw.get("children", ())),
                parameter=parameter,
            ))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed node entry {raw!r}: {exc}") from exc
    constraints = []
    for raw in document.get("constraints", ()):
        try:
            constraints.append(Constraint(
                kind=raw["kind"],
                antecedent=raw["antecedent"],
                consequents=tuple(raw["consequents"]),
            ))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed constraint entry {raw!r}: {exc}") from exc
    return VariabilityModel(nodes, constraints)


# -- validation ---------------------------------------------------------------

def validate_configuration(model: VariabilityModel,
                           config: Configuration | Iterable[str]) -> ValidationReport:
    """Check every configuration invariant; empty report iff the selection is
    a valid configuration. Unknown ids raise, they are not violations."""
    selected = config.selected if isinstance(config, Configuration) else frozenset(config)
    model.require_known(selected)

    violations: list[Violation] = []

    if model.root not in selected:
        violations.append(Violation("root-selected", (model.root,),
                                    f"root {model.root!r} must be selected"))

    for nid in sorted(selected):
        parent = model.parent.get(nid)
        if parent is not None and parent not in selected:
            violations.append(Violation(
                "parent-selected", (nid, parent),
                f"{nid!r} is selected but its parent {parent!r} is not"))

    for nid in sorted(selected):
        node = model.nodes[nid]
        for child in node.children:
            cnode = model.nodes[child]
            mandatory = (cnode.kind == KIND_GROUP) or (cnode.rule == RULE_MANDATORY)
            if mandatory and child not in selected:
                violations.append(Violation(
                    "mandatory-child", (nid, child),
                    f"{nid!r} is selected but mandatory child {child!r} is not"))

    for gid in model.groups():
        group = model.nodes[gid]
        if gid not in selected:
            continue
        chosen = [c for c in group.children if c in selected]
        if group.rule == RULE_ALTERNATIVE and len(chosen) != 1:
            violations.append(Violation(
                "alternative-group", (gid, *sorted(chosen)),
                f"alternative group {gid!r} needs exactly one child selected, got {len(chosen)}"))
        elif group.rule == RULE_OR and not chosen:
            violations.append(Violation(
                "or-group", (gid,),
                f"or group {gid!r} needs at least one child selected"))

    for c in model.constraints:
        if c.kind == "implies" and c.antecedent in selected:
            missing = [x for x in c.consequents if x not in selected]
            if missing:
                violations.append(Violation(
                    "implies", (c.antecedent, *missing),
                    f"{c.antecedent!r} implies {', '.join(repr(m) for m in missing)}"))
        elif c.kind == "excludes" and c.antecedent in selected:
            both = [x for x in c.consequents if x in selected]
            if both:
                violations.append(Violation(
                    "excludes", (c.antecedent, *both),
                    f"{c.antecedent!r} excludes {', '.join(repr(b) for b in both)}"))

    return ValidationReport(tuple(violations))


# -- selection closure --------------------------------------------------------

def _closure(model: VariabilityModel, partial: frozenset[str],
             include_implies: bool) -> frozenset[str]:
    selected = set(partial)
    selected.add(model.root)
    changed = True
    while changed:
        changed = False
        for nid in list(selected):
            for anc in model.ancestors(nid):
                if anc not in selected:
                    selected.add(anc)
                    changed = True
        for nid in list(selected):
            for child in model.nodes[nid].children:
                cnode = model.nodes[child]
                mandatory = (cnode.kind == KIND_GROUP) or (cnode.rule == RULE_MANDATORY)
                if mandatory and child not in selected:
                    selected.add(child)
                    changed = True
        if include_implies:
            for c in model.constraints:
                if c.kind == "implies" and c.antecedent in selected:
                    for x in c.consequents:
                        if x not in selected:
                            selected.add(x)
                            changed = True
    return frozenset(selected)


def structural_closure(model: VariabilityModel, partial: Iterable[str]) -> frozenset[str]:
    """Close a selection under parents, groups, and mandatory children only
    (no cross-tree constraints). Used to expand shorthand selections."""
    partial = frozenset(partial)
    model.require_known(partial)
    return _closure(model, partial, include_implies=False)


def propagate_selection(model: VariabilityModel, partial: Iterable[str]) -> PropagationResult:
    """Least superset of ``partial`` closed under parent inclusion,
    mandatory-child inclusion, and ``implies`` consequents.

    Raises ConflictError when the closure violates an ``excludes`` constraint
    or selects two children of an alternative group. Unresolved groups are
    reported as open choices, never guessed.
    """
    partial = frozenset(partial)
    model.require_known(partial)
    selected = _closure(model, partial, include_implies=True)

    conflicts: list[Violation] = []
    for c in model.constraints:
        if c.kind == "excludes" and c.antecedent in selected:
            both = [x for x in c.consequents if x in selected]
            if both:
                conflicts.append(Violation(
                    "excludes", (c.antecedent, *both),
                    f"closure selects {c.antecedent!r} and {', '.join(repr(b) for b in both)}"))
    open_choices: list[str] = []
    for gid in sorted(model.groups()):
        group = model.nodes[gid]
        if gid not in selected:
            continue
        chosen = [c for c in group.children if c in selected]
        if group.rule == RULE_ALTERNATIVE and len(chosen) > 1:
            conflicts.append(Violation(
                "alternative-group", (gid, *sorted(chosen)),
                f"closure selects {len(chosen)} children of alternative group {gid!r}"))
        elif not chosen:
            open_choices.append(gid)

    if conflicts:
        raise ConflictError(
            "; ".join(v.message for v in conflicts), violations=conflicts)

    return PropagationResult(
        selected=selected,
        auto_included=frozenset(selected - partial),
        open_choices=tuple(open_choices),
    )


def enumerate_configurations(model: VariabilityModel, max_variants: int = 20) -> list[Configuration]:
    """All valid complete configurations, as closures of variant subsets,
    ordered lexicographically by their sorted selected-id list."""
    variants = model.variants()
    if len(variants) > max_variants:
        raise ModelError(
            f"model has {len(variants)} variants, enumeration guard is {max_variants}")
    seen: set[frozenset[str]] = set()
    configs: list[Configuration] = []
    for mask in range(1 << len(variants)):
        subset = frozenset(v for i, v in enumerate(variants) if mask >> i & 1)
        try:
            result = propagate_selection(model, subset)
        except ConflictError:
            continue
        if not result.complete:
            continue
        if result.selected in seen:
            continue
        report = validate_configuration(model, result.selected)
        if not report.ok:
            continue
        seen.add(result.selected)
        configs.append(Configuration(result.selected))
    configs.sort(key=lambda c: c.sorted_ids())
    return configs


# -- reconfiguration actions --------------------------------------------------

ACTION_BIND = "bind-variant"
ACTION_ACTIVATE = "activate-concern"
ACTION_DEACTIVATE = "deactivate-concern"
ACTION_COMPOSITE = "composite"


@dataclass(frozen=True)
class ReconfigurationAction:
    kind: str
    target: str | None = None
    parts: tuple["ReconfigurationAction", ...] = ()

    def __post_init__(self):
        if self.kind == ACTION_COMPOSITE:
            if not self.parts:
                raise ValueError("composite action needs at least one part")
        elif self.kind in (ACTION_BIND, ACTION_ACTIVATE, ACTION_DEACTIVATE):
            if not self.target:
                raise ValueError(f"{self.kind} action needs a target")
        else:
            raise ValueError(f"unknown action kind {self.kind!r}")

    def leaves(self) -> tuple["ReconfigurationAction", ...]:
        if self.kind == ACTION_COMPOSITE:
            return tuple(leaf for part in self.parts for leaf in part.leaves())
        return (self,)

    def to_json(self) -> dict:
        if self.kind == ACTION_COMPOSITE:
            return {"kind": self.kind, "parts": [p.to_json() for p in self.parts]}
        return {"kind": self.kind, "target": self.target}

    @classmethod
    def from_json(cls, doc: Mapping) -> "ReconfigurationAction":
        kind = doc.get("kind")
        if kind == ACTION_COMPOSITE:
            return cls(kind=kind, parts=tuple(cls.from_json(p) for p in doc.get("parts", ())))
        return cls(kind=kind, target=doc.get("target"))


def bind_variant(target: str) -> ReconfigurationAction:
    return ReconfigurationAction(ACTION_BIND, target)


def composite(*parts: ReconfigurationAction) -> ReconfigurationAction:
    return ReconfigurationAction(ACTION_COMPOSITE, parts=tuple(parts))


def action_changes(model: VariabilityModel, config: Configuration,
                   action: ReconfigurationAction) -> bool:
    """True when applying the action would alter the selection."""
    for leaf in action.leaves():
        model.require_known([leaf.target])
        if leaf.kind in (ACTION_BIND, ACTION_ACTIVATE):
            if leaf.target not in config.selected:
                return True
        elif leaf.kind == ACTION_DEACTIVATE:
            if leaf.target in config.selected:
                return True
    return False


def apply_change(model: VariabilityModel, config: Configuration,
                 action: ReconfigurationAction) -> Configuration:
    """Apply a reconfiguration action and re-close the selection.

    Atomic: on any conflict the error propagates and the input configuration
    stays untouched (configurations are immutable values).
    """
    selected = set(config.selected)
    for leaf in action.leaves():
        model.require_known([leaf.target])
        node = model.nodes[leaf.target]
        if leaf.kind in (ACTION_BIND, ACTION_ACTIVATE):
            if leaf.kind == ACTION_BIND and node.kind != KIND_VARIANT:
                raise ConflictError(f"bind-variant target {leaf.target!r} is not a variant")
            group = model.group_of(leaf.target)
            if group is not None and model.nodes[group].rule == RULE_ALTERNATIVE:
                for sibling in model.nodes[group].children:
                    if sibling != leaf.target:
                        selected -= model.subtree(sibling)
            selected.add(leaf.target)
        elif leaf.kind == ACTION_DEACTIVATE:
            selected -= model.subtree(leaf.target)

    result = propagate_selection(model, frozenset(selected))
    report = validate_configuration(model, result.selected)
    if not report.ok:
        raise ConflictError(
            "change produced an invalid configuration: "
            + "; ".join(v.message for v in report.violations),
            violations=report.violations)
    return Configuration(result.selected)
