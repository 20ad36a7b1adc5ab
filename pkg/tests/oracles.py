"""Independent re-implementations used as test oracles.

Deliberately naive: straight fixpoint loops and exhaustive subset scans,
sharing no code with the library paths they check.
"""

from itertools import combinations

from ecoloop.model import Configuration, VariabilityModel, validate_configuration


def naive_closure(model: VariabilityModel, partial) -> frozenset:
    """Fixpoint closure: parents, structurally mandatory children, implies."""
    selected = set(partial) | {model.root}
    while True:
        before = len(selected)
        for nid in list(selected):
            node = model.nodes[nid]
            parent = model.parent.get(nid)
            if parent is not None:
                selected.add(parent)
            for child in node.children:
                cnode = model.nodes[child]
                if cnode.kind == "variant-group" or cnode.rule == "mandatory":
                    selected.add(child)
        for constraint in model.constraints:
            if constraint.kind == "implies" and constraint.antecedent in selected:
                selected.update(constraint.consequents)
        if len(selected) == before:
            return frozenset(selected)


def naive_closure_conflicts(model: VariabilityModel, selected) -> bool:
    """True when the closed set breaks an excludes constraint or selects two
    alternatives of one group."""
    for constraint in model.constraints:
        if constraint.kind == "excludes" and constraint.antecedent in selected:
            if any(x in selected for x in constraint.consequents):
                return True
    for gid in model.groups():
        group = model.nodes[gid]
        if gid in selected and group.rule == "alternative":
            if sum(1 for c in group.children if c in selected) > 1:
                return True
    return False


def brute_force_configurations(model: VariabilityModel) -> list[Configuration]:
    """All valid complete configurations as closures of variant subsets,
    filtered by the library's validator (the one independent reuse allowed)."""
    variants = model.variants()
    seen = set()
    out = []
    for r in range(len(variants) + 1):
        for subset in combinations(variants, r):
            closed = naive_closure(model, subset)
            if naive_closure_conflicts(model, closed):
                continue
            complete = True
            for gid in model.groups():
                group = model.nodes[gid]
                if gid in closed and not any(c in closed for c in group.children):
                    complete = False
                    break
            if not complete or closed in seen:
                continue
            if validate_configuration(model, closed).ok:
                seen.add(closed)
                out.append(Configuration(closed))
    out.sort(key=lambda c: c.sorted_ids())
    return out
