"""Design-time sustainability analysis.

Compares configuration/chain energy curves on a shared grid, locates
crossovers exactly on the linear segments, partitions the parameter domain by
greenest variant, derives threshold reconfiguration rules from the partition,
and computes savings tables.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import CompositionError, GridMismatchError
from .model import Configuration, VariabilityModel, bind_variant
from .profiles import (
    ChainStage,
    CompositionChain,
    ProfileRepository,
    compose_energy,
)
from .rules import OP_GT, OP_LE, OP_RANGE, Condition, EcaRule

# Two variants within this relative energy gap count as "similar"; used to
# collapse a partition whose minority intervals are inside the band.
SIMILARITY_BAND = 0.10

# Output metric that feeds the next stage when composing a configuration.
DEFAULT_COUPLING_METRIC = "output_size"


@dataclass(frozen=True)
class ComparisonSeries:
    label: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        params = [p for p, _ in self.points]
        if any(a >= b for a, b in zip(params, params[1:])):
            raise GridMismatchError(f"series {self.label!r} grid must be strictly increasing")

    @property
    def grid(self) -> tuple[float, ...]:
        return tuple(p for p, _ in self.points)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)

    def value_at(self, param: float) -> float:
        xs, ys = self.grid, self.values
        if param < xs[0] or param > xs[-1]:
            raise GridMismatchError(
                f"param {param!r} outside series {self.label!r} grid [{xs[0]}, {xs[-1]}]")
        i = bisect_left(xs, param)
        if i < len(xs) and xs[i] == param:
            return ys[i]
        t = (param - xs[i - 1]) / (xs[i] - xs[i - 1])
        return ys[i - 1] + t * (ys[i] - ys[i - 1])

    def to_json(self) -> dict:
        return {"label": self.label, "points": [[p, v] for p, v in self.points]}


@dataclass(frozen=True)
class CrossoverPoint:
    param: float
    below: str  # greener for smaller params
    above: str  # greener for larger params

    def to_json(self) -> dict:
        return {"param": self.param, "below": self.below, "above": self.above}


@dataclass(frozen=True)
class GreenPartition:
    intervals: tuple[tuple[float, float, str], ...]  # (lo, hi, winner)
    domain: tuple[float, float]

    def winners(self) -> tuple[str, ...]:
        return tuple(w for _, _, w in self.intervals)

    def to_json(self) -> dict:
        return {
            "domain": list(self.domain),
            "intervals": [{"lo": lo, "hi": hi, "winner": w} for lo, hi, w in self.intervals],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "GreenPartition":
        try:
            return cls(
                intervals=tuple((i["lo"], i["hi"], i["winner"]) for i in doc["intervals"]),
                domain=(doc["domain"][0], doc["domain"][1]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise GridMismatchError(f"malformed partition document: {exc}") from exc


@dataclass(frozen=True)
class SavingsRow:
    param: float
    baseline_j: float
    alternative_j: float
    saving_fraction: float | None  # None when the baseline is zero

    @property
    def defined(self) -> bool:
        return self.saving_fraction is not None


@dataclass(frozen=True)
class SavingsReport:
    baseline: str
    alternative: str
    rows: tuple[SavingsRow, ...]

    def to_json(self) -> dict:
        return {
            "baseline": self.baseline,
            "alternative": self.alternative,
            "rows": [
                {
                    "param": r.param,
                    "baseline_j": r.baseline_j,
                    "alternative_j": r.alternative_j,
                    "saving_fraction": r.saving_fraction,
                    "defined": r.defined,
                }
                for r in self.rows
            ],
        }


# -- series construction --------------------------------------------------------


def chain_for_configuration(model: VariabilityModel, repo: ProfileRepository,
                            config: Configuration) -> CompositionChain:
    """Build the composition chain a configuration implies: profiled concerns
    in tree order, each coupled to the next through its output-size metric
    when it declares one."""
    bindings = config.bindings(model)
    stages: list[ChainStage] = []
    order: list[str] = []
    stack = [model.root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(model.nodes[nid].children))
    for nid in order:
        if nid not in config.selected or model.nodes[nid].kind != "concern":
            continue
        variant = bindings.get(nid)
        if variant is not None and repo.has(nid, variant):
            stages.append(ChainStage(nid, variant))
        elif variant is None and repo.has(nid, None):
            stages.append(ChainStage(nid, None))
    if not stages:
        raise CompositionError(
            f"configuration {sorted(config.selected)} selects no profiled concern")
    coupled = []
    for i, stage in enumerate(stages):
        profile = repo.get(stage.concern, stage.variant)
        if i + 1 < len(stages) and DEFAULT_COUPLING_METRIC in profile.metrics():
            stage = ChainStage(stage.concern, stage.variant, DEFAULT_COUPLING_METRIC)
        coupled.append(stage)
    return CompositionChain(tuple(coupled))


def compare(repo: ProfileRepository, model: VariabilityModel,
            items: Sequence[CompositionChain | Configuration],
            grid: Sequence[float]) -> list[ComparisonSeries]:
    """One series per chain/configuration, evaluated through compose_energy on
    the shared grid; output order follows input order."""
    grid = tuple(sorted(set(float(g) for g in grid)))
    series: list[ComparisonSeries] = []
    for item in items:
        chain = item if isinstance(item, CompositionChain) else \
            chain_for_configuration(model, repo, item)
        try:
            points = tuple((g, compose_energy(repo, chain, g).total) for g in grid)
        except CompositionError as exc:
            raise CompositionError(f"{chain.label}: {exc}", stage_index=exc.stage_index) from exc
        series.append(ComparisonSeries(label=chain.label, points=points))
    return series


def _require_shared_grid(series: Sequence[ComparisonSeries]) -> tuple[float, ...]:
    grids = {s.grid for s in series}
    if len(grids) != 1:
        raise GridMismatchError("series do not share one grid")
    grid = next(iter(grids))
    if len(grid) < 2:
        raise GridMismatchError("shared grid needs at least 2 points")
    return grid


# -- crossovers -----------------------------------------------------------------


def find_crossovers(series_a: ComparisonSeries, series_b: ComparisonSeries) -> list[CrossoverPoint]:
    """Crossovers of two series sharing a grid.

    A crossover is a strict ordering flip of the piecewise-linear difference;
    the intersection parameter is solved exactly on the bracketing segment.
    Touching zero without flipping sign is not a crossover.
    """
    grid = _require_shared_grid([series_a, series_b])
    diffs = [va - vb for va, vb in zip(series_a.values, series_b.values)]

    crossings: list[CrossoverPoint] = []
    last_sign = 0
    last_idx = None  # index of the last strictly signed grid point
    for i, d in enumerate(diffs):
        sign = (d > 0) - (d < 0)
        if sign == 0:
            continue
        if last_sign != 0 and sign != last_sign:
            zeros = [k for k in range(last_idx + 1, i) if diffs[k] == 0]
            if zeros:
                # flip runs through explicit zero knots; the crossing sits there
                param = (grid[zeros[0]] + grid[zeros[-1]]) / 2.0
            else:
                d0, d1 = diffs[i - 1], diffs[i]
                t = d0 / (d0 - d1)
                param = grid[i - 1] + t * (grid[i] - grid[i - 1])
            below = series_a.label if last_sign < 0 else series_b.label
            above = series_b.label if last_sign < 0 else series_a.label
            crossings.append(CrossoverPoint(param=param, below=below, above=above))
        last_sign = sign
        last_idx = i
    return crossings


# -- greenest partition -----------------------------------------------------------


def _segment_intersections(grid: tuple[float, ...],
                           series: Sequence[ComparisonSeries]) -> list[float]:
    """Params strictly inside grid segments where any two series meet."""
    points: set[float] = set()
    for seg in range(len(grid) - 1):
        x0, x1 = grid[seg], grid[seg + 1]
        for i in range(len(series)):
            for j in range(i + 1, len(series)):
                d0 = series[i].values[seg] - series[j].values[seg]
                d1 = series[i].values[seg + 1] - series[j].values[seg + 1]
                if d0 == d1:
                    continue
                t = d0 / (d0 - d1)
                if 0.0 < t < 1.0:
                    points.add(x0 + t * (x1 - x0))
    return sorted(points)


def partition_greenest(series: Sequence[ComparisonSeries]) -> GreenPartition:
    """Pointwise argmin of the interpolated series, segmented into maximal
    intervals. Ties go to the earliest series in input order; adjacent
    intervals with one winner are merged."""
    if not series:
        raise GridMismatchError("partition needs at least one series")
    grid = _require_shared_grid(series)
    breakpoints = sorted(set(grid) | set(_segment_intersections(grid, series)))

    intervals: list[tuple[float, float, str]] = []
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        # rank by the segment-average value: the linear interpolant's midpoint
        # value computed arithmetically, so segments narrower than a float
        # step (whose midpoint is unrepresentable) are still ranked by their
        # interior, not by a tie at an endpoint knot
        values = [(s.value_at(lo) + s.value_at(hi)) / 2.0 for s in series]
        winner = series[values.index(min(values))].label
        if intervals and intervals[-1][2] == winner:
            intervals[-1] = (intervals[-1][0], hi, winner)
        else:
            intervals.append((lo, hi, winner))
    return GreenPartition(intervals=tuple(intervals), domain=(grid[0], grid[-1]))


def winner_at(series: Sequence[ComparisonSeries], param: float) -> str:
    """Pointwise argmin with the same tie rule the partition uses."""
    values = [s.value_at(param) for s in series]
    return series[values.index(min(values))].label


def simplify_partition(partition: GreenPartition, series: Sequence[ComparisonSeries],
                       band: float = SIMILARITY_BAND, scan_steps: int = 256) -> GreenPartition:
    """Collapse a partition to its dominant winner when every minority
    interval only beats the dominant variant within the similarity band.

    The dominant winner is the one covering the widest stretch of the domain.
    The band check scans each minority interval on a fixed dense grid.
    """
    if len(partition.intervals) <= 1:
        return partition
    by_label: dict[str, ComparisonSeries] = {s.label: s for s in series}
    coverage: dict[str, float] = {}
    for lo, hi, winner in partition.intervals:
        coverage[winner] = coverage.get(winner, 0.0) + (hi - lo)
    dominant = max(sorted(coverage), key=lambda w: coverage[w])
    dom_series = by_label[dominant]

    for lo, hi, winner in partition.intervals:
        if winner == dominant:
            continue
        win_series = by_label[winner]
        for k in range(scan_steps + 1):
            x = lo + (hi - lo) * k / scan_steps
            dom = dom_series.value_at(x)
            won = win_series.value_at(x)
            if dom <= 0:
                continue
            if (dom - won) / dom > band:
                return partition  # a genuine advantage exists, keep the split
    return GreenPartition(
        intervals=((partition.domain[0], partition.domain[1], dominant),),
        domain=partition.domain,
    )


# -- rule derivation --------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:g}"


def derive_rules(partition: GreenPartition, guard: Mapping[str, str] | None = None,
                 hysteresis: float = 0.0, event: str = "file_size",
                 priority_base: int = 1) -> list[EcaRule]:
    """One rule per partition interval: threshold condition over the event
    aggregate (widened by the hysteresis), conjoined with the guard, binding
    the interval's winner. Priorities follow interval order."""
    if hysteresis < 0:
        raise ValueError("hysteresis must be >= 0")
    guard = dict(guard or {})
    rules: list[EcaRule] = []
    n = len(partition.intervals)
    for index, (lo, hi, winner) in enumerate(partition.intervals):
        if n == 1:
            condition = Condition(OP_LE, threshold=hi + hysteresis)
            tag = f"le-{_fmt(hi + hysteresis)}"
        elif index == 0:
            condition = Condition(OP_LE, threshold=hi + hysteresis)
            tag = f"le-{_fmt(hi + hysteresis)}"
        elif index == n - 1:
            condition = Condition(OP_GT, threshold=lo - hysteresis)
            tag = f"gt-{_fmt(lo - hysteresis)}"
        else:
            condition = Condition(OP_RANGE, lo=lo - hysteresis, hi=hi + hysteresis)
            tag = f"in-{_fmt(lo - hysteresis)}-{_fmt(hi + hysteresis)}"
        prefix = "-".join(guard[k] for k in sorted(guard))
        rule_id = "-".join(x for x in (prefix, event, tag) if x)
        rules.append(EcaRule(
            id=rule_id,
            priority=priority_base + index,
            event=event,
            condition=condition,
            action=bind_variant(winner),
            guard=guard,
        ))
    return rules


# -- savings ------------------------------------------------------------------------


def savings(repo: ProfileRepository, baseline: CompositionChain,
            alternative: CompositionChain, params: Sequence[float]) -> SavingsReport:
    """Relative saving of the alternative chain against the baseline chain,
    (baseline - alternative) / baseline, at each requested parameter."""
    rows: list[SavingsRow] = []
    for param in params:
        base = compose_energy(repo, baseline, param).total
        alt = compose_energy(repo, alternative, param).total
        fraction = (base - alt) / base if base > 0 else None
        rows.append(SavingsRow(param=param, baseline_j=base,
                               alternative_j=alt, saving_fraction=fraction))
    return SavingsReport(baseline=baseline.label, alternative=alternative.label,
                         rows=tuple(rows))


# -- plot-data export ------------------------------------------------------------------


def export_plot_data(data: Sequence[ComparisonSeries] | SavingsReport,
                     destination: str | Path) -> Path:
    """Write analysis output as CSV.

    Series lists become ``param,<label1>,<label2>,...`` with one row per grid
    point; savings reports become one row per parameter with the fraction
    rendered to 3 decimals.
    """
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(data, SavingsReport):
            writer.writerow(["param", "baseline_j", "alternative_j", "saving_fraction"])
            for row in data.rows:
                fraction = "undefined" if row.saving_fraction is None \
                    else f"{row.saving_fraction:.3f}"
                writer.writerow([_fmt(row.param), repr(row.baseline_j),
                                 repr(row.alternative_j), fraction])
        else:
            series = list(data)
            writer.writerow(["param"] + [s.label for s in series])
            if series:
                grid = _require_shared_grid(series)
                for i, param in enumerate(grid):
                    writer.writerow([_fmt(param)] + [repr(s.values[i]) for s in series])
    return destination
