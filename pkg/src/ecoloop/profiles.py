"""Per-variant energy profiles and composition of coupled concerns.

A profile is a sampled curve over one runtime parameter (joules plus output
metrics per sample). Evaluation between knots is piecewise linear; values
outside the sampled range are an error unless the repository was loaded with
clamped extrapolation, which analysis and simulation deliberately do not use.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import CompositionError, OutOfRangeError, ProfileError, UnknownMetricError
from .model import Parameter

PASSTHROUGH = "passthrough"


@dataclass(frozen=True)
class SamplePoint:
    param: float
    energy: float
    outputs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.energy < 0:
            raise ProfileError(f"negative energy {self.energy!r} at param {self.param!r}")
        for name, value in self.outputs.items():
            if value < 0:
                raise ProfileError(f"negative output {name!r}={value!r} at param {self.param!r}")
        object.__setattr__(self, "outputs", MappingProxyType(dict(self.outputs)))


def _interp(xs: tuple[float, ...], ys: tuple[float, ...], x: float) -> float:
    i = bisect_left(xs, x)
    if i < len(xs) and xs[i] == x:
        return ys[i]  # knots reproduce exactly, no lerp rounding
    x0, x1 = xs[i - 1], xs[i]
    t = (x - x0) / (x1 - x0)
    return ys[i - 1] + t * (ys[i] - ys[i - 1])


@dataclass(frozen=True)
class EnergyProfile:
    concern: str
    variant: str | None
    parameter: Parameter
    samples: tuple[SamplePoint, ...]
    source: str = ""
    clamp: bool = False

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ProfileError(
                f"profile {self.key} needs at least 2 samples, got {len(self.samples)}")
        params = [s.param for s in self.samples]
        for a, b in zip(params, params[1:]):
            if not a < b:
                raise ProfileError(
                    f"profile {self.key} params must be strictly increasing ({a!r} !< {b!r})")
        metrics = set(self.samples[0].outputs)
        for s in self.samples:
            if set(s.outputs) != metrics:
                raise ProfileError(
                    f"profile {self.key} samples declare inconsistent output metrics")

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.concern, self.variant)

    @property
    def label(self) -> str:
        return self.concern if self.variant is None else f"{self.variant}"

    @property
    def param_range(self) -> tuple[float, float]:
        return (self.samples[0].param, self.samples[-1].param)

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(s.param for s in self.samples)

    def metrics(self) -> tuple[str, ...]:
        return tuple(sorted(self.samples[0].outputs))

    def _coerce(self, param: float) -> float:
        lo, hi = self.param_range
        if param < lo or param > hi:
            if self.clamp:
                return min(max(param, lo), hi)
            raise OutOfRangeError(
                f"param {param!r} outside sampled range [{lo!r}, {hi!r}] of profile {self.key}")
        return param

    def energy_at(self, param: float) -> float:
        param = self._coerce(param)
        return _interp(self.knots, tuple(s.energy for s in self.samples), param)

    def output_at(self, metric: str, param: float) -> float:
        if metric not in self.samples[0].outputs:
            raise UnknownMetricError(
                f"profile {self.key} has no output metric {metric!r}; "
                f"available: {', '.join(self.metrics()) or 'none'}")
        param = self._coerce(param)
        return _interp(self.knots, tuple(s.outputs[metric] for s in self.samples), param)


def energy_at(profile: EnergyProfile, param: float) -> float:
    return profile.energy_at(param)


def output_at(profile: EnergyProfile, metric: str, param: float) -> float:
    return profile.output_at(metric, param)


class ProfileRepository:
    """Immutable index of profiles keyed by (concern, variant)."""

    def __init__(self, profiles: Iterable[EnergyProfile]):
        self.profiles: dict[tuple[str, str | None], EnergyProfile] = {}
        for profile in profiles:
            if profile.key in self.profiles:
                raise ProfileError(f"duplicate profile for {profile.key}")
            self.profiles[profile.key] = profile

    def get(self, concern: str, variant: str | None = None) -> EnergyProfile:
        try:
            return self.profiles[(concern, variant)]
        except KeyError:
            raise ProfileError(f"no profile for concern {concern!r}, variant {variant!r}") from None

    def has(self, concern: str, variant: str | None = None) -> bool:
        return (concern, variant) in self.profiles

    def keys(self) -> list[tuple[str, str | None]]:
        return sorted(self.profiles, key=lambda k: (k[0], k[1] or ""))

    def to_json(self) -> dict:
        docs = []
        for key in self.keys():
            p = self.profiles[key]
            docs.append({
                "concern": p.concern,
                "variant": p.variant,
                "parameter": p.parameter.to_json(),
                "samples": [
                    {"param": s.param, "energy_j": s.energy, "outputs": dict(s.outputs)}
                    for s in p.samples
                ],
                "source": p.source,
            })
        return {"profiles": docs}


def check_repository_against_model(repo: "ProfileRepository", model) -> None:
    """Profiles must agree with the concern's declared runtime parameter."""
    for (concern, variant), profile in sorted(
            repo.profiles.items(), key=lambda kv: (kv[0][0], kv[0][1] or "")):
        if concern not in model.nodes:
            raise ProfileError(f"profile concern {concern!r} not in model")
        declared = model.nodes[concern].parameter
        if declared is not None and declared.name != profile.parameter.name:
            raise ProfileError(
                f"profile ({concern!r}, {variant!r}) measures {profile.parameter.name!r} "
                f"but the concern declares {declared.name!r}")


def load_repository(source: str | Path | Mapping, clamp: bool = False) -> ProfileRepository:
    if isinstance(source, (str, Path)):
        try:
            document = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ProfileError(f"cannot read repository document: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProfileError(f"repository document is not valid JSON: {exc}") from exc
    else:
        document = source
    return loads_repository(document, clamp=clamp)


def loads_repository(document: Mapping, clamp: bool = False) -> ProfileRepository:
    if not isinstance(document, Mapping) or "profiles" not in document:
        raise ProfileError("repository document must be an object with a 'profiles' list")
    profiles = []
    for raw in document["profiles"]:
        try:
            parameter = Parameter(raw["parameter"]["name"], raw["parameter"]["unit"])
            samples = tuple(
                SamplePoint(
                    param=float(s["param"]),
                    energy=float(s["energy_j"]),
                    outputs={k: float(v) for k, v in s.get("outputs", {}).items()},
                )
                for s in raw["samples"]
            )
            profiles.append(EnergyProfile(
                concern=raw["concern"],
                variant=raw.get("variant"),
                parameter=parameter,
                samples=samples,
                source=raw.get("source", ""),
                clamp=clamp,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProfileError):
                raise
            raise ProfileError(f"malformed profile entry: {exc}") from exc
    return ProfileRepository(profiles)


# -- composition --------------------------------------------------------------

@dataclass(frozen=True)
class ChainStage:
    """One stage of a composition chain. ``coupling`` names the output metric
    handed to the next stage; ``passthrough`` reuses this stage's input."""

    concern: str
    variant: str | None = None
    coupling: str = PASSTHROUGH

    @property
    def label(self) -> str:
        return self.concern if self.variant is None else self.variant

    def to_json(self) -> dict:
        doc: dict = {"concern": self.concern}
        if self.variant is not None:
            doc["variant"] = self.variant
        if self.coupling != PASSTHROUGH:
            doc["coupling"] = self.coupling
        return doc


@dataclass(frozen=True)
class CompositionChain:
    stages: tuple[ChainStage, ...]
    name: str | None = None

    def __post_init__(self):
        if not self.stages:
            raise CompositionError("composition chain needs at least one stage")

    @property
    def label(self) -> str:
        return self.name or "+".join(stage.label for stage in self.stages)

    def to_json(self) -> dict:
        doc: dict = {"stages": [s.to_json() for s in self.stages]}
        if self.name is not None:
            doc["label"] = self.name
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "CompositionChain":
        return cls(tuple(
            ChainStage(concern=s["concern"], variant=s.get("variant"),
                       coupling=s.get("coupling", PASSTHROUGH))
            for s in doc["stages"]
        ), name=doc.get("label"))


def chain(*stages: tuple | ChainStage, label: str | None = None) -> CompositionChain:
    built = []
    for s in stages:
        built.append(s if isinstance(s, ChainStage) else ChainStage(*s))
    return CompositionChain(tuple(built), name=label)


@dataclass(frozen=True)
class StageBreakdown:
    stage: str
    input: float
    energy: float


@dataclass(frozen=True)
class Composition:
    total: float
    breakdown: tuple[StageBreakdown, ...]


def compose_energy(repo: ProfileRepository, chain: CompositionChain, param: float) -> Composition:
    """Total energy of a coupled chain at ``param``: each stage consumes the
    previous stage's coupled output (or the original parameter under
    passthrough) and contributes its own interpolated energy."""
    breakdown: list[StageBreakdown] = []
    total = 0.0
    current = param
    for index, stage in enumerate(chain.stages):
        if not repo.has(stage.concern, stage.variant):
            raise CompositionError(
                f"stage {index} ({stage.label}): no profile for "
                f"({stage.concern!r}, {stage.variant!r})", stage_index=index)
        profile = repo.get(stage.concern, stage.variant)
        try:
            energy = profile.energy_at(current)
        except OutOfRangeError as exc:
            raise CompositionError(
                f"stage {index} ({stage.label}): {exc}", stage_index=index) from exc
        breakdown.append(StageBreakdown(stage.label, current, energy))
        total += energy
        if index + 1 < len(chain.stages) and stage.coupling != PASSTHROUGH:
            try:
                current = profile.output_at(stage.coupling, current)
            except UnknownMetricError as exc:
                raise CompositionError(
                    f"stage {index} ({stage.label}): {exc}", stage_index=index) from exc
    return Composition(total=total, breakdown=tuple(breakdown))
