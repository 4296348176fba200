"""Scenario configuration: the single JSON document driving a simulation.

A scenario pins everything the engine needs: sizes (n, f), timing parameters
(delta_s residency, delta_b/delta_c property windows, horizon), the setting
triple, the protocol variant, the failure schedule (explicit trajectories or a
named generator), the scheduled broadcast calls and the adversary strategy.
Field names in the JSON match the attribute names here exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .messages import decode_payload, encode_payload
from .model import (
    AgentTrajectory,
    FailureSchedule,
    Mobility,
    OracleKind,
    Segment,
    SettingTriple,
    Timing,
    validate_schedule,
)
from .protocol import Variant, VariantTag


class InvalidScenario(Exception):
    """Configuration is structurally broken or violates a schedule invariant."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class UnsupportedSetting(Exception):
    """Setting triple outside (SYNC, S-MOB+, *); carries the impossibility reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


_VARIANT_ORACLE = {
    VariantTag.FFA_FULL: OracleKind.FFA,
    VariantTag.BFA_WEAK: OracleKind.BFA,
    VariantTag.NFA_WEAK: OracleKind.NFA,
}


@dataclass(frozen=True)
class Broadcast:
    source: int
    round: int
    payload: bytes

    def to_dict(self) -> dict:
        out = {"source": self.source, "round": self.round}
        out.update(encode_payload(self.payload))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Broadcast":
        return cls(data["source"], data["round"], decode_payload(data))


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    f: int
    delta_s: int
    delta_b: int
    delta_c: int
    horizon: int
    seed: int
    setting: SettingTriple
    variant: VariantTag
    schedule: dict = field(hash=False)
    broadcasts: tuple[Broadcast, ...] = ()
    strategy: dict = field(default_factory=lambda: {"kind": "BENIGN"}, hash=False)

    def variant_spec(self) -> Variant:
        return Variant.for_tag(self.variant, self.f)

    def resolved_schedule(self) -> FailureSchedule:
        return build_schedule(self)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "f": self.f,
            "delta_s": self.delta_s,
            "delta_b": self.delta_b,
            "delta_c": self.delta_c,
            "horizon": self.horizon,
            "seed": self.seed,
            "setting": self.setting.to_dict(),
            "variant": self.variant.value,
            "schedule": self.schedule,
            "broadcasts": [b.to_dict() for b in self.broadcasts],
            "strategy": self.strategy,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        problems = [k for k in ("n", "f", "horizon", "setting", "schedule") if k not in data]
        if problems:
            raise InvalidScenario([f"missing config field: {k}" for k in problems])
        try:
            setting = SettingTriple.from_dict(data["setting"])
        except (KeyError, ValueError) as exc:
            raise InvalidScenario([f"bad setting triple: {exc}"]) from exc
        try:
            variant = VariantTag(data.get("variant", "FFA_FULL"))
        except ValueError as exc:
            raise InvalidScenario([f"unknown variant: {data.get('variant')}"]) from exc
        try:
            broadcasts = tuple(Broadcast.from_dict(b) for b in data.get("broadcasts", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScenario([f"bad broadcast entry: {exc}"]) from exc
        return cls(
            n=data["n"],
            f=data["f"],
            delta_s=data.get("delta_s", 1),
            delta_b=data.get("delta_b", 2),
            delta_c=data.get("delta_c", 1),
            horizon=data["horizon"],
            seed=data.get("seed", 0),
            setting=setting,
            variant=variant,
            schedule=data["schedule"],
            broadcasts=broadcasts,
            strategy=data.get("strategy", {"kind": "BENIGN"}),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidScenario([f"config is not valid JSON: {exc}"]) from exc
        if not isinstance(data, dict):
            raise InvalidScenario(["config must be a JSON object"])
        return cls.from_dict(data)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        """Clone with field overrides given in JSON form (as they appear in the document)."""
        data = self.to_dict()
        data.update(kwargs)
        return ScenarioConfig.from_dict(data)

    def validate(self) -> None:
        """Raise UnsupportedSetting / InvalidScenario; schedule invariants included."""
        reason = self.setting.unsupported_reason()
        if reason is not None:
            raise UnsupportedSetting(reason)
        problems: list[str] = []
        if self.n < 1:
            problems.append(f"n={self.n} must be >= 1")
        if not 0 <= self.f < self.n:
            problems.append(f"f={self.f} must satisfy 0 <= f < n")
        if self.delta_s < 1:
            problems.append("delta_s must be >= 1 round in this setting (sub-round residency is not executable)")
        if self.delta_b < 1 or self.delta_c < 1:
            problems.append("delta_b and delta_c must be >= 1")
        if self.horizon < 1:
            problems.append("horizon must be >= 1")
        expected_oracle = _VARIANT_ORACLE[self.variant]
        if self.setting.oracle is not expected_oracle:
            problems.append(
                f"variant {self.variant.value} requires oracle {expected_oracle.value}, "
                f"got {self.setting.oracle.value}")
        for b in self.broadcasts:
            if not 0 <= b.source < self.n:
                problems.append(f"broadcast source {b.source} outside [0, {self.n})")
            if not 1 <= b.round <= self.horizon:
                problems.append(f"broadcast round {b.round} outside [1, {self.horizon}]")
        if problems:
            raise InvalidScenario(problems)
        schedule = self.resolved_schedule()
        result = validate_schedule(schedule)
        if not result.ok:
            raise InvalidScenario(
                [f"schedule: agent={v.agent_id} round={v.round} {v.rule}: {v.detail}" for v in result.violations])


def build_schedule(config: ScenarioConfig) -> FailureSchedule:
    """Resolve the schedule spec (explicit trajectories or a named generator)."""
    spec = config.schedule
    if "trajectories" in spec:
        trajectories = tuple(AgentTrajectory.from_dict(t) for t in spec["trajectories"])
    else:
        generator = spec.get("generator")
        params = spec.get("params", {})
        if generator == "static":
            trajectories = _static_trajectories(config, params)
        elif generator == "alternating":
            trajectories = _alternating_trajectories(config, params)
        elif generator == "roundrobin":
            trajectories = _roundrobin_trajectories(config, params)
        else:
            raise InvalidScenario([f"unknown schedule generator: {generator!r}"])
    return FailureSchedule(
        n=config.n, f=config.f, delta_s=config.delta_s, horizon=config.horizon,
        trajectories=trajectories)


def _static_trajectories(config: ScenarioConfig, params: dict) -> tuple[AgentTrajectory, ...]:
    hosts = params.get("hosts", [])
    if len(hosts) != config.f:
        raise InvalidScenario([f"static generator needs exactly f={config.f} hosts"])
    return tuple(
        AgentTrajectory(agent_id=i, segments=(Segment(host=h, first_round=1, last_round=None),))
        for i, h in enumerate(hosts))


def _alternating_trajectories(config: ScenarioConfig, params: dict) -> tuple[AgentTrajectory, ...]:
    """Each agent flips between its P1 host and its P2 host in stays of delta_s rounds.

    The first P1 stay starts at ``start`` (default round 2); pairing the sweep
    broadcast round with r_b = delta_s puts P1 on the wire for the SEND round
    and P2 on it for the ECHO and READY rounds — the f-spurious/f-silent
    double-hit works for every residency, not just delta_s = 1.
    """
    p1 = list(params.get("p1", []))
    p2 = list(params.get("p2", []))
    start = params.get("start", 2)
    if len(p1) != config.f or len(p2) != config.f:
        raise InvalidScenario([f"alternating generator needs |p1| = |p2| = f = {config.f}"])
    if set(p1) & set(p2):
        raise InvalidScenario(["alternating generator needs disjoint p1 and p2"])
    period = config.delta_s
    out = []
    for i in range(config.f):
        segments = []
        first = start
        on_p1 = True
        while first <= config.horizon:
            last = min(first + period - 1, config.horizon)
            host = p1[i] if on_p1 else p2[i]
            # Tail stay cut by the horizon: emit as open so residency holds.
            segments.append(Segment(host=host, first_round=first,
                                    last_round=None if last == config.horizon else last))
            first = last + 1
            on_p1 = not on_p1
        out.append(AgentTrajectory(agent_id=i, segments=tuple(segments)))
    return tuple(out)


def _roundrobin_trajectories(config: ScenarioConfig, params: dict) -> tuple[AgentTrajectory, ...]:
    """Agent i walks the ring of processes, one stay of delta_s per host."""
    offset = params.get("offset", 0)
    skip = set(params.get("skip", []))
    ring = [p for p in range(config.n) if p not in skip]
    if not ring:
        raise InvalidScenario(["roundrobin generator has no hosts left after skip"])
    out = []
    for i in range(config.f):
        segments = []
        first = 1
        step = 0
        while first <= config.horizon:
            host = ring[(offset + i + step) % len(ring)]
            last = min(first + config.delta_s - 1, config.horizon)
            segments.append(Segment(host=host, first_round=first,
                                    last_round=None if last == config.horizon else last))
            first = last + 1
            step += 1
        out.append(AgentTrajectory(agent_id=i, segments=tuple(segments)))
    return tuple(out)


def setting(timing: str = "SYNC", mobility: str = "S-MOB+", oracle: str = "FFA") -> SettingTriple:
    return SettingTriple(Timing(timing), Mobility(mobility), OracleKind(oracle))
