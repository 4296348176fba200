"""Identities, rounds, agent trajectories and the derived faulty/correct sets.

Processes are indices ``0..n-1`` (process ``p_k`` of a scenario description is
index ``k-1``). Time is a round counter starting at 1; agents move only at
round boundaries, so a process is wholly faulty or wholly correct per round.
A schedule is the single source of truth for B(r) (faulty set) and C(r)
(correct set).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache


class Timing(Enum):
    SYNC = "SYNC"
    ASYNC = "ASYNC"


class Mobility(Enum):
    S_MOB_PLUS = "S-MOB+"
    S_MOB = "S-MOB"
    A_MOB = "A-MOB"


class OracleKind(Enum):
    NFA = "NFA"
    BFA = "BFA"
    FFA = "FFA"


# Why the non-(SYNC, S-MOB+) settings are labels only, never executable.
UNSUPPORTED_REASONS = {
    Timing.ASYNC: (
        "asynchronous delivery is not executable: with no latency bound a single "
        "mobile agent can visit each process right after the message arrives and "
        "discard it, so no delivery guarantee can be simulated meaningfully"
    ),
    Mobility.A_MOB: (
        "agents with unknown sub-round residency are not executable: an agent that "
        "moves faster than one round can chase a message through all n processes "
        "within one delivery, defeating any round-aligned defense"
    ),
    Mobility.S_MOB: (
        "continuous-time agent movement is not executable in a round-based engine: "
        "mid-round moves break the per-round faulty/correct dichotomy this "
        "simulator is built on"
    ),
}


@dataclass(frozen=True)
class SettingTriple:
    """System setting: timing, agent mobility and local failure-awareness oracle."""

    timing: Timing
    mobility: Mobility
    oracle: OracleKind

    def is_supported(self) -> bool:
        return self.timing is Timing.SYNC and self.mobility is Mobility.S_MOB_PLUS

    def unsupported_reason(self) -> str | None:
        if self.timing is Timing.ASYNC:
            return UNSUPPORTED_REASONS[Timing.ASYNC]
        if self.mobility is not Mobility.S_MOB_PLUS:
            return UNSUPPORTED_REASONS[self.mobility]
        return None

    def to_dict(self) -> dict:
        return {"timing": self.timing.value, "mobility": self.mobility.value, "oracle": self.oracle.value}

    @classmethod
    def from_dict(cls, data: dict) -> "SettingTriple":
        return cls(Timing(data["timing"]), Mobility(data["mobility"]), OracleKind(data["oracle"]))


class RoundOutOfHorizon(Exception):
    """Raised when a round index outside [1, horizon] is queried."""


@dataclass(frozen=True)
class Segment:
    """One contiguous stay of an agent on a host; ``last_round=None`` means open (to horizon)."""

    host: int
    first_round: int
    last_round: int | None = None

    def to_dict(self) -> dict:
        return {"host": self.host, "first_round": self.first_round, "last_round": self.last_round}

    @classmethod
    def from_dict(cls, data: dict) -> "Segment":
        return cls(data["host"], data["first_round"], data.get("last_round"))


@dataclass(frozen=True)
class AgentTrajectory:
    """Where one mobile agent sits over time.

    Segments are ordered and non-overlapping. Gaps are allowed: an agent may
    sit off-board for a while (the adversary simply fields fewer than f agents
    in those rounds). Back-to-back segments must change host — that is what a
    "move" means; after a gap the same host may be re-possessed.
    """

    agent_id: int
    segments: tuple[Segment, ...]

    def to_dict(self) -> dict:
        return {"agent_id": self.agent_id, "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, data: dict) -> "AgentTrajectory":
        return cls(data["agent_id"], tuple(Segment.from_dict(s) for s in data["segments"]))


@dataclass(frozen=True)
class ScheduleViolation:
    agent_id: int | None
    round: int | None
    rule: str
    detail: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[ScheduleViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class FailureSchedule:
    """Complete failure behaviour of a scenario: f agent trajectories over [1, horizon]."""

    n: int
    f: int
    delta_s: int
    horizon: int
    trajectories: tuple[AgentTrajectory, ...]

    def resolved_last(self, seg: Segment) -> int:
        return self.horizon if seg.last_round is None else seg.last_round

    def host_of(self, agent_id: int, r: int) -> int | None:
        """Host of an agent in round r, or None when the agent is off-board."""
        for seg in self.trajectories[agent_id].segments:
            if seg.first_round <= r <= self.resolved_last(seg):
                return seg.host
        return None

    def faulty_set(self, r: int) -> frozenset[int]:
        """B(r): distinct hosts of all agents in round r (co-location collapses)."""
        if r < 1 or r > self.horizon:
            raise RoundOutOfHorizon(f"round {r} outside [1, {self.horizon}]")
        return self._faulty_sets()[r - 1]

    def correct_set(self, r: int) -> frozenset[int]:
        return frozenset(range(self.n)) - self.faulty_set(r)

    def is_faulty(self, p: int, r: int) -> bool:
        return p in self.faulty_set(r)

    def is_correct(self, p: int, r: int) -> bool:
        return p not in self.faulty_set(r)

    def correct_during(self, p: int, first: int, last: int) -> bool:
        """Correct in every round of [first, last]; rounds beyond the horizon are unknowable."""
        if last > self.horizon or first < 1:
            return False
        return all(self.is_correct(p, r) for r in range(first, last + 1))

    def cured_processes(self, r: int) -> frozenset[int]:
        """Processes freed at the r-1/r boundary: faulty in r-1, correct in r."""
        if r < 2:
            return frozenset()
        return self.faulty_set(r - 1) - self.faulty_set(r)

    def faulty_span_start(self, p: int, r: int) -> int:
        """First round of the maximal contiguous faulty span of p that covers round r."""
        if not self.is_faulty(p, r):
            raise ValueError(f"process {p} is not faulty in round {r}")
        start = r
        while start > 1 and self.is_faulty(p, start - 1):
            start -= 1
        return start

    def correct_rounds(self, p: int) -> tuple[int, ...]:
        return tuple(r for r in range(1, self.horizon + 1) if self.is_correct(p, r))

    def _faulty_sets(self) -> tuple[frozenset[int], ...]:
        return _faulty_sets_cached(self)


@lru_cache(maxsize=256)
def _faulty_sets_cached(schedule: FailureSchedule) -> tuple[frozenset[int], ...]:
    sets: list[set[int]] = [set() for _ in range(schedule.horizon)]
    for traj in schedule.trajectories:
        for seg in traj.segments:
            last = schedule.resolved_last(seg)
            for r in range(max(1, seg.first_round), min(last, schedule.horizon) + 1):
                sets[r - 1].add(seg.host)
    return tuple(frozenset(s) for s in sets)


def validate_schedule(schedule: FailureSchedule) -> ValidationResult:
    """Check every schedule invariant; violations are returned as data, never raised."""
    out: list[ScheduleViolation] = []

    if schedule.n < 1:
        out.append(ScheduleViolation(None, None, "process-count", f"n={schedule.n} must be >= 1"))
    if schedule.f < 0:
        out.append(ScheduleViolation(None, None, "agent-count", f"f={schedule.f} must be >= 0"))
    if schedule.delta_s < 1:
        out.append(ScheduleViolation(None, None, "residency-unit", f"delta_s={schedule.delta_s} must be >= 1 round"))
    if schedule.horizon < 1:
        out.append(ScheduleViolation(None, None, "horizon", f"horizon={schedule.horizon} must be >= 1"))
    if len(schedule.trajectories) != schedule.f:
        out.append(ScheduleViolation(
            None, None, "trajectory-count",
            f"{len(schedule.trajectories)} trajectories for f={schedule.f} agents"))

    seen_ids = set()
    for traj in schedule.trajectories:
        if traj.agent_id in seen_ids:
            out.append(ScheduleViolation(traj.agent_id, None, "agent-id", "duplicate agent id"))
        seen_ids.add(traj.agent_id)
        prev: Segment | None = None
        for seg in traj.segments:
            last = schedule.resolved_last(seg)
            if not 0 <= seg.host < schedule.n:
                out.append(ScheduleViolation(traj.agent_id, seg.first_round, "host-range",
                                             f"host {seg.host} outside [0, {schedule.n})"))
            if seg.first_round < 1 or seg.first_round > schedule.horizon:
                out.append(ScheduleViolation(traj.agent_id, seg.first_round, "segment-bounds",
                                             f"segment starts at round {seg.first_round}"))
            if last < seg.first_round:
                out.append(ScheduleViolation(traj.agent_id, seg.first_round, "segment-order",
                                             f"segment ends ({last}) before it starts"))
            elif seg.last_round is not None and last - seg.first_round + 1 < schedule.delta_s:
                out.append(ScheduleViolation(traj.agent_id, seg.first_round, "residency",
                                             f"residency {last - seg.first_round + 1} < delta_s={schedule.delta_s}"))
            if seg.last_round is not None and seg.last_round > schedule.horizon:
                out.append(ScheduleViolation(traj.agent_id, seg.last_round, "segment-bounds",
                                             f"segment ends at round {seg.last_round} beyond horizon"))
            if prev is not None:
                prev_last = schedule.resolved_last(prev)
                if seg.first_round <= prev_last:
                    out.append(ScheduleViolation(traj.agent_id, seg.first_round, "segment-order",
                                                 "segments overlap or are out of order"))
                elif seg.first_round == prev_last + 1 and seg.host == prev.host:
                    out.append(ScheduleViolation(traj.agent_id, seg.first_round, "stationary-move",
                                                 f"adjacent segments both on host {seg.host}"))
            prev = seg

    if not out:
        for r in range(1, schedule.horizon + 1):
            if len(schedule.faulty_set(r)) > schedule.f:
                out.append(ScheduleViolation(None, r, "budget",
                                             f"|B({r})| = {len(schedule.faulty_set(r))} > f = {schedule.f}"))
    return ValidationResult(tuple(out))


class IoVerdict(Enum):
    YES = "YES"
    NO_WITHIN_HORIZON = "NO_WITHIN_HORIZON"


def is_io_correct(schedule: FailureSchedule, p: int, delta_c: int) -> IoVerdict:
    """Finite-horizon reading of "delta_c-infinitely often correct".

    YES iff after every round there is still a full delta_c-long correct window
    for p before the horizon. Obligations of processes that fail this test are
    not enforceable within the trace, so checkers exclude them.
    """
    if delta_c < 1:
        raise ValueError("delta_c must be >= 1")
    if delta_c > schedule.horizon:
        return IoVerdict.NO_WITHIN_HORIZON
    for r in range(0, schedule.horizon - delta_c + 1):
        if not _has_correct_window_after(schedule, p, r, delta_c):
            return IoVerdict.NO_WITHIN_HORIZON
    return IoVerdict.YES


def _has_correct_window_after(schedule: FailureSchedule, p: int, r: int, delta_c: int) -> bool:
    for b in range(r + 1, schedule.horizon - delta_c + 2):
        if all(schedule.is_correct(p, j) for j in range(b, b + delta_c)):
            return True
    return False


def io_correct_processes(schedule: FailureSchedule, delta_c: int) -> tuple[int, ...]:
    return tuple(p for p in range(schedule.n) if is_io_correct(schedule, p, delta_c) is IoVerdict.YES)
