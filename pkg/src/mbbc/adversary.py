"""Omniscient adversary strategies.

A strategy is consulted by the engine for every faulty process: once in the
send phase (``dictate_sends`` — the envelopes the possessed process emits,
with the sender stamp forced by the engine) and once in the compute phase
(``corrupt_state`` — the state the process is left with). Strategies are
deterministic functions of (process, round, observation); the observation is
an omniscient read-only snapshot. A strategy that needs randomness must derive
it from the scenario seed, never from global state.

The two history-forging strategies (``EQUIVOCATE_HISTORY``, ``WIPE_AND_RUN``)
make a possessed process *faithfully run the protocol* by replaying the real
state machine against the process's own state — that is how the paired
indistinguishable executions are produced: the possessed process's wire
behaviour is byte-for-byte what a correct process would have sent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .messages import ProtocolMessage, echo_msg, ready_msg, round_msg, send_msg
from .model import FailureSchedule
from .protocol import (
    ProtocolState,
    Variant,
    begin_receive,
    compute_phase,
    init_state,
    on_cured,
    on_p2p_deliver,
)
from .scenario import Broadcast, ScenarioConfig


class StrategyMisconfigured(Exception):
    pass


@dataclass
class Observation:
    """Read-only omniscient snapshot handed to strategies.

    ``inbound`` maps a process to this round's deliveries (populated during
    the compute phase; empty during the send phase).
    """

    round: int
    config: ScenarioConfig
    schedule: FailureSchedule
    states: Sequence[ProtocolState]
    events: Sequence
    inbound: dict[int, list[tuple[int, ProtocolMessage]]]

    def state_of(self, p: int) -> ProtocolState:
        return self.states[p]

    def inbound_of(self, p: int) -> list[tuple[int, ProtocolMessage]]:
        return self.inbound.get(p, [])


class Strategy:
    """Default behaviour: total silence, state untouched."""

    name = "BENIGN"

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        return []

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        return obs.state_of(p)


class Benign(Strategy):
    name = "BENIGN"


class CrashSilent(Strategy):
    """Silent while possessed; the state is wiped to init when the agent departs."""

    name = "CRASH_SILENT"

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        departing = r >= obs.schedule.horizon or not obs.schedule.is_faulty(p, r + 1)
        return init_state() if departing else obs.state_of(p)


class AlternatingSets(Strategy):
    """P1 hosts spout spurious traffic, P2 hosts are mute; together with the
    cure-silence of whoever was just freed this wastes 2f processes per round.

    Departing P1 hosts additionally leave a poisoned send queue and a trashed
    round counter behind. Under an oracle the cure wipe neutralises the queue;
    with no oracle the freed process flushes it, which is exactly the leak that
    forces the doubled fault bound of the no-oracle variant.
    """

    name = "ALTERNATING_SETS"

    def __init__(self, p1: Sequence[int], p2: Sequence[int], n: int, f: int):
        if set(p1) & set(p2):
            raise StrategyMisconfigured("ALTERNATING_SETS requires disjoint sets")
        if len(set(p1)) != f or len(set(p2)) != f:
            raise StrategyMisconfigured(f"ALTERNATING_SETS requires two sets of exactly f={f} processes")
        if any(not 0 <= p < n for p in [*p1, *p2]):
            raise StrategyMisconfigured("ALTERNATING_SETS set member outside process range")
        self.p1 = frozenset(p1)
        self.p2 = frozenset(p2)
        self.n = n

    def _spurious(self, p: int, r: int) -> list[ProtocolMessage]:
        # A fabricated instance keyed to the sender: at most f votes ever
        # accumulate for it, so it can never clear any quorum.
        junk = b"\xee" + bytes([r % 251])
        return [echo_msg(p, r, junk), ready_msg(p, r, junk), round_msg(9000 + r)]

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        if p in self.p1:
            return [(q, m) for m in self._spurious(p, r) for q in range(self.n)]
        return []

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        state = obs.state_of(p).clone()
        if p in self.p1:
            state.to_send = set(self._spurious(p, r + 1))
            state.rc = 9999
        else:
            state.to_send = set()
        return state


class SplitSend(Strategy):
    """Faulty source performs the selective-send attack on its scheduled broadcast.

    The SEND goes only to ``targets`` in round r_b+1 and the source's own ECHO
    tops the same targets up in round r_b+2, so exactly the targets can reach
    the echo quorum. Everything else the possessed processes could say is
    suppressed (that silence is what swallows one ABORT when the agent hops
    onto an abort-generator for round r_b+3).
    """

    name = "SPLIT_SEND"

    def __init__(self, targets: Sequence[int], broadcasts: Sequence[Broadcast], n: int):
        if any(not 0 <= t < n for t in targets):
            raise StrategyMisconfigured("SPLIT_SEND target outside process range")
        self.targets = sorted(set(targets))
        self.broadcasts = tuple(broadcasts)
        self.n = n

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        out: list[tuple[int, ProtocolMessage]] = []
        for b in self.broadcasts:
            if b.source != p:
                continue
            if r == b.round + 1:
                out.extend((q, send_msg(p, b.round, b.payload)) for q in self.targets)
            elif r == b.round + 2:
                out.extend((q, echo_msg(p, b.round, b.payload)) for q in self.targets)
        return out


def _faithful_sends(state: ProtocolState, n: int) -> list[tuple[int, ProtocolMessage]]:
    """Exactly what the protocol's send phase would emit, without mutating anything."""
    msgs = sorted(state.to_send, key=ProtocolMessage.sort_key)
    return [(q, m) for m in msgs for q in range(n)]


def _faithful_compute(
    state: ProtocolState,
    p: int,
    obs: Observation,
    variant: Variant,
    n: int,
    broadcasts: Sequence[bytes],
    sim_cure: tuple[int, int | None] | None,
    r: int,
) -> ProtocolState:
    """Receive + compute exactly as the protocol would, on a copy of the state."""
    state = state.clone()
    if sim_cure is not None and sim_cure[0] == r:
        on_cured(state, sim_cure[1])
    begin_receive(state)
    for sender, msg in obs.inbound_of(p):
        on_p2p_deliver(state, sender, msg)
    compute_phase(state, p, variant, n, broadcasts=broadcasts)
    return state


class EquivocateHistory(Strategy):
    """Possess the source while making it run the protocol faithfully.

    Paired with the mirror schedule this realises two executions that differ
    only in *when* the source is faulty: the possessed half replays exactly
    what the correct half does, including the cure-silence round (``sim_cure``
    mirrors the oracle event the twin execution receives for real) and the
    broadcast scheduled while faulty.
    """

    name = "EQUIVOCATE_HISTORY"

    def __init__(self, source: int, switch_round: int, config: ScenarioConfig,
                 sim_cure: dict[int, tuple[int, int | None]]):
        self.source = source
        self.switch_round = switch_round
        self.config = config
        self.sim_cure = sim_cure

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        cure = self.sim_cure.get(p)
        if cure is not None and cure[0] == r:
            return []  # mirrors the cure wipe of the twin execution
        return _faithful_sends(obs.state_of(p), self.config.n)

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        payloads = [b.payload for b in self.config.broadcasts if b.source == p and b.round == r]
        return _faithful_compute(
            obs.state_of(p), p, obs, self.config.variant_spec(), self.config.n,
            payloads, self.sim_cure.get(p), r)


class WipeAndRun(Strategy):
    """Possession that optionally mimics correct behaviour, then goes dark and
    wipes the state to init at ``wipe_round`` (the last faulty round)."""

    name = "WIPE_AND_RUN"

    def __init__(self, target: int, sim_until: int, wipe_round: int, config: ScenarioConfig):
        self.target = target
        self.sim_until = sim_until
        self.wipe_round = wipe_round
        self.config = config

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        if p == self.target and r <= self.sim_until:
            return _faithful_sends(obs.state_of(p), self.config.n)
        return []

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        if p != self.target:
            return obs.state_of(p)
        if r <= self.sim_until:
            payloads = [b.payload for b in self.config.broadcasts if b.source == p and b.round == r]
            return _faithful_compute(
                obs.state_of(p), p, obs, self.config.variant_spec(), self.config.n,
                payloads, None, r)
        if r == self.wipe_round:
            return init_state()
        return obs.state_of(p)


class Arbitrary(Strategy):
    """Explicit per-round script, for golden tests and hand-built attacks.

    Script shape: ``{round: {process: {"sends": [[receiver, message], ...],
    "state": null | "init" | {"rc": int, "to_send": [message, ...]}}}}`` with
    rounds and process ids as strings (JSON object keys) or ints.
    """

    name = "ARBITRARY"

    def __init__(self, script: dict, n: int):
        self.n = n
        self.script: dict[tuple[int, int], dict] = {}
        for rnd, per_proc in script.items():
            for p, actions in per_proc.items():
                self.script[(int(rnd), int(p))] = actions

    def dictate_sends(self, p: int, r: int, obs: Observation) -> list[tuple[int, ProtocolMessage]]:
        actions = self.script.get((r, p), {})
        out = []
        for receiver, msg in actions.get("sends", []):
            if not 0 <= receiver < self.n:
                raise StrategyMisconfigured(f"scripted receiver {receiver} out of range")
            out.append((receiver, ProtocolMessage.from_dict(msg) if isinstance(msg, dict) else msg))
        return out

    def corrupt_state(self, p: int, r: int, obs: Observation) -> ProtocolState:
        spec = self.script.get((r, p), {}).get("state")
        if spec is None:
            return obs.state_of(p)
        if spec == "init":
            return init_state()
        state = obs.state_of(p).clone()
        if "rc" in spec:
            state.rc = spec["rc"]
        if "to_send" in spec:
            state.to_send = {
                ProtocolMessage.from_dict(m) if isinstance(m, dict) else m for m in spec["to_send"]}
        if "cured" in spec:
            state.cured = spec["cured"]
        return state


def build_strategy(config: ScenarioConfig) -> Strategy:
    spec = config.strategy
    kind = spec.get("kind", "BENIGN")
    if kind == "BENIGN":
        return Benign()
    if kind == "CRASH_SILENT":
        return CrashSilent()
    if kind == "ALTERNATING_SETS":
        return AlternatingSets(spec.get("p1", []), spec.get("p2", []), config.n, config.f)
    if kind == "SPLIT_SEND":
        return SplitSend(spec.get("targets", []), config.broadcasts, config.n)
    if kind == "EQUIVOCATE_HISTORY":
        sim_cure = {int(p): (rc[0], rc[1]) for p, rc in spec.get("sim_cure", {}).items()}
        return EquivocateHistory(spec["source"], spec["switch_round"], config, sim_cure)
    if kind == "WIPE_AND_RUN":
        return WipeAndRun(spec["target"], spec.get("sim_until", 0), spec["wipe_round"], config)
    if kind == "ARBITRARY":
        return Arbitrary(spec.get("script", {}), config.n)
    raise StrategyMisconfigured(f"unknown strategy kind: {kind!r}")


def generate_paired_histories(kind: str, params: dict) -> tuple[ScenarioConfig, ScenarioConfig]:
    """Build the two indistinguishable scenario configs for an impossibility demo.

    ``SOURCE_FLIP`` (the reliable-broadcast impossibility): the source is
    correct then permanently faulty in one history and the exact mirror in the
    other, broadcasting one payload at round 1 and another at the switch; the
    possessed half simulates the correct half, so every permanently correct
    process observes identical bytes.

    ``WIPE_FLIP`` (the cure-ambiguity impossibility, basic-awareness oracle):
    a destination is correct, delivers, then is possessed and wiped in one
    history; in the other it was possessed from the start, mimicked correct
    behaviour, and is wiped at the same round. Its local state and cure event
    at the switch are identical in both.
    """
    if kind in ("THEOREM_3", "SOURCE_FLIP"):
        n = params.get("n", 6)
        delta_b = params.get("delta_b", 2)
        delta_1 = params.get("delta_1", 1)
        source = params.get("source", 0)
        m1 = _payload(params.get("m1", "m-first"))
        m2 = _payload(params.get("m2", "m-second"))
        if m1 == m2:
            raise StrategyMisconfigured("paired histories need two distinct payloads")
        switch = delta_b + delta_1 + 1
        horizon = params.get("horizon", switch + 6)
        base = {
            "n": n, "f": 1, "delta_s": 1, "delta_b": delta_b, "delta_c": 1,
            "horizon": horizon, "seed": params.get("seed", 0),
            "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
            "variant": "FFA_FULL",
            "broadcasts": [
                Broadcast(source, 1, m1).to_dict(),
                Broadcast(source, switch, m2).to_dict(),
            ],
        }
        h_correct_first = dict(base)
        h_correct_first["schedule"] = {"trajectories": [
            {"agent_id": 0, "segments": [{"host": source, "first_round": switch, "last_round": None}]}]}
        h_correct_first["strategy"] = {
            "kind": "EQUIVOCATE_HISTORY", "source": source, "switch_round": switch,
            "m1": Broadcast(source, 1, m1).to_dict(), "m2": Broadcast(source, switch, m2).to_dict(),
            "sim_cure": {str(source): [switch, 1]},
        }
        h_faulty_first = dict(base)
        h_faulty_first["schedule"] = {"trajectories": [
            {"agent_id": 0, "segments": [{"host": source, "first_round": 1, "last_round": switch - 1}]}]}
        h_faulty_first["strategy"] = {
            "kind": "EQUIVOCATE_HISTORY", "source": source, "switch_round": switch,
            "m1": Broadcast(source, 1, m1).to_dict(), "m2": Broadcast(source, switch, m2).to_dict(),
            "sim_cure": {},
        }
        return ScenarioConfig.from_dict(h_correct_first), ScenarioConfig.from_dict(h_faulty_first)

    if kind in ("THEOREM_4", "WIPE_FLIP"):
        n = params.get("n", 6)
        delta_1 = params.get("delta_1", 4)
        delta_2 = params.get("delta_2", 2)
        source = params.get("source", 0)
        target = params.get("target", 1)
        if source == target:
            raise StrategyMisconfigured("paired histories need distinct source and target")
        m = _payload(params.get("m", "m-wipe"))
        wipe_round = delta_1 + delta_2
        switch = wipe_round + 1
        horizon = params.get("horizon", switch + 3)
        base = {
            "n": n, "f": 1, "delta_s": 1, "delta_b": 2, "delta_c": 1,
            "horizon": horizon, "seed": params.get("seed", 0),
            "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "BFA"},
            "variant": "BFA_WEAK",
            "broadcasts": [Broadcast(source, 1, m).to_dict()],
        }
        h_deliver_first = dict(base)
        h_deliver_first["schedule"] = {"trajectories": [
            {"agent_id": 0, "segments": [
                {"host": target, "first_round": delta_1 + 1, "last_round": wipe_round}]}]}
        h_deliver_first["strategy"] = {
            "kind": "WIPE_AND_RUN", "target": target, "sim_until": 0, "wipe_round": wipe_round}
        h_faulty_first = dict(base)
        h_faulty_first["schedule"] = {"trajectories": [
            {"agent_id": 0, "segments": [
                {"host": target, "first_round": 1, "last_round": wipe_round}]}]}
        h_faulty_first["strategy"] = {
            "kind": "WIPE_AND_RUN", "target": target, "sim_until": delta_1, "wipe_round": wipe_round}
        return ScenarioConfig.from_dict(h_deliver_first), ScenarioConfig.from_dict(h_faulty_first)

    raise StrategyMisconfigured(f"unknown paired-history kind: {kind!r}")


def _payload(value) -> bytes:
    if isinstance(value, bytes):
        return value
    return str(value).encode("utf-8")
