"""The broadcast-channel protocol as a deterministic per-process state machine.

A broadcast instance is keyed by (source, birth_round, payload) and moves
through four message stages: the source queues SEND in the birth round; every
process that receives a well-formed SEND echoes it; a process that collects
strictly more than (n+F)/2 ECHO votes queues READY, while one that collects
more than F but not a quorum queues ABORT; more than F ABORT votes wipe the
READY tally for that key. A READY quorum (more than 2F distinct voters)
triggers delivery under a variant-specific gate and is re-queued forever so
that temporarily faulty processes can still catch the quorum later.

All quorum comparisons are exact integer arithmetic (2*count > n+F); there is
no floating point anywhere. Votes are per-sender sets, so repeated messages
from one sender never inflate a tally, and all tallies are rebuilt from
scratch each round (the receive phase starts by wiping them), which caps the
influence of any single faulty round.

Three variants share the machine and differ only in the delivery gate and the
effective fault bound F:

* ``FFA_FULL``  — F = f. Deliver exactly in round birth+3, or on the cure of a
  stay that had begun by birth+3 (the full-awareness oracle supplies that
  start round). Gives the no-duplication guarantee.
* ``BFA_WEAK``  — F = f. No faulty-at knowledge, so every cure after birth+3
  re-delivers: duplicates once per cure, by design.
* ``NFA_WEAK``  — F = 2f (a freed process may flush one round of poisoned
  queue, so up to 2f processes misbehave per round). No oracle at all: deliver
  at every round >= birth+3 that shows a quorum.
"""

from __future__ import annotations

import copy
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .messages import (
    MessageKind,
    ProtocolMessage,
    abort_msg,
    echo_msg,
    ready_msg,
    round_msg,
    send_msg,
)

InstanceKey = tuple[int, int, bytes]


class VariantTag(Enum):
    FFA_FULL = "FFA_FULL"
    BFA_WEAK = "BFA_WEAK"
    NFA_WEAK = "NFA_WEAK"


@dataclass(frozen=True)
class Variant:
    """Protocol variant plus the effective fault bound used in every quorum."""

    tag: VariantTag
    effective_f: int

    @classmethod
    def for_tag(cls, tag: VariantTag, f: int) -> "Variant":
        return cls(tag, 2 * f if tag is VariantTag.NFA_WEAK else f)


@dataclass
class ProtocolState:
    """One process's protocol variables.

    ``delivered`` is bookkeeping for the FFA_FULL gate only: it suppresses the
    pathological case where both gate branches could fire for one (source,
    payload) under adversarial schedules. It is part of the corruptible state,
    so it never substitutes for the gate logic itself.
    """

    to_send: set[ProtocolMessage] = field(default_factory=set)
    sends: set[InstanceKey] = field(default_factory=set)
    echos: dict[InstanceKey, set[int]] = field(default_factory=dict)
    readys: dict[InstanceKey, set[int]] = field(default_factory=dict)
    aborts: dict[InstanceKey, set[int]] = field(default_factory=dict)
    rc_votes: dict[int, int] = field(default_factory=dict)
    cured: bool = False
    cured_faulty_since: int | None = None
    rc: int = 1
    delivered: set[tuple[int, bytes]] = field(default_factory=set)

    def clone(self) -> "ProtocolState":
        return copy.deepcopy(self)


def init_state() -> ProtocolState:
    """Fresh state: empty collections, not cured, round counter 1."""
    return ProtocolState()


def broadcast(state: ProtocolState, self_id: int, payload: bytes) -> None:
    """Queue a SEND for a new broadcast instance born in the current round."""
    state.to_send.add(send_msg(self_id, state.rc, payload))


def on_cured(state: ProtocolState, faulty_since: int | None = None) -> None:
    """Oracle upcall: mark the process cured; FFA also reports when the stay began."""
    state.cured = True
    state.cured_faulty_since = faulty_since


def send_phase(state: ProtocolState) -> list[ProtocolMessage]:
    """Return the messages to send to every process this round.

    A cured process discards its whole queue instead: anything in it may have
    been planted by the departed agent.
    """
    if state.cured:
        state.to_send.clear()
        return []
    return sorted(state.to_send, key=ProtocolMessage.sort_key)


def begin_receive(state: ProtocolState) -> None:
    """Wipe all per-round tallies; a round's votes never leak into the next."""
    state.sends.clear()
    state.echos.clear()
    state.readys.clear()
    state.aborts.clear()
    state.rc_votes.clear()


def on_p2p_deliver(state: ProtocolState, sender: int, msg: ProtocolMessage) -> None:
    """Record one received message into the round's tallies.

    A SEND counts only when its source field matches the authenticated sender;
    vote maps hold sender sets, so duplicates from one sender are idempotent.
    """
    if msg.kind is MessageKind.ROUND:
        state.rc_votes[sender] = msg.round_value
        return
    key = msg.instance_key()
    if msg.kind is MessageKind.SEND:
        if sender == msg.source:
            state.sends.add(key)
    elif msg.kind is MessageKind.ECHO:
        state.echos.setdefault(key, set()).add(sender)
    elif msg.kind is MessageKind.READY:
        state.readys.setdefault(key, set()).add(sender)
    elif msg.kind is MessageKind.ABORT:
        state.aborts.setdefault(key, set()).add(sender)


def get_majority(votes: Iterable[int], current: int, min_backing: int = 0) -> int:
    """Most frequent round vote; ties break toward the larger value; no votes keep ``current``.

    A plurality value is adopted only when it has strictly more than
    ``min_backing`` votes — at least one vote the adversary cannot have forged.
    Without the guard the counter is hijackable in round 1, when no honest
    vote has been sent yet and forged votes are the only input. Under n > 3f
    at least n-2f identical honest votes clear the guard and dominate any
    forged value, which is what keeps all correct counters equal; the
    tie-break exists only to stay deterministic on invalid scenarios.
    """
    counts = Counter(votes)
    if not counts:
        return current
    value, count = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    if count <= min_backing:
        return current
    return value


def compute_phase(
    state: ProtocolState,
    self_id: int,
    variant: Variant,
    n: int,
    broadcasts: Sequence[bytes] = (),
) -> list[tuple[int, bytes]]:
    """Run one compute phase; returns the deliveries (source, payload) it triggers.

    Order matters and is fixed: wipe the send queue, repair the round counter
    by majority, apply any broadcast calls scheduled for this round (they must
    land after the wipe and before the counter increments, so the SEND is
    stamped with the current round), then process SEND->ECHO, ECHO->READY or
    ABORT, ABORT wipes, the delivery gate with READY relay, and finally the
    counter increment with its ROUND vote.
    """
    F = variant.effective_f
    state.to_send.clear()
    state.rc = get_majority(state.rc_votes.values(), state.rc, min_backing=F)

    for payload in broadcasts:
        broadcast(state, self_id, payload)

    for key in sorted(state.sends, key=_key_order):
        source, birth, payload = key
        if state.rc == birth + 1:
            state.to_send.add(echo_msg(source, birth, payload))

    for key in sorted(state.echos, key=_key_order):
        votes = len(state.echos[key])
        if 2 * votes > n + F:
            state.to_send.add(ready_msg(*key))
        elif votes > F:
            state.to_send.add(abort_msg(*key))

    for key in sorted(state.aborts, key=_key_order):
        if len(state.aborts[key]) > F:
            state.readys[key] = set()

    deliveries: list[tuple[int, bytes]] = []
    quorum_keys = [key for key, voters in state.readys.items() if len(voters) > 2 * F]
    min_birth: dict[tuple[int, bytes], int] = {}
    for source, birth, payload in quorum_keys:
        prev = min_birth.get((source, payload))
        if prev is None or birth < prev:
            min_birth[(source, payload)] = birth

    for key in sorted(quorum_keys, key=_key_order):
        source, birth, payload = key
        if birth == min_birth[(source, payload)] and _delivery_gate(state, variant, birth):
            if variant.tag is VariantTag.FFA_FULL:
                if (source, payload) not in state.delivered:
                    state.delivered.add((source, payload))
                    deliveries.append((source, payload))
            else:
                deliveries.append((source, payload))
        # Relay forever, delivered or not: later-cured processes need the quorum.
        state.to_send.add(ready_msg(*key))

    state.cured = False
    state.cured_faulty_since = None
    state.rc += 1
    state.to_send.add(round_msg(state.rc))
    return deliveries


def _delivery_gate(state: ProtocolState, variant: Variant, birth: int) -> bool:
    due = birth + 3
    if variant.tag is VariantTag.NFA_WEAK:
        return state.rc >= due
    if state.rc == due:
        return True
    if not (state.cured and state.rc > due):
        return False
    if variant.tag is VariantTag.BFA_WEAK:
        return True
    # FFA_FULL: only the cure of a stay that had already begun by the due round.
    return state.cured_faulty_since is not None and state.cured_faulty_since <= due


def _key_order(key: InstanceKey) -> tuple:
    return key


def state_fingerprint(state: ProtocolState) -> str:
    """Stable digest of a state, used to record corruption events in traces."""
    doc = {
        "to_send": [m.to_dict() for m in sorted(state.to_send, key=ProtocolMessage.sort_key)],
        "sends": sorted((s, b, p.hex()) for s, b, p in state.sends),
        "echos": _map_doc(state.echos),
        "readys": _map_doc(state.readys),
        "aborts": _map_doc(state.aborts),
        "rc_votes": sorted(state.rc_votes.items()),
        "cured": state.cured,
        "cured_faulty_since": state.cured_faulty_since,
        "rc": state.rc,
        "delivered": sorted((s, p.hex()) for s, p in state.delivered),
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _map_doc(votes: dict[InstanceKey, set[int]]) -> list:
    return sorted([[s, b, p.hex()], sorted(members)] for (s, b, p), members in votes.items())
