"""Property checkers over finished traces.

Each checker is a pure function of (trace, schedule, parameters) returning a
PropertyReport with verdict SATISFIED, VIOLATED (with a replayable witness) or
UNRESOLVED (the obligation falls due beyond the horizon — never treated as a
violation).

Deliveries performed while a process is faulty appear in traces but are
excluded from every evaluation: operations executed by a possessed process are
adversary output, not protocol output. "Eventually" is made finite-horizon by
anchoring each obligation at the earliest round the protocol itself promises:
three rounds after the broadcast for processes correct then, and the first
correct round after that point otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .engine import (
    KIND_BROADCAST_CALL,
    KIND_CURED,
    KIND_DELIVER_CALL,
    KIND_P2P_DELIVER,
    KIND_P2P_SEND,
    Trace,
    TraceEvent,
)
from .messages import decode_payload
from .model import FailureSchedule, io_correct_processes
from .protocol import VariantTag

SATISFIED = "SATISFIED"
VIOLATED = "VIOLATED"
UNRESOLVED = "UNRESOLVED"

VALIDITY = "VALIDITY"
NO_DUPLICATION = "NO_DUPLICATION"
INTEGRITY = "INTEGRITY"
CONSISTENCY = "CONSISTENCY"
AGREEMENT = "AGREEMENT"
TOTALITY = "TOTALITY"
DELIVERY_COUNT_LAW = "DELIVERY_COUNT_LAW"

MBBC_PROPERTIES = (VALIDITY, NO_DUPLICATION, INTEGRITY, AGREEMENT, DELIVERY_COUNT_LAW)
ALL_PROPERTIES = MBBC_PROPERTIES + (CONSISTENCY, TOTALITY)

OBSERVABLE_KINDS = frozenset({KIND_P2P_SEND, KIND_P2P_DELIVER, KIND_BROADCAST_CALL, KIND_DELIVER_CALL})


class MalformedTrace(Exception):
    pass


@dataclass(frozen=True)
class DeliveryRecord:
    process: int
    round: int
    source: int
    payload: bytes
    correct_at_delivery: bool
    event_index: int


@dataclass(frozen=True)
class BroadcastRecord:
    source: int
    round: int
    payload: bytes
    event_index: int


@dataclass
class PropertyReport:
    property: str
    verdict: str
    witness: list[int] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"property": self.property, "verdict": self.verdict,
                "witness": list(self.witness), "details": self.details}


def extract_deliveries(trace: Trace, schedule: FailureSchedule) -> list[DeliveryRecord]:
    out = []
    for idx, ev in enumerate(trace.events):
        if ev.kind != KIND_DELIVER_CALL:
            continue
        try:
            payload = decode_payload(ev.detail)
            source = ev.detail["source"]
        except (KeyError, ValueError) as exc:
            raise MalformedTrace(f"bad DELIVER_CALL detail at event {idx}: {exc}") from exc
        out.append(DeliveryRecord(
            process=ev.subject, round=ev.round, source=source, payload=payload,
            correct_at_delivery=schedule.is_correct(ev.subject, ev.round), event_index=idx))
    return out


def extract_broadcasts(trace: Trace) -> list[BroadcastRecord]:
    out = []
    for idx, ev in enumerate(trace.events):
        if ev.kind != KIND_BROADCAST_CALL:
            continue
        try:
            payload = decode_payload(ev.detail)
        except (KeyError, ValueError) as exc:
            raise MalformedTrace(f"bad BROADCAST_CALL detail at event {idx}: {exc}") from exc
        out.append(BroadcastRecord(source=ev.subject, round=ev.round, payload=payload, event_index=idx))
    return out


def due_round(schedule: FailureSchedule, p: int, anchor: int) -> int | None:
    """Earliest round at which p's obligation is enforceable: the anchor if p is
    correct then, else p's first correct round after it; None when past the horizon."""
    if anchor > schedule.horizon:
        return None
    if schedule.is_correct(p, anchor):
        return anchor
    for r in range(anchor + 1, schedule.horizon + 1):
        if schedule.is_correct(p, r):
            return r
    return None


def check_validity(trace: Trace, schedule: FailureSchedule, delta_b: int, delta_c: int) -> PropertyReport:
    """Broadcasts by a source correct for delta_b rounds must reach a delivery.

    Two readings are evaluated: the base one (at least one delta_c-i.o.-correct
    process delivers while correct) always, and the per-process one (every
    such process delivers) when the scenario runs the full-oracle variant with
    n > 5f, where that stronger guarantee is promised.
    """
    deliveries = extract_deliveries(trace, schedule)
    io_set = set(io_correct_processes(schedule, delta_c))
    config = trace.scenario()
    strong = config.variant is VariantTag.FFA_FULL and config.n > 5 * config.f

    instances = []
    verdict = SATISFIED
    witness: list[int] = []
    for b in extract_broadcasts(trace):
        if not schedule.correct_during(b.source, b.round, b.round + delta_b - 1):
            instances.append({"source": b.source, "round": b.round, "status": "vacuous",
                              "reason": "source not correct for delta_b rounds"})
            continue
        anchor = b.round + 3
        inst: dict = {"source": b.source, "round": b.round}
        delivered_by = {d.process for d in deliveries
                        if d.correct_at_delivery and d.source == b.source and d.payload == b.payload}
        io_delivered = delivered_by & io_set

        if io_delivered:
            inst["base_reading"] = SATISFIED
        else:
            enforceable = [p for p in sorted(io_set) if due_round(schedule, p, anchor) is not None]
            if enforceable:
                inst["base_reading"] = VIOLATED
                witness.append(b.event_index)
                verdict = VIOLATED
            else:
                inst["base_reading"] = UNRESOLVED
                if verdict == SATISFIED:
                    verdict = UNRESOLVED

        if strong:
            missing = []
            pending = []
            for p in sorted(io_set):
                if p in delivered_by:
                    continue
                due = due_round(schedule, p, anchor)
                if due is None:
                    pending.append(p)
                else:
                    missing.append({"process": p, "due_round": due})
            if missing:
                inst["per_process_reading"] = VIOLATED
                inst["missing"] = missing
                witness.append(b.event_index)
                verdict = VIOLATED
            elif pending:
                inst["per_process_reading"] = UNRESOLVED
                inst["pending"] = pending
                if verdict == SATISFIED:
                    verdict = UNRESOLVED
            else:
                inst["per_process_reading"] = SATISFIED
        instances.append(inst)

    details = {"instances": instances, "per_process_reading_evaluated": strong}
    if not instances:
        details["note"] = "no qualifying broadcast; vacuously satisfied"
    return PropertyReport(VALIDITY, verdict, sorted(set(witness)), details)


def check_no_duplication(trace: Trace, schedule: FailureSchedule) -> PropertyReport:
    """No process delivers the same (source, payload) twice while correct."""
    groups: dict[tuple[int, int, bytes], list[DeliveryRecord]] = {}
    for d in extract_deliveries(trace, schedule):
        if d.correct_at_delivery:
            groups.setdefault((d.process, d.source, d.payload), []).append(d)
    duplicates = {key: recs for key, recs in groups.items() if len(recs) > 1}
    if duplicates:
        witness = sorted(rec.event_index for recs in duplicates.values() for rec in recs)
        details = {"duplicates": [
            {"process": p, "source": s, "rounds": [r.round for r in recs]}
            for (p, s, _m), recs in sorted(duplicates.items(), key=lambda kv: kv[0][:2])]}
        return PropertyReport(NO_DUPLICATION, VIOLATED, witness, details)
    return PropertyReport(NO_DUPLICATION, SATISFIED, [], {"deliveries": len(groups)})


def check_integrity(trace: Trace, schedule: FailureSchedule, delta_b: int) -> PropertyReport:
    """Every correct-time delivery traces back to a correct broadcast or a faulty source."""
    broadcasts = extract_broadcasts(trace)
    violations = []
    witness = []
    for d in extract_deliveries(trace, schedule):
        if not d.correct_at_delivery:
            continue
        by_broadcast = any(
            b.source == d.source and b.payload == d.payload and b.round <= d.round
            and schedule.correct_during(b.source, b.round, b.round + delta_b - 1)
            for b in broadcasts)
        was_faulty = any(schedule.is_faulty(d.source, r) for r in range(1, d.round + 1))
        if not (by_broadcast or was_faulty):
            violations.append({"process": d.process, "round": d.round, "source": d.source})
            witness.append(d.event_index)
    if violations:
        return PropertyReport(INTEGRITY, VIOLATED, sorted(witness), {"violations": violations})
    return PropertyReport(INTEGRITY, SATISFIED, [], {})


def _obligation_check(prop: str, trace: Trace, schedule: FailureSchedule, delta_c: int,
                      match_payload: bool) -> PropertyReport:
    """Shared core of Agreement (per message) and Totality (per source)."""
    deliveries = extract_deliveries(trace, schedule)
    io_set = io_correct_processes(schedule, delta_c)
    instances: dict = {}
    for d in deliveries:
        if not d.correct_at_delivery:
            continue
        key = (d.source, d.payload) if match_payload else d.source
        if key not in instances or d.round < instances[key].round:
            instances[key] = d
    verdict = SATISFIED
    witness: list[int] = []
    details: list[dict] = []
    for key, first in sorted(instances.items(), key=lambda kv: kv[1].event_index):
        for p in io_set:
            if match_payload:
                done = any(d.process == p and d.correct_at_delivery
                           and (d.source, d.payload) == key for d in deliveries)
            else:
                done = any(d.process == p and d.correct_at_delivery and d.source == key
                           for d in deliveries)
            if done:
                continue
            # "Eventually" grants at least one round past the first observed
            # delivery; an obligation whose first enforceable round falls past
            # the horizon stays UNRESOLVED rather than VIOLATED.
            due = due_round(schedule, p, first.round + 1)
            entry = {"process": p, "source": first.source, "first_delivery_round": first.round}
            if due is None:
                entry["status"] = UNRESOLVED
                if verdict == SATISFIED:
                    verdict = UNRESOLVED
            else:
                entry["status"] = VIOLATED
                entry["due_round"] = due
                verdict = VIOLATED
                witness.append(first.event_index)
            details.append(entry)
    return PropertyReport(prop, verdict, sorted(set(witness)), {"obligations": details})


def check_agreement(trace: Trace, schedule: FailureSchedule, delta_c: int) -> PropertyReport:
    """A correct-time delivery of (s, m) obliges every i.o.-correct process to deliver (s, m)."""
    return _obligation_check(AGREEMENT, trace, schedule, delta_c, match_payload=True)


def check_mbrb_totality(trace: Trace, schedule: FailureSchedule, delta_c: int) -> PropertyReport:
    """One-shot reading: a delivery from s obliges every i.o.-correct process to deliver from s."""
    return _obligation_check(TOTALITY, trace, schedule, delta_c, match_payload=False)


def check_mbrb_consistency(trace: Trace, schedule: FailureSchedule) -> PropertyReport:
    """One-shot reading: any two correct-time deliveries from one source carry equal payloads."""
    by_source: dict[int, dict[bytes, DeliveryRecord]] = {}
    for d in extract_deliveries(trace, schedule):
        if d.correct_at_delivery:
            by_source.setdefault(d.source, {}).setdefault(d.payload, d)
    for source, payloads in sorted(by_source.items()):
        if len(payloads) > 1:
            recs = sorted(payloads.values(), key=lambda d: d.event_index)[:2]
            return PropertyReport(CONSISTENCY, VIOLATED, [r.event_index for r in recs],
                                  {"source": source, "distinct_payload_count": len(payloads)})
    return PropertyReport(CONSISTENCY, SATISFIED, [], {})


def check_delivery_count_laws(trace: Trace, schedule: FailureSchedule, variant: VariantTag) -> PropertyReport:
    """Duplicate-delivery laws of the weak variants.

    BFA_WEAK: once an instance has been delivered somewhere, each process must
    deliver it at least (1 if correct at birth+3 else 0) + (cures after
    birth+3) times — one baseline delivery plus one per cure. NFA_WEAK: a
    process must deliver the instance at every correct round from birth+3 on.
    Not applicable to the full variant.
    """
    if variant is VariantTag.FFA_FULL:
        return PropertyReport(DELIVERY_COUNT_LAW, SATISFIED, [],
                              {"note": "not applicable to the full no-duplication variant"})
    deliveries = extract_deliveries(trace, schedule)
    broadcasts = extract_broadcasts(trace)
    cured_rounds: dict[int, list[int]] = {}
    for ev in trace.events:
        if ev.kind == KIND_CURED:
            cured_rounds.setdefault(ev.subject, []).append(ev.round)

    instances: dict[tuple[int, bytes], list[DeliveryRecord]] = {}
    for d in deliveries:
        if d.correct_at_delivery:
            instances.setdefault((d.source, d.payload), []).append(d)

    verdict = SATISFIED
    witness: list[int] = []
    details: list[dict] = []
    for (source, payload), recs in sorted(instances.items(), key=lambda kv: kv[1][0].event_index):
        declared = [b.round for b in broadcasts if b.source == source and b.payload == payload]
        birth = min(declared) if declared else min(r.round for r in recs) - 3
        due = birth + 3
        inst: dict = {"source": source, "birth_round": birth}
        if variant is VariantTag.BFA_WEAK:
            for p in range(schedule.n):
                cures = [r for r in cured_rounds.get(p, []) if r > due]
                baseline = 1 if due <= schedule.horizon and schedule.is_correct(p, due) else 0
                required = baseline + len(cures)
                actual = sum(1 for d in recs if d.process == p)
                if actual < required:
                    verdict = VIOLATED
                    witness.extend(d.event_index for d in recs if d.process == p)
                    inst.setdefault("shortfalls", []).append(
                        {"process": p, "required": required, "actual": actual, "cures": cures})
        else:  # NFA_WEAK
            for p in range(schedule.n):
                delivered_rounds = {d.round for d in recs if d.process == p}
                for r in range(due, schedule.horizon + 1):
                    if schedule.is_correct(p, r) and r not in delivered_rounds:
                        verdict = VIOLATED
                        inst.setdefault("missing", []).append({"process": p, "round": r})
        details.append(inst)
    if not instances:
        details.append({"note": "no delivered instance; law vacuous"})
    return PropertyReport(DELIVERY_COUNT_LAW, verdict, sorted(set(witness)), {"instances": details})


def run_property_checks(trace: Trace, schedule: FailureSchedule, delta_b: int, delta_c: int,
                        variant: VariantTag, properties: tuple[str, ...] = MBBC_PROPERTIES,
                        ) -> list[PropertyReport]:
    reports = []
    for prop in properties:
        if prop == VALIDITY:
            reports.append(check_validity(trace, schedule, delta_b, delta_c))
        elif prop == NO_DUPLICATION:
            reports.append(check_no_duplication(trace, schedule))
        elif prop == INTEGRITY:
            reports.append(check_integrity(trace, schedule, delta_b))
        elif prop == AGREEMENT:
            reports.append(check_agreement(trace, schedule, delta_c))
        elif prop == DELIVERY_COUNT_LAW:
            reports.append(check_delivery_count_laws(trace, schedule, variant))
        elif prop == CONSISTENCY:
            reports.append(check_mbrb_consistency(trace, schedule))
        elif prop == TOTALITY:
            reports.append(check_mbrb_totality(trace, schedule, delta_c))
        else:
            raise ValueError(f"unknown property: {prop}")
    return reports


def reports_to_json(reports: list[PropertyReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def replay_witness(report: PropertyReport, trace: Trace, schedule: FailureSchedule,
                   delta_b: int, delta_c: int, variant: VariantTag) -> bool:
    """Re-derive a VIOLATED verdict from its witness events alone.

    Returns True when the cited events (plus, for absence-style properties, a
    scan confirming the absence) establish the violation on this trace.
    """
    if report.verdict != VIOLATED:
        return False
    events = trace.events
    if any(not 0 <= i < len(events) for i in report.witness):
        return False

    if report.property == NO_DUPLICATION:
        recs = [_delivery_at(trace, schedule, i) for i in report.witness]
        if any(r is None or not r.correct_at_delivery for r in recs):
            return False
        seen: dict[tuple[int, int, bytes], int] = {}
        for r in recs:
            key = (r.process, r.source, r.payload)
            seen[key] = seen.get(key, 0) + 1
        return any(c > 1 for c in seen.values())

    if report.property == CONSISTENCY:
        recs = [_delivery_at(trace, schedule, i) for i in report.witness]
        if len(recs) < 2 or any(r is None or not r.correct_at_delivery for r in recs):
            return False
        return recs[0].source == recs[1].source and recs[0].payload != recs[1].payload

    if report.property == INTEGRITY:
        fresh = check_integrity(trace, schedule, delta_b)
        return fresh.verdict == VIOLATED and set(report.witness) <= set(fresh.witness)

    if report.property == VALIDITY:
        fresh = check_validity(trace, schedule, delta_b, delta_c)
        return fresh.verdict == VIOLATED and set(report.witness) <= set(fresh.witness)

    if report.property in (AGREEMENT, TOTALITY):
        fresh = (check_agreement if report.property == AGREEMENT else
                 lambda t, s, d: check_mbrb_totality(t, s, d))(trace, schedule, delta_c)
        return fresh.verdict == VIOLATED and set(report.witness) <= set(fresh.witness)

    if report.property == DELIVERY_COUNT_LAW:
        fresh = check_delivery_count_laws(trace, schedule, variant)
        return fresh.verdict == VIOLATED

    return False


def _delivery_at(trace: Trace, schedule: FailureSchedule, index: int) -> DeliveryRecord | None:
    ev = trace.events[index]
    if ev.kind != KIND_DELIVER_CALL:
        return None
    return DeliveryRecord(
        process=ev.subject, round=ev.round, source=ev.detail["source"],
        payload=decode_payload(ev.detail),
        correct_at_delivery=schedule.is_correct(ev.subject, ev.round), event_index=index)


def permanently_correct(schedule: FailureSchedule) -> frozenset[int]:
    out = set(range(schedule.n))
    for r in range(1, schedule.horizon + 1):
        out -= schedule.faulty_set(r)
    return frozenset(out)


def projection(trace: Trace, schedule: FailureSchedule) -> list[TraceEvent]:
    """Events observable at processes that are correct throughout the run.

    Two executions are indistinguishable to the permanently correct processes
    exactly when their projections are identical; the impossibility demos
    assert this byte-for-byte on the serialized form.
    """
    keep = permanently_correct(schedule)
    return [ev for ev in trace.events if ev.kind in OBSERVABLE_KINDS and ev.subject in keep]


def projection_jsonl(trace: Trace, schedule: FailureSchedule) -> str:
    return "\n".join(
        json.dumps(ev.to_dict(), sort_keys=True, separators=(",", ":"))
        for ev in projection(trace, schedule))
