"""Impossibility demonstrations.

Each demo builds a pair of scenarios whose executions are indistinguishable to
every permanently correct process, runs both, verifies that the projections
are byte-identical, and then enumerates every deterministic choice an
(abstract, hypothetical) one-shot reliable-broadcast adapter could make on
that shared observation — showing that each choice violates a property on at
least one of the two histories. The simulator never "implements" the
impossible primitive; it replays the witness executions and checks them.

``SOURCE_FLIP`` (aka THEOREM_3): the source broadcasts payload A at round 1
and payload B at the switch round; in one history it is correct first and
permanently faulty after the switch, in the other exactly mirrored. One-shot
semantics allow a destination at most one delivery per source, so whichever
message the adapter picks (or neither, or both) fails validity or
no-duplication somewhere.

``WIPE_FLIP`` (aka THEOREM_4): a destination either really delivered before
being possessed and wiped, or was possessed and wiped from the start; with
only a basic cure notification its local state at the cure is identical in
both, so delivering on cure duplicates in one history and not delivering
starves the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .adversary import generate_paired_histories
from .checker import projection_jsonl
from .engine import Trace, run
from .scenario import ScenarioConfig


@dataclass
class DemoResult:
    kind: str
    params: dict
    config_first: ScenarioConfig
    config_second: ScenarioConfig
    trace_first: Trace
    trace_second: Trace
    projections_identical: bool
    choices: list[dict]
    holds: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "fingerprints": [self.trace_first.fingerprint, self.trace_second.fingerprint],
            "projections_identical": self.projections_identical,
            "choices": self.choices,
            "demonstration_holds": self.holds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_demo(kind: str, params: dict | None = None) -> DemoResult:
    params = dict(params or {})
    cfg1, cfg2 = generate_paired_histories(kind, params)
    trace1, trace2 = run(cfg1), run(cfg2)
    sched1, sched2 = cfg1.resolved_schedule(), cfg2.resolved_schedule()
    identical = projection_jsonl(trace1, sched1) == projection_jsonl(trace2, sched2)

    if kind in ("THEOREM_3", "SOURCE_FLIP"):
        choices = _source_flip_choices(cfg1)
    else:
        choices = _wipe_flip_choices(cfg1)

    holds = identical and all(c["violations"] for c in choices)
    return DemoResult(kind=kind, params=params, config_first=cfg1, config_second=cfg2,
                      trace_first=trace1, trace_second=trace2,
                      projections_identical=identical, choices=choices, holds=holds)


def _source_flip_choices(cfg1: ScenarioConfig) -> list[dict]:
    """Adapter dichotomy for the source-flip pair, under one-shot semantics.

    The observation is common to both histories, so a deterministic adapter
    delivers the same subset of {first payload, second payload} at every
    permanently correct process in both. Per history, the message broadcast
    while the source was correct is the valid one; delivering two messages
    from one source breaks one-shot no-duplication outright.
    """
    source = cfg1.broadcasts[0].source
    m1 = cfg1.broadcasts[0].payload
    m2 = cfg1.broadcasts[1].payload
    histories = [
        ("correct_then_faulty", m1),
        ("faulty_then_correct", m2),
    ]
    label = {m1: "first_payload", m2: "second_payload"}

    out = []
    for choice_name, chosen in [
        ("deliver_first_payload", {m1}),
        ("deliver_second_payload", {m2}),
        ("deliver_neither", set()),
        ("deliver_both", {m1, m2}),
    ]:
        violations = []
        per_history = {}
        for hist_name, valid_payload in histories:
            verdicts = {}
            if len(chosen) > 1:
                # Two deliveries from the same source at one correct process.
                verdicts["NO_DUPLICATION"] = "VIOLATED"
                violations.append({"history": hist_name, "property": "NO_DUPLICATION",
                                   "reason": "two messages delivered from one source (one-shot)"})
            else:
                verdicts["NO_DUPLICATION"] = "SATISFIED"
            if valid_payload in chosen:
                verdicts["VALIDITY"] = "SATISFIED"
            else:
                verdicts["VALIDITY"] = "VIOLATED"
                violations.append({
                    "history": hist_name, "property": "VALIDITY",
                    "reason": f"the {label[valid_payload]} was broadcast while the source was "
                              f"correct but no infinitely-often-correct process ever delivers it"})
            per_history[hist_name] = verdicts
        out.append({"choice": choice_name, "delivered": sorted(label[m] for m in chosen),
                    "verdicts": per_history, "violations": violations,
                    "source": source})
    return out


def _wipe_flip_choices(cfg1: ScenarioConfig) -> list[dict]:
    """Adapter dichotomy at the cure: deliver again or stay silent.

    In the deliver-first history the target already delivered while correct,
    so delivering on cure duplicates; in the faulty-first history the cure is
    the target's only chance, so not delivering starves validity (in its
    per-process reading) and agreement.
    """
    target = cfg1.strategy["target"]
    out = []
    for choice_name, deliver in [("deliver_on_cure", True), ("ignore_cure", False)]:
        violations = []
        per_history = {}
        if deliver:
            per_history["deliver_then_wipe"] = {"NO_DUPLICATION": "VIOLATED", "VALIDITY": "SATISFIED"}
            per_history["wipe_only"] = {"NO_DUPLICATION": "SATISFIED", "VALIDITY": "SATISFIED"}
            violations.append({"history": "deliver_then_wipe", "property": "NO_DUPLICATION",
                               "reason": "target already delivered while correct before the wipe"})
        else:
            per_history["deliver_then_wipe"] = {"NO_DUPLICATION": "SATISFIED", "VALIDITY": "SATISFIED"}
            per_history["wipe_only"] = {"NO_DUPLICATION": "SATISFIED", "VALIDITY": "VIOLATED",
                                        "AGREEMENT": "VIOLATED"}
            violations.append({"history": "wipe_only", "property": "VALIDITY",
                               "reason": "the permanently-correct-after-cure target never delivers "
                                         "the correctly broadcast message (per-process reading)"})
        out.append({"choice": choice_name, "target": target,
                    "verdicts": per_history, "violations": violations})
    return out
