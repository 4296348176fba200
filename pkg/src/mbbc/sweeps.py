"""Resilience sweeps: run bundled attacks over (n, f) grids and tabulate verdicts.

The bundled attacks are the two adversary families the analysis says matter:

* ``alternating`` — two disjoint f-sets flip agents so that every round has f
  spurious senders and f silenced processes; phase-aligned to the broadcast so
  that it works for any residency. This is the attack that makes the
  SATISFIED/VIOLATED frontier land exactly at the solvability bound.
* ``split`` — a faulty source sends its SEND (and its own topping-up ECHO) to
  a preset-count subset, then the agent hops onto one abort-generator for the
  delivery round. With the bundled count this resolves to the no-deliveries
  outcome everywhere; explicit targets reproduce the all-deliver outcome.

Rows come out as (n, f, strategy, property, verdict, witness_round), ordered
deterministically regardless of execution order.
"""

from __future__ import annotations

import csv
import io
import logging

from .checker import MBBC_PROPERTIES, run_property_checks
from .engine import run
from .messages import encode_payload
from .protocol import VariantTag
from .scenario import InvalidScenario, ScenarioConfig

logger = logging.getLogger("mbbc.sweeps")

BUNDLED_STRATEGIES = ("alternating", "split")

_ORACLE_FOR_VARIANT = {
    VariantTag.FFA_FULL: "FFA",
    VariantTag.BFA_WEAK: "BFA",
    VariantTag.NFA_WEAK: "NFA",
}


def split_target_count(n: int, f: int) -> int:
    """Bundled preset for how many processes the split source serves."""
    return max(0, (n - f) // 2 - f)


def attack_scenario(variant: VariantTag, n: int, f: int, delta_s: int, strategy: str,
                    seed: int = 0, delta_b: int = 2, delta_c: int = 1) -> ScenarioConfig:
    """One sweep cell: a full scenario for the given attack at the given sizes."""
    payload = b"sweep-payload"
    oracle = _ORACLE_FOR_VARIANT[variant]
    base = {
        "n": n, "f": f, "delta_s": delta_s, "delta_b": delta_b, "delta_c": delta_c,
        "seed": seed,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": oracle},
        "variant": variant.value,
    }
    if strategy == "alternating":
        if n < 2 * f + 1:
            raise InvalidScenario([f"alternating attack needs n >= 2f+1, got n={n}, f={f}"])
        p1 = list(range(n - 2 * f, n - f))
        p2 = list(range(n - f, n))
        birth = delta_s
        base.update({
            "horizon": birth + 4 + 2 * delta_s,
            "schedule": {"generator": "alternating", "params": {"p1": p1, "p2": p2, "start": 2}},
            "broadcasts": [_broadcast_dict(0, birth, payload)],
            "strategy": {"kind": "ALTERNATING_SETS", "p1": p1, "p2": p2},
        })
    elif strategy == "split":
        if delta_s > 3:
            raise InvalidScenario(["split attack is wired for delta_s <= 3 (the agent must hop "
                                   "onto an abort generator in the delivery round)"])
        count = split_target_count(n, f)
        targets = list(range(1, 1 + min(count, n - 2)))
        if f == 0:
            trajectories = []
        else:
            trajectories = [
                {"agent_id": 0, "segments": [
                    {"host": 0, "first_round": 1, "last_round": 3},
                    {"host": n - 1, "first_round": 4, "last_round": None},
                ]},
                *[{"agent_id": i, "segments": []} for i in range(1, f)],
            ]
        base.update({
            "horizon": 8 + 2 * delta_s,
            "schedule": {"trajectories": trajectories},
            "broadcasts": [_broadcast_dict(0, 1, payload)],
            "strategy": {"kind": "SPLIT_SEND", "targets": targets},
        })
    else:
        raise InvalidScenario([f"unknown bundled strategy: {strategy!r}"])
    return ScenarioConfig.from_dict(base)


def run_sweep(variant: VariantTag, n_values: list[int], f_values: list[int], delta_s: int = 1,
              strategies: tuple[str, ...] = BUNDLED_STRATEGIES, seed: int = 0,
              delta_b: int = 2, delta_c: int = 1) -> list[dict]:
    rows = []
    for n in sorted(n_values):
        for f in sorted(f_values):
            if f >= n:
                continue
            for strategy in strategies:
                cfg = attack_scenario(variant, n, f, delta_s, strategy,
                                      seed=seed, delta_b=delta_b, delta_c=delta_c)
                trace = run(cfg)
                reports = run_property_checks(
                    trace, cfg.resolved_schedule(), delta_b, delta_c, variant, MBBC_PROPERTIES)
                for report in reports:
                    witness_round = ""
                    if report.witness:
                        witness_round = min(trace.events[i].round for i in report.witness)
                    rows.append({
                        "n": n, "f": f, "strategy": strategy,
                        "property": report.property.lower(), "verdict": report.verdict,
                        "witness_round": witness_round,
                    })
    rows.sort(key=lambda r: (r["n"], r["f"], r["strategy"], r["property"]))
    logger.info("sweep produced %d rows", len(rows))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["n", "f", "strategy", "property", "verdict", "witness_round"])
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _broadcast_dict(source: int, round_: int, payload: bytes) -> dict:
    out = {"source": source, "round": round_}
    out.update(encode_payload(payload))
    return out
