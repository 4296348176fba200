"""Shared scenario builders for the test suite.

Process naming: a scenario description's p_k is index k-1 here.
"""

from __future__ import annotations

import random

from mbbc.scenario import ScenarioConfig


def golden_correct_source(delta_s: int = 1, seed: int = 7) -> ScenarioConfig:
    """Correct source (index 0) broadcasts at round 1; one agent walks
    p2 -> p6 -> p1 -> p2 -> p6 in stays of delta_s rounds."""
    path = [1, 5, 0, 1, 5]
    segments = []
    first = 1
    for i, host in enumerate(path):
        last = first + delta_s - 1
        segments.append({"host": host, "first_round": first,
                         "last_round": None if i == len(path) - 1 else last})
        first = last + 1
    horizon = 4 * delta_s + 4
    return ScenarioConfig.from_dict({
        "n": 6, "f": 1, "delta_s": delta_s, "delta_b": 2, "delta_c": 1,
        "horizon": horizon, "seed": seed,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": {"trajectories": [{"agent_id": 0, "segments": segments}]},
        "broadcasts": [{"source": 0, "round": 1, "payload": "hello"}],
        "strategy": {"kind": "BENIGN"},
    })


def split_send_scenario(targets: list[int], seed: int = 5) -> ScenarioConfig:
    """Faulty source (index 0, possessed rounds 1-3) splits its SEND across
    ``targets``; the agent hops onto index 5 for round 4 to swallow one ABORT."""
    return ScenarioConfig.from_dict({
        "n": 6, "f": 1, "delta_s": 1, "delta_b": 2, "delta_c": 1,
        "horizon": 8, "seed": seed,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": {"trajectories": [{"agent_id": 0, "segments": [
            {"host": 0, "first_round": 1, "last_round": 3},
            {"host": 5, "first_round": 4, "last_round": 4},
            {"host": 0, "first_round": 5, "last_round": None}]}]},
        "broadcasts": [{"source": 0, "round": 1, "payload": "byz"}],
        "strategy": {"kind": "SPLIT_SEND", "targets": targets},
    })


def bfa_double_cure_scenario(seed: int = 3) -> ScenarioConfig:
    """BFA_WEAK: index 5 delivers at round 4 while correct, then is cured at
    rounds 6 and 8 (k=2 cures after birth+3); index 4 hosts the agent at round
    4 and is cured at rounds 5 and 7."""
    return ScenarioConfig.from_dict({
        "n": 6, "f": 1, "delta_s": 1, "delta_b": 2, "delta_c": 1,
        "horizon": 8, "seed": seed,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "BFA"},
        "variant": "BFA_WEAK",
        "schedule": {"trajectories": [{"agent_id": 0, "segments": [
            {"host": 4, "first_round": 1, "last_round": 4},
            {"host": 5, "first_round": 5, "last_round": 5},
            {"host": 4, "first_round": 6, "last_round": 6},
            {"host": 5, "first_round": 7, "last_round": 7},
            {"host": 4, "first_round": 8, "last_round": None}]}]},
        "broadcasts": [{"source": 0, "round": 1, "payload": "count"}],
        "strategy": {"kind": "BENIGN"},
    })


def zero_agent_scenario(n: int = 4, horizon: int = 5, broadcasts=()) -> ScenarioConfig:
    return ScenarioConfig.from_dict({
        "n": n, "f": 0, "delta_s": 1, "delta_b": 2, "delta_c": 1,
        "horizon": horizon, "seed": 0,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": {"trajectories": []},
        "broadcasts": list(broadcasts),
        "strategy": {"kind": "BENIGN"},
    })


def random_walk_schedule(rng: random.Random, n: int, f: int, horizon: int) -> list[dict]:
    """Random legal trajectories with delta_s=1: each agent re-hosts every round."""
    out = []
    for agent in range(f):
        segments = []
        host = rng.randrange(n)
        first = 1
        for r in range(2, horizon + 1):
            if rng.random() < 0.6:
                nxt = rng.randrange(n - 1)
                nxt = nxt if nxt < host else nxt + 1
                segments.append({"host": host, "first_round": first, "last_round": r - 1})
                host, first = nxt, r
        segments.append({"host": host, "first_round": first, "last_round": None})
        out.append({"agent_id": agent, "segments": segments})
    return out


def random_scenario(rng: random.Random) -> ScenarioConfig:
    """A random valid scenario, used by the determinism acceptance criterion."""
    n = rng.randrange(4, 9)
    f = 1
    delta_s = rng.choice([1, 2])
    horizon = rng.randrange(7, 11)
    kind = rng.choice(["BENIGN", "CRASH_SILENT", "ALTERNATING_SETS", "SPLIT_SEND"])
    if kind == "ALTERNATING_SETS":
        schedule = {"generator": "alternating",
                    "params": {"p1": [n - 2], "p2": [n - 1], "start": 2}}
        strategy = {"kind": kind, "p1": [n - 2], "p2": [n - 1]}
    else:
        schedule = {"generator": "roundrobin", "params": {"offset": rng.randrange(n)}}
        strategy = {"kind": kind}
        if kind == "SPLIT_SEND":
            strategy["targets"] = sorted(rng.sample(range(1, n), k=min(2, n - 1)))
    broadcasts = []
    if rng.random() < 0.8:
        broadcasts.append({"source": rng.randrange(n), "round": rng.randrange(1, 3),
                           "payload": f"m{rng.randrange(100)}"})
    return ScenarioConfig.from_dict({
        "n": n, "f": f, "delta_s": delta_s, "delta_b": 2, "delta_c": 1,
        "horizon": horizon, "seed": rng.randrange(1 << 30),
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": schedule,
        "broadcasts": broadcasts,
        "strategy": strategy,
    })
