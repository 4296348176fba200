import pytest

from mbbc.adversary import (
    AlternatingSets,
    Benign,
    CrashSilent,
    Observation,
    SplitSend,
    StrategyMisconfigured,
    WipeAndRun,
    build_strategy,
    generate_paired_histories,
)
from mbbc.engine import Simulation, run
from mbbc.messages import MessageKind
from mbbc.protocol import init_state
from mbbc.scenario import ScenarioConfig
from conftest import golden_correct_source, zero_agent_scenario


def obs_for(config: ScenarioConfig, round_: int = 1, states=None, inbound=None) -> Observation:
    return Observation(round=round_, config=config, schedule=config.resolved_schedule(),
                       states=states or [init_state() for _ in range(config.n)],
                       events=[], inbound=inbound or {})


def alternating_config(n=6):
    return ScenarioConfig.from_dict({
        "n": n, "f": 1, "delta_s": 1, "horizon": 7, "seed": 0,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": {"generator": "alternating", "params": {"p1": [n - 2], "p2": [n - 1], "start": 2}},
        "broadcasts": [{"source": 0, "round": 1, "payload": "m"}],
        "strategy": {"kind": "ALTERNATING_SETS", "p1": [n - 2], "p2": [n - 1]},
    })


class TestAlternatingSets:
    def test_p2_member_is_silent(self):
        cfg = alternating_config()
        strat = build_strategy(cfg)
        assert strat.dictate_sends(5, 3, obs_for(cfg, 3)) == []

    def test_p1_member_sends_spurious_to_all_peers(self):
        cfg = alternating_config()
        strat = build_strategy(cfg)
        sends = strat.dictate_sends(4, 2, obs_for(cfg, 2))
        receivers = {q for q, _ in sends}
        kinds = {m.kind for _, m in sends}
        assert receivers == set(range(6))
        assert MessageKind.READY in kinds and MessageKind.ECHO in kinds

    def test_overlapping_sets_rejected(self):
        with pytest.raises(StrategyMisconfigured):
            AlternatingSets([3], [3], n=6, f=1)

    def test_wrong_set_size_rejected(self):
        with pytest.raises(StrategyMisconfigured):
            AlternatingSets([3, 4], [5], n=6, f=1)

    def test_departing_p1_leaves_poisoned_queue(self):
        cfg = alternating_config()
        strat = build_strategy(cfg)
        state = strat.corrupt_state(4, 2, obs_for(cfg, 2))
        assert state.to_send and state.rc == 9999

    def test_spurious_votes_can_never_clear_a_quorum(self):
        # f spurious senders: every fabricated key gathers at most f votes.
        cfg = alternating_config()
        trace = run(cfg)
        # No delivery for any payload other than the real broadcast.
        bad = [e for e in trace.events
               if e.kind == "DELIVER_CALL" and e.detail.get("payload") != "m"]
        assert bad == []


class TestSplitSend:
    def test_send_round_targets_only(self):
        cfg = ScenarioConfig.from_dict({
            "n": 6, "f": 1, "delta_s": 1, "horizon": 8, "seed": 0,
            "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
            "variant": "FFA_FULL",
            "schedule": {"trajectories": [{"agent_id": 0, "segments": [
                {"host": 0, "first_round": 1, "last_round": 3},
                {"host": 5, "first_round": 4, "last_round": None}]}]},
            "broadcasts": [{"source": 0, "round": 1, "payload": "byz"}],
            "strategy": {"kind": "SPLIT_SEND", "targets": [1, 2, 3]},
        })
        strat = build_strategy(cfg)
        sends_r2 = strat.dictate_sends(0, 2, obs_for(cfg, 2))
        assert {(q, m.kind) for q, m in sends_r2} == {(q, MessageKind.SEND) for q in (1, 2, 3)}
        sends_r3 = strat.dictate_sends(0, 3, obs_for(cfg, 3))
        assert {(q, m.kind) for q, m in sends_r3} == {(q, MessageKind.ECHO) for q in (1, 2, 3)}
        assert strat.dictate_sends(5, 4, obs_for(cfg, 4)) == []

    def test_target_out_of_range_rejected(self):
        with pytest.raises(StrategyMisconfigured):
            SplitSend([9], [], n=6)


class TestStateCorruption:
    def test_wipe_and_run_wipes_at_wipe_round(self):
        cfg = zero_agent_scenario()
        strat = WipeAndRun(target=1, sim_until=0, wipe_round=6, config=cfg)
        states = [init_state() for _ in range(cfg.n)]
        states[1].rc = 42
        obs = obs_for(cfg, 6, states=states)
        assert strat.corrupt_state(1, 6, obs) == init_state()
        assert strat.corrupt_state(1, 5, obs).rc == 42  # untouched before the wipe round

    def test_benign_is_identity(self):
        cfg = zero_agent_scenario()
        states = [init_state() for _ in range(cfg.n)]
        assert Benign().corrupt_state(0, 1, obs_for(cfg, states=states)) is states[0]

    def test_crash_silent_wipes_on_departure(self):
        cfg = golden_correct_source()
        strat = CrashSilent()
        states = [init_state() for _ in range(6)]
        states[1].rc = 9
        obs = obs_for(cfg, 1, states=states)
        # Agent leaves index 1 after round 1 in the golden schedule.
        assert strat.corrupt_state(1, 1, obs) == init_state()

    def test_arbitrary_rc_corruption_repaired_by_majority(self):
        # Script: process 2 is possessed in round 1 and left with rc=999;
        # the next compute's majority vote must repair it.
        cfg = ScenarioConfig.from_dict({
            "n": 5, "f": 1, "delta_s": 1, "horizon": 3, "seed": 0,
            "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
            "variant": "FFA_FULL",
            "schedule": {"trajectories": [{"agent_id": 0, "segments": [
                {"host": 2, "first_round": 1, "last_round": 1}]}]},
            "strategy": {"kind": "ARBITRARY", "script": {"1": {"2": {"state": {"rc": 999}}}}},
        })
        sim = Simulation(cfg)
        sim.step()
        assert sim.states[2].rc == 999
        sim.step()  # round votes from round 2 repair the counter in its compute
        correct_rcs = {sim.states[p].rc for p in range(5)}
        assert correct_rcs == {3}

    def test_arbitrary_script_sends(self):
        cfg = ScenarioConfig.from_dict({
            "n": 3, "f": 1, "delta_s": 1, "horizon": 2, "seed": 0,
            "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
            "variant": "FFA_FULL",
            "schedule": {"trajectories": [{"agent_id": 0, "segments": [
                {"host": 0, "first_round": 1, "last_round": None}]}]},
            "strategy": {"kind": "ARBITRARY", "script": {
                "1": {"0": {"sends": [[1, {"kind": "ROUND", "round_value": 7}]]}}}},
        })
        trace = run(cfg)
        sent = [e for e in trace.events if e.kind == "P2P_SEND" and e.subject == 0 and e.round == 1]
        assert len(sent) == 1 and sent[0].detail["receiver"] == 1


class TestPairedHistories:
    def test_deterministic_generation(self):
        a1, a2 = generate_paired_histories("THEOREM_3", {"seed": 4})
        b1, b2 = generate_paired_histories("THEOREM_3", {"seed": 4})
        assert a1 == b1 and a2 == b2

    def test_source_flip_schedules_mirror(self):
        h1, h2 = generate_paired_histories("THEOREM_3", {})
        s1 = h1.resolved_schedule()
        s2 = h2.resolved_schedule()
        switch = 4  # delta_b=2, delta_1=1
        for r in range(1, h1.horizon + 1):
            assert s1.is_faulty(0, r) == (r >= switch)
            assert s2.is_faulty(0, r) == (r < switch)

    def test_identical_payloads_rejected(self):
        with pytest.raises(StrategyMisconfigured):
            generate_paired_histories("THEOREM_3", {"m1": "x", "m2": "x"})

    def test_wipe_flip_target_faulty_spans(self):
        h1, h2 = generate_paired_histories("THEOREM_4", {"delta_1": 4, "delta_2": 2})
        s1, s2 = h1.resolved_schedule(), h2.resolved_schedule()
        assert [r for r in range(1, h1.horizon + 1) if s1.is_faulty(1, r)] == [5, 6]
        assert [r for r in range(1, h2.horizon + 1) if s2.is_faulty(1, r)] == [1, 2, 3, 4, 5, 6]

    def test_unknown_kind_rejected(self):
        with pytest.raises(StrategyMisconfigured):
            generate_paired_histories("THEOREM_99", {})
