import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbbc.model import (
    AgentTrajectory,
    FailureSchedule,
    IoVerdict,
    RoundOutOfHorizon,
    Segment,
    SettingTriple,
    Mobility,
    OracleKind,
    Timing,
    io_correct_processes,
    is_io_correct,
    validate_schedule,
)


def schedule_from(segments_per_agent, n=6, f=None, delta_s=1, horizon=6):
    f = len(segments_per_agent) if f is None else f
    trajectories = tuple(
        AgentTrajectory(agent_id=i, segments=tuple(Segment(*s) for s in segs))
        for i, segs in enumerate(segments_per_agent))
    return FailureSchedule(n=n, f=f, delta_s=delta_s, horizon=horizon, trajectories=trajectories)


# Roaming agent of the golden scenario: p2 in r1, p6 in r2, p1 in r3 (indices 1, 5, 0).
ROAMING_PATH = [(1, 1, 1), (5, 2, 2), (0, 3, 3)]


class TestValidateSchedule:
    def test_roaming_path_is_valid(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        assert validate_schedule(sched).ok

    def test_residency_below_delta_s_is_violation(self):
        sched = schedule_from([[(1, 1, 1)]], delta_s=2, horizon=4)
        result = validate_schedule(sched)
        assert not result.ok
        assert any(v.rule == "residency" for v in result.violations)

    def test_fault_free_schedule_is_valid(self):
        sched = schedule_from([], horizon=9)
        assert validate_schedule(sched).ok
        assert all(sched.faulty_set(r) == frozenset() for r in range(1, 10))

    def test_adjacent_same_host_is_violation(self):
        sched = schedule_from([[(2, 1, 2), (2, 3, 4)]], horizon=6)
        result = validate_schedule(sched)
        assert any(v.rule == "stationary-move" for v in result.violations)

    def test_gap_then_same_host_is_legal(self):
        sched = schedule_from([[(2, 1, 2), (2, 5, 6)]], horizon=6)
        assert validate_schedule(sched).ok

    def test_overlapping_segments_are_violation(self):
        sched = schedule_from([[(2, 1, 3), (3, 3, 5)]], horizon=6)
        result = validate_schedule(sched)
        assert any(v.rule == "segment-order" for v in result.violations)

    def test_trajectory_count_must_match_f(self):
        sched = schedule_from([ROAMING_PATH], f=2, horizon=6)
        result = validate_schedule(sched)
        assert any(v.rule == "trajectory-count" for v in result.violations)

    def test_open_segment_exempt_from_residency(self):
        sched = schedule_from([[(1, 6, None)]], delta_s=3, horizon=6)
        assert validate_schedule(sched).ok

    def test_validation_is_pure(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        assert validate_schedule(sched) == validate_schedule(sched)


class TestFaultySets:
    def test_roaming_round1_is_p2(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        assert sched.faulty_set(1) == {1}
        assert sched.faulty_set(2) == {5}
        assert sched.faulty_set(3) == {0}
        assert sched.faulty_set(4) == frozenset()

    def test_fault_free_empty(self):
        sched = schedule_from([], horizon=4)
        assert sched.faulty_set(2) == frozenset()

    def test_colocated_agents_collapse_to_one_process(self):
        sched = schedule_from([[(3, 1, 2)], [(3, 1, 2)]], horizon=4)
        assert sched.faulty_set(1) == {3}
        assert len(sched.faulty_set(1)) == 1

    def test_round_out_of_horizon_raises(self):
        sched = schedule_from([], horizon=4)
        with pytest.raises(RoundOutOfHorizon):
            sched.faulty_set(5)
        with pytest.raises(RoundOutOfHorizon):
            sched.faulty_set(0)

    def test_partition_invariant(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        for r in range(1, 7):
            b, c = sched.faulty_set(r), sched.correct_set(r)
            assert b | c == frozenset(range(6))
            assert not b & c
            assert len(b) <= sched.f

    def test_faulty_span_start_merges_back_to_back_stays(self):
        # Two agents chain on host 2: rounds 1-2 and 3-4.
        sched = schedule_from([[(2, 1, 2)], [(2, 3, 4)]], horizon=6)
        assert sched.faulty_span_start(2, 4) == 1


class TestIoCorrect:
    def test_permanently_correct_is_yes(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        assert is_io_correct(sched, 3, 1) is IoVerdict.YES

    def test_faulty_to_horizon_is_no(self):
        sched = schedule_from([[(2, 3, None)]], horizon=6)
        assert is_io_correct(sched, 2, 1) is IoVerdict.NO_WITHIN_HORIZON

    def test_roaming_p2_delta_c_one_horizon_six(self):
        sched = schedule_from([ROAMING_PATH], horizon=6)
        # Independent oracle: every suffix of rounds must contain a correct round.
        correct = set(sched.correct_rounds(1))
        expected = all(any(j in correct for j in range(r + 1, 7)) for r in range(0, 6))
        assert expected is True
        assert is_io_correct(sched, 1, 1) is IoVerdict.YES

    def test_matches_brute_force_window_oracle(self):
        sched = schedule_from([[(0, 1, 1), (1, 3, 3), (0, 5, 5)]], horizon=6)

        def brute(p, delta_c):
            for r in range(0, sched.horizon - delta_c + 1):
                found = False
                for b in range(r + 1, sched.horizon - delta_c + 2):
                    if all(sched.is_correct(p, j) for j in range(b, b + delta_c)):
                        found = True
                        break
                if not found:
                    return IoVerdict.NO_WITHIN_HORIZON
            return IoVerdict.YES

        for p in range(6):
            for delta_c in (1, 2, 3):
                assert is_io_correct(sched, p, delta_c) is brute(p, delta_c), (p, delta_c)

    def test_delta_c_longer_than_horizon_is_no(self):
        sched = schedule_from([], horizon=3)
        assert is_io_correct(sched, 0, 4) is IoVerdict.NO_WITHIN_HORIZON


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_random_schedules_keep_invariants(data):
    n = data.draw(st.integers(3, 8))
    f = data.draw(st.integers(0, 2))
    horizon = data.draw(st.integers(2, 8))
    trajectories = []
    for agent in range(f):
        segs = []
        r = 1
        host = data.draw(st.integers(0, n - 1))
        while r <= horizon:
            length = data.draw(st.integers(1, 3))
            last = min(r + length - 1, horizon)
            segs.append(Segment(host=host, first_round=r, last_round=last))
            r = last + 1
            host = (host + 1 + data.draw(st.integers(0, n - 2))) % n
        trajectories.append(AgentTrajectory(agent_id=agent, segments=tuple(segs)))
    sched = FailureSchedule(n=n, f=f, delta_s=1, horizon=horizon, trajectories=tuple(trajectories))
    assert validate_schedule(sched).ok
    for r in range(1, horizon + 1):
        assert len(sched.faulty_set(r)) <= f
        assert sched.faulty_set(r) | sched.correct_set(r) == frozenset(range(n))
    assert set(io_correct_processes(sched, 1)) <= set(range(n))


def test_setting_triple_support():
    ok = SettingTriple(Timing.SYNC, Mobility.S_MOB_PLUS, OracleKind.NFA)
    assert ok.is_supported() and ok.unsupported_reason() is None
    bad = SettingTriple(Timing.ASYNC, Mobility.S_MOB, OracleKind.FFA)
    assert not bad.is_supported()
    assert "asynchronous" in bad.unsupported_reason()
    amob = SettingTriple(Timing.SYNC, Mobility.A_MOB, OracleKind.FFA)
    assert "sub-round" in amob.unsupported_reason() or "round" in amob.unsupported_reason()
