import json

import pytest

from conftest import golden_correct_source
from mbbc.scenario import Broadcast, InvalidScenario, ScenarioConfig, build_schedule


def base_dict(**overrides):
    data = {
        "n": 6, "f": 1, "delta_s": 1, "horizon": 6, "seed": 0,
        "setting": {"timing": "SYNC", "mobility": "S-MOB+", "oracle": "FFA"},
        "variant": "FFA_FULL",
        "schedule": {"trajectories": []},
    }
    data.update(overrides)
    return data


class TestParsing:
    def test_missing_fields_listed(self):
        with pytest.raises(InvalidScenario) as err:
            ScenarioConfig.from_dict({"n": 6})
        text = str(err.value)
        assert "f" in text and "horizon" in text

    def test_non_object_json_rejected(self):
        with pytest.raises(InvalidScenario):
            ScenarioConfig.from_json("[1, 2, 3]")
        with pytest.raises(InvalidScenario):
            ScenarioConfig.from_json("{not json")

    def test_unknown_variant_rejected(self):
        with pytest.raises(InvalidScenario):
            ScenarioConfig.from_dict(base_dict(variant="SUPER"))

    def test_roundtrip_through_dict(self):
        cfg = golden_correct_source()
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg

    def test_binary_payload_roundtrip(self):
        b = Broadcast(source=0, round=1, payload=b"\x00\x01")
        assert Broadcast.from_dict(b.to_dict()) == b

    def test_fingerprint_stable_and_seed_sensitive(self):
        a = ScenarioConfig.from_dict(base_dict(seed=1))
        b = ScenarioConfig.from_dict(base_dict(seed=1))
        c = ScenarioConfig.from_dict(base_dict(seed=2))
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()


class TestValidation:
    def test_trajectory_count_mismatch_reported(self):
        cfg = ScenarioConfig.from_dict(base_dict(f=2, schedule={"trajectories": []}))
        with pytest.raises(InvalidScenario) as err:
            cfg.validate()
        assert "trajectory-count" in str(err.value)

    def test_broadcast_bounds_checked(self):
        cfg = ScenarioConfig.from_dict(base_dict(
            f=0, broadcasts=[{"source": 9, "round": 1, "payload": "m"}]))
        with pytest.raises(InvalidScenario):
            cfg.validate()
        cfg = ScenarioConfig.from_dict(base_dict(
            f=0, broadcasts=[{"source": 0, "round": 99, "payload": "m"}]))
        with pytest.raises(InvalidScenario):
            cfg.validate()

    def test_f_must_be_below_n(self):
        with pytest.raises(InvalidScenario):
            ScenarioConfig.from_dict(base_dict(f=6)).validate()


class TestGenerators:
    def test_static_parks_agents_for_good(self):
        cfg = ScenarioConfig.from_dict(base_dict(
            schedule={"generator": "static", "params": {"hosts": [3]}}))
        sched = build_schedule(cfg)
        assert all(sched.faulty_set(r) == {3} for r in range(1, 7))

    def test_static_needs_exactly_f_hosts(self):
        cfg = ScenarioConfig.from_dict(base_dict(
            schedule={"generator": "static", "params": {"hosts": [3, 4]}}))
        with pytest.raises(InvalidScenario):
            build_schedule(cfg)

    def test_alternating_respects_residency(self):
        cfg = ScenarioConfig.from_dict(base_dict(
            delta_s=2, horizon=9,
            schedule={"generator": "alternating", "params": {"p1": [4], "p2": [5], "start": 2}}))
        sched = build_schedule(cfg)
        assert sched.faulty_set(1) == frozenset()
        assert sched.faulty_set(2) == {4} and sched.faulty_set(3) == {4}
        assert sched.faulty_set(4) == {5} and sched.faulty_set(5) == {5}
        assert sched.faulty_set(6) == {4}
        cfg.validate()

    def test_roundrobin_walks_the_ring(self):
        cfg = ScenarioConfig.from_dict(base_dict(
            n=4, horizon=4,
            schedule={"generator": "roundrobin", "params": {"offset": 1}}))
        sched = build_schedule(cfg)
        assert [sorted(sched.faulty_set(r)) for r in range(1, 5)] == [[1], [2], [3], [0]]
        cfg.validate()

    def test_unknown_generator_rejected(self):
        cfg = ScenarioConfig.from_dict(base_dict(schedule={"generator": "wat"}))
        with pytest.raises(InvalidScenario):
            build_schedule(cfg)


def test_config_json_files_are_self_describing(tmp_path):
    cfg = golden_correct_source()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    again = ScenarioConfig.from_json(path.read_text())
    assert again == cfg
    again.validate()
