import json
import math

import numpy as np
import pytest

from distload.config import PHASES, ConfigError, ScenarioConfig, from_dict, load_config


def test_defaults_describe_reference_scenario():
    cfg = from_dict({})
    assert (cfg.n, cfg.topology, cfg.sigma) == (10, "line", 0.3)
    assert (cfg.load.m, cfg.load.J) == (50.0, 86.89)
    assert cfg.total_time == 200.0
    assert cfg.rounds == 20_000
    assert cfg.substeps == 10
    starts = cfg.phase_starts()
    assert [starts[p] for p in ("OMEGA_ZI", "S_CONSENSUS", "J_LLS", "J_CONSENSUS", "ZC_OBSERVER", "M_CONSENSUS", "DONE")] == [
        10.0,
        20.0,
        30.0,
        40.0,
        80.0,
        180.0,
        200.0,
    ]
    assert list(starts) == list(PHASES)


def test_default_contact_layout():
    cfg = ScenarioConfig()
    r = cfg.contact_offsets()
    assert r.shape == (10, 2)
    assert np.allclose(r.mean(axis=0), [0.3, -0.2])
    assert np.allclose(np.linalg.norm(r - r.mean(axis=0), axis=1), 1.5)


def test_kappa_auto():
    assert from_dict({"sigma": 0.0}).kappa == 1.0
    assert from_dict({}).kappa == 0.05
    assert from_dict({"estimation": {"kappa": 0.2}}).kappa == 0.2


def test_partial_sections_merge_with_defaults():
    cfg = from_dict({"laws": {"k_e": 3.0}, "schedule": {"durations": {"BRAKE": 5}}})
    assert cfg.laws.k_e == 3.0 and cfg.laws.k_z == 5.0
    assert cfg.schedule.durations["BRAKE"] == 5 and cfg.schedule.durations["Z_IJ"] == 10.0


@pytest.mark.parametrize(
    "raw, path",
    [
        ({"laws": {"k_e": -1}}, "laws.k_e"),
        ({"laws": {"k_z": 0}}, "laws.k_z"),
        ({"n": 1}, "n"),
        ({"n": 2.5}, "n"),
        ({"sigma": -0.1}, "sigma"),
        ({"load": {"m": 0}}, "load.m"),
        ({"load": {"z_C": [1.0]}}, "load.z_C"),
        ({"topology": "mesh"}, "topology"),
        ({"topology": [[0, 1], [2, 3]], "n": 4}, "topology"),
        ({"schedule": {"mode": "fast"}}, "schedule.mode"),
        ({"schedule": {"durations": {"BRAKE": 0}}}, "schedule.durations.BRAKE"),
        ({"schedule": {"durations": {"WARMUP": 1}}}, "schedule.durations.WARMUP"),
        ({"estimation": {"kappa": 2.0}}, "estimation.kappa"),
        ({"estimation": {"gamma": 0.9}}, "estimation.gamma"),
        ({"physics_dt": 0.003}, "estimator_rate"),
        ({"bogus": 1}, "bogus"),
        ({"laws": {"bogus": 1}}, "laws.bogus"),
        ({"laws": {"f_star": [0, 0]}}, "laws.f_star"),
        ({"load": {"contacts": [[0, 0], [0, 0]]}, "n": 2}, "load.contacts"),
        ({"hygiene_check": "yes"}, "hygiene_check"),
    ],
)
def test_invalid_fields_are_named(raw, path):
    with pytest.raises(ConfigError) as e:
        from_dict(raw)
    assert e.value.path == path
    err = e.value.to_json()
    assert err["error"] == "invalid_config" and err["field"] == path


def test_load_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n": 4, "seed": 7}))
    cfg = load_config(p)
    assert cfg.n == 4 and cfg.seed == 7
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_infinite_switch_period_allowed():
    assert math.isinf(from_dict({"laws": {"switch_period": math.inf}}).laws.switch_period)


def test_shipped_default_config_matches_defaults():
    from pathlib import Path

    shipped = load_config(Path(__file__).resolve().parents[1] / "configs" / "default.json")
    assert shipped.to_dict() == ScenarioConfig().to_dict()
