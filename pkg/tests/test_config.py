"""Config loading: strictness, validation, derived quantities."""
import copy
import math

import pytest
import yaml

from flipperbot.config import (Config, ConfigError, config_from_dict,
                               load_config, sha256_of)


@pytest.fixture()
def raw(cfg):
    return copy.deepcopy(cfg.raw)


def test_default_loads(cfg):
    assert isinstance(cfg, Config)
    assert cfg.robot.mass_kg == pytest.approx(9.97)
    assert cfg.robot.body_length_m == pytest.approx(0.65)
    assert cfg.gait.spec.f0_hz == pytest.approx(1.0)


def test_unknown_section_rejected(raw):
    raw["surprise"] = {}
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict(raw)


def test_missing_section_rejected(raw):
    del raw["plant"]
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict(raw)


def test_unknown_key_rejected(raw):
    raw["control"]["typo_gain"] = 1.0
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict(raw)


def test_missing_key_rejected(raw):
    del raw["control"]["kp"]
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict(raw)


def test_joint_order_enforced(raw):
    raw["gait"]["joints"][0]["name"] = "wrong_name"
    with pytest.raises(ConfigError, match="joint names"):
        config_from_dict(raw)


def test_amplitude_exceeding_limit_rejected(raw):
    raw["gait"]["joints"][0]["amplitude"] = 5.0
    with pytest.raises(ConfigError, match="exceeds limits"):
        config_from_dict(raw)


def test_negative_amplitude_rejected(raw):
    raw["gait"]["joints"][2]["amplitude"] = -0.1
    with pytest.raises(ConfigError, match="non-negative"):
        config_from_dict(raw)


def test_focal_derived_from_fov(cfg):
    cam = cfg.camera
    expected = (cam.width / 2.0) / math.tan(math.radians(cam.fov_deg) / 2.0)
    assert cam.focal == pytest.approx(expected)
    # 90 degree fov: focal equals half the width
    if cam.fov_deg == 90.0:
        assert cam.focal == pytest.approx(cam.width / 2.0)


def test_with_camera_override(cfg):
    small = cfg.with_camera(width=160, height=120)
    assert small.camera.width == 160
    assert small.camera.height == 120
    assert cfg.camera.width != 160 or cfg.camera.height != 120
    # everything else untouched
    assert small.plant == cfg.plant


def test_hash_stable_and_sensitive(cfg, raw):
    assert cfg.hash() == sha256_of(cfg.raw)
    raw["plant"]["k_thrust"] += 1e-9
    assert sha256_of(raw) != cfg.hash()


def test_yaml_file_round_trip(tmp_path, cfg):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(cfg.raw))
    again = load_config(str(p))
    assert again.hash() == cfg.hash()


def test_perception_majority_bounds(raw):
    raw["perception"]["temporal_majority"] = 99
    with pytest.raises(ConfigError, match="majority"):
        config_from_dict(raw)
