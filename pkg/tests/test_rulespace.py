import json
import math

import pytest
from hypothesis import given, strategies as st

from civbalance import rulespace as rs


def test_default_space_shape():
    space = rs.default_space()
    assert len(space) == 12
    first = space[0]
    assert (first.name, first.lower, first.upper, first.precision) == (
        "initial_resources", 2, 10, rs.Precision.INTEGER)
    tenth = space[9]
    assert (tenth.name, tenth.lower, tenth.upper, tenth.precision) == (
        "score_per_resource", 0.1, 0.5, rs.Precision.TENTH)


def test_space_cardinality():
    # independent oracle: per-parameter value counts multiplied out
    expected = 9 * 5 * 10 * 5 * 5 * 13 * 13 * 9 * 9 * 5 * 5 * 5
    assert rs.space_cardinality() == expected


def test_project_rounding_and_clamping():
    raw = [7.4, 3, 5, 3, 3, 10, 10, 6, 6, 0.26, 3, 3]
    cfg = rs.project(raw)
    assert cfg.initial_resources == 7
    assert cfg.score_per_resource == pytest.approx(0.3)

    clamped = rs.project([11.8, 3, 5, 3, 3, 10, 10, 6, 6, 0.3, 3, 3])
    assert clamped.initial_resources == 10

    half = rs.project([7.5, 3, 5, 3, 3, 10, 10, 6, 6, 0.3, 3, 3])
    assert half.initial_resources == 8  # half away from zero


def test_project_wrong_length():
    with pytest.raises(rs.ContractViolation):
        rs.project([1.0] * 11)


@given(st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=12, max_size=12))
def test_project_total_and_idempotent(raw):
    cfg = rs.project(raw)  # always a valid RuleConfig
    again = rs.project(cfg.values())
    assert again == cfg


def test_project_idempotent_and_range_preserving_on_grid():
    # exhaustive half-step grid around the integer boundary behaviors
    for v in [x / 4 for x in range(-8, 60)]:
        raw = [v] * 9 + [v, v, v]
        cfg = rs.project(raw)
        for spec, val in zip(rs.default_space(), cfg.values()):
            assert spec.lower - 1e-9 <= val <= spec.upper + 1e-9
        assert rs.project(cfg.values()) == cfg


def test_normalize_bounds_and_midpoint():
    cfg = rs.default_config()
    cfg_lo = rs.RuleConfig(**{**cfg.to_dict(), "empire_soldier_hp": 4})
    cfg_hi = rs.RuleConfig(**{**cfg.to_dict(), "empire_soldier_hp": 16})
    cfg_mid = rs.RuleConfig(**{**cfg.to_dict(), "empire_soldier_hp": 10})
    idx = rs.PARAM_NAMES.index("empire_soldier_hp")
    assert rs.normalize(cfg_lo)[idx] == 0.0
    assert rs.normalize(cfg_hi)[idx] == 1.0
    assert rs.normalize(cfg_mid)[idx] == 0.5


def test_denormalize_out_of_cube():
    with pytest.raises(rs.ContractViolation):
        rs.denormalize([0.5] * 11 + [1.2])


@given(st.lists(st.floats(min_value=0, max_value=1, allow_nan=False), min_size=12, max_size=12))
def test_normalize_roundtrip_through_projection(vec):
    cfg = rs.project(rs.denormalize(vec))
    back = rs.project(rs.denormalize(rs.normalize(cfg)))
    assert back == cfg


def test_config_file_roundtrip(tmp_path):
    cfg = rs.project([10, 1, 6, 4, 3, 9, 10, 4, 4, 0.4, 3, 3])
    path = tmp_path / "config.json"
    rs.save_config(cfg, path)
    text = path.read_text()
    assert '"initial_resources": 10' in text  # integers without fraction
    assert '"score_per_resource": 0.4' in text  # one decimal digit
    assert rs.load_config(path) == cfg
    # bit-exact rewrite
    rs.save_config(rs.load_config(path), tmp_path / "copy.json")
    assert (tmp_path / "copy.json").read_text() == text


def test_config_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    data = rs.default_config().to_dict()
    data["initial_resourcs"] = data.pop("initial_resources")
    path.write_text(json.dumps(data))
    with pytest.raises(rs.ContractViolation):
        rs.load_config(path)


def test_map_size_turn_pairing():
    assert rs.DEFAULT_MAX_TURNS == {5: 16, 7: 16, 9: 32, 11: 32}
    cfg = rs.default_config(map_size=9)
    assert cfg.max_turns == 32
    override = rs.default_config(map_size=9, max_turns=16)
    assert override.max_turns == 16


def test_invalid_configs_rejected():
    base = rs.default_config().to_dict()
    with pytest.raises(rs.ContractViolation):
        rs.RuleConfig(**{**base, "empire_damage": 0})
    with pytest.raises(rs.ContractViolation):
        rs.RuleConfig(**{**base, "empire_damage": 2.5})
    with pytest.raises(rs.ContractViolation):
        rs.RuleConfig(**{**base, "map_size": 6})
