import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doubleirs.config import (
    DEFAULT_ANGLES,
    ConfigError,
    default_scenario,
    load_scenario,
    read_config,
    resolve_scenario,
)
from doubleirs.scenario import (
    ArraySpec,
    LinkAngles,
    LinkFading,
    PhaseShifts,
    Regime,
    db_to_linear,
    dbm_to_watts,
    direction_angles,
    node_distance,
)
from doubleirs.channel import path_loss


# ----------------------------------------------------------------- types


def test_array_spec_size_and_validation():
    assert ArraySpec(2, 3).size == 6
    with pytest.raises(ValueError):
        ArraySpec(0, 3)


@given(st.integers(min_value=1, max_value=2000))
def test_with_size_factorizes_exactly(total):
    spec = ArraySpec.with_size(total)
    assert spec.size == total
    assert spec.rows <= spec.cols


def test_with_size_prefers_square():
    assert ArraySpec.with_size(100) == ArraySpec(10, 10)
    assert ArraySpec.with_size(72) == ArraySpec(8, 9)


def test_link_fading_powers_split_alpha():
    f = LinkFading(2.0, 3.0)
    assert f.los_power == pytest.approx(1.5)
    assert f.nlos_power == pytest.approx(0.5)
    assert f.has_los


def test_link_fading_pure_limits():
    assert LinkFading(2.0, 0.0, Regime.PURE_LOS).los_power == 2.0
    assert LinkFading(2.0, 0.0, Regime.PURE_LOS).nlos_power == 0.0
    assert LinkFading(2.0, 0.0, Regime.PURE_NLOS).nlos_power == 2.0
    assert not LinkFading(2.0, 0.0, Regime.PURE_NLOS).has_los
    assert not LinkFading(2.0, 0.0).has_los


@pytest.mark.parametrize("alpha,k", [(-1.0, 1.0), (1.0, -0.5), (math.nan, 1.0), (1.0, math.inf)])
def test_link_fading_rejects_bad_values(alpha, k):
    with pytest.raises(ValueError):
        LinkFading(alpha, k)


def test_pure_regime_with_rician_factor_rejected():
    with pytest.raises(ValueError):
        LinkFading(1.0, 2.0, Regime.PURE_LOS)


def test_link_angles_reject_nonfinite():
    with pytest.raises(ValueError):
        LinkAngles(math.nan, 0.0, 0.0, 0.0)


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(0.0) == 1.0
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-104.0) == pytest.approx(10 ** (-13.4))


def test_path_loss():
    assert path_loss(10.0, 2.0) == pytest.approx(1e-5)
    with pytest.raises(ValueError):
        path_loss(0.0, 2.0)


# ---------------------------------------------------------------- phases


def test_phase_shifts_validation():
    with pytest.raises(ValueError):
        PhaseShifts(np.array([0.0, 2 * np.pi]))
    with pytest.raises(ValueError):
        PhaseShifts(np.array([-0.1]))
    with pytest.raises(ValueError):
        PhaseShifts(np.array([np.nan]))


def test_phase_shifts_are_read_only():
    ph = PhaseShifts(np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        ph.phi1[0] = 1.0


@given(st.lists(st.floats(min_value=0.0, max_value=6.28), min_size=1, max_size=6))
def test_phase_json_round_trip(values):
    ph = PhaseShifts(np.array(values), np.array(values[::-1]))
    back = PhaseShifts.from_dict(json.loads(json.dumps(ph.to_dict())))
    np.testing.assert_array_equal(back.phi1, ph.phi1)
    np.testing.assert_array_equal(back.phi2, ph.phi2)


def test_reflection_coefficient_convention():
    ph = PhaseShifts(np.array([np.pi / 2]), np.array([0.0]))
    assert ph.v1[0] == pytest.approx(-1j)


# ---------------------------------------------------------------- config


def test_empty_config_gives_reference_deployment():
    cfg = resolve_scenario({})
    assert cfg.d_over_lambda == 0.5
    assert cfg.size("S") == 4 and cfg.size("1") == 100 and cfg.size("2") == 100
    assert cfg.transmit_power == pytest.approx(dbm_to_watts(5.0))
    assert cfg.noise_power == pytest.approx(dbm_to_watts(-104.0))
    for link, fad in cfg.fading.items():
        assert fad.k == pytest.approx(10.0)
        assert fad.regime is Regime.FINITE
    assert cfg.positions["1"] == (-5.0, -20.0, 5.0)
    assert cfg.positions["2"] == (-5.0, 20.0, 5.0)
    d_s1 = node_distance(cfg.positions, "S1")
    assert cfg.fading["S1"].alpha == pytest.approx(1.0 / (1000 * d_s1**2.3))
    d_12 = node_distance(cfg.positions, "12")
    assert d_12 == pytest.approx(40.0)
    assert cfg.fading["12"].alpha == pytest.approx(1.0 / (1000 * 40.0**2.2))
    d_su = node_distance(cfg.positions, "SU")
    assert cfg.fading["SU"].alpha == pytest.approx(1.0 / (1000 * d_su**3.7))
    for link, (aoa, aod) in DEFAULT_ANGLES.items():
        ang = cfg.angles_of(link)
        assert (ang.aoa_h, ang.aoa_v, ang.aod_h, ang.aod_v) == (aoa, aoa, aod, aod)


def test_empty_file_equals_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("{}")
    assert load_scenario(path) == default_scenario()
    path.write_text("")
    assert read_config(path) == {}


def test_k_db_zero_gives_unit_factor():
    cfg = resolve_scenario({"K_dB": 0})
    assert all(f.k == pytest.approx(1.0) for f in cfg.fading.values())


@pytest.mark.parametrize(
    "raw,field",
    [
        ({"d_over_lambda": 0.7}, "d_over_lambda"),
        ({"arrays": {"1": [0, 3]}}, "arrays/1/0"),
        ({"links": {"S1": {"K": -1}}}, "links/S1/K"),
        ({"bogus": 1}, "<root>"),
        ({"links": {"S1": {"alpha": 1.0, "distance": 3.0}}}, "links/S1"),
        ({"K": 1.0, "K_dB": 0.0}, "K_dB"),
        ({"seed": -1}, "seed"),
        ({"links": {"S0": {"alpha": 1.0}}}, "links/S0"),
    ],
)
def test_invalid_configs_name_the_field(raw, field):
    with pytest.raises(ConfigError) as info:
        resolve_scenario(raw)
    assert str(info.value).startswith(field)


def test_invalid_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(path)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_per_link_overrides():
    cfg = resolve_scenario(
        {"links": {"12": {"regime": "pure_los", "alpha": 2.0}, "SU": {"K_dB": 3.0}, "S1": {"distance": 10.0}}}
    )
    assert cfg.fading["12"].regime is Regime.PURE_LOS
    assert cfg.fading["12"].alpha == 2.0
    assert cfg.fading["SU"].k == pytest.approx(db_to_linear(3.0))
    assert cfg.fading["S1"].alpha == pytest.approx(path_loss(10.0, 2.3))


def test_global_regime_flag():
    cfg = resolve_scenario({"regime": "pure_nlos"})
    assert cfg.regime() is Regime.PURE_NLOS
    with pytest.raises(ConfigError):
        resolve_scenario({"regime": "pure_los", "links": {"S1": {"K": 1.0}}})


def test_irs_position_shortcuts():
    cfg = resolve_scenario({"irs_x": 2.0, "irs_y": 10.0})
    assert cfg.positions["1"] == (-2.0, -10.0, 5.0)
    assert cfg.positions["2"] == (-2.0, 10.0, 5.0)


def test_explicit_positions_switch_to_derived_angles():
    base = resolve_scenario({})
    moved = resolve_scenario({"positions": {"1": [-5.0, -20.0, 5.0]}})
    assert moved.angles_of("S1") != base.angles_of("S1")
    pinned = resolve_scenario(
        {"positions": {"1": [-5.0, -20.0, 5.0]}, "links": {"S1": {"angles": {"aod_h": 0.25}}}}
    )
    assert pinned.angles_of("S1").aod_h == 0.25
    assert pinned.angles_of("S1").aoa_h == moved.angles_of("S1").aoa_h


def test_single_irs_links_need_array_zero():
    cfg = resolve_scenario({"arrays": {"0": [10, 20]}, "positions": {"0": [-5.0, 0.0, 5.0]}})
    assert cfg.has_single and cfg.size("0") == 200


# -------------------------------------------------------------- geometry


def test_direction_angles_in_range():
    cfg = default_scenario()
    for node, other in (("1", "S"), ("1", "2"), ("2", "U"), ("S", "1")):
        h, v = direction_angles(cfg.positions, node, other)
        assert 0.0 <= h < 2 * np.pi
        assert 0.0 <= v <= np.pi


def test_broadside_direction_has_zero_elevation_offset():
    # a node straight ahead of an array's normal sits at v = 0
    positions = {"S": (0.0, 0.0, 0.0), "U": (0.0, 10.0, 0.0), "1": (0.0, 5.0, 0.0)}
    h, v = direction_angles(positions, "S", "U")
    assert v == pytest.approx(0.0, abs=1e-12)
