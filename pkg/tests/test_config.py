import json
import math

import pytest

from dragphase.config import (
    ConfigParseError,
    ConfigValidationError,
    Environment,
    SatelliteParams,
    Scenario,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
)


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def test_paper_configuration_loads(tmp_path):
    sat, env, scn = load_config(write(tmp_path, {"scenario": {"n_sats": 105, "altitude0": 475}}))
    assert scn.n_sats == 105
    assert scn.altitude0 == 475
    assert scn.eps_theta == 0.1
    assert scn.eps_omega == 1e-18
    assert scn.dt_command == 86400.0
    assert scn.reentry_altitude == 200.0
    assert scn.maintenance_threshold_deg == scn.eps_theta
    assert sat == SatelliteParams()
    assert env.inclination == 97.2
    assert env.mu_earth == 398600.4418


def test_omitted_eps_theta_defaults(tmp_path):
    _, _, scn = load_config(write(tmp_path, {"scenario": {"n_sats": 4}}))
    assert scn.eps_theta == 0.1
    assert scn.eps_theta_rad == pytest.approx(math.radians(0.1), rel=1e-15)


def test_area_bounds_inverted_names_key(tmp_path):
    doc = {"satellite": {"area_min": 0.05, "area_max": 0.03}, "scenario": {"n_sats": 3}}
    with pytest.raises(ConfigValidationError) as info:
        load_config(write(tmp_path, doc))
    assert info.value.key == "satellite.area_min"


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"scenario": {}}, "scenario.n_sats"),
        ({"scenario": {"n_sats": 1}}, "scenario.n_sats"),
        ({"scenario": {"n_sats": 3, "eps_theta": 0}}, "scenario.eps_theta"),
        ({"scenario": {"n_sats": 3, "reentry_altitude": 500}}, "scenario.reentry_altitude"),
        ({"scenario": {"n_sats": 3, "dt_fine": 7}}, "scenario.dt_command"),
        ({"scenario": {"n_sats": 3, "bogus": 1}}, "scenario.bogus"),
        ({"scenario": {"n_sats": True}}, "scenario.n_sats"),
        ({"environment": {"inclination": 181}, "scenario": {"n_sats": 3}}, "environment.inclination"),
        ({"satellite": {"mass": "5"}, "scenario": {"n_sats": 3}}, "satellite.mass"),
        ({"extra": {}, "scenario": {"n_sats": 3}}, "extra"),
    ],
)
def test_validation_errors_name_the_key(doc, key):
    with pytest.raises(ConfigValidationError) as info:
        config_from_dict(doc)
    assert info.value.key == key


def test_malformed_json_is_parse_error(tmp_path):
    with pytest.raises(ConfigParseError):
        load_config(write(tmp_path, "{not json"))
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "missing.json")


def test_identical_files_identical_config(tmp_path):
    doc = {"scenario": {"n_sats": 7, "altitude0": 480.5}, "satellite": {"c_d": 2.1}}
    a = load_config(write(tmp_path, doc, "a.json"))
    b = load_config(write(tmp_path, doc, "b.json"))
    assert a == b


def test_dump_round_trip_bit_exact(tmp_path):
    sat = SatelliteParams(c_d=2.2000000000000002, mass=4.9, area_min=0.1 + 0.2 - 0.3 + 0.01)
    env = Environment(inclination=97.19999999999999)
    scn = Scenario(n_sats=12, altitude0=475.00000000000006, eps_omega=3e-18, lifetime_max_days=9)
    text = dump_config(sat, env, scn)
    back = load_config(write(tmp_path, text))
    assert back == (sat, env, scn)
    assert dump_config(*back) == text
    assert config_to_dict(*back) == config_to_dict(sat, env, scn)


def test_custom_atmosphere_table(tmp_path):
    table = tmp_path / "atm.csv"
    table.write_text("h_km,rho_min_kg_per_km3,rho_max_kg_per_km3\n100,10,20\n1000,1,2\n")
    doc = {"environment": {"atmosphere": {"table": "atm.csv", "mode": "max"}}, "scenario": {"n_sats": 2}}
    _, env, _ = load_config(write(tmp_path, doc))
    assert env.atmosphere.mode == "max"
    assert env.atmosphere.node_density() == pytest.approx([20.0, 2.0], rel=1e-14)


def test_ballistic_unit_conversion():
    p = SatelliteParams(c_d=2.0, mass=4.0, area_min=0.01, area_max=0.04)
    # ½·C_D·A/m with A converted m² -> km²
    assert p.ballistic(0.02) == pytest.approx(0.5 * 2.0 * 0.02e-6 / 4.0, rel=1e-15)
