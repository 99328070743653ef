import math

import pytest

from mmwave_hbf.config import (
    PRESETS,
    parse_config,
    parse_methods,
    parse_sweep,
    read_config_file,
    resolve_spec,
)
from mmwave_hbf.errors import ConfigError


def _write(tmp_path, text: str) -> str:
    path = tmp_path / "exp.cfg"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults_describe_the_reference_system() -> None:
    spec = resolve_spec([{"out": "r.csv"}])
    cfg = spec.base
    assert (cfg.n_tx, cfg.n_rf, cfg.n_rx, cfg.n_users, cfg.n_streams) == (64, 16, 4, 6, 2)
    assert cfg.total_power_dbm == 30.0
    assert cfg.target_snr_db == 10.0
    assert cfg.noise_power_dbm is None
    assert spec.channel.n_clusters == 6 and spec.channel.n_rays == 15
    assert math.isclose(spec.channel.angular_spread_rad, math.radians(10.0))
    assert spec.methods == ("dynamic", "fixed", "fully_digital")
    assert spec.trials == 500
    assert spec.master_seed == 0
    assert spec.path_loss is None
    assert spec.dynamic_init == "random"
    assert dict(spec.resolved)["target_snr_db"] == "10"


def test_missing_out_is_an_error() -> None:
    with pytest.raises(ConfigError) as ei:
        resolve_spec([])
    assert ei.value.key == "out"


def test_file_then_overrides_precedence(tmp_path) -> None:
    path = _write(tmp_path, "# comment\ntrials = 20\nseed = 5  # trailing\nout = a.csv\n")
    spec = parse_config(path, overrides={"trials": "3"})
    assert spec.trials == 3
    assert spec.master_seed == 5
    assert spec.output_path == "a.csv"


def test_preset_is_below_file(tmp_path) -> None:
    path = _write(tmp_path, "trials = 7\nout = b.csv\n")
    spec = parse_config(path, preset="convergence")
    assert spec.trials == 7
    assert spec.methods == ("dynamic",)
    assert spec.sweep.key == "none"


def test_unknown_key_is_rejected(tmp_path) -> None:
    path = _write(tmp_path, "out = a.csv\nn_antennas = 8\n")
    with pytest.raises(ConfigError) as ei:
        parse_config(path)
    assert ei.value.key == "n_antennas"


def test_duplicate_key_reports_line(tmp_path) -> None:
    path = _write(tmp_path, "trials = 1\n\ntrials = 2\n")
    with pytest.raises(ConfigError) as ei:
        read_config_file(path)
    assert f"{path}:3" in str(ei.value)


def test_line_without_equals_is_rejected(tmp_path) -> None:
    path = _write(tmp_path, "trials 1\n")
    with pytest.raises(ConfigError, match=":1:"):
        read_config_file(path)


def test_dimension_violation_names_the_key() -> None:
    with pytest.raises(ConfigError) as ei:
        resolve_spec([{"out": "r.csv", "n_users": "9"}])
    assert ei.value.key == "n_users"


def test_both_noise_keys_are_rejected() -> None:
    with pytest.raises(ConfigError) as ei:
        resolve_spec([{"out": "r.csv", "noise_power_dbm": "-80", "target_snr_db": "5"}])
    assert ei.value.key == "noise_power_dbm"


def test_absolute_noise_power_disables_default_snr() -> None:
    spec = resolve_spec([{"out": "r.csv", "noise_power_dbm": "-80"}])
    assert spec.base.noise_power_dbm == -80.0
    assert spec.base.target_snr_db is None


def test_snr_sweep_with_absolute_noise_is_rejected() -> None:
    with pytest.raises(ConfigError) as ei:
        resolve_spec([{"out": "r.csv", "noise_power_dbm": "-80", "sweep": "snr=0,10"}])
    assert ei.value.key == "sweep"


def test_bad_values_name_their_key() -> None:
    for key, value in [
        ("trials", "0"),
        ("trials", "many"),
        ("seed", "-1"),
        ("tol", "0"),
        ("max_iters", "0"),
        ("workers", "0"),
        ("carrier_hz", "0"),
        ("path_loss", "cost231"),
        ("record_timing", "maybe"),
        ("snr_mode", "rx"),
        ("methods", "dynamic,analog"),
        ("dynamic_init", "zeros"),
    ]:
        with pytest.raises(ConfigError) as ei:
            resolve_spec([{"out": "r.csv", key: value}])
        assert ei.value.key == key, (key, value)


def test_snr_range_is_inclusive() -> None:
    sweep = parse_sweep("snr=-10:5:20")
    assert sweep.key == "snr_db"
    assert sweep.values == (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    assert sweep.points() == list(sweep.values)


def test_sweep_lists_and_aliases() -> None:
    assert parse_sweep("users=2,4,6").values == (2, 4, 6)
    assert parse_sweep("tx=32,64").key == "n_tx"
    assert parse_sweep("none").points() == [None]
    for bad in ("users=2.5", "snr=0:-5:10", "snr=0:0:10", "antennas=4", "snr="):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_config_at_sweep_points() -> None:
    spec = resolve_spec([{"out": "r.csv", "sweep": "users=2,4"}])
    assert spec.config_at(2).n_users == 2
    assert spec.config_at(None) is spec.base
    snr = resolve_spec([{"out": "r.csv", "sweep": "snr=0,5"}])
    assert snr.config_at(5.0).target_snr_db == 5.0


def test_invalid_sweep_point_is_reported() -> None:
    with pytest.raises(ConfigError, match="sweep n_users=10"):
        resolve_spec([{"out": "r.csv", "sweep": "users=2,10"}])


def test_fixed_method_needs_divisible_arrays() -> None:
    with pytest.raises(ConfigError) as ei:
        resolve_spec([{"out": "r.csv", "n_tx": "60"}])
    assert ei.value.key == "n_tx"
    spec = resolve_spec([{"out": "r.csv", "n_tx": "60", "methods": "dynamic"}])
    assert spec.base.n_tx == 60
    with pytest.raises(ConfigError, match="dynamic_init = block") as ei:
        resolve_spec(
            [{"out": "r.csv", "n_tx": "60", "methods": "dynamic", "dynamic_init": "block"}]
        )
    assert ei.value.key == "n_tx"


def test_parse_methods_dedups_in_order() -> None:
    assert parse_methods("fixed, dynamic,fixed") == ("fixed", "dynamic")
    with pytest.raises(ConfigError):
        parse_methods(" , ")


def test_log_distance_defaults_to_free_space_reference() -> None:
    spec = resolve_spec([{"out": "r.csv", "path_loss": "log_distance"}])
    assert spec.path_loss is not None
    assert abs(spec.path_loss.reference_loss_db - 61.4) < 0.05
    assert spec.path_loss.cell_radius_m == 40.0
    custom = resolve_spec(
        [{"out": "r.csv", "path_loss": "log_distance", "reference_loss_db": "70"}]
    )
    assert custom.path_loss.reference_loss_db == 70.0


def test_all_presets_resolve() -> None:
    for name in PRESETS:
        spec = parse_config(preset=name, overrides={"out": "r.csv"})
        for point in spec.sweep.points():
            spec.config_at(point)
    single = parse_config(preset="single-antenna", overrides={"out": "r.csv"})
    assert (single.base.n_rx, single.base.n_streams, single.base.n_users) == (1, 1, 16)
    assert len(single.sweep.values) == 7


def test_unknown_preset_is_rejected() -> None:
    with pytest.raises(ConfigError):
        parse_config(preset="fast", overrides={"out": "r.csv"})
