import pytest

from fsodbs.config import NetworkConfig, apply_overrides, parse_key_values


def test_parse_key_values():
    text = """
    # link budget
    divergence = 2e-4
    B: 10000000
    gamma = none   # derive from visibility
    visibility = 3
    """
    assert parse_key_values(text) == {"divergence": 2e-4, "B": 10_000_000, "gamma": None, "visibility": 3}
    with pytest.raises(ValueError):
        parse_key_values("just words")


def test_replace_routes_keys():
    cfg = NetworkConfig().replace(divergence=2e-4, B=1e7, h_max=400.0, h_m=30.0)
    assert cfg.fso.divergence == 2e-4
    assert cfg.access.B == 1e7
    assert cfg.altitude.h_max == 400.0
    assert cfg.h_m == 30.0
    with pytest.raises(KeyError):
        NetworkConfig().replace(nonsense=1)


def test_apply_overrides_sets_both_speeds_and_ignores_unknown():
    cfg = apply_overrides(NetworkConfig(), {"c": 3e8, "n_users": 10})
    assert cfg.access.c == cfg.fso.c == 3e8


def test_invalid_values_rejected():
    with pytest.raises(ValueError):
        NetworkConfig().replace(h_min=600.0)
    with pytest.raises(ValueError):
        NetworkConfig().replace(tau_tx=1.5)


def test_dict_round_trip():
    cfg = NetworkConfig().replace(gamma=None, visibility=4.0)
    assert NetworkConfig.from_dict(cfg.to_dict()) == cfg
