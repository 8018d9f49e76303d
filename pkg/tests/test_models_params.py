import json

import numpy as np
import pytest

from models.model_params import ModelParams, params_table, split_name
from models.presets import ESTIMATED, FILTER_TUNING, NOMINAL, resolve_params
from utils.errors import ConfigError, DomainError


def test_split_name():
    assert split_name("a3") == ("a", 2)
    assert split_name("A1") == ("A", 0)
    assert split_name("gamma2") == ("gamma", 1)
    assert split_name("sigma_d4") == ("sigma_d", 3)
    assert split_name("sigma2") == ("sigma", 1)
    assert split_name("r21") == ("r2", 0)
    assert split_name("rho") == ("rho", -1)
    with pytest.raises(KeyError):
        split_name("b1")


def test_presets_hold_published_values():
    assert NOMINAL.a == (1.131,) * 4
    assert NOMINAL.gamma == (0.35, 0.35)
    assert ESTIMATED.a == (1.006, 1.249, 1.315, 1.548)
    assert ESTIMATED.A == (379.837, 378.034, 466.300, 523.122)
    assert ESTIMATED.gamma == (0.260, 0.353)
    assert FILTER_TUNING.sigma == (7.25, 14.92, 8.98, 14.50)
    assert FILTER_TUNING.gamma == ESTIMATED.gamma


def test_with_values_is_a_copy():
    changed = NOMINAL.with_values({"a2": 2.0, "gamma1": 0.5, "rho": 1.1})
    assert changed.a == (1.131, 2.0, 1.131, 1.131)
    assert changed.gamma == (0.5, 0.35)
    assert changed.rho == 1.1
    assert NOMINAL.a[1] == 1.131
    assert changed.get("a2") == 2.0


def test_with_noise_from_keeps_physics():
    mixed = NOMINAL.with_noise_from(FILTER_TUNING)
    assert mixed.a == NOMINAL.a
    assert mixed.sigma == FILTER_TUNING.sigma
    assert mixed.r2 == FILTER_TUNING.r2


@pytest.mark.parametrize("values", [
    {"a1": 0.0},
    {"A3": -1.0},
    {"gamma1": 1.0},
    {"gamma2": 0.0},
    {"r24": 0.0},
    {"sigma1": -0.1},
    {"a4": float("nan")},
])
def test_validate_rejects(values):
    with pytest.raises(DomainError):
        NOMINAL.with_values(values).validate()


def test_json_round_trip(tmp_path):
    path = tmp_path / "theta.json"
    ESTIMATED.save_json(str(path))
    assert ModelParams.load_json(str(path)) == ESTIMATED
    with open(path, encoding="utf-8") as f:
        assert json.load(f)["schema"] == 1


def test_load_bare_dict(tmp_path):
    path = tmp_path / "bare.json"
    path.write_text(json.dumps({"a": [1.0, 1.1, 1.2, 1.3], "unknown": 5}), encoding="utf-8")
    theta = ModelParams.load_json(str(path))
    assert theta.a == (1.0, 1.1, 1.2, 1.3)
    assert theta.A == NOMINAL.A


def test_resolve_params(tmp_path):
    assert resolve_params("nominal") is NOMINAL
    path = tmp_path / "theta.json"
    ESTIMATED.save_json(str(path))
    assert resolve_params(str(path)) == ESTIMATED
    with pytest.raises(ConfigError):
        resolve_params("no-such-preset")


def test_derived_views():
    np.testing.assert_allclose(NOMINAL.level_scale, 1.0 / 380.133)
    B = ESTIMATED.input_matrix
    np.testing.assert_allclose(B.sum(axis=0), [1.0, 1.0])
    np.testing.assert_allclose(ESTIMATED.meas_cov, np.diag(ESTIMATED.r2))


def test_params_table():
    table = params_table([("nominal", NOMINAL), ("estimated", ESTIMATED)], ["a1", "gamma2"])
    assert table[0] == ["Parameter", "nominal", "estimated", "Unit"]
    assert table[1] == ["a1", "1.131", "1.006", "cm^2"]
    assert table[2] == ["gamma2", "0.35", "0.353", "-"]
