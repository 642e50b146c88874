import numpy as np
import pytest

from liouville_lab.config import (ConfigError, build_candidates, build_system, load_config,
                                  parse_config, parse_function, preset_names)
from liouville_lab.errors import CollisionError, PeriodicityError

from conftest import FIXTURES


def test_function_grammar():
    f = parse_function({"const": 2.0, "cos": [[1, 0.5]], "sin": [[3, -0.25]], "period": 2.0})
    t = np.linspace(0, 2, 17)
    ref = 2 + 0.5 * np.cos(np.pi * t) - 0.25 * np.sin(3 * np.pi * t)
    np.testing.assert_allclose(f(t), ref, atol=1e-14)
    assert parse_function(1.5)(np.array([0.3])) == 1.5


@pytest.mark.parametrize("desc, needle", [
    ({"const": 1, "tan": []}, "unknown key"),
    ({"cos": [[0, 1.0]]}, "positive integer"),
    ({"cos": [[1.5, 1.0]]}, "positive integer"),
    ({"cos": [1, 2]}, "[k, amplitude]"),
    ({"period": -1}, "positive"),
    ({"const": "one"}, "number"),
    ({"const": float("nan")}, "finite"),
])
def test_function_grammar_errors(desc, needle):
    with pytest.raises(ConfigError) as e:
        parse_function(desc)
    assert needle in str(e.value)


def test_malformed_json_reports_line_and_column():
    with pytest.raises(ConfigError) as e:
        load_config(FIXTURES / "malformed.json")
    assert "line 4" in str(e.value) and "column" in str(e.value)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as e:
        load_config(FIXTURES / "unknown_key.json")
    assert "'colour'" in str(e.value)


@pytest.mark.parametrize("obj, needle", [
    ([], "object"),
    ({"family": "sphere"}, "unknown or missing family"),
    ({"family": "global_liouville", "X": 3}, "needs key"),
    ({"family": "flat_torus", "grid": 1}, "grid"),
    ({"family": "flat_torus", "seed": 1.5}, "seed"),
    ({"family": "flat_torus", "tolerances": {"speed": 1}}, "unknown key"),
    ({"family": "flat_torus", "flow": {"dt": 1}}, "unknown key"),
    ({"family": "flat_torus", "super": {"candidates": [{"builtin": "pz2"}]}}, "builtin"),
    ({"family": "foliation", "profile": "spiral"}, "profile"),
])
def test_config_validation(obj, needle):
    with pytest.raises(ConfigError) as e:
        parse_config(obj)
    assert needle in str(e.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.json")


def test_presets_load_by_name_and_build():
    names = preset_names()
    assert len(names) == 7
    for n in names:
        cfg = load_config(n)
        assert cfg.name
        assert build_system(cfg).passed


def test_construction_errors_pass_through():
    with pytest.raises(CollisionError):
        build_system(load_config(FIXTURES / "collision.json"))
    with pytest.raises(PeriodicityError):
        build_system(load_config(FIXTURES / "bad_period.json"))


def test_bad_epsilon():
    cfg = parse_config({"family": "global_liouville", "X": {"const": 3, "cos": [[1, 1]]},
                        "Y": {"sin": [[1, 1]]}, "epsilon": 2})
    with pytest.raises(ConfigError):
        build_system(cfg)


def test_candidates():
    cfg = load_config(FIXTURES / "corrupted_super.json")
    s = build_system(cfg)
    cands = build_candidates(cfg, s)
    assert [c.name for c in cands][-1] == "broken"
    default = build_candidates(load_config("flat_torus"), build_system(load_config("flat_torus")))
    assert default[0].name == "H" and len(default) >= 3
