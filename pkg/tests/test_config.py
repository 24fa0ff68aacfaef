import pytest

from goalctl import config as cfgmod
from goalctl.errors import ConfigError


def write(path, text):
    path.write_text(text)
    return path


def test_defaults_validate():
    cfg = cfgmod.from_dict({})
    assert cfg.run.seeds == [0]
    assert cfg.dpc.hidden == (64, 64)


def test_every_problem_reported_at_once():
    with pytest.raises(ConfigError) as err:
        cfgmod.from_dict({"verify": {"gamma": 1.5, "n": "many"}, "bogus": {}, "dpc": {"optimizer": "sgd"},
                          "rl": {"nope": 1}})
    text = str(err.value)
    for needle in ("verify.gamma", "verify.n", "bogus", "dpc.optimizer", "rl.nope"):
        assert needle in text
    assert len(err.value.problems) == 5


def test_types_are_checked():
    with pytest.raises(ConfigError):
        cfgmod.from_dict({"verify": {"deterministic": 1}})
    with pytest.raises(ConfigError):
        cfgmod.from_dict({"run": {"seeds": [0, -1]}})
    with pytest.raises(ConfigError):
        cfgmod.from_dict({"env": {"kind": "rocket"}})


def test_lists_become_tuples_where_expected():
    cfg = cfgmod.from_dict({"dpc": {"hidden": [32, 16]}})
    assert cfg.dpc.hidden == (32, 16)


def test_integer_gamma_is_coerced():
    cfg = cfgmod.from_dict({"verify": {"gamma": 0.5}})
    assert isinstance(cfg.verify.gamma, float)


def test_extends_merges_child_over_parent(tmp_path):
    write(tmp_path / "base.toml", '[verify]\ngamma = 0.8\nn = 10\n[run]\nseeds = [1, 2]\n')
    child = write(tmp_path / "child.toml", 'extends = "base.toml"\n[verify]\nn = 20\n')
    cfg = cfgmod.load(child)
    assert (cfg.verify.gamma, cfg.verify.n, cfg.run.seeds) == (0.8, 20, [1, 2])


def test_extends_cycle_is_an_error(tmp_path):
    write(tmp_path / "a.toml", 'extends = "b.toml"\n')
    write(tmp_path / "b.toml", 'extends = "a.toml"\n')
    with pytest.raises(ConfigError, match="cycle"):
        cfgmod.load(tmp_path / "a.toml")


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        cfgmod.load(tmp_path / "absent.toml")
    with pytest.raises(ConfigError):
        cfgmod.load(write(tmp_path / "bad.toml", "[verify\n"))


def test_round_trip_is_idempotent(tmp_path):
    cfg = cfgmod.from_dict({"rl": {"episodes": 7, "hidden": [8, 8]}, "reward": {"goal": [0.0, 0.6]},
                            "env": {"kind": "cstr", "params": {"dt": 0.01}}})
    path = write(tmp_path / "out.toml", cfgmod.dumps(cfg))
    again = cfgmod.load(path)
    assert again == cfg
    assert cfgmod.dumps(again) == cfgmod.dumps(cfg)


def test_hash_ignores_key_order():
    a = cfgmod.from_dict({"verify": {"gamma": 0.7, "n": 5}, "run": {"seeds": [3]}})
    b = cfgmod.from_dict({"run": {"seeds": [3]}, "verify": {"n": 5, "gamma": 0.7}})
    assert cfgmod.config_hash(a) == cfgmod.config_hash(b)
    c = cfgmod.from_dict({"verify": {"gamma": 0.71, "n": 5}, "run": {"seeds": [3]}})
    assert cfgmod.config_hash(a) != cfgmod.config_hash(c)
