"""Tests for run configuration.

Covers:
  - Config.from_dict: known keys, notes, unknown keys, coercion
  - Config.validate and merged
  - worker_count and the COSMOWEYL_THREADS cap
  - ProfileLoader: packaged profiles, missing profiles, bad JSON
  - load_config_file with and without a section header
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from cosmoweyl.core.charts import ChartTag
from cosmoweyl.core.errors import ConfigError
from cosmoweyl.core.profiles import THREADS_ENV, Config, ProfileLoader


# ======================================================================
# Fixtures & helpers
# ======================================================================

def _write(tmp_path: Path, name: str, text: str) -> Path:
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ======================================================================
# Config
# ======================================================================

class TestConfigFromDict:
    """Profile dictionaries."""

    def test_defaults(self):
        cfg = Config()
        assert cfg.lam == 3.0
        assert cfg.m == 0.1
        assert cfg.chart is ChartTag.EF

    def test_notes_are_ignored(self):
        cfg = Config.from_dict({"m": 0.05, "notes": "light"})
        assert cfg.m == 0.05
        assert cfg.n_theta == 32

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            Config.from_dict({"bogus": 1})

    def test_coercion(self):
        cfg = Config.from_dict({"n_theta": "16", "lam": "6"})
        assert cfg.n_theta == 16
        assert cfg.lam == 6.0

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="'m'"):
            Config.from_dict({"m": "heavy"})

    def test_round_trip_through_dict(self):
        cfg = Config(m=0.05, n_u=8)
        assert Config.from_dict(cfg.to_dict()) == cfg


class TestConfigValidate:
    """Parameter checks."""

    def test_default_is_valid(self):
        Config().validate()

    def test_mass_above_bound(self):
        with pytest.raises(ConfigError, match="Schwarzschild-de Sitter"):
            Config(m=0.2).validate()

    def test_negative_lambda(self):
        with pytest.raises(ConfigError):
            Config(lam=-1.0).validate()

    @pytest.mark.parametrize("key,value", [
        ("n_theta", 1), ("fd_scale", 0.0), ("eps0", -0.1), ("gauge", "static"), ("threads", -1),
    ])
    def test_rejects(self, key, value):
        with pytest.raises(ConfigError):
            Config(**{key: value}).validate()

    def test_merged_skips_none(self):
        cfg = Config().merged({"m": None, "n_u": 8})
        assert cfg.m == 0.1
        assert cfg.n_u == 8

    def test_merged_without_overrides_is_same(self):
        cfg = Config()
        assert cfg.merged({"m": None}) is cfg


class TestWorkerCount:
    """Thread pool size."""

    def test_explicit_threads(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert Config(threads=3).worker_count() == 3

    def test_capped_by_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "2")
        assert Config(threads=8).worker_count() == 2

    def test_cap_is_at_least_one(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "0")
        assert Config(threads=8).worker_count() == 1

    def test_bad_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ConfigError, match=THREADS_ENV):
            Config(threads=2).worker_count()


# ======================================================================
# Loader
# ======================================================================

class TestProfileLoader:
    """JSON profiles."""

    def test_packaged_profiles(self):
        loader = ProfileLoader()
        assert loader.list_profiles() == ["de_sitter.json", "default.json", "fine_grid.json"]
        for name in loader.list_profiles():
            loader.load(name).validate()

    def test_de_sitter_profile(self):
        cfg = ProfileLoader().load("de_sitter")
        assert cfg.m == 0.0
        assert cfg.lam == 3.0

    def test_missing_profile_uses_defaults(self, tmp_path):
        loader = ProfileLoader(tmp_path)
        assert loader.load("nope") == Config()
        assert loader.load() == Config()
        assert loader.list_profiles() == []

    def test_profile_from_directory(self, tmp_path):
        _write(tmp_path, "light.json", json.dumps({"m": 0.01, "n_u": 16}))
        cfg = ProfileLoader(tmp_path).load("light.json")
        assert cfg.m == 0.01
        assert cfg.n_u == 16

    def test_bad_json(self, tmp_path):
        p = _write(tmp_path, "broken.json", "{not json")
        with pytest.raises(ConfigError, match="cannot read profile"):
            ProfileLoader(tmp_path).load_path(p)


class TestConfigFile:
    """key = value files."""

    def test_bare_keys(self, tmp_path):
        p = _write(tmp_path, "run.cfg", "m = 0.02\nn_theta = 8\n")
        cfg = ProfileLoader(tmp_path).load_config_file(p)
        assert cfg.m == 0.02
        assert cfg.n_theta == 8

    def test_section(self, tmp_path):
        p = _write(tmp_path, "run.cfg", "[cosmoweyl]\neps0 = 0.05\n")
        cfg = ProfileLoader(tmp_path).load_config_file(p, Config(m=0.03))
        assert cfg.eps0 == 0.05
        assert cfg.m == 0.03

    def test_unknown_key(self, tmp_path):
        p = _write(tmp_path, "run.cfg", "mass = 0.02\n")
        with pytest.raises(ConfigError, match="mass"):
            ProfileLoader(tmp_path).load_config_file(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ProfileLoader(tmp_path).load_config_file(tmp_path / "absent.cfg")
