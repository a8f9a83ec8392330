"""
Default settings and the user TOML override under SAVE_DIR.
"""

from __future__ import annotations

import pytest

from src.config import Config
from src.utils.logging_config import resolve_level


@pytest.fixture
def save_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SAVE_DIR", str(tmp_path))
    return tmp_path


def test_defaults_without_a_file(save_dir):
    cfg = Config()
    assert cfg.seed == 42
    assert cfg.train_ratio == 0.7
    assert cfg.config_file == save_dir / "config" / "base.toml"


def test_user_file_overrides_defaults(save_dir):
    path = save_dir / "config" / "base.toml"
    path.parent.mkdir(parents=True)
    path.write_text('seed = 7\nk_folds = 3\nunknown = "x"\njobs = 0\n', encoding="utf-8")
    cfg = Config()
    assert cfg.seed == 7
    assert cfg.k_folds == 3
    # 非法值保留默认
    assert cfg.jobs == 1


def test_save_writes_only_changed_fields(save_dir):
    cfg = Config()
    cfg.stop_delta = 0.001
    path = cfg.save()
    assert path.read_text(encoding="utf-8").strip() == "stop_delta = 0.001"
    assert Config().stop_delta == 0.001


def test_broken_file_falls_back_to_defaults(save_dir):
    path = save_dir / "config" / "base.toml"
    path.parent.mkdir(parents=True)
    path.write_text("seed = [", encoding="utf-8")
    assert Config().seed == 42


def test_log_level_names():
    assert resolve_level("debug") == "DEBUG"
    assert resolve_level(" Error ") == "ERROR"
    assert resolve_level(None) == "INFO"
    assert resolve_level("verbose") == "INFO"
