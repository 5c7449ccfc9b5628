# tests/test_config.py

import pytest

from backend.config import Config


def test_defaults_are_valid():
    assert Config.validate_config() is True


@pytest.mark.parametrize("attr,value", [("WORKERS", 0), ("SAMPLES", 999), ("CHUNK_SIZE", 512), ("STATUS_TTL_SEC", 10)])
def test_invalid_settings_are_rejected(monkeypatch, attr, value):
    monkeypatch.setattr(Config, attr, value)
    with pytest.raises(ValueError):
        Config.validate_config()


def test_output_dir_must_not_be_a_file(monkeypatch, tmp_path):
    target = tmp_path / "results"
    target.write_text("", encoding="utf-8")
    monkeypatch.setattr(Config, "OUTPUT_DIR", str(target))
    with pytest.raises(ValueError):
        Config.validate_config()
