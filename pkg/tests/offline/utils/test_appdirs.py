import platform

import pytest
from bundlegt.utils.appdirs import get_home_dir, get_log_path, get_cache_path


def test_get_home_dir(monkeypatch, tmpdir):
    monkeypatch.setenv("HOME", str(tmpdir))

    assert get_home_dir() == str(tmpdir)


def test_home_dir_does_not_exist(monkeypatch, tmpdir):
    monkeypatch.setenv("HOME", str(tmpdir / "adamsmith"))

    with pytest.raises(RuntimeError):
        get_home_dir()


def test_macos_dirs(monkeypatch):
    monkeypatch.setattr(platform, "system", lambda: "Darwin")
    monkeypatch.delenv("BUNDLEGT_LOG_DIR")

    home = get_home_dir()

    assert get_cache_path(create=False) == home + "/Library/Caches"
    assert get_log_path(create=False) == home + "/Library/Logs"


def test_xdg_env_dirs(monkeypatch):
    monkeypatch.setattr(platform, "system", lambda: "Linux")
    monkeypatch.delenv("BUNDLEGT_LOG_DIR")
    monkeypatch.setenv("XDG_CACHE_HOME", "/xdg_cache_home")

    assert get_cache_path(create=False) == "/xdg_cache_home"
    assert get_log_path(create=False) == "/xdg_cache_home"
    assert get_log_path("bundlegt", "bundlegt.log", create=False) == (
        "/xdg_cache_home/bundlegt/bundlegt.log"
    )


def test_no_xdg_env_fallback_dirs(monkeypatch):
    monkeypatch.setattr(platform, "system", lambda: "Linux")
    monkeypatch.delenv("BUNDLEGT_LOG_DIR")
    monkeypatch.delenv("XDG_CACHE_HOME", raising=False)

    home = get_home_dir()

    assert get_cache_path(create=False) == home + "/.cache"
    assert get_log_path(create=False) == home + "/.cache"


def test_log_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("BUNDLEGT_LOG_DIR", str(tmp_path / "logs"))

    path = get_log_path("bundlegt")

    assert path == str(tmp_path / "logs" / "bundlegt")
    assert (tmp_path / "logs" / "bundlegt").is_dir()
