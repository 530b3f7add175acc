import json

from settings_manager import DEFAULT_SETTINGS, SettingsManager


def test_missing_file_gives_defaults(tmp_path):
    manager = SettingsManager(str(tmp_path / "absent.json"))
    assert manager.settings == DEFAULT_SETTINGS


def test_file_values_override_defaults(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"ell": 2, "seed": 5, "tolerances": {"identity": 1e-10}}))
    manager = SettingsManager(str(path))
    assert manager.get("ell") == 2
    assert manager.get("seed") == 5
    assert manager.get("tolerances") == {"identity": 1e-10}
    assert manager.get("L_max") == DEFAULT_SETTINGS["L_max"]


def test_bad_entries_are_dropped(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"ell": "two", "j": True, "colour": "blue", "L": 5}))
    manager = SettingsManager(str(path))
    assert manager.get("ell") == 1
    assert manager.get("j") is None
    assert "colour" not in manager.settings
    assert manager.get("L") == 5


def test_malformed_file_falls_back(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text("{not json")
    assert SettingsManager(str(path)).settings == DEFAULT_SETTINGS
    path.write_text("[1, 2]")
    assert SettingsManager(str(path)).settings == DEFAULT_SETTINGS


def test_save_round_trip(tmp_path):
    path = tmp_path / "settings.json"
    manager = SettingsManager(str(path))
    manager.settings["L"] = 7
    manager.save_settings()
    assert SettingsManager(str(path)).get("L") == 7
