import json
import os
import logging
from typing import Any, Dict, Optional

logger = logging.getLogger("susy_chain")

DEFAULT_SETTINGS: Dict[str, Any] = {
    'ell': 1,
    'y': '0',
    'j': None,
    'k': None,
    'L': 4,
    'L_max': 6,
    'output_format': 'json',
    'verify_samples': 20,
    'seed': None,
    'fidelity_L': 200,
    'x_steps': 9,
    'tolerances': {},
}

# Keys whose default is None accept an int or None.
_NULLABLE_INT = ('j', 'k', 'seed')


class SettingsManager:
    """Persistent run defaults, layered under the command-line flags."""
    def __init__(self, settings_file: Optional[str] = None):
        self.settings_file = settings_file or os.path.join(os.path.dirname(__file__), 'settings.json')
        self.settings = self.load_settings()

    def _accept(self, key: str, value: Any) -> bool:
        if key not in DEFAULT_SETTINGS:
            logger.warning(f"Ignoring unknown setting {key!r}")
            return False
        if key in _NULLABLE_INT:
            ok = value is None or (isinstance(value, int) and not isinstance(value, bool))
        else:
            ok = isinstance(value, type(DEFAULT_SETTINGS[key]))
        if not ok:
            logger.warning(f"Ignoring setting {key!r}: unexpected value {value!r}")
        return ok

    def load_settings(self) -> Dict[str, Any]:
        settings = dict(DEFAULT_SETTINGS)
        if not os.path.exists(self.settings_file):
            return settings
        try:
            with open(self.settings_file, 'r') as f:
                loaded = json.load(f)
        except Exception as e:
            logger.error(f"Failed to load settings from {self.settings_file}: {e}")
            return settings
        if not isinstance(loaded, dict):
            logger.error(f"Settings file {self.settings_file} does not hold an object")
            return settings
        settings.update({key: value for key, value in loaded.items() if self._accept(key, value)})
        return settings

    def save_settings(self) -> None:
        try:
            with open(self.settings_file, 'w') as f:
                json.dump(self.settings, f, indent=2)
        except Exception as e:
            logger.error(f"Failed to save settings: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        return self.settings.get(key, default)
