"""
This module provides run configuration file management. It follows the design of the
INI based user configuration of the Spyder IDE but stores its values as JSON so that
configs are language-neutral and easy to diff.
"""

from __future__ import annotations

import copy
import json
import logging
from threading import RLock
from typing import Any, Dict

from packaging.version import InvalidVersion, Version

from ..exceptions import ConfigError


logger = logging.getLogger(__name__)

DefaultsType = Dict[str, Dict[str, Any]]

# =============================================================================
# Auxiliary classes
# =============================================================================


class NoDefault:
    pass


# =============================================================================
# Json config class
# =============================================================================


class JsonConfig:
    """
    A sectioned configuration with typed defaults, backed by an optional JSON file.
    This class is safe to use from different threads.

    The file layout is ``{"version": "<x.y>", "<section>": {"<option>": value}}``.
    Values read from a file are type checked against the defaults. Options whose
    default is ``None`` accept any JSON value and are used for settings which must be
    provided by the user, such as ensemble parameters.

    :param path: Configuration file to load. If ``None``, only defaults are used.
    :param defaults: Dictionary containing sections and options.
    :param version: Version of the configuration schema.
    :param load: Whether to load values from ``path``.
    :raises ConfigError: if the file cannot be parsed, has a different major version
        or contains values of the wrong type.
    """

    VERSION_KEY = "version"

    def __init__(
        self,
        path: str | None = None,
        defaults: DefaultsType | None = None,
        version: Version = Version("0.0"),
        load: bool = True,
    ) -> None:

        self._lock = RLock()
        self._path = path
        self._version = version

        self.default_config: DefaultsType = copy.deepcopy(defaults) if defaults else {}
        self._data: DefaultsType = {}

        # Set all values to defaults. They may be overwritten later
        # when loading from file.
        self.reset_to_defaults()

        if load and path:
            self._load_from_json(path)

    # --- Helpers and checkers ---------------------------------------------------------

    def _load_from_json(self, path: str) -> None:
        """
        Loads the configuration from the given path. Overwrites any current values
        stored in memory.

        :param path: Path of config file to load.
        """

        try:
            with open(path, encoding="utf-8") as f:
                raw = json.load(f)
        except OSError as exc:
            raise ConfigError("Cannot read config file", f"{path}: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise ConfigError("Config file is not valid JSON", f"{path}: {exc}")

        if not isinstance(raw, dict):
            raise ConfigError("Invalid config file", "Expected a JSON object.")

        try:
            old_version = Version(str(raw.pop(self.VERSION_KEY, self._version)))
        except InvalidVersion:
            raise ConfigError("Invalid config file", "Unreadable schema version.")

        if old_version.major != self._version.major:
            raise ConfigError(
                "Unsupported config version",
                f"Got schema version {old_version}, expected {self._version.major}.x.",
            )

        if old_version != self._version:
            raw = self.apply_configuration_patches(raw, old_version)

        with self._lock:
            for section, options in raw.items():
                if not isinstance(options, dict):
                    raise ConfigError(
                        "Invalid config file", f"Section '{section}' is not an object."
                    )
                for option, value in options.items():
                    try:
                        self.set(section, option, value)
                    except ValueError as exc:
                        raise ConfigError("Invalid config value", str(exc))

    # --- Compatibility API ------------------------------------------------------------

    def apply_configuration_patches(
        self, raw: DefaultsType, old_version: Version
    ) -> DefaultsType:
        """
        Apply any patch to configuration values on minor version changes.

        To be reimplemented if patches to configuration values are needed.

        :param raw: Parsed file content without the version key.
        :param old_version: Old config version to patch.
        :returns: Patched content.
        """
        logger.debug("Loading config with schema version %s", old_version)
        return raw

    # --- Public API -------------------------------------------------------------------

    @property
    def config_path(self) -> str | None:
        """The JSON file this configuration was loaded from, if any."""
        return self._path

    def get_version(self) -> Version:
        """
        Get the current config version.

        :returns: Configuration schema (not application!) version.
        """
        return self._version

    def reset_to_defaults(self, section: str | None = None) -> None:
        """
        Reset config to default values.

        :param section: The section to reset. If not given, reset all sections.
        """

        with self._lock:
            for sec, options in self.default_config.items():
                if section is None or section == sec:
                    self._data[sec] = copy.deepcopy(options)

    def get_default(self, section: str, option: str) -> Any:
        """
        Get default value for a given ``section`` and ``option``.

        :param section: Section to search for option.
        :param option: Config option.
        :returns: Default value or :class:`NoDefault` if section / option do not exist.
        """

        with self._lock:
            secdict = self.default_config.get(section, {})
            return secdict.get(option, NoDefault)

    def get(self, section: str, option: str, default: Any = NoDefault) -> Any:
        """
        Get an option.

        :param section: Config section to search in.
        :param option: Config option to get.
        :param default: Default value to fall back to if not present.
        :returns: Config value.
        :raises KeyError: if the option does not exist and no default is given.
        """

        with self._lock:
            try:
                return copy.deepcopy(self._data[section][option])
            except KeyError:
                if default is NoDefault:
                    raise KeyError(f"No option '{option}' in section '{section}'")
                return default

    def set(self, section: str, option: str, value: Any) -> None:
        """
        Set an ``option`` on a given ``section``. Options which have no default are
        added without type checks.

        :param section: Config section to search in.
        :param option: Config option to set.
        :param value: Config value.
        :raises ValueError: if the type of ``value`` does not match the default.
        """

        with self._lock:

            default_value = self.get_default(section, option)

            if default_value is NoDefault:
                logger.debug("Adding config option [%s][%s]", section, option)
            elif default_value is not None and value is not None:
                value = self._coerce(section, option, default_value, value)

            self._data.setdefault(section, {})[option] = value

    def update(self, section: str, **values: Any) -> None:
        """
        Set several options of one section. Values of ``None`` are skipped so that
        unset command line flags do not override values from a config file.

        :param section: Config section.
        :param values: Options to set.
        """
        with self._lock:
            for option, value in values.items():
                if value is not None:
                    self.set(section, option, value)

    def snapshot(self) -> dict[str, Any]:
        """
        Returns a JSON serializable copy of the full configuration, including the
        schema version.
        """
        with self._lock:
            snap: dict[str, Any] = {self.VERSION_KEY: str(self._version)}
            snap.update(copy.deepcopy(self._data))
            return snap

    @staticmethod
    def _coerce(section: str, option: str, default_value: Any, value: Any) -> Any:

        if isinstance(default_value, float) and isinstance(value, int):
            if not isinstance(value, bool):
                value = float(value)

        if isinstance(default_value, (list, tuple)) and isinstance(
            value, (list, tuple)
        ):
            value = list(value)

        if type(default_value) is not type(value):
            raise ValueError(
                f"Inconsistent config type for [{section}][{option}]. "
                f"Expected {default_value.__class__.__name__} but "
                f"got {value.__class__.__name__}."
            )

        return value

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(path='{self._path}')>"
