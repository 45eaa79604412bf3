from .main import CONF_VERSION, DEFAULTS_CONFIG, RunConfig
from .user import JsonConfig, NoDefault


__all__ = [
    "CONF_VERSION",
    "DEFAULTS_CONFIG",
    "JsonConfig",
    "NoDefault",
    "RunConfig",
]
