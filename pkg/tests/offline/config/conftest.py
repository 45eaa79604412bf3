import pytest
from packaging.version import Version

from bundlegt.config import JsonConfig


DEFAULTS_CONFIG = {
    "graph": {
        "n": None,
        "q": None,
        "distinct_bundles_per_test": False,
    },
    "de": {
        "eps_tail": 1e-7,
        "max_de_iters": 2000,
    },
    "sim": {
        "gamma_pct": [],
        "trials": 100,
    },
}

CONF_VERSION = Version("1.0")


@pytest.fixture
def config_path(tmp_path):
    return str(tmp_path / "run.json")


def make_config(path):
    return JsonConfig(path, defaults=DEFAULTS_CONFIG, version=CONF_VERSION)
