import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from starktunnel.precision import PrecisionContext
from starktunnel.model import ModelParams


RUN_FULL = os.environ.get("STARKTUNNEL_ACCEPT_FULL", "") not in ("", "0")


@pytest.fixture(scope="session")
def ctx50():
    return PrecisionContext(50)


@pytest.fixture(scope="session")
def ctx100():
    return PrecisionContext(100)


@pytest.fixture(scope="session")
def delta50_params(ctx50):
    return ModelParams(F="1/50", delta_limit=True, ctx=ctx50)


@pytest.fixture(scope="session")
def nanotip_params_small():
    """Nanotip model at modest precision for unit-level checks."""
    return ModelParams(F="1/100", L=100, V0="25/68", ctx=PrecisionContext(40))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: criterion-level end-to-end checks")
    config.addinivalue_line(
        "markers", "heavy: long-running full-precision variants")
