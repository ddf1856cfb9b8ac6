"""Shared fixtures for the test suite."""
from __future__ import annotations

import pytest

from coopmarl.envs import make_env

from helpers import FAST_CONFIGS


@pytest.fixture(params=sorted(FAST_CONFIGS))
def any_env(request):
    env = make_env(FAST_CONFIGS[request.param])
    yield env
    env.close()
