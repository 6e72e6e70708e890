"""Shared fixtures: the benchmark scenario and its two full-horizon runs.

The full runs take a few minutes each, so they are session-scoped and only
materialize when a test actually asks for them.
"""

import dataclasses

import pytest

from platoonsim.presets import paper_s5
from platoonsim.simulator import run_scenario


@pytest.fixture(scope="session")
def s5_config():
    return paper_s5()


@pytest.fixture(scope="session")
def s5_noise_free(s5_config):
    config = dataclasses.replace(
        s5_config, noise=dataclasses.replace(s5_config.noise, enabled=False))
    record, report = run_scenario(config)
    return config, record, report


@pytest.fixture(scope="session")
def s5_noisy(s5_config):
    record, report = run_scenario(s5_config)
    return s5_config, record, report


def short_scenario(config, duration, *, noise=False, step=None, **changes):
    """Truncated copy of a scenario for cheap closed-loop tests."""
    noise_spec = dataclasses.replace(config.noise, enabled=noise)
    return dataclasses.replace(
        config, duration=duration, noise=noise_spec,
        step=config.step if step is None else step, **changes)
