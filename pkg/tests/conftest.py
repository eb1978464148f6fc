import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from ccpp import fixtures
from ccpp.config import PlannerConfig

settings.register_profile("ci", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("ci")


def outdoor_config(n_agents=1, **kw):
    base = dict(alpha=math.radians(60), r_max=3.0, omega=0.6, d_min=0.2, d_s=0.5,
                n_agents=n_agents, v_d=0.5, t_s=1.0, sample_pitch=0.1)
    base.update(kw)
    return PlannerConfig(**base)


def cylinder_config(n_agents=2, **kw):
    return outdoor_config(n_agents, omega=0.5, d_s=0.4, **kw)


def indoor_config(n_agents=1, **kw):
    base = dict(alpha=math.radians(60), r_max=1.5, omega=0.2, d_min=0.1, d_s=0.3,
                n_agents=n_agents, v_d=0.2, t_s=1.0, sample_pitch=0.05)
    base.update(kw)
    return PlannerConfig(**base)


def ring_points(n, radius=1.0, center=(0.0, 0.0), z=0.0, phase=0.0):
    a = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a), np.full(n, z)])


@pytest.fixture(scope="session")
def small_cylinder():
    return fixtures.generate(fixtures.FixtureSpec("cylinder", {"radius": 1.0, "height": 5.0}))


@pytest.fixture(scope="session")
def turbine_model():
    return fixtures.generate(fixtures.preset("turbine"))


@pytest.fixture(scope="session")
def boxes_model():
    return fixtures.generate(fixtures.preset("boxes"))


@pytest.fixture(scope="session")
def twin_pillars_model():
    return fixtures.generate(fixtures.preset("twin-pillars"))


@pytest.fixture(scope="session")
def three_pillars_model():
    return fixtures.generate(fixtures.preset("three-pillars"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
