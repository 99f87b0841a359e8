import numpy as np
import pytest

from tvfreq.generators import GeneratorSpec, HarmonicFrequencySpec
from tvfreq.harness import ScenarioConfig, preset_configs, simulate


@pytest.fixture(scope="session")
def fig2():
    return preset_configs("fig2")[0]


@pytest.fixture(scope="session")
def fig3():
    return preset_configs("fig3")[0]


@pytest.fixture(scope="session")
def fig2_run(fig2):
    """Every-step trajectory of the fig2 preset."""
    return simulate(fig2, record_every=1)


@pytest.fixture(scope="session")
def fig2_exact_run(fig2):
    return simulate(fig2, record_every=1, record_drem=True, exact_data=True)


@pytest.fixture
def harmonic_alpha():
    # alpha(t) = cos t + 0.3 sin t
    return GeneratorSpec([1.0, 0.0], [[0.0, 1.0], [-1.0, 0.0]], [1.0, 0.3])


@pytest.fixture
def omega_spec():
    return HarmonicFrequencySpec(4.0, 2.0, 1.0)


def grid(t_end, dt=1e-4):
    n = int(round(t_end / dt))
    t = np.arange(n + 1) * dt
    return t, t[:-1] + 0.5 * dt


def short_config(**kw):
    base = dict(t_end=12.0, decimation=0.01)
    base.update(kw)
    return ScenarioConfig(**base)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
