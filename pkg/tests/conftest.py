import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swfkit.binaural import synthetic_hrir_set
from swfkit.geometry import LAYOUT_ORDER, build_octahedron_hierarchy, load_layout, evaluation_directions

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def hierarchy2():
    return build_octahedron_hierarchy(2)


@pytest.fixture(scope="session")
def layouts():
    return {name: load_layout(name) for name in LAYOUT_ORDER}


@pytest.fixture(scope="session")
def small_hrirs(layouts):
    """Spherical-head set holding every layout and evaluation direction, plus a coarse grid."""
    extra = list(evaluation_directions())
    for lay in layouts.values():
        extra += list(lay.directions)
    return synthetic_hrir_set(extra, n_grid=200, n_taps=128)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL/SKIP line; printed immediately and again in the terminal summary."""

    def report(criterion, ok, detail):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"criterion {criterion:>3}: {status}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
