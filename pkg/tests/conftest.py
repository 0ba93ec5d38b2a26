import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from staticprop.block_system import assemble_blocks, spectral_split
from staticprop.model import preset

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

PRESET_NAMES = ("M0", "M1", "M2")

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def systems():
    return {name: assemble_blocks(preset(name)) for name in PRESET_NAMES}


@pytest.fixture(scope="session")
def splits(systems):
    return {name: spectral_split(bs) for name, bs in systems.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion itself stays in the test."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" | {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE, key=lambda item: item[0]):
        terminalreporter.write_line(line)
