import random
from pathlib import Path

import pytest
from hypothesis import settings

from jetsym.coords import JetContext
from jetsym.parser import parse
from jetsym.specfile import load

SPECS = Path(__file__).resolve().parent.parent / "specs"

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile("default")


def spec_path(name: str) -> Path:
    return SPECS / f"{name}.spec"


@pytest.fixture(scope="session")
def ctx1():
    return JetContext(1)


@pytest.fixture(scope="session")
def ctx2():
    return JetContext(2)


@pytest.fixture
def P(ctx2):
    return lambda text: parse(text, ctx2)


@pytest.fixture
def rng():
    return random.Random(0x6A657473)


@pytest.fixture(scope="session")
def wave():
    return load(spec_path("nonlinear_wave"))


@pytest.fixture(scope="session")
def academic():
    return load(spec_path("academic"))


@pytest.fixture(scope="session")
def linear_wave():
    return load(spec_path("linear_wave"))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
