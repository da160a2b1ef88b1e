import json
import os

import pytest

from btwist.profile import RadiusProfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


@pytest.fixture(scope="session")
def P0():
    return RadiusProfile(1.0)


@pytest.fixture(scope="session")
def P1():
    return RadiusProfile(1.0, ((0.01, 0.0),))


@pytest.fixture(scope="session")
def P2():
    return RadiusProfile(1.0, ((0.0005, 0.0),))


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(HERE, "frozen.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def profiles_dir():
    return os.path.join(ROOT, "profiles")


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, ok, detail in sorted(RESULTS, key=lambda r: r[0]):
        line = f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {desc}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
