import glob
import os

import pytest

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def corpus_paths() -> list[str]:
    return sorted(glob.glob(os.path.join(SCENARIO_DIR, "*.itx")))


@pytest.fixture(scope="session")
def scenario_dir() -> str:
    return os.path.abspath(SCENARIO_DIR)


@pytest.fixture(scope="session")
def laser_scenario():
    from itx.lang import parse

    with open(os.path.join(SCENARIO_DIR, "laser_cutter.itx"), encoding="utf-8") as fh:
        result = parse(fh.read())
    assert result.ok, [d.message for d in result.diagnostics]
    return result.scenario


@pytest.fixture(scope="session")
def minimal_scenario():
    from itx.lang import parse

    with open(os.path.join(SCENARIO_DIR, "minimal.itx"), encoding="utf-8") as fh:
        result = parse(fh.read())
    assert result.ok
    return result.scenario
