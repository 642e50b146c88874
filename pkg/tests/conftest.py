import functools
from pathlib import Path

import pytest

from liouville_lab.config import build_system, load_config, preset_names

FIXTURES = Path(__file__).parent / "fixtures"
PRESETS = sorted(preset_names())

# filled by test_acceptance.py, printed after the run
ACCEPTANCE = {}


@functools.lru_cache(maxsize=None)
def preset_system(name):
    return build_system(load_config(name))


@functools.lru_cache(maxsize=None)
def fixture_system(name):
    return build_system(load_config(FIXTURES / f"{name}.json"))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
