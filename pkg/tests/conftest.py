import json
from pathlib import Path

import pytest

from oovqd.hamio import load_fcidump

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / name


@pytest.fixture(scope="session")
def h2_ints():
    return load_fcidump(fixture_path("h2.fcidump"))


@pytest.fixture(scope="session")
def h2_meta():
    return json.loads(fixture_path("h2.meta.json").read_text())


@pytest.fixture(scope="session")
def lih_ints():
    return load_fcidump(fixture_path("lih.fcidump"))


@pytest.fixture(scope="session")
def lih_meta():
    return json.loads(fixture_path("lih.meta.json").read_text())


@pytest.fixture(scope="session")
def h4_ints():
    return load_fcidump(fixture_path("h4.fcidump"))


@pytest.fixture(scope="session")
def h4_meta():
    return json.loads(fixture_path("h4.meta.json").read_text())
