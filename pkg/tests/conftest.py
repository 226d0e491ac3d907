import shutil
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))  # makes `oracles` importable

FIXTURE_SRC = TESTS / "data" / "fixture"


@pytest.fixture()
def fixture_dir(tmp_path) -> Path:
    """A throwaway copy of the shipped fixture; output lands inside it."""
    dst = tmp_path / "fixture"
    shutil.copytree(FIXTURE_SRC, dst)
    return dst


@pytest.fixture(scope="session")
def fixture_run():
    """The fixture pipeline, built and evaluated once per session (read-only)."""
    from fixture_pipeline import build_fixture_run

    return build_fixture_run()
