import pytest

from .common import TINY_DOCUMENT, write_scenario


@pytest.fixture
def scenario_file(tmp_path):
    return write_scenario(tmp_path / "tiny.toml", TINY_DOCUMENT)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
