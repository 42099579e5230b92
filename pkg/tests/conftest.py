from pathlib import Path

import pytest

from bsgate.parser import parse_complex

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def load(name: str):
    return parse_complex(fixture_text(name))


@pytest.fixture
def fix(request):
    return load(request.param)
