from pathlib import Path
from typing import Callable, Optional

import pytest

from agora.kernel.kernel_types import Instance
from agora.kernel.loader import create_instance
from agora.lang.govspec import parse_govspec
from agora.runtime.repository import ModuleRepository

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "agora" / "scenarios"

LoadFn = Callable[..., Instance]


@pytest.fixture(scope="session")
def repository() -> ModuleRepository:
    return ModuleRepository()


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def load(repository: ModuleRepository) -> LoadFn:
    """Parse a govspec text and build its Instance."""

    def _load(text: str, seed: Optional[int] = None) -> Instance:
        result = parse_govspec(text, repository)
        assert result.ok, [d.render() for d in result.diagnostics]
        return create_instance(result.doc, repository, seed=seed)

    return _load


COMMUNITY = """\
instance town seed 5
user ann
user bea
user cal
user dan
resource post1 post
members user:ann user:bea user:cal user:dan resource:post1
grant members:/ module.invoke:*
grant members:/ monitor.query
org council
  members user:ann user:bea
"""


@pytest.fixture
def town(load: LoadFn) -> Instance:
    return load(COMMUNITY)
