from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_root() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def db():
    from mof_forge.structdb import StructDB
    return StructDB(FIXTURES)


@pytest.fixture(scope="session")
def rules():
    from mof_forge.guard import load_rules
    return load_rules(FIXTURES / "rules.toml")


@pytest.fixture(scope="session")
def replay():
    from mof_forge.toolkit import ReplayStore
    return ReplayStore.load(FIXTURES / "replay.tsv")


@pytest.fixture()
def service(tmp_path):
    from mof_forge.service import make_service
    return make_service(fixtures_root=FIXTURES, runs_root=tmp_path / "runs",
                        mode="replay")


def resolver_for(db):
    def resolve(raw: str):
        rec = db.try_resolve(raw)
        return rec.structure_id if rec else None
    return resolve


@pytest.fixture(scope="session")
def resolver(db):
    return resolver_for(db)
