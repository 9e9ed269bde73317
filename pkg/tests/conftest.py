import shutil
from pathlib import Path

import pytest

from rulesynth.fol import load_ontology
from rulesynth.store import load_store

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

COLLIDE_RULE = "forall X . not collide(X) <- sd_front(X) and sd_rear(X) and not lane_change(X)"
DENSE_RULE = "forall X . sd_front(X) and sd_rear(X) <- not dense(X)"


@pytest.fixture
def work_dir(tmp_path):
    """Fresh working copy of the shipped scenario fixtures."""
    for path in SCENARIOS.glob("*.json"):
        shutil.copy(path, tmp_path / path.name)
    return tmp_path


@pytest.fixture(scope="session")
def onto():
    return load_ontology(SCENARIOS / "traffic.onto.json")


@pytest.fixture
def seed_store(onto):
    return load_store(SCENARIOS / "merge.kb.json", onto)
