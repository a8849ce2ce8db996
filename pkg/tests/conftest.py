from __future__ import annotations

import shutil
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SKILLS_ROOT = REPO_ROOT / "skills"
FIXTURES_ROOT = REPO_ROOT / "fixtures"
SAMPLE_TASKS = REPO_ROOT / "sample_tasks"


@pytest.fixture(scope="session")
def skills_root() -> Path:
    return SKILLS_ROOT


@pytest.fixture(scope="session")
def fixtures_root() -> Path:
    return FIXTURES_ROOT


@pytest.fixture
def skills_copy(tmp_path) -> Path:
    """A throwaway copy of the skill store for mutation tests."""
    dest = tmp_path / "skills"
    shutil.copytree(SKILLS_ROOT, dest)
    return dest


@pytest.fixture(scope="session")
def skills_session_copy(tmp_path_factory) -> Path:
    """Session-wide skill store copy for CLI runs that bump usage counters;
    keeps the repo's versioned store pristine under test."""
    dest = tmp_path_factory.mktemp("skills-session") / "skills"
    shutil.copytree(SKILLS_ROOT, dest)
    return dest
