from __future__ import annotations

import pathlib

import pytest

CORPUS_DIR = pathlib.Path(__file__).parent / "corpus"
FIXTURES_DIR = pathlib.Path(__file__).parents[1] / "src" / "sprw" / "fixtures"

CORPUS_FILES = sorted(CORPUS_DIR.glob("*.sprw"))
SCENARIOS = list(range(1, 8))


def corpus_text(name: str) -> str:
    return (CORPUS_DIR / f"{name}.sprw").read_text(encoding="utf-8")


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURES_DIR / name


@pytest.fixture
def corpus():
    return corpus_text
