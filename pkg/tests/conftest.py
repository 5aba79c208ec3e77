from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus_sources import CONCEALING_HANDLER, PROPAGATING_GUARD, build_fixture_corpus

from failaudit.model import SourceFile
from failaudit.parsing import parse_source


@pytest.fixture
def concealing_file() -> SourceFile:
    return SourceFile.from_content("app/process.py", CONCEALING_HANDLER)


@pytest.fixture
def propagating_file() -> SourceFile:
    return SourceFile.from_content("app/pipeline.py", PROPAGATING_GUARD)


@pytest.fixture
def concealing_model(concealing_file):
    return parse_source(concealing_file)


@pytest.fixture
def propagating_model(propagating_file):
    return parse_source(propagating_file)


@pytest.fixture
def fixture_corpus(tmp_path) -> Path:
    root = tmp_path / "corpus"
    root.mkdir()
    return build_fixture_corpus(root)
