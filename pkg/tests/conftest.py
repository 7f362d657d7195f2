import json
import os

import pytest

from clarforge.builder import BuildOptions, build_dataset
from clarforge.corpus import load_corpus
from clarforge.docindex import load_doc_index

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def corpus_path() -> str:
    return fixture_path("corpus.jsonl")


@pytest.fixture(scope="session")
def docindex_path() -> str:
    return fixture_path("docindex.jsonl")


@pytest.fixture(scope="session")
def fixture_corpus(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture(scope="session")
def doc_index(docindex_path):
    return load_doc_index(docindex_path)


@pytest.fixture(scope="session")
def built_dataset(fixture_corpus, doc_index):
    """The fixture corpus built once with the default lexical configuration."""
    return build_dataset(fixture_corpus, doc_index, BuildOptions()).records


@pytest.fixture(scope="session")
def stats_golden():
    with open(fixture_path("stats_golden.json"), "r", encoding="utf-8") as f:
        return json.load(f)
