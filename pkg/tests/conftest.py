import pytest

from rwprofile.synthgen import default_corpus_specs, generate


@pytest.fixture(scope="session")
def default_corpus():
    """The standard 100-trace synthetic corpus (50 ransomware, 50 benign)."""
    return [generate(spec) for spec in default_corpus_specs()]


@pytest.fixture(scope="session")
def corpus_kinds():
    return {spec.resolved_id: spec.kind for spec in default_corpus_specs()}
