import pytest

from perturbkit import datagen, tagger as tagger_mod

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gold_corpus():
    return datagen.generate_split(1200, seed=11, split="gold")


@pytest.fixture(scope="session")
def trained_tagger(gold_corpus):
    sentences = list(gold_corpus)
    return tagger_mod.train_tagger(sentences[200:], epochs=5, seed=11)


@pytest.fixture(scope="session")
def heldout_gold(gold_corpus):
    return list(gold_corpus)[:200]
