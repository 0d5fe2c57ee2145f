"""Shared model fixtures: small, exactly enumerable models."""

import pytest

from infoband import IidModel, TableModel, train_ngram


def uniform_table4() -> TableModel:
    return TableModel.from_strings({"aa": 0.25, "ab": 0.25, "ba": 0.25, "bb": 0.25})


def skewed_table() -> TableModel:
    return TableModel.from_strings({"a": 0.5, "ab": 0.3, "bb": 0.15, "": 0.05})


def coin_model(p: float = 0.6, length: int = 3) -> IidModel:
    return IidModel.coin(p, length)


def bigram_model() -> "train_ngram":
    return train_ngram(["abab", "abba", "baab", "bbab", "aab"], 2, 0.1, 6)


def trigram_model() -> "train_ngram":
    return train_ngram(["abab", "abba", "baab", "aabb", "bbaa", "ab"], 3, 0.2, 7)


def degenerate_model():
    """Assigns probability 1 to the single sequence 'a'."""
    return train_ngram(["a"], 1, 0.0, 4)


def enumerable_model_suite():
    """Named models used by oracle-agreement and mode-bound checks."""
    return [
        ("uniform_table", uniform_table4()),
        ("skewed_table", skewed_table()),
        ("coin_0.6_L3", coin_model(0.6, 3)),
        ("coin_0.3_L5", coin_model(0.3, 5)),
        ("bigram", bigram_model()),
        ("trigram", trigram_model()),
    ]


@pytest.fixture
def mini_corpus_path(tmp_path):
    lines = ["abcab", "abcba", "bacab", "bacba", "abcab", "cabab", "cabba",
             "abba", "baab", "abab"]
    path = tmp_path / "corpus.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)
