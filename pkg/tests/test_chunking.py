from hypothesis import given, settings
from hypothesis import strategies as st

from breachdrill.copilot import chunk
from breachdrill.copilot.chunking import proxy_tokens

import pytest


def test_empty_input_gives_no_chunks():
    assert chunk("") == []
    assert chunk("   \n\t ") == []


def test_exact_budget_is_one_chunk():
    text = " ".join(f"w{i}" for i in range(300))
    out = chunk(text, max_tokens=300)
    assert len(out) == 1
    assert proxy_tokens(out[0]) == 300


def test_900_word_document_splits_into_three_chunks():
    # word-count oracle: 90 sentences of 10 words, 900 words total
    sentences = [
        " ".join(f"s{i}w{j}" for j in range(9)) + " end."
        for i in range(90)
    ]
    text = " ".join(sentences)
    assert proxy_tokens(text) == 900
    out = chunk(text, max_tokens=300)
    assert len(out) == 3
    for piece in out:
        assert proxy_tokens(piece) <= 300


def test_prefers_sentence_boundary_within_lookback():
    # 25 words ending in a period, then 10 more words; budget 30 means the
    # split backs up to the period instead of cutting at word 30
    text = " ".join(f"a{i}" for i in range(24)) + " stop. " + " ".join(
        f"b{i}" for i in range(10)
    )
    out = chunk(text, max_tokens=30)
    assert out[0].endswith("stop.")
    assert proxy_tokens(out[0]) == 25


def test_single_overlong_run_of_words_still_splits():
    text = " ".join(f"x{i}" for i in range(70))  # no sentence ends anywhere
    out = chunk(text, max_tokens=30)
    assert [proxy_tokens(p) for p in out] == [30, 30, 10]


def test_max_tokens_validation():
    with pytest.raises(ValueError):
        chunk("hello", max_tokens=0)


@settings(max_examples=100, deadline=None)
@given(
    words=st.lists(st.text(alphabet="abc.", min_size=1, max_size=6), max_size=200),
    budget=st.integers(min_value=1, max_value=50),
)
def test_reconstruction_and_budget_properties(words, budget):
    text = " ".join(words)
    out = chunk(text, max_tokens=budget)
    # concatenation reconstructs the input modulo whitespace normalization
    assert " ".join(out).split() == text.split()
    for piece in out:
        assert 1 <= proxy_tokens(piece) <= budget
