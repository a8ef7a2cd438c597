import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gqc.syntax import Token, TokenKind, tokenize


def kinds(tokens):
    return [t.kind for t in tokens]


def texts(tokens):
    return [t.text for t in tokens]


def test_concept_marker():
    tokens = tokenize("<C> film </C>")
    assert kinds(tokens) == [TokenKind.MARKER_OPEN, TokenKind.WORD, TokenKind.MARKER_CLOSE]
    assert tokens[0].tag == "C" and tokens[2].tag == "C"
    assert tokens[1].text == "film"


def test_empty_input():
    assert tokenize("") == []


def test_multiword_operator_fusion():
    tokens = tokenize("is not x")
    assert texts(tokens) == ["is not", "x"]
    assert kinds(tokens) == [TokenKind.KEYWORD, TokenKind.WORD]


@pytest.mark.parametrize("op", ["is not", "larger than", "smaller than", "at least", "at most"])
def test_all_fused_operators(op):
    tokens = tokenize(op)
    assert len(tokens) == 1
    assert tokens[0].kind is TokenKind.KEYWORD
    assert tokens[0].text == op


def test_keywords_inside_payload_stay_words():
    # scanning for the close marker takes precedence over keyword lookup
    tokens = tokenize("<E> and </E>")
    assert kinds(tokens) == [TokenKind.MARKER_OPEN, TokenKind.WORD, TokenKind.MARKER_CLOSE]
    tokens = tokenize("<E> is not </E>")
    assert texts(tokens) == ["<E>", "is", "not", "</E>"]
    assert kinds(tokens)[1:3] == [TokenKind.WORD, TokenKind.WORD]


def test_es_is_not_a_payload_marker():
    tokens = tokenize("<ES> and </ES>")
    assert kinds(tokens)[1] is TokenKind.KEYWORD


def test_parens_split_when_glued():
    tokens = tokenize("(<ES> ones")
    assert texts(tokens) == ["(", "<ES>", "ones"]
    tokens = tokenize("</ES>)")
    assert texts(tokens) == ["</ES>", ")"]


def test_spans_cover_original_offsets():
    text = "  what   is  <E> x y </E> "
    tokens = tokenize(text)
    for t in tokens:
        assert 0 <= t.start < t.end <= len(text)
        assert text[t.start : t.end].split() == t.text.split()
    starts = [t.start for t in tokens]
    assert starts == sorted(starts)
    for a, b in zip(tokens, tokens[1:]):
        assert a.end <= b.start


def test_fused_span_covers_both_words():
    tokens = tokenize("at  least")
    assert tokens[0].start == 0 and tokens[0].end == len("at  least")


def test_marker_tokens_have_tags_and_words_do_not():
    for t in tokenize("what is <E> x </E>"):
        if t.kind in (TokenKind.MARKER_OPEN, TokenKind.MARKER_CLOSE):
            assert t.tag in ("ES", "E", "C", "A", "R", "Q", "V")
        else:
            assert t.tag is None


def test_unknown_characters_become_words():
    tokens = tokenize("what is éé %%%")
    assert tokens[-1].kind is TokenKind.WORD


@given(st.text(alphabet=string.printable, max_size=200))
def test_tokenize_is_total_and_deterministic(text):
    first = tokenize(text)
    second = tokenize(text)
    assert first == second
    for t in first:
        assert isinstance(t, Token)
        assert t.start < t.end


@given(st.text(alphabet=st.characters(), max_size=120))
def test_tokenize_total_on_arbitrary_unicode(text):
    tokenize(text)
