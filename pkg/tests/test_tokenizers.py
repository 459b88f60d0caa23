import random
import string

import pytest
from hypothesis import given, settings, strategies as st

from slicekit.corpusgen import MARKERS, format_sft_input
from slicekit.oracle import SliceQuery
from slicekit.tokenizers import CharTokenizer, WordTokenizer, split_pieces


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=120))
def test_char_round_trip(text):
    tok = CharTokenizer()
    assert tok.decode(tok.encode(text)) == text


def test_char_markers_are_single_ids():
    tok = CharTokenizer()
    ids = tok.encode("<code>\nx<slice>")
    assert ids[0] in tok.marker_ids
    assert ids[-1] in tok.marker_ids
    assert tok.decode(ids) == "<code>\nx<slice>"


def test_char_rejects_non_ascii():
    tok = CharTokenizer()
    with pytest.raises(ValueError):
        tok.encode("café")


def test_word_round_trip_on_vocab_texts():
    texts = ["int cnt = 0;\nfor(int i=cnt;i>=0;i--) {", "long Codepoint = 97+y};"]
    tok = WordTokenizer(texts)
    for t in texts:
        assert tok.decode(tok.encode(t)) == t


def test_word_identifiers_whole_numbers_digitwise():
    tok = WordTokenizer(["keta = 97"])
    pieces = split_pieces("keta = 97")
    assert "keta" in pieces and "9" in pieces and "7" in pieces
    assert tok.decode(tok.encode("keta = 97")) == "keta = 97"
    # any line number is constructible from base digits
    assert tok.decode(tok.encode("1234567890: ")) == "1234567890: "


def test_word_oov_raises():
    tok = WordTokenizer(["alpha beta"])
    with pytest.raises(ValueError):
        tok.encode("gamma")


def test_sft_input_encodes_with_both_tokenizers():
    src = "int a = 0;\nint b = a + 1;\n"
    q = SliceQuery.from_source(src, "java", "b", 2)
    sft = format_sft_input(q.unit, "b", 2)
    for tok in (CharTokenizer(), WordTokenizer([src])):
        ids = tok.encode(sft)
        assert tok.decode(ids) == sft
        assert sum(1 for i in ids if i in tok.marker_ids) == len(MARKERS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_word_round_trip_random_code_like(seed):
    rng = random.Random(seed)
    words = ["".join(rng.choices(string.ascii_letters, k=rng.randint(1, 6))) for _ in range(8)]
    text = "\n".join(
        f"{rng.choice(words)} = {rng.choice(words)} + {rng.randrange(100)};"
        for _ in range(4)
    )
    tok = WordTokenizer([text])
    assert tok.decode(tok.encode(text)) == text
