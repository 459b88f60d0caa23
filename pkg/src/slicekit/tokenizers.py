"""Tokenizer interface plus the two concrete tokenizers used at desk scale.

``CharTokenizer`` is lossless on ASCII corpora and keeps tests exact;
``WordTokenizer`` tokenizes at identifier granularity, which is what makes
lexical masking reject whole hallucinated identifiers rather than characters.
Control markers always map to single special ids in both.
"""

from __future__ import annotations

import re
from typing import Protocol, Sequence

from .corpusgen import MARKERS

PAD_TOKEN = "<pad>"
EOS_TOKEN = "<eos>"
SPECIAL_TOKENS = (PAD_TOKEN, EOS_TOKEN) + MARKERS


class Tokenizer(Protocol):
    vocab_size: int
    pad_id: int
    eos_id: int
    marker_ids: tuple[int, ...]

    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: Sequence[int]) -> str: ...

    def token_text(self, token_id: int) -> str: ...


class _SpecialScanner:
    """Longest-match scanning of special marker strings inside text."""

    def __init__(self, table: dict[str, int]):
        self._table = sorted(table.items(), key=lambda kv: -len(kv[0]))

    def match(self, text: str, pos: int) -> tuple[int, int] | None:
        for tok, tid in self._table:
            if text.startswith(tok, pos):
                return tid, len(tok)
        return None


class CharTokenizer:
    """Character-level tokenizer over printable ASCII plus specials."""

    def __init__(self) -> None:
        self._tokens: list[str] = list(SPECIAL_TOKENS) + ["\t", "\n"] + [
            chr(c) for c in range(32, 127)
        ]
        self._ids = {t: i for i, t in enumerate(self._tokens)}
        self.vocab_size = len(self._tokens)
        self.pad_id = self._ids[PAD_TOKEN]
        self.eos_id = self._ids[EOS_TOKEN]
        self.marker_ids = tuple(self._ids[m] for m in MARKERS)
        self._scan = _SpecialScanner({m: self._ids[m] for m in MARKERS})

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        i = 0
        while i < len(text):
            hit = self._scan.match(text, i)
            if hit is not None:
                out.append(hit[0])
                i += hit[1]
                continue
            try:
                out.append(self._ids[text[i]])
            except KeyError:
                raise ValueError(f"untokenizable character {text[i]!r}") from None
            i += 1
        return out

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.token_text(i) for i in ids)

    def token_text(self, token_id: int) -> str:
        tok = self._tokens[token_id]
        if tok in (PAD_TOKEN, EOS_TOKEN):
            return ""
        return tok


# Numbers split digit by digit so any line-number prefix stays constructible.
_PIECE_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*|\d|[ ]+|\t+|\n|.")

_BASE_PIECES = tuple("0123456789") + (" ", "\n", "\t", ":")


def split_pieces(text: str) -> list[str]:
    return _PIECE_RE.findall(text)


class WordTokenizer:
    """Word-level tokenizer with a vocabulary built from given texts."""

    def __init__(self, texts: Sequence[str]) -> None:
        pieces: set[str] = set(_BASE_PIECES)
        for text in texts:
            pieces.update(split_pieces(text))
        self._tokens = list(SPECIAL_TOKENS) + sorted(pieces)
        self._ids = {t: i for i, t in enumerate(self._tokens)}
        self.vocab_size = len(self._tokens)
        self.pad_id = self._ids[PAD_TOKEN]
        self.eos_id = self._ids[EOS_TOKEN]
        self.marker_ids = tuple(self._ids[m] for m in MARKERS)
        self._scan = _SpecialScanner({m: self._ids[m] for m in MARKERS})

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        i = 0
        while i < len(text):
            hit = self._scan.match(text, i)
            if hit is not None:
                out.append(hit[0])
                i += hit[1]
                continue
            m = _PIECE_RE.match(text, i)
            piece = m.group(0)
            try:
                out.append(self._ids[piece])
            except KeyError:
                raise ValueError(f"piece {piece!r} is not in the vocabulary") from None
            i += len(piece)
        return out

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.token_text(i) for i in ids)

    def token_text(self, token_id: int) -> str:
        tok = self._tokens[token_id]
        if tok in (PAD_TOKEN, EOS_TOKEN):
            return ""
        return tok
