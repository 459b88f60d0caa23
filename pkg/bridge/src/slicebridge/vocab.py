"""Canonical character vocabulary shared with wire-protocol clients.

The protocol's token ids are opaque integers; this reference server assumes
the canonical layout the slicekit client documents: ids 0..5 are
<pad>, <eos>, <code>, <criterion>, <line>, <slice>; 6 is TAB, 7 is newline,
and 8..102 are the printable ASCII characters 32..126 in order. Servers for
other tokenizers must provide their own alignment.
"""

from __future__ import annotations

MARKERS = ("<code>", "<criterion>", "<line>", "<slice>")
SPECIALS = ("<pad>", "<eos>") + MARKERS

TOKENS: tuple[str, ...] = SPECIALS + ("\t", "\n") + tuple(chr(c) for c in range(32, 127))
IDS = {t: i for i, t in enumerate(TOKENS)}

PAD_ID = IDS["<pad>"]
EOS_ID = IDS["<eos>"]
MARKER_IDS = tuple(IDS[m] for m in MARKERS)
VOCAB_SIZE = len(TOKENS)


def encode(text: str) -> list[int]:
    """Encode text, mapping marker substrings to their special ids."""
    out: list[int] = []
    i = 0
    while i < len(text):
        for marker in MARKERS:
            if text.startswith(marker, i):
                out.append(IDS[marker])
                i += len(marker)
                break
        else:
            tid = IDS.get(text[i])
            if tid is not None:
                out.append(tid)
            i += 1
    return out


def allowed_ids_for_text(input_text: str) -> set[int]:
    """The lexical allowed set: line tokens, trimmed variants, plumbing."""
    allowed: set[int] = set()
    for line in input_text.split("\n"):
        allowed.update(encode(line))
        allowed.update(encode(line.strip()))
    allowed.update(encode("0123456789: \n"))
    allowed.add(EOS_ID)
    allowed.update(MARKER_IDS)
    allowed.discard(PAD_ID)
    return allowed
