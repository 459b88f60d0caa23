"""Constrained beam search: lexical token masking + TSED boundary pruning.

The search expands K continuations per live beam each step, masks tokens
absent from the input (logit of -inf before the softmax), checks structural
coherence whenever a statement completes, and finalizes beams on EOS. Beams
whose boundary TSED strictly drops are discarded; if everything dies the
highest-scoring discarded candidate can be returned flagged ``degraded``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpusgen import format_sft_input, parse_numbered_lines, strip_line_numbers
from .oracle import Slice, SliceQuery
from .tokenizers import Tokenizer
from .tsedmod import monotonic_check, tsed


class NoValidSliceError(RuntimeError):
    """Every beam was pruned and fallback output is disabled."""


@dataclass(frozen=True)
class TokenMask:
    allowed: frozenset[int]


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 3
    max_len: int = 512
    tsed_prune: bool = True
    lexical_mask: bool = True
    fallback_on_empty: bool = True
    length_penalty: float = 0.0
    label_mode: str = "symbol"

    def __post_init__(self) -> None:
        if self.beam_size < 1 or self.max_len < 1:
            raise ValueError("beam_size and max_len must be >= 1")


@dataclass
class BeamState:
    prefix: tuple[int, ...]
    score: float
    t_stmt: float
    finished: bool = False
    text: str = ""
    boundaries: tuple[float, ...] = ()


@dataclass
class DecodeOutcome:
    """Winning beam plus the audit trail tests and demos need."""

    slice: Slice
    token_ids: tuple[int, ...]
    text: str
    score: float
    degraded: bool
    boundary_scores: tuple[float, ...]
    pruned: int
    finished_count: int


def allowed_tokens(input_text: str, tokenizer: Tokenizer) -> TokenMask:
    """Token ids constructible from the input, plus structural plumbing.

    Each input line and its whitespace-trimmed variant contribute their
    token ids; digits, ':', space and newline cover line-number prefixes and
    separators; EOS and the control markers are always allowed.
    """
    allowed: set[int] = set()
    for line in input_text.split("\n"):
        for variant in (line, line.strip()):
            try:
                allowed.update(tokenizer.encode(variant))
            except ValueError:
                continue
    for extra in ("0", "1", "2", "3", "4", "5", "6", "7", "8", "9", ":", " ", "\n"):
        try:
            allowed.update(tokenizer.encode(extra))
        except ValueError:
            continue
    allowed.add(tokenizer.eos_id)
    allowed.update(tokenizer.marker_ids)
    allowed.discard(tokenizer.pad_id)
    return TokenMask(frozenset(allowed))


def apply_mask(logits: np.ndarray, mask: TokenMask) -> np.ndarray:
    """Set excluded positions to -inf; allowed positions pass through."""
    out = np.full_like(logits, -np.inf)
    idx = np.fromiter(mask.allowed, dtype=np.int64)
    out[idx] = logits[idx]
    return out


def log_softmax(logits: np.ndarray) -> np.ndarray:
    finite = np.isfinite(logits)
    if not finite.any():
        return logits
    m = logits[finite].max()
    lse = m + math.log(np.exp(logits[finite] - m).sum())
    out = logits - lse
    out[~finite] = -np.inf
    return out


_JAVA_TERMINATORS = frozenset(";{}")


def is_statement_complete(prefix_text: str, lang: str) -> bool:
    """Has the generation just finished a statement?

    Java: the current line's last non-whitespace character is ';', '{' or
    '}' outside parentheses/brackets (depth measured within the line; a
    negative depth counts as closed, accommodating multi-line spans).
    Python: the prefix ends with a newline and all brackets are balanced.
    """
    if not prefix_text:
        return False
    if lang == "python":
        if not prefix_text.endswith("\n"):
            return False
        return _bracket_balance(prefix_text) <= 0
    line = prefix_text.rsplit("\n", 1)[-1]
    depth = 0
    last_char = ""
    last_depth = 0
    in_string: str | None = None
    i = 0
    while i < len(line):
        c = line[i]
        if in_string:
            if c == "\\":
                i += 2
                continue
            if c == in_string:
                in_string = None
            i += 1
            continue
        if c in "\"'":
            in_string = c
        elif c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if not c.isspace():
            last_char = c
            last_depth = depth
        i += 1
    return last_char in _JAVA_TERMINATORS and last_depth <= 0


def _bracket_balance(text: str) -> int:
    depth = 0
    in_string: str | None = None
    i = 0
    while i < len(text):
        c = text[i]
        if in_string:
            if c == "\\":
                i += 2
                continue
            if c == in_string:
                in_string = None
            i += 1
            continue
        if c in "\"'":
            in_string = c
        elif c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        i += 1
    return depth


def slice_from_generation(text: str, degraded: bool = False) -> Slice:
    entries = parse_numbered_lines(text)
    return Slice(
        line_numbers=tuple(n for n, _ in entries),
        lines=tuple(t for _, t in entries),
        degraded=degraded,
    )


def constrained_beam_search(
    query: SliceQuery,
    scorer,
    tokenizer: Tokenizer,
    cfg: DecodeConfig = DecodeConfig(),
) -> Slice:
    """Decode a slice for ``query`` with lexical and syntactic constraints."""
    return run_beam_search(query, scorer, tokenizer, cfg).slice


def run_beam_search(
    query: SliceQuery,
    scorer,
    tokenizer: Tokenizer,
    cfg: DecodeConfig = DecodeConfig(),
) -> DecodeOutcome:
    """Like :func:`constrained_beam_search` but returns the full audit trail."""
    unit = query.unit
    sft_input = format_sft_input(unit, query.criterion_var, query.criterion_line)
    input_ids = tokenizer.encode(sft_input)
    mask = allowed_tokens(unit.text, tokenizer)
    if cfg.lexical_mask:
        allowed_ids = sorted(mask.allowed)
    else:
        allowed_ids = [i for i in range(tokenizer.vocab_size) if i != tokenizer.pad_id]
    session = scorer.open_session(input_ids, allowed_ids, input_text=unit.text)
    try:
        return _search(query, scorer, session, tokenizer, mask, cfg)
    finally:
        scorer.close(session)


def _search(query, scorer, session, tokenizer, mask: TokenMask, cfg: DecodeConfig) -> DecodeOutcome:
    unit = query.unit
    vocab = tokenizer.vocab_size
    k = cfg.beam_size
    beams = [BeamState(prefix=(), score=0.0, t_stmt=0.0)]
    best_finished: BeamState | None = None
    finished_events = 0
    best_pruned: BeamState | None = None
    pruned_count = 0

    def final_key(b: BeamState):
        score = b.score
        if cfg.length_penalty > 0 and b.prefix:
            score = score / (len(b.prefix) ** cfg.length_penalty)
        return (-score, b.prefix)

    for _ in range(cfg.max_len):
        if not beams:
            break
        # Sound only without length normalization: raw live scores can never
        # rise, but normalized ones can.
        if best_finished is not None and cfg.length_penalty == 0:
            best_done = -final_key(best_finished)[0]
            if all(b.score < best_done for b in beams):
                break
        rows = scorer.step(session, [list(b.prefix) for b in beams])
        candidates: list[tuple[float, int, tuple[int, ...], BeamState]] = []
        for beam, row in zip(beams, rows):
            logits = np.full(vocab, -np.inf)
            for tid, lp in row.items():
                logits[int(tid)] = lp
            if cfg.lexical_mask:
                logits = apply_mask(logits, mask)
            logp = log_softmax(logits)
            finite_ids = np.nonzero(np.isfinite(logp))[0]
            top = sorted(finite_ids, key=lambda i: (-logp[i], i))[:k]
            for z in top:
                z = int(z)
                new_prefix = beam.prefix + (z,)
                new_score = beam.score + float(logp[z])
                tok_text = tokenizer.token_text(z)
                new_text = beam.text + tok_text
                t_stmt = beam.t_stmt
                boundaries = beam.boundaries
                if (
                    cfg.tsed_prune
                    and tok_text.strip()
                    and is_statement_complete(new_text, unit.lang)
                ):
                    stripped = strip_line_numbers(new_text)
                    t_cur = tsed(unit.text, stripped, unit.lang, cfg.label_mode).value
                    if monotonic_check(t_stmt, t_cur) == "prune":
                        pruned_count += 1
                        cand = BeamState(
                            new_prefix, new_score, t_cur, False, new_text, boundaries + (t_cur,)
                        )
                        if best_pruned is None or new_score > best_pruned.score:
                            best_pruned = cand
                        continue
                    t_stmt = t_cur
                    boundaries = boundaries + (t_cur,)
                if z == tokenizer.eos_id:
                    done = BeamState(new_prefix, new_score, t_stmt, True, beam.text, boundaries)
                    finished_events += 1
                    if best_finished is None or final_key(done) < final_key(best_finished):
                        best_finished = done
                    continue
                candidates.append(
                    (
                        new_score,
                        z,
                        new_prefix,
                        BeamState(new_prefix, new_score, t_stmt, False, new_text, boundaries),
                    )
                )
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        beams = [c[3] for c in candidates[:k]]

    pool = [best_finished] if best_finished is not None else list(beams)
    degraded = False
    if pool:
        best = min(pool, key=final_key)
    elif best_pruned is not None and cfg.fallback_on_empty:
        best = best_pruned
        degraded = True
    else:
        raise NoValidSliceError("all beams pruned and no finished candidate remains")
    return DecodeOutcome(
        slice=slice_from_generation(best.text, degraded=degraded),
        token_ids=best.prefix,
        text=best.text,
        score=best.score,
        degraded=degraded,
        boundary_scores=best.boundaries,
        pruned=pruned_count,
        finished_count=finished_events,
    )
