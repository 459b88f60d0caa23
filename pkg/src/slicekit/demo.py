"""End-to-end demo of the motivating examples, with and without constraints."""

from __future__ import annotations

from .corpusgen import format_sft
from .decode import DecodeConfig, allowed_tokens, run_beam_search
from .fixtures import DEP_ACCURACY, HALLUCINATED_IDENT, OVERGENERATION, OVERGENERATION_CORRUPT_LINE
from .oracle import oracle_slice
from .scorers import WeightedTargetScorer
from .tokenizers import CharTokenizer, WordTokenizer


def _gold_target(fixture) -> tuple:
    query = fixture.query()
    gold = oracle_slice(query)
    return query, gold, format_sft(query, gold).target_text


def run_demo(verbose: bool = True) -> int:
    say = print if verbose else (lambda *a, **k: None)
    failures = 0

    # (1) Dependency accuracy: the reference slicer keeps only relevant lines.
    query, gold, _ = _gold_target(DEP_ACCURACY)
    ok = gold.line_numbers == DEP_ACCURACY.expected_lines
    failures += not ok
    say(f"[{'PASS' if ok else 'FAIL'}] dependency accuracy: slice lines {gold.line_numbers}")

    # (2) Hallucinated identifier: word-level lexical mask blocks "keta".
    fixture = HALLUCINATED_IDENT
    query, gold, target_text = _gold_target(fixture)
    bad_text = fixture.bad_generation
    tokenizer = WordTokenizer([fixture.source, bad_text, target_text])
    mask = allowed_tokens(fixture.source, tokenizer)
    keta = set(tokenizer.encode("keta"))
    codepoint = set(tokenizer.encode("Codepoint"))
    blocked = not keta <= mask.allowed and codepoint <= mask.allowed
    failures += not blocked
    say(f"[{'PASS' if blocked else 'FAIL'}] lexical mask: 'keta' unconstructible, 'Codepoint' allowed")

    gold_ids = tokenizer.encode(target_text) + [tokenizer.eos_id]
    bad_ids = tokenizer.encode(bad_text) + [tokenizer.eos_id]
    scorer = WeightedTargetScorer([(bad_ids, 0.6), (gold_ids, 0.4)], tokenizer.eos_id)
    constrained = run_beam_search(query, scorer, tokenizer, DecodeConfig(tsed_prune=False))
    unconstrained = run_beam_search(
        query, scorer, tokenizer, DecodeConfig(tsed_prune=False, lexical_mask=False)
    )
    ok = "keta" not in constrained.text and "keta" in unconstrained.text
    failures += not ok
    say(
        f"[{'PASS' if ok else 'FAIL'}] constrained decode avoids the hallucinated token; "
        f"unconstrained emits it"
    )

    # (3) Over-generation: the boundary TSED drop prunes the repeating beam.
    fixture = OVERGENERATION
    query, gold, target_text = _gold_target(fixture)
    tokenizer = CharTokenizer()
    gold_ids = tokenizer.encode(target_text) + [tokenizer.eos_id]
    corrupt_text = "4: int one = 0, five = 0, ten = n;\n5: try {\n6: " + OVERGENERATION_CORRUPT_LINE
    corrupt_ids = tokenizer.encode(corrupt_text) + [tokenizer.eos_id]
    scorer = WeightedTargetScorer([(corrupt_ids, 0.6), (gold_ids, 0.4)], tokenizer.eos_id)
    constrained = run_beam_search(query, scorer, tokenizer, DecodeConfig())
    unconstrained = run_beam_search(query, scorer, tokenizer, DecodeConfig(tsed_prune=False))
    ok = (
        constrained.slice.line_numbers == gold.line_numbers
        and constrained.pruned >= 1
        and "* 10 *" in unconstrained.text
    )
    failures += not ok
    say(
        f"[{'PASS' if ok else 'FAIL'}] boundary pruning: constrained returns {constrained.slice.line_numbers}, "
        f"pruned {constrained.pruned} beam(s); ablation emits the repetition"
    )

    say("demo:", "all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1
