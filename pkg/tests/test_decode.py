import random

import numpy as np
import pytest

import oracles
from slicekit import progen
from slicekit.corpusgen import format_sft
from slicekit.decode import (
    DecodeConfig,
    NoValidSliceError,
    allowed_tokens,
    apply_mask,
    constrained_beam_search,
    is_statement_complete,
    log_softmax,
    run_beam_search,
    TokenMask,
)
from slicekit.fixtures import (
    DEP_ACCURACY,
    HALLUCINATED_IDENT,
    OVERGENERATION,
    OVERGENERATION_CORRUPT_LINE,
)
from slicekit.oracle import SliceQuery, oracle_slice
from slicekit.scorers import MockCopyScorer, WeightedTargetScorer
from slicekit.tokenizers import CharTokenizer, WordTokenizer


def copy_scorer_for(query, tok, **kw):
    gold = oracle_slice(query)
    target = format_sft(query, gold).target_text
    ids = tok.encode(target) + [tok.eos_id]
    return (
        MockCopyScorer(
            ids,
            tok.vocab_size,
            tok.eos_id,
            special_ids=tok.marker_ids + (tok.pad_id,),
            **kw,
        ),
        gold,
    )


# ---------------------------------------------------------------------------
# allowed_tokens / apply_mask


def test_allowed_tokens_char_level():
    tok = CharTokenizer()
    mask = allowed_tokens("int a = 0 ;", tok)
    for ch in "inta=0; ":
        assert tok.encode(ch)[0] in mask.allowed
    assert tok.encode("z")[0] not in mask.allowed
    assert tok.eos_id in mask.allowed
    for m in tok.marker_ids:
        assert m in mask.allowed
    assert tok.pad_id not in mask.allowed


def test_allowed_tokens_blocks_hallucinated_identifier():
    fixture = HALLUCINATED_IDENT
    tok = WordTokenizer([fixture.source, fixture.bad_generation])
    mask = allowed_tokens(fixture.source, tok)
    keta = set(tok.encode("keta"))
    codepoint = set(tok.encode("Codepoint"))
    assert not keta <= mask.allowed
    assert codepoint <= mask.allowed


def test_mask_never_empty_of_specials():
    tok = CharTokenizer()
    mask = allowed_tokens("\n", tok)
    assert tok.eos_id in mask.allowed
    assert set(tok.marker_ids) <= mask.allowed


def test_apply_mask_and_softmax():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=50)
    full = TokenMask(frozenset(range(50)))
    assert np.array_equal(apply_mask(logits, full), logits)

    single = TokenMask(frozenset({7}))
    masked = apply_mask(logits, single)
    probs = np.exp(log_softmax(masked))
    assert probs[7] == pytest.approx(1.0)

    some = TokenMask(frozenset({1, 5, 9, 30}))
    masked = apply_mask(some and apply_mask(logits, some), some)
    probs = np.exp(log_softmax(masked))
    assert probs[list(some.allowed)].sum() == pytest.approx(1.0, abs=1e-9)
    assert masked[2] == -np.inf
    assert masked[5] == logits[5]


# ---------------------------------------------------------------------------
# is_statement_complete


@pytest.mark.parametrize(
    "text,lang,expected",
    [
        ("7: int temp\n8: if(C <= A){", "java", True),
        ("10: for(int i=cnt;i>=0;", "java", False),
        ("x = 1\n", "python", True),
        ("x = (1 +\n", "python", False),
        ("12: temp = B;", "java", True),
        ("9: }", "java", True),
        ("11: if(i>0) {long y = x[i];", "java", True),
        ("6: if (one * 1 + five * 5", "java", False),
        ("x = 1", "python", False),
        ("", "java", False),
        ('s = "a;b\ntail', "java", False),
    ],
)
def test_statement_complete_cases(text, lang, expected):
    assert is_statement_complete(text, lang) is expected


# ---------------------------------------------------------------------------
# constrained_beam_search


def test_copy_scorer_reproduces_oracle_slice():
    q = DEP_ACCURACY.query()
    tok = CharTokenizer()
    scorer, gold = copy_scorer_for(q, tok)
    pred = constrained_beam_search(q, scorer, tok, DecodeConfig())
    assert pred.line_numbers == gold.line_numbers
    assert pred.lines == gold.lines
    assert not pred.degraded


def test_tiny_noise_still_exact():
    q = DEP_ACCURACY.query()
    tok = CharTokenizer()
    scorer, gold = copy_scorer_for(q, tok, noise=1e-6, seed=3)
    pred = constrained_beam_search(q, scorer, tok, DecodeConfig())
    assert pred.line_numbers == gold.line_numbers


def test_noise_diverted_out_of_input_never_emitted():
    q = DEP_ACCURACY.query()
    tok = CharTokenizer()
    mask = allowed_tokens(q.unit.text, tok)
    for seed in range(5):
        scorer, _ = copy_scorer_for(q, tok, noise=0.2, seed=seed)
        out = run_beam_search(q, scorer, tok, DecodeConfig())
        assert all(t in mask.allowed for t in out.token_ids)


def test_unconstrained_greedy_hallucination_rate():
    """Adversarial out-of-input noise: unconstrained greedy hallucinates in
    most fixtures, constrained decoding in none; the rate is recorded."""
    rng = random.Random(777)
    tok = CharTokenizer()
    fixtures = []
    while len(fixtures) < 200:
        lang = rng.choice(["java", "python"])
        prog = progen.straight_line(lang, rng.randint(3, 4), rng, bare_decl_prob=0.0)
        from slicekit.dfg import build_dfg
        from slicekit.units import parse_unit

        unit, tree = parse_unit(prog.text, lang)
        g = build_dfg(unit, tree)
        if not g.nodes:
            continue
        node = g.nodes[rng.randrange(len(g.nodes))]
        line = max(unit.statements[node.statement_index].line_numbers)
        fixtures.append(SliceQuery(unit=unit, criterion_var=node.name, criterion_line=line))

    greedy_hallucinated = 0
    constrained_hallucinated = 0
    for idx, q in enumerate(fixtures):
        gold = oracle_slice(q)
        ids = tok.encode(format_sft(q, gold).target_text) + [tok.eos_id]
        mask = allowed_tokens(q.unit.text, tok)

        def scorer():
            return MockCopyScorer(
                ids, tok.vocab_size, tok.eos_id, noise=0.3, noise_kind="out_of_input",
                seed=idx, special_ids=tok.marker_ids + (tok.pad_id,),
            )

        greedy_cfg = DecodeConfig(
            beam_size=1, tsed_prune=False, lexical_mask=False, max_len=len(ids) + 8
        )
        out = run_beam_search(q, scorer(), tok, greedy_cfg)
        if any(t not in mask.allowed for t in out.token_ids):
            greedy_hallucinated += 1
        out_c = run_beam_search(q, scorer(), tok, DecodeConfig(max_len=len(ids) + 8))
        if any(t not in mask.allowed for t in out_c.token_ids):
            constrained_hallucinated += 1

    rate = greedy_hallucinated / len(fixtures)
    print(f"unconstrained greedy hallucination rate at noise 0.3: {rate:.2%}")
    assert constrained_hallucinated == 0
    assert greedy_hallucinated > len(fixtures) / 2


def test_length_penalty_normalizes_by_length():
    # Raw cumulative score prefers the short branch; per-token normalization
    # flips the choice to the longer, lower-weighted one.
    q = SliceQuery.from_source("a = 1\nb = a\n", "python", "b", 2)
    tok = CharTokenizer()
    short = tok.encode("2: b = a") + [tok.eos_id]
    long_ids = tok.encode("1: a = 1\n2: b = a") + [tok.eos_id]
    scorer = lambda: WeightedTargetScorer([(long_ids, 0.45), (short, 0.55)], tok.eos_id)  # noqa: E731
    plain = run_beam_search(q, scorer(), tok, DecodeConfig(tsed_prune=False))
    penalized = run_beam_search(
        q, scorer(), tok, DecodeConfig(tsed_prune=False, length_penalty=1.0)
    )
    assert plain.text == "2: b = a"
    assert penalized.text == "1: a = 1\n2: b = a"


def test_determinism_same_seed_same_output():
    q = DEP_ACCURACY.query()
    tok = CharTokenizer()
    outs = []
    for _ in range(2):
        scorer, _ = copy_scorer_for(q, tok, noise=0.25, seed=41)
        outs.append(run_beam_search(q, scorer, tok, DecodeConfig()).token_ids)
    assert outs[0] == outs[1]


def test_hallucinated_identifier_blocked_only_with_lexical_mask():
    fixture = HALLUCINATED_IDENT
    q = fixture.query()
    gold = oracle_slice(q)
    tok = WordTokenizer([fixture.source, fixture.bad_generation])
    gold_ids = tok.encode(format_sft(q, gold).target_text) + [tok.eos_id]
    bad_ids = tok.encode(fixture.bad_generation) + [tok.eos_id]

    def scorer():
        return WeightedTargetScorer([(bad_ids, 0.6), (gold_ids, 0.4)], tok.eos_id)

    masked = run_beam_search(q, scorer(), tok, DecodeConfig(tsed_prune=False))
    unmasked = run_beam_search(
        q, scorer(), tok, DecodeConfig(tsed_prune=False, lexical_mask=False)
    )
    assert "keta" not in masked.text
    assert masked.slice.lines == gold.lines
    assert "keta" in unmasked.text


def test_fig3_repetition_beam_pruned_and_ablation_emits():
    fixture = OVERGENERATION
    q = fixture.query()
    gold = oracle_slice(q)
    tok = CharTokenizer()
    gold_ids = tok.encode(format_sft(q, gold).target_text) + [tok.eos_id]
    corrupt_text = (
        "4: int one = 0, five = 0, ten = n;\n5: try {\n6: " + OVERGENERATION_CORRUPT_LINE
    )
    corrupt_ids = tok.encode(corrupt_text) + [tok.eos_id]
    scorer = WeightedTargetScorer([(corrupt_ids, 0.6), (gold_ids, 0.4)], tok.eos_id)

    constrained = run_beam_search(q, scorer, tok, DecodeConfig())
    assert constrained.slice.line_numbers == gold.line_numbers
    assert constrained.pruned >= 1
    assert not constrained.degraded

    ablation = run_beam_search(q, scorer, tok, DecodeConfig(tsed_prune=False))
    assert "* 10 *" in ablation.text
    assert ablation.slice.lines != gold.lines


def test_boundary_scores_non_decreasing_on_clean_output():
    q = OVERGENERATION.query()
    tok = CharTokenizer()
    scorer, _ = copy_scorer_for(q, tok)
    out = run_beam_search(q, scorer, tok, DecodeConfig())
    assert len(out.boundary_scores) >= 2
    assert all(a <= b for a, b in zip(out.boundary_scores, out.boundary_scores[1:]))


def test_all_pruned_fallback_and_error():
    # A scorer that only ever produces a structurally broken slice: the first
    # boundary scores above zero, the second drops, so every beam dies there.
    fixture = OVERGENERATION
    q = fixture.query()
    tok = CharTokenizer()
    good_then_bad = (
        "4: int one = 0, five = 0, ten = n;\n6: if (one * 1 + five * 5 + ten * 10 > y"
        + " * 10 * y * y * y * n * ten" * 3
        + " * 1);\n5: try {"
    )
    ids = tok.encode(good_then_bad) + [tok.eos_id]
    scorer = WeightedTargetScorer([(ids, 1.0)], tok.eos_id)
    out = run_beam_search(q, scorer, tok, DecodeConfig(beam_size=1))
    assert out.degraded and out.slice.degraded

    scorer2 = WeightedTargetScorer([(ids, 1.0)], tok.eos_id)
    with pytest.raises(NoValidSliceError):
        run_beam_search(q, scorer2, tok, DecodeConfig(beam_size=1, fallback_on_empty=False))


def test_beam_fidelity_vs_reference_unconstrained():
    rng = random.Random(2024)
    tok = CharTokenizer()
    checked = 0
    for trial in range(25):
        lang = rng.choice(["java", "python"])
        prog = progen.branchy(lang, rng)
        unit_vars = sorted({s.target for s in prog.stmts if s.target} | set())
        q_src = prog.text
        # pick a criterion from the oracle-visible variables
        from slicekit.dfg import build_dfg
        from slicekit.units import parse_unit

        unit, tree = parse_unit(q_src, lang)
        g = build_dfg(unit, tree)
        if not g.nodes:
            continue
        node = g.nodes[rng.randrange(len(g.nodes))]
        line = max(unit.statements[node.statement_index].line_numbers)
        q = SliceQuery(unit=unit, criterion_var=node.name, criterion_line=line)
        gold = oracle_slice(q, g)
        target = format_sft(q, gold).target_text
        ids = tok.encode(target) + [tok.eos_id]
        variant = list(ids)
        k = rng.randrange(len(variant) - 1)
        variant[k:k] = tok.encode(" ")
        scorer = WeightedTargetScorer([(ids, 0.55), (tuple(variant), 0.45)], tok.eos_id)
        cfg = DecodeConfig(tsed_prune=False, lexical_mask=False, max_len=len(ids) + 24)
        got = run_beam_search(q, scorer, tok, cfg).token_ids
        scorer2 = WeightedTargetScorer([(ids, 0.55), (tuple(variant), 0.45)], tok.eos_id)
        want = oracles.reference_beam_search(q, scorer2, tok, 3, len(ids) + 24)
        assert got == want
        checked += 1
    assert checked >= 20


def test_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(beam_size=0)
    with pytest.raises(ValueError):
        DecodeConfig(max_len=0)
