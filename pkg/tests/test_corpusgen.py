import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from slicekit import progen
from slicekit.corpusgen import (
    format_sft,
    independent_pairs,
    mask_step,
    parse_sft_input,
    permute_statements,
    reconstruct_from_corruption,
    span_corrupt,
    strip_line_numbers,
)
from slicekit.dfg import build_dfg
from slicekit.oracle import SliceQuery, oracle_slice
from slicekit.units import parse_unit


def graph_of(src, lang):
    unit, tree = parse_unit(src, lang)
    return unit, build_dfg(unit, tree)


# ---------------------------------------------------------------------------
# independent_pairs


def test_pairs_simple_cases():
    unit, g = graph_of("a = 1\nb = 2\nc = a + b", "python")
    assert independent_pairs(unit, g) == {(0, 1)}
    # Fully chained: the pair predicate sees direct edges only, so the
    # endpoints of the chain still qualify; the swap safety filter is what
    # keeps such pairs from ever being applied (see below).
    unit, g = graph_of("a = 1\nb = a\nc = b", "python")
    assert independent_pairs(unit, g) == {(0, 2)}
    ex = permute_statements(unit, g, rng=random.Random(0))
    assert ex.swaps == () and ex.permuted == ex.original


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_pairs_match_brute_force_scan(seed):
    rng = random.Random(seed)
    lang = rng.choice(["java", "python"])
    prog = progen.straight_line(lang, rng.randint(2, 8), rng)
    unit, g = graph_of(prog.text, lang)
    assert independent_pairs(unit, g) == oracles.brute_independent_pairs(unit, g)


# ---------------------------------------------------------------------------
# permute_statements


def canon_edges(unit, dfg, perm=None):
    def key(nid):
        n = dfg.nodes[nid]
        s = unit.statements[n.statement_index]
        stmt = perm[n.statement_index] if perm else n.statement_index
        return (n.name, stmt, n.token_span[0] - s.span[0], n.role)

    return Counter((key(e.src), key(e.dst), e.kind) for e in dfg.edges)


def assert_permutation_valid(prog_text, lang, ex):
    unit, g = graph_of(prog_text, lang)
    perm = list(range(len(unit.statements)))
    for i, j in ex.swaps:
        # every applied swap satisfies the pair predicate at its round;
        # at minimum it must satisfy it for the text it was applied to
        perm[i], perm[j] = perm[j], perm[i]
    fwd = {orig: pos for pos, orig in enumerate(perm)}
    u2, t2 = parse_unit(ex.permuted, lang)
    assert len(u2.statements) == len(unit.statements)
    g2 = build_dfg(u2, t2)
    assert canon_edges(unit, g, fwd) == canon_edges(u2, g2)
    # statement multiset preserved
    assert Counter(s.text for s in unit.statements) == Counter(s.text for s in u2.statements)
    assert Counter(prog_text.split()) == Counter(ex.permuted.split())


def test_single_legal_pair_swap():
    unit, g = graph_of("a = 1\nb = 2\nc = a + b", "python")
    ex = permute_statements(unit, g, max_swaps=1, rng=random.Random(0))
    assert ex.swaps == ((0, 1),)
    assert ex.permuted == "b = 2\na = 1\nc = a + b"


def test_fully_chained_snippet_unchanged():
    unit, g = graph_of("a = 1\nb = a\nc = b", "python")
    ex = permute_statements(unit, g, rng=random.Random(0))
    assert ex.permuted == ex.original
    assert ex.swaps == ()


def test_max_swaps_validation():
    unit, g = graph_of("a = 1\nb = 2", "python")
    with pytest.raises(ValueError):
        permute_statements(unit, g, max_swaps=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_permutation_preserves_dataflow(seed):
    rng = random.Random(seed)
    lang = rng.choice(["java", "python"])
    prog = (
        progen.straight_line(lang, rng.randint(3, 9), rng)
        if rng.random() < 0.5
        else progen.branchy(lang, rng)
    )
    unit, g = graph_of(prog.text, lang)
    ex = permute_statements(unit, g, max_swaps=3, rng=rng)
    assert_permutation_valid(prog.text, lang, ex)


def test_permutation_determinism():
    unit, g = graph_of("a = 1\nb = 2\nc = 3\nd = a + b + c\n", "python")
    a = permute_statements(unit, g, rng=random.Random(7))
    b = permute_statements(unit, g, rng=random.Random(7))
    assert a == b


# ---------------------------------------------------------------------------
# span_corrupt


def test_fig2_mixed_granularity_illustration():
    src = "a = 1\nb = 2\nc = a + b"
    unit, g = graph_of(src, "python")
    # the use of 'a' feeding c's definition
    v = next(
        i
        for i, n in enumerate(g.nodes)
        if n.name == "a" and n.role == "use" and n.statement_index == 2
    )
    ex = mask_step(unit, g, v, parent_granularity="statement", child_granularity="variable")
    assert ex.masked_input == "<mask_0>\nb = 2\n<mask_1> = a + b"
    assert ex.target == "<mask_0>a = 1<mask_1>c"
    assert reconstruct_from_corruption(ex) == src


def test_no_variables_no_masking():
    unit, g = graph_of("return 0", "python")
    ex = span_corrupt(unit, g, 0.25, random.Random(0))
    assert ex.masked_input == unit.text
    assert ex.units == ()
    assert ex.target == ""


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_corruption_round_trip_and_budget(seed):
    rng = random.Random(seed)
    lang = rng.choice(["java", "python"])
    prog = (
        progen.straight_line(lang, rng.randint(3, 9), rng)
        if rng.random() < 0.5
        else progen.branchy(lang, rng)
    )
    unit, g = graph_of(prog.text, lang)
    ex = span_corrupt(unit, g, 0.25, rng)
    assert reconstruct_from_corruption(ex) == prog.text
    # sentinels strictly increasing, exactly once each
    for k in range(len(ex.units)):
        assert ex.masked_input.count(f"<mask_{k}>") == 1
    order = [
        ex.masked_input.index(f"<mask_{k}>") for k in range(len(ex.units))
    ]
    assert order == sorted(order)
    # masked fraction meets the ratio unless the node pool ran dry
    assert ex.mask_ratio_used >= 0.25 or ex.node_pool_exhausted


def test_corruption_units_are_occurrences_or_statements():
    rng = random.Random(42)
    for _ in range(30):
        lang = rng.choice(["java", "python"])
        prog = progen.branchy(lang, rng)
        unit, g = graph_of(prog.text, lang)
        ex = span_corrupt(unit, g, 0.3, rng)
        occ_spans = {n.token_span for n in g.nodes}
        stmt_spans = {s.span for s in unit.statements}
        for u in ex.units:
            if u.kind == "variable":
                assert u.span in occ_spans
            else:
                assert u.span in stmt_spans


def test_corruption_determinism():
    unit, g = graph_of("a = 1\nb = a\nc = a + b\nd = c\n", "python")
    a = span_corrupt(unit, g, 0.25, random.Random(9))
    b = span_corrupt(unit, g, 0.25, random.Random(9))
    assert a == b


def test_mask_ratio_validation():
    unit, g = graph_of("a = 1", "python")
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            span_corrupt(unit, g, bad)


# ---------------------------------------------------------------------------
# SFT formatting


def fixture_query():
    src = "int a = 0;\nint b = a + 1;\n"
    return SliceQuery.from_source(src, "java", "b", 2)


def test_single_statement_target():
    q = SliceQuery.from_source("a = 1", "python", "a", 1)
    gold = oracle_slice(q)
    ex = format_sft(q, gold)
    assert ex.target_text == "1: a = 1"


def test_format_sft_paper_shape_and_round_trip():
    q = fixture_query()
    gold = oracle_slice(q)
    ex = format_sft(q, gold)
    assert ex.input_text.startswith("<code>\n1: int a = 0;\n2: int b = a + 1;\n<criterion>\nb\n")
    code, var, line = parse_sft_input(ex.input_text)
    assert (code, var, line) == (q.unit.text.rstrip("\n"), "b", 2)
    # target lines are verbatim input lines in ascending order
    for ln_text in ex.target_text.split("\n"):
        num, _, body = ln_text.partition(": ")
        assert q.unit.line_texts[int(num)] == body


def test_format_sft_motivating_fixture_targets():
    from slicekit.fixtures import DEP_ACCURACY, HALLUCINATED_IDENT

    q = DEP_ACCURACY.query()
    ex = format_sft(q, oracle_slice(q))
    assert ex.target_text == "7: int temp\n8: if(C <= A){\n12: temp = B;"

    q2 = HALLUCINATED_IDENT.query()
    ex2 = format_sft(q2, oracle_slice(q2))
    assert ex2.target_text == (
        "7: int cnt = 0;\n10: for(int i=cnt;i>=0;i--) {\n"
        "11: if(i>0) {long y = x[i];\n12: long Codepoint = 97+y};"
    )


def test_format_sft_rejects_foreign_lines():
    q = fixture_query()
    from slicekit.oracle import Slice

    with pytest.raises(ValueError):
        format_sft(q, Slice(line_numbers=(9,), lines=("nope",)))
    with pytest.raises(ValueError):
        format_sft(q, Slice(line_numbers=(1,), lines=("tampered",)))


def test_strip_line_numbers():
    assert strip_line_numbers("7: int temp\n8: if(C <= A){") == "int temp\nif(C <= A){"
    assert strip_line_numbers("garbage line") == "garbage line"
