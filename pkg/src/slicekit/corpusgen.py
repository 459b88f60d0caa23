"""Dataflow-aware pretraining pairs and SFT-formatted slicing examples.

Statement permutation swaps data-independent statements of one basic block;
span corruption masks the dataflow neighborhood (parents and children) of
randomly chosen variable occurrences at variable or statement granularity.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .dfg import DataFlowGraph, build_dfg
from .syntax import parse
from .units import SourceUnit, extract_statements, same_basic_block

CODE_MARKER = "<code>"
CRITERION_MARKER = "<criterion>"
LINE_MARKER = "<line>"
SLICE_MARKER = "<slice>"
MARKERS = (CODE_MARKER, CRITERION_MARKER, LINE_MARKER, SLICE_MARKER)


def sentinel(k: int, template: str = "<mask_{k}>") -> str:
    return template.format(k=k)


@dataclass(frozen=True)
class PermutationExample:
    original: str
    permuted: str
    swaps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class MaskedUnit:
    kind: str  # variable | statement
    span: tuple[int, int]


@dataclass(frozen=True)
class CorruptionExample:
    masked_input: str
    target: str
    mask_ratio_used: float
    units: tuple[MaskedUnit, ...]
    node_pool_exhausted: bool = False


@dataclass(frozen=True)
class SftExample:
    input_text: str
    target_text: str


def independent_pairs(unit: SourceUnit, dfg: DataFlowGraph) -> set[tuple[int, int]]:
    """Statement pairs that share a basic block and have no data edge.

    A pair (i, j) qualifies iff i < j, the statements sit in one straight-line
    block run, and no edge of either kind, in either direction, links any
    occurrence of statement i with any occurrence of statement j.
    """
    stmt_nodes: dict[int, set[int]] = {}
    for nid, node in enumerate(dfg.nodes):
        stmt_nodes.setdefault(node.statement_index, set()).add(nid)
    linked: set[tuple[int, int]] = set()
    for e in dfg.edges:
        a = dfg.nodes[e.src].statement_index
        b = dfg.nodes[e.dst].statement_index
        linked.add((min(a, b), max(a, b)))
    out: set[tuple[int, int]] = set()
    n = len(unit.statements)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in linked:
                continue
            if same_basic_block(unit, i, j):
                out.add((i, j))
    return out


def _written_names(dfg: DataFlowGraph, stmt: int) -> set[str]:
    return {
        n.name
        for n in dfg.nodes
        if n.statement_index == stmt and n.role == "definition"
    }


def _touched_names(dfg: DataFlowGraph, stmt: int) -> set[str]:
    return {n.name for n in dfg.nodes if n.statement_index == stmt}


def _swap_conflicts(dfg: DataFlowGraph, i: int, j: int) -> bool:
    """Write conflicts invisible to the edge scan (WAR/WAW on a shared name)."""
    shared = _touched_names(dfg, i) & _touched_names(dfg, j)
    if not shared:
        return False
    written = _written_names(dfg, i) | _written_names(dfg, j)
    return bool(shared & written)


def _swap_is_safe(dfg: DataFlowGraph, i: int, j: int) -> bool:
    """Dataflow safety for the whole swap, not just the endpoints.

    Swapping non-adjacent statements reorders each endpoint against every
    statement in between, so those pairs must commute too: no direct edge
    and no read/write overlap on a shared name.
    """
    for k in range(i, j + 1):
        for a, b in ((i, k), (k, j)):
            if a >= b:
                continue
            if not _commutes(dfg, a, b) or _swap_conflicts(dfg, a, b):
                return False
    return True


def _commutes(dfg: DataFlowGraph, a: int, b: int) -> bool:
    for e in dfg.edges:
        sa = dfg.nodes[e.src].statement_index
        sb = dfg.nodes[e.dst].statement_index
        if {sa, sb} == {a, b}:
            return False
    return True


def _swap_statement_text(unit: SourceUnit, i: int, j: int) -> str:
    a, b = unit.statements[i].span, unit.statements[j].span
    text = unit.text
    return text[: a[0]] + text[b[0] : b[1]] + text[a[1] : b[0]] + text[a[0] : a[1]] + text[b[1] :]


def permute_statements(
    unit: SourceUnit,
    dfg: DataFlowGraph,
    max_swaps: int = 3,
    rng: random.Random | None = None,
) -> PermutationExample:
    """Apply up to ``max_swaps`` successive independent-pair swaps.

    The pair set is recomputed after each swap; composing pairs computed
    against stale statement positions could violate independence. Pairs whose
    statements both touch a written name are skipped: the edge scan cannot
    see write/write or read/write conflicts, and those would change the
    dataflow graph under reordering.
    """
    if max_swaps < 1:
        raise ValueError("max_swaps must be >= 1")
    rng = rng or random.Random(0)
    original = unit.text
    cur_unit, cur_dfg = unit, dfg
    swaps: list[tuple[int, int]] = []
    for _ in range(max_swaps):
        pairs = independent_pairs(cur_unit, cur_dfg)
        safe = [p for p in sorted(pairs) if _swap_is_safe(cur_dfg, *p)]
        if not safe:
            break
        i, j = safe[rng.randrange(len(safe))]
        new_text = _swap_statement_text(cur_unit, i, j)
        swaps.append((i, j))
        tree = parse(new_text, unit.lang)
        cur_unit = extract_statements(tree, new_text, unit.lang)
        cur_dfg = build_dfg(cur_unit, tree)
    return PermutationExample(original=original, permuted=cur_unit.text, swaps=tuple(swaps))


def _ws_token_count(text: str) -> int:
    return len(text.split())


def span_corrupt(
    unit: SourceUnit,
    dfg: DataFlowGraph,
    mask_ratio: float = 0.25,
    rng: random.Random | None = None,
    sentinel_template: str = "<mask_{k}>",
) -> CorruptionExample:
    """Mask dataflow neighborhoods until the token budget is met.

    Each round picks a random remaining occurrence, gathers its parents and
    children in the graph, and masks either those occurrences (fine-grained)
    or their whole statements (coarse-grained), one fair coin per picked
    node. Units overlapping already-masked content are skipped whole, so
    every masked unit stays exactly an occurrence or a statement and nothing
    is double-counted.
    """
    if not (0.0 < mask_ratio < 1.0):
        raise ValueError("mask_ratio must be in (0, 1)")
    rng = rng or random.Random(0)
    text = unit.text
    budget = mask_ratio * _ws_token_count(text)
    remaining = list(range(len(dfg.nodes)))
    masked_tokens = 0
    units: list[MaskedUnit] = []
    covered: list[tuple[int, int]] = []

    def overlaps(span: tuple[int, int]) -> bool:
        return any(not (span[1] <= lo or hi <= span[0]) for lo, hi in covered)

    while masked_tokens < budget and remaining:
        pick = rng.randrange(len(remaining))
        v = remaining.pop(pick)
        parents = [e.src for e in dfg.edges if e.dst == v]
        children = [e.dst for e in dfg.edges if e.src == v]
        neighborhood = sorted(set(parents) | set(children))
        if not neighborhood:
            continue
        fine = rng.random() < 0.5
        if fine:
            spans = sorted({dfg.nodes[u].token_span for u in neighborhood})
            kind = "variable"
        else:
            stmts = sorted({dfg.nodes[u].statement_index for u in neighborhood})
            spans = [unit.statements[s].span for s in stmts]
            kind = "statement"
        for span in spans:
            if overlaps(span):
                continue
            covered.append(span)
            units.append(MaskedUnit(kind=kind, span=span))
            masked_tokens += max(1, _ws_token_count(text[span[0] : span[1]]))

    units_sorted = tuple(sorted(units, key=lambda u: u.span))
    masked_parts: list[str] = []
    target_parts: list[str] = []
    prev = 0
    for k, u in enumerate(units_sorted):
        masked_parts.append(text[prev : u.span[0]])
        masked_parts.append(sentinel(k, sentinel_template))
        target_parts.append(sentinel(k, sentinel_template))
        target_parts.append(text[u.span[0] : u.span[1]])
        prev = u.span[1]
    masked_parts.append(text[prev:])
    total = _ws_token_count(text)
    return CorruptionExample(
        masked_input="".join(masked_parts),
        target="".join(target_parts),
        mask_ratio_used=(masked_tokens / total) if total else 0.0,
        units=units_sorted,
        node_pool_exhausted=not remaining,
    )


def reconstruct_from_corruption(example: CorruptionExample, sentinel_template: str = "<mask_{k}>") -> str:
    """Substitute each target segment back for its sentinel (round-trip)."""
    text = example.masked_input
    segments: list[str] = []
    cursor = example.target
    for k in range(len(example.units)):
        tok = sentinel(k, sentinel_template)
        nxt = sentinel(k + 1, sentinel_template)
        start = cursor.index(tok) + len(tok)
        end = cursor.find(nxt, start)
        segments.append(cursor[start:] if end == -1 else cursor[start:end])
    for k in reversed(range(len(example.units))):
        text = text.replace(sentinel(k, sentinel_template), segments[k])
    return text


def mask_step(
    unit: SourceUnit,
    dfg: DataFlowGraph,
    v: int,
    parent_granularity: str,
    child_granularity: str,
    sentinel_template: str = "<mask_{k}>",
) -> CorruptionExample:
    """Single masking round with explicit per-side granularity.

    The corpus generator flips one coin for the whole neighborhood; this
    entry point exists for targeted tests and demos that need mixed
    granularity (coarse parents, fine children).
    """
    text = unit.text
    parents = sorted({e.src for e in dfg.edges if e.dst == v})
    children = sorted({e.dst for e in dfg.edges if e.src == v})
    spans: set[tuple[int, int]] = set()
    for group, gran in ((parents, parent_granularity), (children, child_granularity)):
        for u in group:
            if gran == "variable":
                spans.add(dfg.nodes[u].token_span)
            else:
                spans.add(unit.statements[dfg.nodes[u].statement_index].span)
    kinds = {}
    for u in parents:
        kinds[dfg.nodes[u].token_span if parent_granularity == "variable" else unit.statements[dfg.nodes[u].statement_index].span] = (
            "variable" if parent_granularity == "variable" else "statement"
        )
    for u in children:
        kinds[dfg.nodes[u].token_span if child_granularity == "variable" else unit.statements[dfg.nodes[u].statement_index].span] = (
            "variable" if child_granularity == "variable" else "statement"
        )
    ordered = sorted(spans)
    units = tuple(MaskedUnit(kind=kinds[s], span=s) for s in ordered)
    masked_parts: list[str] = []
    target_parts: list[str] = []
    prev = 0
    masked_tokens = 0
    for k, u in enumerate(units):
        masked_parts.append(text[prev : u.span[0]])
        masked_parts.append(sentinel(k, sentinel_template))
        target_parts.append(sentinel(k, sentinel_template))
        target_parts.append(text[u.span[0] : u.span[1]])
        masked_tokens += max(1, _ws_token_count(text[u.span[0] : u.span[1]]))
        prev = u.span[1]
    masked_parts.append(text[prev:])
    total = _ws_token_count(text)
    return CorruptionExample(
        masked_input="".join(masked_parts),
        target="".join(target_parts),
        mask_ratio_used=(masked_tokens / total) if total else 0.0,
        units=units,
    )


# ---------------------------------------------------------------------------
# SFT formatting
# ---------------------------------------------------------------------------


def format_sft_input(unit: SourceUnit, criterion_var: str, criterion_line: int) -> str:
    numbered = "\n".join(f"{ln}: {raw}" for ln, raw in unit.lines)
    return (
        f"{CODE_MARKER}\n{numbered}\n"
        f"{CRITERION_MARKER}\n{criterion_var}\n"
        f"{LINE_MARKER}\n{criterion_line}\n"
        f"{SLICE_MARKER}\n"
    )


def format_sft(query, gold) -> SftExample:
    """Render a slicing query and its gold slice as a control-marked pair.

    Rejects gold lines that do not occur verbatim in the query.
    """
    unit = query.unit
    line_map = unit.line_texts
    for ln, text in zip(gold.line_numbers, gold.lines):
        if ln not in line_map:
            raise ValueError(f"gold references line {ln} absent from the query")
        if line_map[ln] != text:
            raise ValueError(f"gold line {ln} is not verbatim: {text!r} != {line_map[ln]!r}")
    target = "\n".join(f"{ln}: {line_map[ln]}" for ln in gold.line_numbers)
    return SftExample(
        input_text=format_sft_input(unit, query.criterion_var, query.criterion_line),
        target_text=target,
    )


def parse_sft_input(input_text: str) -> tuple[str, str, int]:
    """Inverse of :func:`format_sft_input`: recover (code, variable, line)."""
    try:
        after_code = input_text.split(CODE_MARKER + "\n", 1)[1]
        numbered, rest = after_code.split("\n" + CRITERION_MARKER + "\n", 1)
        var, rest = rest.split("\n" + LINE_MARKER + "\n", 1)
        line_str, _ = rest.split("\n" + SLICE_MARKER, 1)
    except (IndexError, ValueError) as exc:
        raise ValueError("not a well-formed slicing input") from exc
    code_lines = []
    for raw in numbered.split("\n"):
        num, _, body = raw.partition(": ")
        if not num.strip().isdigit():
            raise ValueError(f"bad numbered line: {raw!r}")
        code_lines.append(body)
    return "\n".join(code_lines), var, int(line_str)


def parse_numbered_lines(text: str) -> list[tuple[int, str]]:
    """Parse 'N: line' records, skipping anything that does not match."""
    out = []
    for raw in text.split("\n"):
        num, sep, body = raw.partition(": ")
        if sep and num.strip().isdigit():
            out.append((int(num), body))
        elif raw.strip(": ").isdigit() and raw.endswith(":"):
            out.append((int(raw.rstrip(":")), ""))
    return out


def strip_line_numbers(text: str) -> str:
    """Remove 'N: ' prefixes from generated slice text, leaving code lines."""
    out = []
    for raw in text.split("\n"):
        num, sep, body = raw.partition(": ")
        if sep and num.strip().isdigit():
            out.append(body)
        elif raw.rstrip(":").isdigit() and raw.endswith(":"):
            out.append("")
        else:
            out.append(raw)
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Corpus records
# ---------------------------------------------------------------------------


def corpus_record(item_id: str, lang: str, task: str, input_text: str, target: str, meta: dict) -> str:
    return json.dumps(
        {"id": item_id, "lang": lang, "task": task, "input": input_text, "target": target, "meta": meta},
        sort_keys=True,
    )


def derive_seed(global_seed: int, item_id: str) -> int:
    """Stable per-item seed so parallel corpus runs are schedule-independent."""
    import hashlib

    digest = hashlib.sha256(f"{global_seed}:{item_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
