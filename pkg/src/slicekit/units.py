"""Statement-level code model: source units, nesting and basic blocks."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .syntax import RawStatement, SyntaxTree, parse

STATEMENT_KINDS = (
    "simple",
    "branch_header",
    "loop_header",
    "block_open",
    "block_close",
    "declaration",
    "return",
    "other",
)


@dataclass(frozen=True)
class Statement:
    index: int
    line_numbers: tuple[int, ...]
    text: str
    nesting_depth: int
    kind: str
    symbol: str
    span: tuple[int, int]  # absolute character offsets into the unit text


@dataclass
class Block:
    """One lexical block: a mix of statement indices and nested constructs."""

    items: list = field(default_factory=list)  # int | Construct


@dataclass
class Construct:
    """A header-introduced region: if/else chains, loops, try/catch."""

    kind: str  # branch | loop | opaque
    arms: list[tuple[int, Block]] = field(default_factory=list)  # (header stmt, body)
    closers: list[int] = field(default_factory=list)


@dataclass
class BlockInfo:
    root: Block
    enclosing_headers: dict[int, tuple[int, ...]]  # stmt -> headers, innermost first
    block_of: dict[int, int]  # stmt -> id(owning Block)


@dataclass
class SourceUnit:
    lang: str
    text: str
    statements: tuple[Statement, ...]
    lines: tuple[tuple[int, str], ...]
    _blocks: BlockInfo | None = field(default=None, repr=False, compare=False)

    @property
    def line_texts(self) -> dict[int, str]:
        return dict(self.lines)

    def join_lines(self) -> str:
        body = "\n".join(t for _, t in self.lines)
        return body + ("\n" if self.text.endswith("\n") else "")

    def blocks(self) -> BlockInfo:
        if self._blocks is None:
            self._blocks = build_blocks(self)
        return self._blocks

    def statements_on_line(self, line: int) -> list[Statement]:
        return [s for s in self.statements if line in s.line_numbers]


def source_lines(text: str) -> tuple[tuple[int, str], ...]:
    parts = text.split("\n")
    if text.endswith("\n"):
        parts = parts[:-1]
    return tuple((i + 1, raw) for i, raw in enumerate(parts))


def _line_starts(text: str) -> list[int]:
    starts = [0]
    for i, c in enumerate(text):
        if c == "\n":
            starts.append(i + 1)
    return starts


def _lines_for_span(starts: list[int], span: tuple[int, int]) -> tuple[int, ...]:
    lo = bisect.bisect_right(starts, span[0]) - 1
    hi = bisect.bisect_right(starts, max(span[0], span[1] - 1)) - 1
    return tuple(range(lo + 1, hi + 2))


def extract_statements(tree: SyntaxTree, text: str, lang: str) -> SourceUnit:
    """Derive the statement-level SourceUnit from a parsed tree."""
    starts = _line_starts(text)
    raws = tree.raw_statements
    if lang == "python":
        depths = _python_depths(raws, starts)
    else:
        depths = _java_depths(raws)
    stmts = []
    for idx, (raw, depth) in enumerate(zip(raws, depths)):
        span = (raw.start, raw.end)
        stmts.append(
            Statement(
                index=idx,
                line_numbers=_lines_for_span(starts, span),
                text=text[span[0] : span[1]],
                nesting_depth=depth,
                kind=raw.kind,
                symbol=raw.symbol,
                span=span,
            )
        )
    return SourceUnit(lang=lang, text=text, statements=tuple(stmts), lines=source_lines(text))


def parse_unit(text: str, lang: str) -> tuple[SourceUnit, SyntaxTree]:
    tree = parse(text, lang)
    return extract_statements(tree, text, lang), tree


def _java_depths(raws: list[RawStatement]) -> list[int]:
    depths = []
    depth = 0
    stack: list[str] = []  # "brace" | "implicit"

    def unwind_implicit() -> None:
        nonlocal depth
        while stack and stack[-1] == "implicit":
            stack.pop()
            depth = max(0, depth - 1)

    for raw in raws:
        if raw.kind == "block_close":
            depth = max(0, depth - 1)
            depths.append(depth)
            if stack and stack[-1] == "brace":
                stack.pop()
            unwind_implicit()
            continue
        depths.append(depth)
        if raw.opens_block:
            stack.append("brace")
            depth += 1
        elif raw.headerless:
            stack.append("implicit")
            depth += 1
        else:
            unwind_implicit()
    return depths


def _python_depths(raws: list[RawStatement], line_starts: list[int]) -> list[int]:
    # Indentation column stack; each strictly deeper indent adds one level.
    # Only the first statement of a physical line sets the line's indent.
    depths = []
    indent_stack = [0]
    prev_line_start = -1
    for raw in raws:
        first = raw.tokens[0]
        line_start = line_starts[bisect.bisect_right(line_starts, first.start) - 1]
        if line_start == prev_line_start and depths:
            depths.append(depths[-1])
            continue
        prev_line_start = line_start
        col = first.start - line_start
        while len(indent_stack) > 1 and col < indent_stack[-1]:
            indent_stack.pop()
        if col > indent_stack[-1]:
            indent_stack.append(col)
        depths.append(len(indent_stack) - 1)
    return depths


_PLAIN_OPENERS = ("method_header", "class_header", "def_header", "block_open")


def build_blocks(unit: SourceUnit) -> BlockInfo:
    """Build the lexical block tree used by dataflow analysis and slicing."""
    stmts = unit.statements
    root = Block()
    enclosing: dict[int, tuple[int, ...]] = {}
    block_of: dict[int, int] = {}
    chain_heads = (
        frozenset(["else", "catch", "finally"])
        if unit.lang == "java"
        else frozenset(["elif", "else", "except", "finally"])
    )
    pos = 0

    def parse_block(depth: int, headers: tuple[int, ...], block: Block) -> None:
        nonlocal pos
        while pos < len(stmts):
            s = stmts[pos]
            if s.nesting_depth < depth:
                return
            if s.kind == "block_close" and s.nesting_depth == depth - 1:
                return
            if s.kind in ("branch_header", "loop_header") or s.symbol in _PLAIN_OPENERS:
                block.items.append(parse_construct(depth, headers, block))
                continue
            enclosing[s.index] = headers
            block_of[s.index] = id(block)
            block.items.append(s.index)
            pos += 1

    def parse_construct(depth: int, headers: tuple[int, ...], parent: Block) -> Construct:
        nonlocal pos
        first = stmts[pos]
        if first.symbol in _PLAIN_OPENERS:
            ckind = "opaque"
        elif first.kind == "loop_header":
            ckind = "loop"
        else:
            ckind = "branch"
        construct = Construct(kind=ckind)
        while pos < len(stmts):
            h = stmts[pos]
            enclosing[h.index] = headers
            block_of[h.index] = id(parent)
            pos += 1
            body = Block()
            hdr_chain = headers if h.symbol in _PLAIN_OPENERS else (h.index,) + headers
            construct.arms.append((h.index, body))
            parse_block(depth + 1, hdr_chain, body)
            if (
                pos < len(stmts)
                and stmts[pos].kind == "block_close"
                and stmts[pos].nesting_depth == depth
            ):
                construct.closers.append(stmts[pos].index)
                enclosing[stmts[pos].index] = hdr_chain
                block_of[stmts[pos].index] = id(body)
                pos += 1
            nxt = stmts[pos] if pos < len(stmts) else None
            if (
                nxt is not None
                and nxt.nesting_depth == depth
                and nxt.kind == "branch_header"
                and _first_word(nxt) in chain_heads
            ):
                continue
            break
        return construct

    parse_block(0, (), root)
    return BlockInfo(root=root, enclosing_headers=enclosing, block_of=block_of)


def _first_word(s: Statement) -> str:
    for piece in s.text.replace("}", " ").replace("{", " ").split():
        piece = piece.strip("();:")
        if piece:
            return piece
    return ""


def same_basic_block(unit: SourceUnit, i: int, j: int) -> bool:
    """True iff statements i < j sit in one straight-line run of the same block."""
    stmts = unit.statements
    if not (0 <= i < j < len(stmts)):
        raise IndexError(f"statement indices out of range: {i}, {j}")
    a, b = stmts[i], stmts[j]
    allowed = ("simple", "declaration")
    if a.kind not in allowed or b.kind not in allowed:
        return False
    if a.nesting_depth != b.nesting_depth:
        return False
    info = unit.blocks()
    if info.block_of.get(i) != info.block_of.get(j):
        return False
    for k in range(i + 1, j):
        mid = stmts[k]
        if mid.kind not in allowed or mid.nesting_depth != a.nesting_depth:
            return False
        if mid.symbol == "error_statement":
            return False
    return True
