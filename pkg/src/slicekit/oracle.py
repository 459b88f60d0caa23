"""Reference backward slicer: dependence-graph reachability at line granularity.

The slice of (variable, line) is the backward closure over value-flow edges
from the criterion occurrences, widened by control context (enclosing
branch/loop headers, transitively, including their condition dependencies)
and by bare declarations of sliced variables. Output is the sorted set of
source lines touched by the closure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .dfg import DataFlowGraph, build_dfg
from .units import SourceUnit, parse_unit


class CriterionNotFoundError(ValueError):
    """The criterion line has no occurrence of the criterion variable."""


@dataclass(frozen=True)
class SliceQuery:
    unit: SourceUnit
    criterion_var: str
    criterion_line: int

    @classmethod
    def from_source(cls, source: str, lang: str, criterion_var: str, criterion_line: int) -> "SliceQuery":
        unit, _ = parse_unit(source, lang)
        return cls(unit=unit, criterion_var=criterion_var, criterion_line=criterion_line)


@dataclass(frozen=True)
class Slice:
    line_numbers: tuple[int, ...]
    lines: tuple[str, ...]
    degraded: bool = False

    @property
    def text(self) -> str:
        return "\n".join(self.lines)

    def numbered_text(self) -> str:
        return "\n".join(f"{n}: {t}" for n, t in zip(self.line_numbers, self.lines))

    def is_wellformed(self, query: SliceQuery) -> bool:
        nums = self.line_numbers
        if list(nums) != sorted(set(nums)):
            return False
        line_map = query.unit.line_texts
        if any(n not in line_map for n in nums):
            return False
        if any(line_map[n] != t for n, t in zip(nums, self.lines)):
            return False
        return query.criterion_line in nums


def slice_from_lines(unit: SourceUnit, line_numbers, degraded: bool = False) -> Slice:
    line_map = unit.line_texts
    nums = tuple(sorted(set(int(n) for n in line_numbers if int(n) in line_map)))
    return Slice(line_numbers=nums, lines=tuple(line_map[n] for n in nums), degraded=degraded)


def oracle_slice(query: SliceQuery, dfg: DataFlowGraph | None = None) -> Slice:
    """Ground-truth backward slice via graph reachability."""
    unit = query.unit
    if dfg is None:
        unit2, tree = parse_unit(unit.text, unit.lang)
        dfg = build_dfg(unit2, tree)
        unit = unit2
    seeds = [
        i
        for i, n in enumerate(dfg.nodes)
        if n.name == query.criterion_var
        and query.criterion_line in unit.statements[n.statement_index].line_numbers
    ]
    if not seeds:
        raise CriterionNotFoundError(
            f"no occurrence of {query.criterion_var!r} on line {query.criterion_line}"
        )

    preds: dict[int, list[int]] = {}
    for e in dfg.edges:
        preds.setdefault(e.dst, []).append(e.src)

    reached: set[int] = set()
    frontier = list(seeds)
    while frontier:
        nid = frontier.pop()
        if nid in reached:
            continue
        reached.add(nid)
        frontier.extend(preds.get(nid, ()))

    included_stmts = {dfg.nodes[nid].statement_index for nid in reached}
    info = unit.blocks()

    def data_closure_from_statement(stmt_idx: int) -> None:
        for nid, node in enumerate(dfg.nodes):
            if node.statement_index == stmt_idx and nid not in reached:
                stack = [nid]
                while stack:
                    cur = stack.pop()
                    if cur in reached:
                        continue
                    reached.add(cur)
                    included_stmts.add(dfg.nodes[cur].statement_index)
                    stack.extend(preds.get(cur, ()))

    # Control context and bare declarations, to fixpoint.
    bare_decl_stmt: dict[str, list[int]] = {}
    for nid, node in enumerate(dfg.nodes):
        if node.bare_decl:
            bare_decl_stmt.setdefault(node.name, []).append(node.statement_index)

    changed = True
    while changed:
        changed = False
        for stmt_idx in sorted(included_stmts):
            for header in info.enclosing_headers.get(stmt_idx, ()):
                if header not in included_stmts:
                    included_stmts.add(header)
                    data_closure_from_statement(header)
                    changed = True
        for nid in sorted(reached):
            node = dfg.nodes[nid]
            for decl_stmt in bare_decl_stmt.get(node.name, ()):
                if decl_stmt <= node.statement_index and decl_stmt not in included_stmts:
                    included_stmts.add(decl_stmt)
                    changed = True

    lines = sorted(
        {ln for s in included_stmts for ln in unit.statements[s].line_numbers}
        | {query.criterion_line}
    )
    line_map = unit.line_texts
    return Slice(
        line_numbers=tuple(lines),
        lines=tuple(line_map[n] for n in lines),
        degraded=False,
    )


# ---------------------------------------------------------------------------
# Dataset records (JSONL, one slicing task per line)
# ---------------------------------------------------------------------------


def dataset_record(item_id: str, lang: str, source: str, query: SliceQuery, sl: Slice) -> str:
    return json.dumps(
        {
            "id": item_id,
            "lang": lang,
            "source": source,
            "criterion_var": query.criterion_var,
            "criterion_line": query.criterion_line,
            "slice_lines": list(sl.line_numbers),
            "slice_text": sl.text,
        },
        sort_keys=True,
    )


def default_criteria(unit: SourceUnit, dfg: DataFlowGraph) -> list[tuple[str, int]]:
    """One criterion per variable: its last occurrence line (deterministic)."""
    last: dict[str, int] = {}
    for node in dfg.nodes:
        line = max(unit.statements[node.statement_index].line_numbers)
        last[node.name] = max(last.get(node.name, 0), line)
    return sorted(last.items())
