"""Seeded random program generation for tests, corpora and demos.

Straight-line programs carry their own structured ground truth (per-line
defs/uses), so test oracles can compute expected dataflow and slices without
touching the parser. Branchy programs exercise control handling; their
ground truth comes from the reference slicer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

VAR_POOL = ("a", "b", "c", "d", "e", "f", "g", "h")
OPS = ("+", "-", "*")


@dataclass(frozen=True)
class GenStatement:
    line: int  # 1-based
    target: str | None
    operands: tuple[str, ...]  # variable operands in textual order
    bare_decl: bool = False


@dataclass(frozen=True)
class GeneratedProgram:
    lang: str
    text: str
    stmts: tuple[GenStatement, ...]  # straight-line ground truth; empty if branchy

    def last_line_of(self, var: str) -> int | None:
        best = None
        for s in self.stmts:
            if s.target == var or var in s.operands:
                best = s.line
        return best


def straight_line(
    lang: str,
    n_stmts: int,
    rng: random.Random,
    bare_decl_prob: float = 0.12,
    free_var_prob: float = 0.1,
) -> GeneratedProgram:
    """Random straight-line program of assignments and (java) declarations."""
    declared: dict[str, bool] = {}  # var -> has value
    lines: list[str] = []
    stmts: list[GenStatement] = []
    n_vars = min(len(VAR_POOL), max(2, n_stmts // 2 + 2))
    pool = VAR_POOL[:n_vars]

    def pick_operand() -> str | None:
        readable = [v for v in pool if v in declared]
        if readable and rng.random() > free_var_prob:
            return rng.choice(readable)
        if rng.random() < 0.5:
            return rng.choice(pool)  # possibly free/undefined
        return None  # literal

    for i in range(n_stmts):
        line_no = i + 1
        target = rng.choice(pool)
        if lang == "java" and target not in declared and rng.random() < bare_decl_prob:
            lines.append(f"int {target};")
            stmts.append(GenStatement(line_no, target, (), bare_decl=True))
            declared[target] = False
            continue
        n_ops = rng.choice((1, 1, 2, 2, 3))
        operands: list[str] = []
        pieces: list[str] = []
        for _ in range(n_ops):
            op = pick_operand()
            if op is None:
                pieces.append(str(rng.randrange(10)))
            else:
                operands.append(op)
                pieces.append(op)
        expr = f" {rng.choice(OPS)} ".join(pieces)
        if lang == "java":
            if target in declared:
                lines.append(f"{target} = {expr};")
            else:
                lines.append(f"int {target} = {expr};")
        else:
            lines.append(f"{target} = {expr}")
        declared[target] = True
        stmts.append(GenStatement(line_no, target, tuple(operands)))
    return GeneratedProgram(lang=lang, text="\n".join(lines) + "\n", stmts=tuple(stmts))


def branchy(lang: str, rng: random.Random, approx_stmts: int = 10) -> GeneratedProgram:
    """Random program with straight runs, a branch, and possibly a loop."""
    declared: list[str] = []
    lines: list[str] = []

    def fresh(expr: str) -> str:
        v = VAR_POOL[len(declared) % len(VAR_POOL)]
        if v in declared:
            return assign(expr)
        declared.append(v)
        if lang == "java":
            return f"int {v} = {expr};"
        return f"{v} = {expr}"

    def assign(expr: str) -> str:
        v = rng.choice(declared)
        return f"{v} = {expr};" if lang == "java" else f"{v} = {expr}"

    def rand_expr(k: int = 2) -> str:
        pieces = []
        for _ in range(k):
            if declared and rng.random() < 0.7:
                pieces.append(rng.choice(declared))
            else:
                pieces.append(str(rng.randrange(10)))
        return f" {rng.choice(OPS)} ".join(pieces)

    head = rng.randint(2, max(2, approx_stmts // 3 + 1))
    for _ in range(head):
        lines.append(fresh(rand_expr()))

    cond = f"{rng.choice(declared)} > {rng.choice(declared + [str(rng.randrange(5))])}"
    body = [assign(rand_expr()) for _ in range(rng.randint(1, 2))]
    with_else = rng.random() < 0.4
    if lang == "java":
        lines.append(f"if ({cond}) {{")
        lines.extend(body)
        if with_else:
            lines.append("} else {")
            lines.append(assign(rand_expr()))
        lines.append("}")
    else:
        lines.append(f"if {cond}:")
        lines.extend("    " + b for b in body)
        if with_else:
            lines.append("else:")
            lines.append("    " + assign(rand_expr()))

    if rng.random() < 0.6:
        loop_var = rng.choice(declared)
        if lang == "java":
            lines.append(f"while ({loop_var} > 0) {{")
            lines.append(assign(rand_expr()))
            lines.append(f"{loop_var} = {loop_var} - 1;")
            lines.append("}")
        else:
            lines.append(f"while {loop_var} > 0:")
            lines.append("    " + assign(rand_expr()))
            lines.append(f"    {loop_var} = {loop_var} - 1")

    tail = rng.randint(1, 2)
    for _ in range(tail):
        lines.append(fresh(rand_expr()))
    return GeneratedProgram(lang=lang, text="\n".join(lines) + "\n", stmts=())


def expected_comes_from(prog: GeneratedProgram) -> list[tuple[str, int, int]]:
    """Brute-force reaching definitions over the structured straight-line form.

    Returns one (name, def_line, use_line) triple per use operand.
    """
    last_def: dict[str, int] = {}
    edges: list[tuple[str, int, int]] = []
    for s in prog.stmts:
        for op in s.operands:
            if op in last_def:
                edges.append((op, last_def[op], s.line))
        if s.target is not None:
            last_def[s.target] = s.line
    return edges


def expected_slice_lines(prog: GeneratedProgram, var: str, line: int) -> list[int]:
    """Brute-force backward closure over the materialized dependence relation.

    Mirrors occurrence-level semantics: a criterion use pulls only the
    criterion variable's reaching definition; a pulled definition pulls all
    of its operand definitions; bare declarations of variables whose
    occurrences enter the closure are included.
    """
    info: dict[int, GenStatement] = {s.line: s for s in prog.stmts}
    bare_decl_line: dict[str, int] = {}
    for s in prog.stmts:
        if s.bare_decl:
            bare_decl_line.setdefault(s.target, s.line)

    def reaching_def(name: str, before_line: int) -> int | None:
        best = None
        for s in prog.stmts:
            if s.line >= before_line:
                break
            if s.target == name:
                best = s.line  # bare decls count as (valueless) definitions
        return best

    closure: set[int] = {line}
    touched: set[tuple[int, str]] = set()  # (line, name) occurrences in the closure
    crit = info[line]
    frontier: list[int] = []
    if crit.target == var:
        touched.add((line, var))
        if not crit.bare_decl:
            for op in crit.operands:
                touched.add((line, op))
                d = reaching_def(op, line)
                if d is not None:
                    frontier.append(d)
    if var in crit.operands:
        touched.add((line, var))
        d = reaching_def(var, line)
        if d is not None:
            frontier.append(d)

    while frontier:
        ln = frontier.pop()
        if ln in closure:
            continue
        closure.add(ln)
        s = info[ln]
        if s.target is not None:
            touched.add((ln, s.target))
        for op in s.operands:
            touched.add((ln, op))
            d = reaching_def(op, ln)
            if d is not None:
                frontier.append(d)

    for ln, name in sorted(touched):
        if name in bare_decl_line and bare_decl_line[name] <= ln:
            closure.add(bare_decl_line[name])
    return sorted(closure)
