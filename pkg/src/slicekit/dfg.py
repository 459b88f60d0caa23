"""Variable occurrences and data-flow graph construction.

Nodes are identifier leaves bound as variables; callee names, member names
and type names are excluded, field accesses contribute the base identifier
only. Edges:

* ``comes_from``: a use receives a prior definition's value (reaching defs,
  may-analysis across branches, one back-edge iteration through loops);
* ``computed_from``: a right-hand-side use feeds the variable defined by the
  same statement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .syntax import ASSIGN_OPS, JAVA_KEYWORDS, PY_KEYWORDS, SyntaxTree, Token
from .units import Block, Construct, SourceUnit

EDGE_KINDS = ("comes_from", "computed_from")


@dataclass(frozen=True)
class VarOccurrence:
    name: str
    statement_index: int
    token_span: tuple[int, int]  # absolute character offsets
    role: str  # definition | use
    bare_decl: bool = False


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str


@dataclass
class DataFlowGraph:
    nodes: tuple[VarOccurrence, ...]
    edges: frozenset[Edge]

    def out_edges(self, node_id: int) -> list[Edge]:
        return sorted(
            (e for e in self.edges if e.src == node_id), key=lambda e: (e.dst, e.kind)
        )

    def in_edges(self, node_id: int) -> list[Edge]:
        return sorted(
            (e for e in self.edges if e.dst == node_id), key=lambda e: (e.src, e.kind)
        )

    def nodes_of_statement(self, stmt_idx: int) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.statement_index == stmt_idx]

    def to_json(self) -> str:
        payload = {
            "nodes": [
                {
                    "id": i,
                    "name": n.name,
                    "stmt": n.statement_index,
                    "span": list(n.token_span),
                    "role": n.role,
                }
                for i, n in enumerate(self.nodes)
            ],
            "edges": [
                {"src": e.src, "dst": e.dst, "kind": e.kind}
                for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.kind))
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclass
class _RawOcc:
    """Extraction-time occurrence, ordered by evaluation position."""

    name: str
    tok_idx: int
    start: int
    end: int
    role: str
    bare_decl: bool = False
    rhs_ranges: list[tuple[int, int]] = field(default_factory=list)  # token index ranges


_SKIP_SYMBOLS = frozenset(
    ["method_header", "class_header", "def_header", "import_decl", "block_open", "block_close"]
)

_INCDEC = ("++", "--")


def build_dfg(unit: SourceUnit, tree: SyntaxTree) -> DataFlowGraph:
    """Extract the data-flow graph of a parsed source unit."""
    per_stmt: dict[int, list[_RawOcc]] = {}
    for stmt in unit.statements:
        raw = tree.raw_statements[stmt.index]
        if stmt.symbol in _SKIP_SYMBOLS:
            per_stmt[stmt.index] = []
            continue
        toks = [t for t in raw.tokens if not t.is_trivia]
        if unit.lang == "java":
            per_stmt[stmt.index] = _extract_java(stmt.kind, stmt.symbol, toks)
        else:
            per_stmt[stmt.index] = _extract_python(stmt.symbol, toks)

    # Stable node ids: sorted by statement, span, use-before-def.
    flat: list[tuple[int, _RawOcc]] = []
    for idx in sorted(per_stmt):
        flat.extend((idx, occ) for occ in per_stmt[idx])
    order = sorted(
        range(len(flat)),
        key=lambda k: (
            flat[k][0],
            flat[k][1].start,
            flat[k][1].end,
            0 if flat[k][1].role == "use" else 1,
        ),
    )
    node_id: dict[int, int] = {k: i for i, k in enumerate(order)}
    nodes = tuple(
        VarOccurrence(
            name=flat[k][1].name,
            statement_index=flat[k][0],
            token_span=(flat[k][1].start, flat[k][1].end),
            role="use" if flat[k][1].role == "use" else "definition",
            bare_decl=flat[k][1].bare_decl,
        )
        for k in order
    )

    edges: set[Edge] = set()
    # computed_from: structural, per statement.
    flat_pos_by_stmt: dict[int, list[int]] = {}
    for k, (idx, _) in enumerate(flat):
        flat_pos_by_stmt.setdefault(idx, []).append(k)
    for idx, positions in flat_pos_by_stmt.items():
        occs = [flat[k][1] for k in positions]
        for dk, d in zip(positions, occs):
            if d.role != "definition":
                continue
            for uk, u in zip(positions, occs):
                if u.role != "use":
                    continue
                if any(lo <= u.tok_idx < hi for lo, hi in d.rhs_ranges):
                    edges.add(Edge(node_id[uk], node_id[dk], "computed_from"))

    # comes_from: reaching definitions over the block tree.
    analyzer = _ReachingDefs(unit, per_stmt, flat, node_id)
    analyzer.run()
    edges.update(analyzer.edges)

    return DataFlowGraph(nodes=nodes, edges=frozenset(edges))


# ---------------------------------------------------------------------------
# Occurrence extraction
# ---------------------------------------------------------------------------


def _extract_java(kind: str, symbol: str, toks: list[Token]) -> list[_RawOcc]:
    var_idx = _java_variable_positions(toks)
    if symbol == "for_header":
        return _java_for_header(toks, var_idx)
    if kind == "declaration":
        return _java_declaration(toks, var_idx)
    return _generic_statement(toks, var_idx, _java_roles(toks, var_idx))


def _java_variable_positions(toks: list[Token]) -> list[int]:
    out = []
    for k, t in enumerate(toks):
        if t.kind != "word" or t.text in JAVA_KEYWORDS:
            continue
        nxt = toks[k + 1] if k + 1 < len(toks) else None
        prv = toks[k - 1] if k > 0 else None
        if nxt is not None and nxt.text == "(":
            continue  # callee
        if prv is not None and prv.text == ".":
            continue  # member name; base already contributes
        if prv is not None and prv.kind == "word" and prv.text == "new":
            continue  # constructed type
        if nxt is not None and nxt.kind == "word" and nxt.text not in JAVA_KEYWORDS:
            continue  # type position: "Type name"
        out.append(k)
    return out


def _skip_access_chain(toks: list[Token], k: int) -> int:
    """Token index just past the member/subscript chain starting at ``k``."""
    j = k + 1
    while j < len(toks):
        if toks[j].text == "." and j + 1 < len(toks) and toks[j + 1].kind == "word":
            j += 2
            continue
        if toks[j].text == "[":
            depth = 0
            while j < len(toks):
                if toks[j].text == "[":
                    depth += 1
                elif toks[j].text == "]":
                    depth -= 1
                    if depth == 0:
                        j += 1
                        break
                j += 1
            continue
        break
    return j


def _java_roles(toks: list[Token], var_idx: list[int]) -> dict[int, tuple[str, list[tuple[int, int]], bool]]:
    """Map token index -> (role, rhs token ranges, emits_self_use)."""
    roles: dict[int, tuple[str, list[tuple[int, int]], bool]] = {}
    for k in var_idx:
        j = _skip_access_chain(toks, k)
        nxt = toks[j] if j < len(toks) else None
        prv = toks[k - 1] if k > 0 else None
        chained = j > k + 1
        if nxt is not None and nxt.kind == "op" and nxt.text in ASSIGN_OPS:
            rhs = [(j + 1, _segment_end(toks, j + 1))]
            if chained:
                rhs.append((k + 1, j))  # subscript/member tokens feed the store
            self_use = chained or nxt.text != "="
            roles[k] = ("definition", rhs, self_use)
        elif (nxt is not None and nxt.text in _INCDEC) or (prv is not None and prv.text in _INCDEC):
            roles[k] = ("definition", [(k, k + 1)], True)
        else:
            roles[k] = ("use", [], False)
    return roles


def _segment_end(toks: list[Token], start: int) -> int:
    depth = 0
    for j in range(start, len(toks)):
        t = toks[j].text
        if t in "([{":
            depth += 1
        elif t in ")]}":
            if depth == 0:
                return j
            depth -= 1
        elif t in (",", ";") and depth == 0:
            return j
    return len(toks)


def _generic_statement(
    toks: list[Token],
    var_idx: list[int],
    roles: dict[int, tuple[str, list[tuple[int, int]], bool]],
) -> list[_RawOcc]:
    uses: list[_RawOcc] = []
    defs: list[_RawOcc] = []
    for k in var_idx:
        role, rhs, self_use = roles[k]
        t = toks[k]
        if role == "use":
            uses.append(_RawOcc(t.text, k, t.start, t.end, "use"))
        else:
            if self_use:
                uses.append(_RawOcc(t.text, k, t.start, t.end, "use"))
                rhs = rhs + [(k, k + 1)]
            defs.append(_RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=rhs))
    return uses + defs


def _java_declaration(toks: list[Token], var_idx: list[int]) -> list[_RawOcc]:
    """Per-declarator evaluation order: uses of the initializer, then the def."""
    roles = _java_roles(toks, var_idx)
    out: list[_RawOcc] = []
    # Split into top-level comma segments.
    segments: list[tuple[int, int]] = []
    depth = 0
    seg_start = 0
    for j, t in enumerate(toks):
        if t.text in "([{":
            depth += 1
        elif t.text in ")]}":
            depth -= 1
        elif t.text == "," and depth == 0:
            segments.append((seg_start, j))
            seg_start = j + 1
    segments.append((seg_start, len(toks)))
    for lo, hi in segments:
        seg_vars = [k for k in var_idx if lo <= k < hi]
        if not seg_vars:
            continue
        head = seg_vars[0]
        role, rhs, self_use = roles[head]
        declared_bare = role == "use"  # "int temp": no initializer
        seg_uses = [k for k in seg_vars[1:] if roles[k][0] == "use"]
        for k in seg_uses:
            t = toks[k]
            out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
        t = toks[head]
        if declared_bare:
            out.append(_RawOcc(t.text, head, t.start, t.end, "definition", bare_decl=True))
        else:
            if self_use:
                out.append(_RawOcc(t.text, head, t.start, t.end, "use"))
                rhs = rhs + [(head, head + 1)]
            out.append(_RawOcc(t.text, head, t.start, t.end, "definition", rhs_ranges=rhs))
        # Nested defs inside an initializer are vanishingly rare; any extra
        # definition-role vars in the segment fall back to generic handling.
        for k in seg_vars[1:]:
            if roles[k][0] == "definition":
                role2, rhs2, self2 = roles[k]
                t2 = toks[k]
                if self2:
                    out.append(_RawOcc(t2.text, k, t2.start, t2.end, "use"))
                    rhs2 = rhs2 + [(k, k + 1)]
                out.append(_RawOcc(t2.text, k, t2.start, t2.end, "definition", rhs_ranges=rhs2))
    return out


def _java_for_header(toks: list[Token], var_idx: list[int]) -> list[_RawOcc]:
    """for(init; cond; update) in source order, so init defs precede cond uses."""
    roles = _java_roles(toks, var_idx)
    # Enhanced for: "for (Type x : expr)".
    colon = next(
        (j for j, t in enumerate(toks) if t.text == ":" and _paren_depth_at(toks, j) == 1),
        None,
    )
    if colon is not None:
        out: list[_RawOcc] = []
        target = [k for k in var_idx if k < colon]
        source = [k for k in var_idx if k > colon]
        for k in source:
            t = toks[k]
            out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
        for k in target:
            t = toks[k]
            out.append(
                _RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=[(colon + 1, len(toks))])
            )
        return out
    # Segment boundaries at ';' inside the header parens.
    cuts = [j for j, t in enumerate(toks) if t.text == ";"]
    bounds = [0] + [c + 1 for c in cuts] + [len(toks)]
    out = []
    for lo, hi in zip(bounds, bounds[1:]):
        seg_vars = [k for k in var_idx if lo <= k < hi]
        seg_uses = [k for k in seg_vars if roles[k][0] == "use"]
        seg_defs = [k for k in seg_vars if roles[k][0] == "definition"]
        for k in seg_uses:
            t = toks[k]
            out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
        for k in seg_defs:
            role, rhs, self_use = roles[k]
            t = toks[k]
            if self_use:
                out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
                rhs = rhs + [(k, k + 1)]
            out.append(_RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=rhs))
    return out


def _paren_depth_at(toks: list[Token], j: int) -> int:
    depth = 0
    for t in toks[:j]:
        if t.text in "([":
            depth += 1
        elif t.text in ")]":
            depth -= 1
    return depth


def _extract_python(symbol: str, toks: list[Token]) -> list[_RawOcc]:
    var_idx = _python_variable_positions(toks)
    if symbol == "for_header":
        return _python_for_header(toks, var_idx)
    if symbol == "assignment":
        return _python_assignment(toks, var_idx)
    out = []
    for k in var_idx:
        t = toks[k]
        if k > 0 and toks[k - 1].kind == "word" and toks[k - 1].text == "as":
            out.append(_RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=[(0, k - 1)]))
        else:
            out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
    uses = [o for o in out if o.role == "use"]
    defs = [o for o in out if o.role == "definition"]
    return uses + defs


def _python_variable_positions(toks: list[Token]) -> list[int]:
    out = []
    for k, t in enumerate(toks):
        if t.kind != "word" or t.text in PY_KEYWORDS:
            continue
        nxt = toks[k + 1] if k + 1 < len(toks) else None
        prv = toks[k - 1] if k > 0 else None
        if nxt is not None and nxt.text == "(":
            continue
        if prv is not None and prv.text == ".":
            continue
        out.append(k)
    return out


def _python_assignment(toks: list[Token], var_idx: list[int]) -> list[_RawOcc]:
    assigns = [
        j
        for j, t in enumerate(toks)
        if t.kind == "op" and t.text in ASSIGN_OPS and _bracket_depth_at(toks, j) == 0
    ]
    if not assigns:
        return _generic_statement(toks, var_idx, {k: ("use", [], False) for k in var_idx})
    last = assigns[-1]
    rhs_range = (last + 1, len(toks))
    uses: list[_RawOcc] = []
    defs: list[_RawOcc] = []
    augmented = toks[last].text != "="
    for k in var_idx:
        t = toks[k]
        if k > last:
            uses.append(_RawOcc(t.text, k, t.start, t.end, "use"))
            continue
        # Target side: plain names become defs; chained/subscripted bases
        # mutate, so they both read and write; subscript indices are reads.
        j = _skip_access_chain(toks, k)
        is_target_head = _is_python_target_head(toks, k, assigns)
        if not is_target_head:
            uses.append(_RawOcc(t.text, k, t.start, t.end, "use"))
            continue
        chained = j > k + 1
        if chained or augmented:
            uses.append(_RawOcc(t.text, k, t.start, t.end, "use"))
            rhs = [rhs_range, (k, j)]
        else:
            rhs = [rhs_range]
        defs.append(_RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=rhs))
    return uses + defs


def _is_python_target_head(toks: list[Token], k: int, assigns: list[int]) -> bool:
    """A target head starts a name at depth 0 on the left of some '='."""
    if _bracket_depth_at(toks, k) != 0:
        return False
    prv = toks[k - 1] if k > 0 else None
    if prv is not None and prv.text not in (",", ";", "(", "=") and not (
        prv.kind == "op" and prv.text in ASSIGN_OPS
    ):
        if prv.kind in ("word", "number", "string") or prv.text in (")", "]", ".", ":"):
            return False
    return any(k < j for j in assigns)


def _bracket_depth_at(toks: list[Token], j: int) -> int:
    depth = 0
    for t in toks[:j]:
        if t.text in "([{":
            depth += 1
        elif t.text in ")]}":
            depth -= 1
    return depth


def _python_for_header(toks: list[Token], var_idx: list[int]) -> list[_RawOcc]:
    in_pos = next(
        (j for j, t in enumerate(toks) if t.kind == "word" and t.text == "in"), len(toks)
    )
    out: list[_RawOcc] = []
    for k in var_idx:
        if k > in_pos:
            t = toks[k]
            out.append(_RawOcc(t.text, k, t.start, t.end, "use"))
    for k in var_idx:
        if k < in_pos:
            t = toks[k]
            out.append(
                _RawOcc(t.text, k, t.start, t.end, "definition", rhs_ranges=[(in_pos + 1, len(toks))])
            )
    return out


# ---------------------------------------------------------------------------
# Reaching definitions (may-analysis)
# ---------------------------------------------------------------------------

Env = dict[str, frozenset[int]]


class _ReachingDefs:
    def __init__(
        self,
        unit: SourceUnit,
        per_stmt: dict[int, list[_RawOcc]],
        flat: list[tuple[int, _RawOcc]],
        node_id: dict[int, int],
    ):
        self.unit = unit
        self.per_stmt = per_stmt
        self.edges: set[Edge] = set()
        # Map (stmt, occurrence identity) -> node id.
        self._ids: dict[int, dict[int, int]] = {}
        for k, (idx, occ) in enumerate(flat):
            self._ids.setdefault(idx, {})[id(occ)] = node_id[k]

    def run(self) -> None:
        info = self.unit.blocks()
        self._analyze_block(info.root, {})

    def _analyze_block(self, block: Block, env: Env) -> Env:
        for item in block.items:
            if isinstance(item, Construct):
                env = self._analyze_construct(item, env)
            else:
                env = self._process_statement(item, env)
        return env

    def _analyze_construct(self, c: Construct, env: Env) -> Env:
        if c.kind == "loop":
            return self._analyze_loop(c, env)
        if c.kind == "opaque":
            for header, body in c.arms:
                env = self._process_statement(header, env)
                env = self._analyze_block(body, env)
            return env
        # Branch construct: each arm may or may not execute.
        base = env
        outs = [base]
        flow = base
        for header, body in c.arms:
            arm_in = self._process_statement(header, flow)
            outs.append(self._analyze_block(body, arm_in))
            flow = arm_in
        return _merge(*outs)

    def _analyze_loop(self, c: Construct, env: Env) -> Env:
        header, body = c.arms[0]
        env_h = self._process_statement(header, env, loop_header=True)
        out1 = self._analyze_block(body, env_h)
        env_b = _merge(env_h, out1)
        self._process_statement(header, env_b, loop_header=True)
        out2 = self._analyze_block(body, env_b)
        env_out = _merge(env_h, out2)
        for extra_header, extra_body in c.arms[1:]:  # e.g. python for/else
            env_out = self._process_statement(extra_header, env_out)
            env_out = self._analyze_block(extra_body, env_out)
        return env_out

    def _process_statement(self, idx: int, env: Env, loop_header: bool = False) -> Env:
        occs = self.per_stmt.get(idx, [])
        if not occs:
            return env
        env = dict(env)
        ids = self._ids.get(idx, {})
        for occ in occs:
            nid = ids[id(occ)]
            if occ.role == "use":
                for src in sorted(env.get(occ.name, frozenset())):
                    self.edges.add(Edge(src, nid, "comes_from"))
            else:
                if loop_header:
                    env[occ.name] = env.get(occ.name, frozenset()) | {nid}
                else:
                    env[occ.name] = frozenset({nid})
        return env


def _merge(*envs: Env) -> Env:
    out: dict[str, frozenset[int]] = {}
    for env in envs:
        for name, defs in env.items():
            out[name] = out.get(name, frozenset()) | defs
    return out
