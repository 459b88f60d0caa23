"""Error-tolerant lexing and parsing for Java and Python snippets.

The parser never raises on malformed code: unterminated strings, unbalanced
brackets and stray tokens become error-flagged nodes. This matters because
partial slices produced mid-decoding must still parse to a usable tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

LANGS = ("java", "python")

JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while var true false
    null""".split()
)

# "match" is a soft keyword and a popular variable name; it is classified
# as a header only by statement shape, never lexically.
PY_KEYWORDS = frozenset(
    """False None True and as assert async await break class continue def del
    elif else except finally for from global if import in is lambda nonlocal
    not or pass raise return try while with yield""".split()
)

# Maximal-munch operator table, longest first.
_OPERATORS = sorted(
    [
        ">>>=", "<<=", ">>=", ">>>", "**=", "//=", "...", "->", "==", "!=",
        "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=",
        "&=", "|=", "^=", "<<", ">>", "**", "//", "=", "+", "-", "*", "/",
        "%", "<", ">", "!", "&", "|", "^", "~", "?",
    ],
    key=len,
    reverse=True,
)

_PUNCT = frozenset("()[]{};:,.@")

ASSIGN_OPS = frozenset(
    ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "**=", "//="]
)


@dataclass(frozen=True)
class Token:
    kind: str  # word | number | string | op | punct | newline | comment | ws | error
    text: str
    start: int
    end: int

    @property
    def is_trivia(self) -> bool:
        return self.kind in ("ws", "comment", "newline")


def lex(text: str, lang: str) -> list[Token]:
    """Tokenize source text. Never fails; unknown bytes become error tokens."""
    if lang not in LANGS:
        raise ValueError(f"unknown language: {lang!r}")
    toks: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            toks.append(Token("newline", "\n", i, i + 1))
            i += 1
            continue
        if c in " \t\r":
            j = i
            while j < n and text[j] in " \t\r":
                j += 1
            toks.append(Token("ws", text[i:j], i, j))
            i = j
            continue
        if c == "\\" and lang == "python" and i + 1 < n and text[i + 1] == "\n":
            toks.append(Token("ws", text[i : i + 2], i, i + 2))
            i += 2
            continue
        if lang == "java" and text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j == -1 else j
            toks.append(Token("comment", text[i:j], i, j))
            i = j
            continue
        if lang == "java" and text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j == -1:
                toks.append(Token("comment", text[i:], i, n))
                i = n
            else:
                toks.append(Token("comment", text[i : j + 2], i, j + 2))
                i = j + 2
            continue
        if lang == "python" and c == "#":
            j = text.find("\n", i)
            j = n if j == -1 else j
            toks.append(Token("comment", text[i:j], i, j))
            i = j
            continue
        if c in "\"'":
            toks.append(_lex_string(text, i, lang))
            i = toks[-1].end
            continue
        if c.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._"):
                # Stop a number at '..' so ranges don't swallow punctuation.
                if text[j] == "." and j + 1 < n and text[j + 1] == ".":
                    break
                j += 1
            toks.append(Token("number", text[i:j], i, j))
            i = j
            continue
        if c.isalpha() or c in "_$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_$"):
                j += 1
            toks.append(Token("word", text[i:j], i, j))
            i = j
            continue
        matched = False
        for op in _OPERATORS:
            if text.startswith(op, i):
                toks.append(Token("op", op, i, i + len(op)))
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if c in _PUNCT:
            toks.append(Token("punct", c, i, i + 1))
            i += 1
            continue
        toks.append(Token("error", c, i, i + 1))
        i += 1
    return toks


def _lex_string(text: str, i: int, lang: str) -> Token:
    quote = text[i]
    n = len(text)
    if lang == "python" and text.startswith(quote * 3, i):
        j = text.find(quote * 3, i + 3)
        if j == -1:
            return Token("string", text[i:], i, n)
        return Token("string", text[i : j + 3], i, j + 3)
    j = i + 1
    while j < n:
        if text[j] == "\\" and j + 1 < n:
            j += 2
            continue
        if text[j] == quote:
            return Token("string", text[i : j + 1], i, j + 1)
        if text[j] == "\n":
            break
        j += 1
    # Unterminated string: recover at end of line.
    return Token("string", text[i:j], i, j)


@dataclass
class TreeNode:
    """Ordered labeled tree node. ``span`` covers the node's core tokens."""

    label: str
    start: int
    end: int
    children: list["TreeNode"] = field(default_factory=list)
    error: bool = False
    text: str = ""  # token text for leaves, "" for interior nodes

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self):
        for node in self.walk():
            if node.is_leaf:
                yield node

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())


@dataclass
class RawStatement:
    """Segmentation output: one grammar statement with its tokens."""

    tokens: list[Token]
    symbol: str  # fine-grained label, e.g. if_header / declaration
    kind: str  # Statement.kind bucket
    opens_block: bool  # ends with a block-opening '{'
    headerless: bool  # branch/loop header whose body is the next statement

    @property
    def start(self) -> int:
        return self.tokens[0].start

    @property
    def end(self) -> int:
        return self.tokens[-1].end

    def first_word(self) -> str | None:
        for t in self.tokens:
            if t.kind == "word":
                return t.text
        return None


@dataclass
class SyntaxTree:
    root: TreeNode
    text: str
    lang: str
    raw_statements: list[RawStatement]

    def has_errors(self) -> bool:
        return any(n.error for n in self.root.walk())

    def node_count(self) -> int:
        return self.root.node_count()

    def leaf_coverage_text(self) -> str:
        """Input reconstructed from in-order leaves plus absorbed trivia gaps."""
        out = []
        prev = 0
        for leaf in self.root.leaves():
            out.append(self.text[prev : leaf.end])
            prev = leaf.end
        out.append(self.text[prev:])
        return "".join(out)


_JAVA_BRANCH = frozenset(["if", "else", "switch", "case", "default", "try", "catch", "finally"])
_JAVA_LOOP = frozenset(["for", "while", "do"])
_JAVA_JUMP = frozenset(["return", "break", "continue", "throw"])
_JAVA_PRIMITIVES = frozenset(
    ["int", "long", "short", "byte", "float", "double", "boolean", "char", "void", "var"]
)

_PY_BRANCH = frozenset(["if", "elif", "else", "try", "except", "finally", "with"])
_PY_LOOP = frozenset(["for", "while"])
_PY_JUMP = frozenset(["return", "break", "continue", "raise"])


def parse(text: str, lang: str) -> SyntaxTree:
    """Parse source into an error-tolerant concrete syntax tree.

    Raises only on empty input or an unknown language; malformed regions
    surface as error-flagged nodes.
    """
    if lang not in LANGS:
        raise ValueError(f"unknown language: {lang!r}")
    if not text:
        raise ValueError("empty input")
    tokens = lex(text, lang)
    if lang == "java":
        raws = _segment_java(tokens)
    else:
        raws = _segment_python(tokens)
    children = [_build_statement_node(raw, lang) for raw in raws]
    root = TreeNode("program", 0, len(text), children)
    return SyntaxTree(root, text, lang, raws)


def _segment_java(tokens: list[Token]) -> list[RawStatement]:
    sig = [t for t in tokens if not t.is_trivia]
    raws: list[RawStatement] = []
    cur: list[Token] = []
    depth = 0  # () and [] nesting
    brace_ctx: list[str] = []  # "init" braces stay inside the statement

    def flush() -> None:
        if cur:
            raws.append(_classify_java(cur))
            cur.clear()

    i = 0
    n = len(sig)
    while i < n:
        t = sig[i]
        # Statement keywords never occur mid-expression; a pending run before
        # one is an unterminated statement (error tolerance for missing ';').
        if t.kind == "word" and depth == 0 and brace_ctx[-1:] != ["init"]:
            if t.text in ("if", "for", "while", "switch", "catch", "else", "synchronized"):
                flush()
                i = _consume_java_header(sig, i, cur, raws)
                continue
            if cur and t.text in ("try", "do", "finally", "return", "break", "continue", "throw"):
                flush()
        cur.append(t)
        if t.text in ("(", "["):
            depth += 1
        elif t.text in (")", "]"):
            depth = max(0, depth - 1)
        elif t.text == "{":
            prev = cur[-2].text if len(cur) >= 2 else ""
            if depth > 0 or prev in ("=", ",", "(", "[", "{"):
                brace_ctx.append("init")
            else:
                brace_ctx.append("block")
                flush()
        elif t.text == "}":
            ctx = brace_ctx.pop() if brace_ctx else "block"
            if ctx == "block":
                closer = cur.pop()
                flush()
                cur.append(closer)
                flush()
        elif t.text == ";" and depth == 0:
            flush()
        elif t.text == ":" and depth == 0 and cur and cur[0].kind == "word" and cur[0].text in ("case", "default"):
            flush()
        i += 1
    flush()
    return raws


def _consume_java_header(sig: list[Token], i: int, cur: list[Token], raws: list[RawStatement]) -> int:
    """Consume a branch/loop header statement starting at ``sig[i]``.

    The header ends at its block-opening '{' when present, otherwise right
    after the condition's closing ')' (brace-less body).
    """
    n = len(sig)
    cur.append(sig[i])
    i += 1
    # "else if (...)" chains fold into one header statement.
    if cur[0].text == "else" and i < n and sig[i].kind == "word" and sig[i].text == "if":
        cur.append(sig[i])
        i += 1
    if i < n and sig[i].text == "(":
        depth = 0
        while i < n:
            cur.append(sig[i])
            if sig[i].text == "(":
                depth += 1
            elif sig[i].text == ")":
                depth -= 1
                if depth == 0:
                    i += 1
                    break
            i += 1
    if i < n and sig[i].text == "{":
        cur.append(sig[i])
        i += 1
        raws.append(_classify_java(cur))
        cur.clear()
        return i
    if i < n and sig[i].text == ";":
        # "while (c);" do-while tail: self-contained, no implicit body.
        cur.append(sig[i])
        i += 1
        raws.append(_classify_java(cur))
        cur.clear()
        return i
    raw = _classify_java(cur)
    raw.headerless = True
    raws.append(raw)
    cur.clear()
    return i


def _classify_java(tokens: list[Token]) -> RawStatement:
    toks = list(tokens)
    first = next((t.text for t in toks if t.kind == "word"), None)
    opens = toks[-1].text == "{"
    words = [t.text for t in toks if t.kind == "word"]
    if len(toks) == 1 and toks[0].text == "}":
        return RawStatement(toks, "block_close", "block_close", False, False)
    if len(toks) == 1 and toks[0].text == "{":
        return RawStatement(toks, "block_open", "block_open", True, False)
    if first in _JAVA_BRANCH:
        sym = ("else_if_header" if first == "else" and "if" in words[:2] else f"{first}_header")
        return RawStatement(toks, sym, "branch_header", opens, False)
    if first in _JAVA_LOOP:
        return RawStatement(toks, f"{first}_header", "loop_header", opens, False)
    if first in _JAVA_JUMP:
        return RawStatement(toks, f"{first}_stmt", "return", False, False)
    if opens:
        if any(w in ("class", "interface", "enum") for w in words):
            return RawStatement(toks, "class_header", "other", True, False)
        if any(t.text == "(" for t in toks):
            return RawStatement(toks, "method_header", "other", True, False)
        return RawStatement(toks, "block_open", "block_open", True, False)
    if first in ("package", "import"):
        return RawStatement(toks, "import_decl", "other", False, False)
    if _looks_like_java_declaration(toks):
        return RawStatement(toks, "declaration", "declaration", False, False)
    if any(t.kind == "op" and t.text in ASSIGN_OPS for t in toks):
        return RawStatement(toks, "assignment", "simple", False, False)
    if any(t.kind == "error" for t in toks):
        return RawStatement(toks, "error_statement", "other", False, False)
    return RawStatement(toks, "expr_statement", "simple", False, False)


def _looks_like_java_declaration(toks: list[Token]) -> bool:
    words = [t for t in toks if t.kind == "word"]
    if not words:
        return False
    if words[0].text in ("final",):
        words = words[1:]
    if not words:
        return False
    if words[0].text in _JAVA_PRIMITIVES:
        return True
    if words[0].text in JAVA_KEYWORDS:
        return False
    # "Type name ..." pattern: two adjacent non-keyword words.
    if len(words) >= 2 and words[1].text not in JAVA_KEYWORDS:
        idx = toks.index(words[0])
        rest = [t for t in toks[idx + 1 :] if not t.is_trivia]
        while rest and rest[0].text in ("[", "]"):
            rest = rest[1:]
        if rest and rest[0].kind == "word":
            return True
    return False


def _segment_python(tokens: list[Token]) -> list[RawStatement]:
    raws: list[RawStatement] = []
    cur: list[Token] = []
    depth = 0

    def flush() -> None:
        if cur:
            raws.append(_classify_python(cur))
            cur.clear()

    for t in tokens:
        if t.is_trivia:
            if t.kind == "newline" and depth == 0:
                flush()
            continue
        cur.append(t)
        if t.text in ("(", "[", "{"):
            depth += 1
        elif t.text in (")", "]", "}"):
            depth = max(0, depth - 1)
        elif t.text == ";" and depth == 0:
            flush()
    flush()
    return raws


def _classify_python(tokens: list[Token]) -> RawStatement:
    toks = list(tokens)
    first = next((t.text for t in toks if t.kind == "word"), None)
    if first in _PY_BRANCH:
        return RawStatement(toks, f"{first}_header", "branch_header", False, False)
    if first == "match" and toks[-1].text == ":":
        return RawStatement(toks, "match_header", "branch_header", False, False)
    if first in _PY_LOOP:
        return RawStatement(toks, f"{first}_header", "loop_header", False, False)
    if first in _PY_JUMP:
        return RawStatement(toks, f"{first}_stmt", "return", False, False)
    if first in ("def", "class"):
        return RawStatement(toks, f"{first}_header", "other", False, False)
    if first in ("import", "from", "global", "nonlocal"):
        return RawStatement(toks, "import_decl", "other", False, False)
    if any(t.kind == "error" for t in toks):
        return RawStatement(toks, "error_statement", "other", False, False)
    if any(t.kind == "op" and t.text in ASSIGN_OPS for t in toks):
        return RawStatement(toks, "assignment", "simple", False, False)
    return RawStatement(toks, "expr_statement", "simple", False, False)


_GROUP_LABEL = {"(": "paren_group", "[": "bracket_group", "{": "brace_group"}
_CLOSER = {"(": ")", "[": "]", "{": "}"}

_BINOPS = frozenset(
    [
        "*", "/", "+", "-", "%", "<", ">", "<=", ">=", "==", "!=", "&&", "||",
        "&", "|", "^", "<<", ">>", ">>>", "**", "//", "=", "+=", "-=", "*=",
        "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", "in", "is", "and", "or",
        "instanceof",
    ]
)

_OPERAND_LABELS = frozenset(
    ["identifier", "number", "string", "paren_group", "bracket_group", "brace_group", "binop",
     "true", "false", "null", "True", "False", "None"]
)


def _is_operand(node: TreeNode) -> bool:
    return node.label in _OPERAND_LABELS


def _fold_binops(items: list[TreeNode]) -> list[TreeNode]:
    """Left-fold operand/op runs into nested binop nodes.

    Depth mirrors expression length, which is what lets the tree metric
    penalize over-generated operator chains instead of flat token bags.
    """
    out: list[TreeNode] = []
    i = 0
    n = len(items)
    while i < n:
        node = items[i]
        if _is_operand(node):
            acc = node
            j = i + 1
            while (
                j + 1 < n
                and items[j].is_leaf
                and items[j].label in _BINOPS
                and _is_operand(items[j + 1])
            ):
                acc = TreeNode("binop", acc.start, items[j + 1].end, [acc, items[j], items[j + 1]])
                j += 2
            out.append(acc)
            i = j
        else:
            out.append(node)
            i += 1
    return out


def _leaf_label(tok: Token, lang: str) -> str:
    keywords = JAVA_KEYWORDS if lang == "java" else PY_KEYWORDS
    if tok.kind == "word":
        return tok.text if tok.text in keywords else "identifier"
    if tok.kind == "number":
        return "number"
    if tok.kind == "string":
        return "string"
    if tok.kind == "error":
        return "error_token"
    return tok.text


def _build_statement_node(raw: RawStatement, lang: str) -> TreeNode:
    node = TreeNode(raw.symbol, raw.start, raw.end)
    if raw.symbol == "error_statement":
        node.error = True
    stack = [node]
    # Interior '{' of a header statement opens the block, not a group.
    toks = raw.tokens[:-1] if raw.opens_block and raw.tokens[-1].text == "{" else list(raw.tokens)
    trailing = raw.tokens[-1:] if raw.opens_block and raw.tokens[-1].text == "{" else []
    for t in toks:
        if t.text in _GROUP_LABEL and t.kind == "punct":
            group = TreeNode(_GROUP_LABEL[t.text], t.start, t.end)
            group.children.append(TreeNode(t.text, t.start, t.end, text=t.text))
            stack[-1].children.append(group)
            stack.append(group)
        elif t.text in (")", "]", "}") and t.kind == "punct":
            if len(stack) > 1 and _CLOSER.get(stack[-1].children[0].text) == t.text:
                group = stack.pop()
                group.children.append(TreeNode(t.text, t.start, t.end, text=t.text))
                group.end = t.end
            else:
                leaf = TreeNode(t.text, t.start, t.end, error=True, text=t.text)
                stack[-1].children.append(leaf)
        else:
            leaf = TreeNode(_leaf_label(t, lang), t.start, t.end, text=t.text)
            if t.kind == "error":
                leaf.error = True
            stack[-1].children.append(leaf)
    while len(stack) > 1:
        # Unclosed group: flag and fold back into the statement.
        group = stack.pop()
        group.error = True
    for t in trailing:
        node.children.append(TreeNode(t.text, t.start, t.end, text=t.text))
    if any(ch.error and ch.label == "error_token" for ch in node.children):
        node.error = True
    _fold_tree(node)
    return node


def _fold_tree(node: TreeNode) -> None:
    for ch in node.children:
        _fold_tree(ch)
    if node.label in ("paren_group", "bracket_group", "brace_group"):
        opener, inner, closer = node.children[0], node.children[1:-1], node.children[-1:]
        if closer and closer[0].label in (")", "]", "}"):
            node.children = [opener] + _fold_binops(inner) + closer
        else:
            node.children = [opener] + _fold_binops(node.children[1:])
    elif not node.is_leaf:
        node.children = _fold_binops(node.children)
