"""A small turtle-graphics language: parser, AST, rubric grader, serialization.

The language is a textual stand-in for the block-based spiral assignment the
grader targets.  Programs are whitespace-separated token streams; ``#`` starts
a line comment.  Grammar::

    program  := (procdef | stmt)*
    procdef  := "to" NAME param* stmt* "end"
    param    := ":" NAME
    stmt     := "pendown" | "move" expr | "turn" expr
              | "repeat" expr "[" stmt* "]"
              | "set" NAME expr | "change" NAME expr
              | "ask" STRING NAME | "call" NAME expr*
    expr     := term ("+" term)*
    term     := primary ("*" primary)*
    primary  := INT | ":" NAME | NAME

``[``, ``]``, ``+`` and ``*`` must be standalone tokens.  STRING is a single
token delimited by double quotes (no embedded whitespace).

ASTs are immutable ordered labeled trees.  Internal nodes carry a label from a
fixed closed set; leaf nodes carry source text (identifiers, integer literals,
quoted strings) or the ``PenDown`` marker.  Leaf literals keep their text so
tree edit distance and path extraction see value differences.

The rubric grader is a purely structural operationalization of the six
pass/fail items used for the spiral assignment.  The original grading was
manual; these predicates are our formalization of it (see README).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

STRUCTURAL_LABELS = frozenset(
    {
        "Program",
        "ProcDef",
        "Name",
        "Param",
        "Body",
        "PenDown",
        "Move",
        "Turn",
        "Repeat",
        "Block",
        "Set",
        "Change",
        "Ask",
        "Str",
        "Call",
        "Add",
        "Mul",
        "Lit",
        "ParamRef",
        "Var",
    }
)

#: rubric item names in grading order; index in this tuple == rubric item id.
RUBRIC_ITEMS = (
    "procedure_one_param",
    "pen_down",
    "variable_init",
    "repeat_rotations",
    "forward_turn",
    "variable_increment",
)

N_RUBRIC_ITEMS = len(RUBRIC_ITEMS)


class TurtleSyntaxError(Exception):
    """Malformed source; carries 1-based line/column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class SchemaError(Exception):
    """Malformed portable AST or corpus document."""


@dataclass(frozen=True)
class AstNode:
    """One node of an ordered labeled tree; the root node stands for the tree."""

    label: str
    children: tuple["AstNode", ...] = ()

    def __post_init__(self):
        if not self.label:
            raise ValueError("AST node label must be non-empty")

    def is_leaf(self) -> bool:
        return not self.children


# An Ast is identified with its root node throughout the package.
Ast = AstNode


def iter_nodes(root: Ast):
    """Preorder traversal (children in order)."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def tree_size(root: Ast) -> int:
    return sum(1 for _ in iter_nodes(root))


def leaves(root: Ast) -> list[AstNode]:
    """Left-to-right leaf sequence."""
    return [n for n in iter_nodes(root) if n.is_leaf()]


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_RE = re.compile(r"-?\d+\Z")
_TOKEN_RE = re.compile(r"\S+")

KEYWORDS = frozenset(
    {"to", "end", "pendown", "move", "turn", "repeat", "set", "change",
     "ask", "call", "[", "]", "+", "*"}
)


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(source.splitlines(), start=1):
        code = line.split("#", 1)[0]
        for m in _TOKEN_RE.finditer(code):
            tokens.append(_Token(m.group(), lineno, m.start() + 1))
    return tokens


def _is_name(text: str) -> bool:
    return bool(_NAME_RE.match(text)) and text not in KEYWORDS


def _is_int(text: str) -> bool:
    return bool(_INT_RE.match(text))


def _is_param(text: str) -> bool:
    return text.startswith(":") and _is_name(text[1:])


def _is_string(text: str) -> bool:
    return len(text) >= 2 and text.startswith('"') and text.endswith('"')


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def _eof_pos(self) -> tuple[int, int]:
        if self.tokens:
            last = self.tokens[-1]
            return last.line, last.column + len(last.text)
        return 1, 1

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> _Token:
        tok = self.peek()
        if tok is None:
            line, col = self._eof_pos()
            raise TurtleSyntaxError("unexpected end of input", line, col)
        self.pos += 1
        return tok

    def expect(self, text: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            line, col = self._eof_pos()
            raise TurtleSyntaxError(f"expected {what}", line, col)
        if tok.text != text:
            raise TurtleSyntaxError(
                f"expected {what}, found {tok.text!r}", tok.line, tok.column
            )
        return self.advance()

    def name(self, what: str) -> str:
        tok = self.advance()
        if not _is_name(tok.text):
            raise TurtleSyntaxError(
                f"expected {what}, found {tok.text!r}", tok.line, tok.column
            )
        return tok.text

    # -- grammar rules ----------------------------------------------------

    def program(self) -> Ast:
        items = []
        while self.peek() is not None:
            tok = self.peek()
            if tok.text == "to":
                items.append(self.procdef())
            else:
                items.append(self.statement())
        return AstNode("Program", tuple(items))

    def procdef(self) -> AstNode:
        self.expect("to", "'to'")
        name = self.name("procedure name")
        params = []
        while (tok := self.peek()) is not None and tok.text.startswith(":"):
            if not _is_param(tok.text):
                raise TurtleSyntaxError(
                    f"invalid parameter {tok.text!r}", tok.line, tok.column
                )
            self.advance()
            params.append(AstNode("Param", (AstNode(tok.text[1:]),)))
        body = []
        while True:
            tok = self.peek()
            if tok is None:
                line, col = self._eof_pos()
                raise TurtleSyntaxError("missing 'end' for procedure", line, col)
            if tok.text == "end":
                self.advance()
                break
            body.append(self.statement())
        return AstNode(
            "ProcDef",
            (AstNode("Name", (AstNode(name),)), *params, AstNode("Body", tuple(body))),
        )

    def statement(self) -> AstNode:
        tok = self.advance()
        kw = tok.text
        if kw == "pendown":
            return AstNode("PenDown")
        if kw == "move":
            return AstNode("Move", (self.expression(),))
        if kw == "turn":
            return AstNode("Turn", (self.expression(),))
        if kw == "repeat":
            count = self.expression()
            self.expect("[", "'['")
            body = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    line, col = self._eof_pos()
                    raise TurtleSyntaxError("unclosed '[' block", line, col)
                if nxt.text == "]":
                    self.advance()
                    break
                body.append(self.statement())
            return AstNode("Repeat", (count, AstNode("Block", tuple(body))))
        if kw == "set" or kw == "change":
            var = self.name("variable name")
            value = self.expression()
            label = "Set" if kw == "set" else "Change"
            return AstNode(label, (AstNode("Name", (AstNode(var),)), value))
        if kw == "ask":
            stok = self.advance()
            if not _is_string(stok.text):
                raise TurtleSyntaxError(
                    f"expected string literal, found {stok.text!r}",
                    stok.line,
                    stok.column,
                )
            var = self.name("variable name")
            return AstNode(
                "Ask",
                (AstNode("Str", (AstNode(stok.text),)),
                 AstNode("Name", (AstNode(var),))),
            )
        if kw == "call":
            proc = self.name("procedure name")
            args = []
            while (nxt := self.peek()) is not None and self._starts_expression(nxt.text):
                args.append(self.expression())
            return AstNode("Call", (AstNode("Name", (AstNode(proc),)), *args))
        raise TurtleSyntaxError(f"unknown statement {kw!r}", tok.line, tok.column)

    @staticmethod
    def _starts_expression(text: str) -> bool:
        return _is_int(text) or _is_param(text) or _is_name(text)

    def expression(self) -> AstNode:
        node = self.term()
        while (tok := self.peek()) is not None and tok.text == "+":
            self.advance()
            node = AstNode("Add", (node, self.term()))
        return node

    def term(self) -> AstNode:
        node = self.primary()
        while (tok := self.peek()) is not None and tok.text == "*":
            self.advance()
            node = AstNode("Mul", (node, self.primary()))
        return node

    def primary(self) -> AstNode:
        tok = self.advance()
        if _is_int(tok.text):
            return AstNode("Lit", (AstNode(tok.text),))
        if _is_param(tok.text):
            return AstNode("ParamRef", (AstNode(tok.text[1:]),))
        if _is_name(tok.text):
            return AstNode("Var", (AstNode(tok.text),))
        raise TurtleSyntaxError(
            f"expected expression, found {tok.text!r}", tok.line, tok.column
        )


def parse(source: str) -> Ast:
    """Parse turtle source text into an AST; raises :class:`TurtleSyntaxError`."""
    return _Parser(_tokenize(source)).program()


# ---------------------------------------------------------------------------
# Unparser (for human-readable cluster reports)
# ---------------------------------------------------------------------------


def to_source(root: Ast) -> str:
    """Render an AST back to formatted source text (one statement per line)."""
    if root.label != "Program":
        raise ValueError("to_source expects a Program root")
    lines: list[str] = []
    for item in root.children:
        _emit(item, lines, 0)
    return "\n".join(lines) + ("\n" if lines else "")


def _expr_text(node: AstNode) -> str:
    if node.label == "Lit":
        return node.children[0].label
    if node.label == "ParamRef":
        return ":" + node.children[0].label
    if node.label == "Var":
        return node.children[0].label
    if node.label == "Add":
        return f"{_expr_text(node.children[0])} + {_expr_text(node.children[1])}"
    if node.label == "Mul":
        return f"{_expr_text(node.children[0])} * {_expr_text(node.children[1])}"
    raise ValueError(f"not an expression node: {node.label}")


def _emit(node: AstNode, lines: list[str], depth: int) -> None:
    pad = "  " * depth
    label = node.label
    if label == "ProcDef":
        name = node.children[0].children[0].label
        params = " ".join(
            ":" + c.children[0].label for c in node.children[1:-1]
        )
        header = f"to {name} {params}".rstrip()
        lines.append(pad + header)
        for stmt in node.children[-1].children:
            _emit(stmt, lines, depth + 1)
        lines.append(pad + "end")
    elif label == "PenDown":
        lines.append(pad + "pendown")
    elif label == "Move":
        lines.append(pad + f"move {_expr_text(node.children[0])}")
    elif label == "Turn":
        lines.append(pad + f"turn {_expr_text(node.children[0])}")
    elif label == "Repeat":
        lines.append(pad + f"repeat {_expr_text(node.children[0])} [")
        for stmt in node.children[1].children:
            _emit(stmt, lines, depth + 1)
        lines.append(pad + "]")
    elif label in ("Set", "Change"):
        var = node.children[0].children[0].label
        lines.append(pad + f"{label.lower()} {var} {_expr_text(node.children[1])}")
    elif label == "Ask":
        text = node.children[0].children[0].label
        var = node.children[1].children[0].label
        lines.append(pad + f"ask {text} {var}")
    elif label == "Call":
        name = node.children[0].children[0].label
        args = " ".join(_expr_text(a) for a in node.children[1:])
        lines.append(pad + f"call {name} {args}".rstrip())
    else:
        raise ValueError(f"cannot render node {label!r} as a statement")


# ---------------------------------------------------------------------------
# Rubric grading
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RubricScore:
    """Six pass/fail items in grading order; overall passes iff every item does."""

    items: tuple[bool, bool, bool, bool, bool, bool]

    @property
    def overall(self) -> bool:
        return all(self.items)


def _procdefs(root: Ast) -> list[AstNode]:
    return [n for n in iter_nodes(root) if n.label == "ProcDef"]


def _proc_params(proc: AstNode) -> list[str]:
    return [c.children[0].label for c in proc.children if c.label == "Param"]


def _proc_body(proc: AstNode) -> AstNode:
    return proc.children[-1]


def _contains(root: AstNode, label: str) -> bool:
    return any(n.label == label for n in iter_nodes(root))


def _param_drives_repeat(proc: AstNode) -> bool:
    params = _proc_params(proc)
    if len(params) != 1:
        return False
    target = params[0]
    for node in iter_nodes(_proc_body(proc)):
        if node.label == "Repeat":
            count = node.children[0]
            for sub in iter_nodes(count):
                if sub.label == "ParamRef" and sub.children[0].label == target:
                    return True
    return False


def _move_length_vars(root: Ast) -> set[str]:
    names = set()
    for node in iter_nodes(root):
        if node.label == "Move":
            for sub in iter_nodes(node.children[0]):
                if sub.label == "Var":
                    names.add(sub.children[0].label)
    return names


def grade_rubric(root: Ast) -> RubricScore:
    """Evaluate the six structural rubric predicates on a valid AST.

    Total function: every AST grades to some score.  Items, in order:

    0. a procedure with exactly one parameter whose parameter appears in the
       count expression of a ``repeat`` inside the procedure body;
    1. ``pendown`` inside that procedure (inside any procedure when no
       procedure satisfies item 0);
    2. a ``set`` initializing a variable that some ``move`` length uses;
    3. any ``repeat`` present;
    4. some ``repeat`` block containing both a ``move`` and a ``turn``;
    5. a ``change`` on a move-length variable inside a ``repeat`` block.
    """
    procs = _procdefs(root)
    qualifying = [p for p in procs if _param_drives_repeat(p)]

    r0 = bool(qualifying)

    hosts = qualifying if qualifying else procs
    r1 = any(_contains(_proc_body(p), "PenDown") for p in hosts)

    set_vars = {
        n.children[0].children[0].label
        for n in iter_nodes(root)
        if n.label == "Set"
    }
    length_vars = _move_length_vars(root)
    r2 = bool(set_vars & length_vars)

    repeats = [n for n in iter_nodes(root) if n.label == "Repeat"]
    r3 = bool(repeats)

    r4 = any(
        _contains(rep.children[1], "Move") and _contains(rep.children[1], "Turn")
        for rep in repeats
    )

    r5 = any(
        node.label == "Change"
        and node.children[0].children[0].label in length_vars
        for rep in repeats
        for node in iter_nodes(rep.children[1])
    )

    return RubricScore((r0, r1, r2, r3, r4, r5))


# ---------------------------------------------------------------------------
# Portable AST serialization
# ---------------------------------------------------------------------------

_NODE_KEYS = {"label", "children"}


def ast_to_dict(root: Ast) -> dict:
    return {
        "label": root.label,
        "children": [ast_to_dict(c) for c in root.children],
    }


def ast_from_dict(doc) -> Ast:
    if not isinstance(doc, dict):
        raise SchemaError(f"AST node must be an object, got {type(doc).__name__}")
    unknown = set(doc) - _NODE_KEYS
    if unknown:
        raise SchemaError(f"unknown AST node keys: {sorted(unknown)}")
    if "label" not in doc:
        raise SchemaError("AST node missing 'label'")
    label = doc["label"]
    if not isinstance(label, str) or not label:
        raise SchemaError("AST node 'label' must be a non-empty string")
    children = doc.get("children", [])
    if not isinstance(children, list):
        raise SchemaError("AST node 'children' must be a list")
    return AstNode(label, tuple(ast_from_dict(c) for c in children))


def to_portable(root: Ast) -> str:
    """Serialize an AST to its portable JSON text form."""
    return json.dumps(ast_to_dict(root), sort_keys=True)


def from_portable(text: str) -> Ast:
    """Parse portable JSON text back into an AST; raises :class:`SchemaError`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return ast_from_dict(doc)
