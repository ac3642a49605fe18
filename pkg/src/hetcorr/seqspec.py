"""Parser and evaluator for parameter-sequence expressions.

A sequence expression is a tiny arithmetic formula in the single free
variable ``i`` (the 1-based sequence index), e.g. ``"sin(i)"``,
``"exp(-abs(sin(i)))"``, ``"3/5 - 1/i"``, ``"i"``.

Grammar (recursive descent, standard precedence, left-associative):

    expr   :=  term (('+' | '-') term)*
    term   :=  unary (('*' | '/') unary)*
    unary  :=  '-' unary | atom
    atom   :=  NUMBER | 'i' | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Unary minus binds tighter than '*' and '/'.  The function set is fixed:
``sin``, ``exp``, ``abs`` (one argument) and ``pow`` (two arguments).
There are no user-defined names; any identifier other than ``i`` and the
functions above is rejected.

A parsed :class:`SeqSpec` is immutable and safe to share across threads.
Evaluation is in double precision and is total for every integer i >= 1
except where a division by zero occurs, which raises :class:`SeqEvalError`
(as does any non-finite intermediate such as an overflowing ``exp``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import SeqEvalError, SeqSyntaxError

_FUNCTIONS = {"sin": 1, "exp": 1, "abs": 1, "pow": 2}


# --- AST nodes (frozen so two parses of equivalent text compare equal) ---


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    """The index variable ``i``."""


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple["Node", ...]


Node = Const | Var | Neg | BinOp | Func


@dataclass(frozen=True)
class SeqSpec:
    """A parsed sequence expression: original source text plus its ast."""

    source: str
    ast: Node

    def canonical(self) -> str:
        """Fully parenthesized rendering; reparsing it yields an equal ast."""
        return to_source(self.ast)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<punct>[()+\-*/,]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # skip over any leading whitespace to report the real offender
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            if bad >= len(source):
                break
            raise SeqSyntaxError(f"unexpected character {source[bad]!r}", bad)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_punct(self, text: str):
        kind, val, pos = self.peek()
        if kind != "punct" or val != text:
            raise SeqSyntaxError(f"expected {text!r}, found {val or 'end of input'!r}", pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise SeqSyntaxError(f"unexpected trailing input {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "punct" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "punct" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "punct" and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Node:
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "punct" and nv == "(":
                if val not in _FUNCTIONS:
                    raise SeqSyntaxError(f"unknown function {val!r}", pos)
                self.advance()
                args = [self.expr()]
                while True:
                    k2, v2, _ = self.peek()
                    if k2 == "punct" and v2 == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_punct(")")
                if len(args) != _FUNCTIONS[val]:
                    raise SeqSyntaxError(
                        f"{val} takes {_FUNCTIONS[val]} argument(s), got {len(args)}", pos
                    )
                return Func(val, tuple(args))
            if val == "i":
                return Var()
            raise SeqSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "punct" and val == "(":
            node = self.expr()
            self.expect_punct(")")
            return node
        raise SeqSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_seq(source: str) -> SeqSpec:
    """Parse an expression in the variable ``i`` into an immutable SeqSpec.

    Raises SeqSyntaxError (with position) on malformed input, unknown
    identifiers, or unknown functions.
    """
    if not isinstance(source, str) or not source.strip():
        raise SeqSyntaxError("empty expression", 0)
    return SeqSpec(source=source, ast=_Parser(source).parse())


def to_source(node: Node) -> str:
    """Render an ast back to text, fully parenthesized."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return "i"
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Func):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an ast node: {node!r}")


def _eval_node(node: Node, i: np.ndarray) -> np.ndarray:
    if isinstance(node, Const):
        return np.full_like(i, node.value)
    if isinstance(node, Var):
        return i
    if isinstance(node, Neg):
        return -_eval_node(node.arg, i)
    if isinstance(node, BinOp):
        left = _eval_node(node.left, i)
        right = _eval_node(node.right, i)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        zero = right == 0.0
        if zero.any():
            raise SeqEvalError("division by zero", index=int(i[zero.argmax()]))
        return left / right
    if isinstance(node, Func):
        if node.name == "sin":
            return np.sin(_eval_node(node.args[0], i))
        if node.name == "exp":
            return np.exp(_eval_node(node.args[0], i))
        if node.name == "abs":
            return np.abs(_eval_node(node.args[0], i))
        return np.power(_eval_node(node.args[0], i), _eval_node(node.args[1], i))
    raise TypeError(f"not an ast node: {node!r}")


def eval_seq_array(spec: SeqSpec, indices: np.ndarray) -> np.ndarray:
    """Evaluate the sequence at an array of integer indices (each >= 1)."""
    idx = np.asarray(indices, dtype=np.float64)
    if idx.size and idx.min() < 1:
        raise SeqEvalError("sequence indices start at 1", index=int(idx.min()))
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval_node(spec.ast, idx)
    bad = ~np.isfinite(out)
    if bad.any():
        raise SeqEvalError("non-finite value", index=int(idx[bad.argmax()]))
    return out


def eval_seq(spec: SeqSpec, i: int) -> float:
    """Evaluate t_i for one index i >= 1.

    Delegates to the array path so scalar and vector evaluation cannot
    disagree.
    """
    if i < 1:
        raise SeqEvalError("sequence indices start at 1", index=i)
    return float(eval_seq_array(spec, np.array([i]))[0])


def eval_seq_prefix(spec: SeqSpec, n: int) -> np.ndarray:
    """Evaluate t_1 .. t_n as a float64 array."""
    if n < 1:
        raise SeqEvalError("need n >= 1", index=n)
    return eval_seq_array(spec, np.arange(1, n + 1))


def is_identity(spec: SeqSpec) -> bool:
    """True when the expression is exactly the index variable ``i``."""
    return isinstance(spec.ast, Var)


def constant_value(spec: SeqSpec) -> float | None:
    """The sequence's constant value when it does not depend on i, else None."""

    def uses_i(node: Node) -> bool:
        if isinstance(node, Var):
            return True
        if isinstance(node, Neg):
            return uses_i(node.arg)
        if isinstance(node, BinOp):
            return uses_i(node.left) or uses_i(node.right)
        if isinstance(node, Func):
            return any(uses_i(a) for a in node.args)
        return False

    if uses_i(spec.ast):
        return None
    return eval_seq(spec, 1)
