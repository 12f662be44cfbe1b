"""Text syntax for rational expressions in x, z, x1, x2, t, u and the parameter q.

Grammar (left-associative binary operators, unary minus binds looser than ^)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' ['-' | '+'] INT)?
    atom  := INT | NAME | '(' expr ')'
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import ParseError
from .scalars import Scalar

VARIABLES = ("x", "z", "x1", "x2", "t", "u")
PARAMETER = "q"


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "ExprAST"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "ExprAST"
    right: "ExprAST"


@dataclass(frozen=True)
class Pow:
    base: "ExprAST"
    exp: int


ExprAST = Union[Num, Sym, Neg, Bin, Pow]


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
        elif c in "+-*/^()":
            toks.append((c, c, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text, names):
        self.toks = _tokenize(text)
        self.pos = 0
        self.names = names
        # (divisor AST, offset) pairs, checked for syntactic zero after parsing
        self.divisors = []

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, what):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {what}", tok[2])
        return self.take()

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            start = self.peek()[2]
            right = self.unary()
            if op == "/":
                self.divisors.append((right, start))
            node = Bin(op, node, right)
        return node

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return Neg(self.unary())
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            sign = 1
            if self.peek()[0] in ("-", "+"):
                sign = -1 if self.take()[0] == "-" else 1
            tok = self.expect("int", "integer exponent")
            return Pow(base, sign * int(tok[1]))
        return base

    def atom(self):
        kind, val, off = self.peek()
        if kind == "int":
            self.take()
            return Num(int(val))
        if kind == "name":
            if val not in self.names:
                raise ParseError(f"unknown symbol {val!r}", off)
            self.take()
            return Sym(val)
        if kind == "(":
            self.take()
            node = self.expr()
            self.expect(")", "')'")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", off)
        raise ParseError(f"unexpected {val!r}", off)


def parse_expr(text: str, variables=VARIABLES) -> ExprAST:
    """Parse ``text`` into an AST; raises :class:`ParseError` with a byte offset."""
    if not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, set(variables) | {PARAMETER})
    node = p.expr()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    for div, off in p.divisors:
        if to_rational(div).is_zero():
            raise ParseError("division by zero", off)
    return node


# --- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_text(node: ExprAST) -> str:
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        return "-" + (inner if _prec(node.arg) >= 3 else f"({inner})")
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{node.exp}"
    lp = _prec(node.left)
    rp = _prec(node.right)
    own = _PREC[node.op]
    left = to_text(node.left)
    right = to_text(node.right)
    if lp < own:
        left = f"({left})"
    if rp <= own:
        right = f"({right})"
    sep = f" {node.op} " if own == 1 else node.op
    return f"{left}{sep}{right}"


# --- evaluation -------------------------------------------------------------

def to_rational(node: ExprAST):
    """Evaluate an AST to a :class:`~phical.series.RationalExpr`."""
    from .series import MPoly, RationalExpr

    def ev(n):
        if isinstance(n, Num):
            return RationalExpr.const(Scalar.const(n.value))
        if isinstance(n, Sym):
            if n.name == PARAMETER:
                return RationalExpr.const(Scalar.q())
            return RationalExpr(MPoly.var(n.name))
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, Pow):
            return ev(n.base) ** n.exp
        a, b = ev(n.left), ev(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        return a / b

    return ev(node)


def parse_rational(text: str, variables=VARIABLES):
    return to_rational(parse_expr(text, variables))


def parse_scalar(text: str) -> Scalar:
    """Parse an element of Q(q); any other symbol is rejected."""
    node = parse_expr(text, variables=())
    r = to_rational(node)
    return r.as_scalar()
