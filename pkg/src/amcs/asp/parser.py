"""Recursive-descent parser for the packing-program fragment."""

from __future__ import annotations

import re
from typing import Union

from .syntax import (
    AGGREGATE_KINDS,
    Aggregate,
    AggregateElement,
    ChoiceElement,
    ChoiceHead,
    Comparison,
    Literal,
    Optimize,
    OptimizeElement,
    Program,
    RangeBind,
    Rule,
    check_program_safety,
)
from .terms import NIL, BinOp, Constant, Function, Negate, String, Variable, make_list


class ParseError(ValueError):
    """Syntax error at a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<block>%\*.*?\*%)
  | (?P<comment>%[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<directive>\#[a-z]+)
  | (?P<ident>[a-z][A-Za-z0-9_']*|__[A-Za-z0-9_']+)
  | (?P<var>[A-Z][A-Za-z0-9_']*|_[A-Za-z0-9_']*)
  | (?P<op>:-|\.\.|<=|>=|!=|<>|==|[.,;:(){}\[\]|<>=+\-*/\\])
    """,
    re.VERBOSE | re.DOTALL,
)

_UNESCAPE = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment", "block"):
            if kind == "op" and chunk == "<>":
                chunk = "!="
            elif kind == "op" and chunk == "==":
                chunk = "="
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.anon = 0

    # token helpers

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, offset=1) -> _Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "directive") and t.text == text

    def error(self, message: str):
        raise ParseError(message, self.tok.line, self.tok.col)

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    # statements

    def program(self) -> Program:
        rules, optimize = [], []
        while self.tok.kind != "eof":
            if self.tok.kind == "directive" and self.tok.text in ("#maximize", "#minimize"):
                optimize.append(self.optimize())
            else:
                rules.append(self.rule())
        return Program(tuple(rules), tuple(optimize))

    def optimize(self) -> Optimize:
        sense = self.tok.text[1:]
        self.i += 1
        self.expect("{")
        elements = []
        if not self.at("}"):
            while True:
                terms = [self.term()]
                while self.accept(","):
                    terms.append(self.term())
                cond = self.condition() if self.accept(":") else ()
                elements.append(OptimizeElement(tuple(terms), cond))
                if not self.accept(";"):
                    break
        self.expect("}")
        self.expect(".")
        return Optimize(sense, tuple(elements))

    def rule(self) -> Rule:
        if self.accept(":-"):
            body = self.body()
            self.expect(".")
            return Rule(None, body)
        head = self.head()
        body = ()
        if self.accept(":-"):
            body = self.body()
        self.expect(".")
        return Rule(head, body)

    def head(self):
        if self.at("{"):
            return self.choice(None)
        start = self.i
        t = self.term()
        if self.at("{"):
            return self.choice(t)
        if type(t) not in (Constant, Function):
            self.i = start
            self.error("expected an atom")
        return t

    def choice(self, lower) -> ChoiceHead:
        self.expect("{")
        elements = []
        if not self.at("}"):
            while True:
                atom = self.atom()
                cond = self.condition() if self.accept(":") else ()
                elements.append(ChoiceElement(atom, cond))
                if not self.accept(";"):
                    break
        self.expect("}")
        upper = None
        if not self.at(":-") and not self.at("."):
            upper = self.term()
        return ChoiceHead(lower, upper, tuple(elements))

    def body(self) -> tuple:
        if self.at("."):
            return ()
        lits = [self.body_literal()]
        while self.accept(","):
            lits.append(self.body_literal())
        return tuple(lits)

    def condition(self) -> tuple:
        lits = [self.body_literal(allow_aggregate=False)]
        while self.accept(","):
            lits.append(self.body_literal(allow_aggregate=False))
        return tuple(lits)

    def body_literal(self, allow_aggregate=True):
        if self.tok.kind == "ident" and self.tok.text == "not" and self.peek().kind == "ident":
            self.i += 1
            return Literal(self.atom(), True)
        lhs = self.term()
        if self.tok.kind == "op" and self.tok.text in ("<", "<=", ">", ">=", "=", "!="):
            op = self.tok.text
            self.i += 1
            if op == "=" and self.tok.kind == "directive":
                if not allow_aggregate:
                    self.error("aggregates are not allowed here")
                return self.aggregate(lhs)
            rhs = self.term()
            if op == "=" and self.accept(".."):
                if type(lhs) is not Variable:
                    self.error("range needs a variable on the left")
                return RangeBind(lhs, rhs, self.term())
            return Comparison(op, lhs, rhs)
        if type(lhs) not in (Constant, Function):
            self.error("expected a literal")
        return Literal(lhs, False)

    def aggregate(self, target) -> Aggregate:
        kind = self.tok.text[1:]
        if kind not in AGGREGATE_KINDS:
            self.error(f"unsupported aggregate #{kind}")
        self.i += 1
        self.expect("{")
        elements = []
        if not self.at("}"):
            while True:
                terms = [self.term()]
                while self.accept(","):
                    terms.append(self.term())
                cond = self.condition() if self.accept(":") else ()
                elements.append(AggregateElement(tuple(terms), cond))
                if not self.accept(";"):
                    break
        self.expect("}")
        return Aggregate(target, kind, tuple(elements))

    def atom(self):
        t = self.term()
        if type(t) not in (Constant, Function):
            self.error("expected an atom")
        return t

    # terms

    def term(self):
        left = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            left = _fold(BinOp(op, left, self.product()))
        return left

    def product(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/", "\\"):
            op = self.tok.text
            self.i += 1
            left = _fold(BinOp(op, left, self.unary()))
        return left

    def unary(self):
        if self.accept("-"):
            arg = self.unary()
            if type(arg) is int:
                return -arg
            return Negate(arg)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return int(t.text)
        if t.kind == "string":
            self.i += 1
            body = t.text[1:-1]
            return String(re.sub(r"\\(.)", lambda m: _UNESCAPE.get(m.group(1), m.group(1)), body))
        if t.kind == "var":
            self.i += 1
            if t.text == "_":
                self.anon += 1
                return Variable(f"_{self.anon}")
            return Variable(t.text)
        if t.kind == "ident":
            self.i += 1
            if self.accept("("):
                args = [self.term()]
                while self.accept(","):
                    args.append(self.term())
                self.expect(")")
                return Function(t.text, args)
            return Constant(t.text)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if self.accept("["):
            if self.accept("]"):
                return NIL
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            tail = NIL
            if self.accept("|"):
                tail = self.term()
            self.expect("]")
            return make_list(items, tail)
        self.error(f"unexpected {t.text or 'end of input'!r}")


def _fold(op: BinOp):
    if type(op.left) is int and type(op.right) is int:
        from .evaluation import arith

        value = arith(op.op, op.left, op.right)
        if value is not None:
            return value
    return op


def parse(text: Union[str, bytes]) -> Program:
    """Parse program text; raises :class:`ParseError` or ``UnsafeRule``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    program = _Parser(text).program()
    check_program_safety(program)
    return program


def parse_term(text: str):
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.error("trailing input after term")
    return t


def parse_facts(text: Union[str, bytes]) -> set:
    """Parse a text of ground facts into a set of atoms."""
    program = parse(text)
    facts = set()
    for i, rule in enumerate(program.rules):
        if rule.body or rule.is_choice or rule.head is None or program.optimize:
            raise ValueError(f"statement {i} is not a fact")
        facts.add(rule.head)
    return facts
