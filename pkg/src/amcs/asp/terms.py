"""Logic terms, the total term order, and canonical rendering.

Integers are plain Python ``int`` values.  Every other term kind is an
immutable object with a cached hash.  Lists are encoded with the binary
function ``__cell`` and the terminator constant ``__nil``.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Iterator, Union

CELL = "__cell"
NIL_NAME = "__nil"


class NonGround(ValueError):
    """Raised when an operation that needs a ground term receives a variable."""


class _Node:
    __slots__ = ("_hash", "_key")

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"{type(self).__name__}({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


class Constant(_Node):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("c", name))
        self._key = None

    def __eq__(self, other):
        return type(other) is Constant and other.name == self.name

    __hash__ = _Node.__hash__


class String(_Node):
    __slots__ = ("text",)

    def __init__(self, text: str):
        self.text = text
        self._hash = hash(("s", text))
        self._key = None

    def __eq__(self, other):
        return type(other) is String and other.text == self.text

    __hash__ = _Node.__hash__


class Function(_Node):
    __slots__ = ("name", "args")

    def __init__(self, name: str, args):
        args = tuple(args)
        if not args:
            raise ValueError("function terms need at least one argument")
        self.name = name
        self.args = args
        self._hash = hash(("f", name, args))
        self._key = None

    def __eq__(self, other):
        return (
            type(other) is Function
            and other._hash == self._hash
            and other.name == self.name
            and other.args == self.args
        )

    __hash__ = _Node.__hash__


class Variable(_Node):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("v", name))
        self._key = None

    def __eq__(self, other):
        return type(other) is Variable and other.name == self.name

    __hash__ = _Node.__hash__


class BinOp(_Node):
    """Integer arithmetic: ``+ - * /`` and ``\\`` (modulo)."""

    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left, right):
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash(("o", op, left, right))
        self._key = None

    def __eq__(self, other):
        return (
            type(other) is BinOp
            and other.op == self.op
            and other.left == self.left
            and other.right == self.right
        )

    __hash__ = _Node.__hash__


class Negate(_Node):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg
        self._hash = hash(("n", arg))
        self._key = None

    def __eq__(self, other):
        return type(other) is Negate and other.arg == self.arg

    __hash__ = _Node.__hash__


Term = Union[int, Constant, String, Function, Variable, BinOp, Negate]

NIL = Constant(NIL_NAME)


class Ordering(IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def is_integer(t) -> bool:
    return type(t) is int


def variables(t) -> Iterator[Variable]:
    """Yield every variable occurrence in ``t`` (left to right)."""
    tt = type(t)
    if tt is Variable:
        yield t
    elif tt is Function:
        for a in t.args:
            yield from variables(a)
    elif tt is BinOp:
        yield from variables(t.left)
        yield from variables(t.right)
    elif tt is Negate:
        yield from variables(t.arg)


def is_ground(t) -> bool:
    for _ in variables(t):
        return False
    return True


def has_arithmetic(t) -> bool:
    tt = type(t)
    if tt is BinOp or tt is Negate:
        return True
    if tt is Function:
        return any(has_arithmetic(a) for a in t.args)
    return False


def depth(t) -> int:
    if type(t) is Function:
        return 1 + max(depth(a) for a in t.args)
    return 1


def term_key(t):
    """Sort key realising the total order on ground terms.

    Integers < constants < strings < functions; constants and strings compare
    bytewise, functions by arity, then name, then arguments.
    """
    tt = type(t)
    if tt is int:
        return (0, t)
    key = t._key
    if key is not None:
        return key
    if tt is Constant:
        key = (1, t.name.encode())
    elif tt is String:
        key = (2, t.text.encode())
    elif tt is Function:
        key = (3, len(t.args), t.name.encode(), tuple(term_key(a) for a in t.args))
    else:
        raise NonGround(f"term {render(t)} is not ground")
    t._key = key
    return key


def compare_terms(a, b) -> Ordering:
    ka, kb = term_key(a), term_key(b)
    if ka < kb:
        return Ordering.LT
    if ka > kb:
        return Ordering.GT
    return Ordering.EQ


def make_list(items, tail=NIL):
    out = tail
    for item in reversed(list(items)):
        out = Function(CELL, (item, out))
    return out


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in text) + '"'


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "\\": 2}


def render(t) -> str:
    """Canonical text of a term; ``__cell`` chains print in list syntax."""
    tt = type(t)
    if tt is int:
        return str(t)
    if tt is Constant:
        return "[]" if t.name == NIL_NAME else t.name
    if tt is String:
        return _quote(t.text)
    if tt is Variable:
        return t.name
    if tt is Function:
        if t.name == CELL and len(t.args) == 2:
            items = []
            while type(t) is Function and t.name == CELL and len(t.args) == 2:
                items.append(render(t.args[0]))
                t = t.args[1]
            if t == NIL:
                return "[" + ",".join(items) + "]"
            return "[" + ",".join(items) + "|" + render(t) + "]"
        return t.name + "(" + ",".join(render(a) for a in t.args) + ")"
    if tt is Negate:
        inner = render(t.arg)
        if type(t.arg) is BinOp:
            inner = f"({inner})"
        return "-" + inner
    if tt is BinOp:
        prec = _PRECEDENCE[t.op]
        left = render(t.left)
        if type(t.left) is BinOp and _PRECEDENCE[t.left.op] < prec:
            left = f"({left})"
        right = render(t.right)
        if type(t.right) is BinOp and _PRECEDENCE[t.right.op] <= prec:
            right = f"({right})"
        return f"{left}{t.op}{right}"
    raise TypeError(f"not a term: {t!r}")
