"""Substitution, integer arithmetic and one-way matching of terms.

Arithmetic is integer-only.  Division and modulo round toward negative
infinity (Python semantics); by-zero and non-integer operands make the
expression undefined, reported as ``None``.
"""

from __future__ import annotations

from .terms import BinOp, Function, Negate, Variable


def arith(op: str, a, b):
    if type(a) is not int or type(b) is not int:
        return None
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return None
    if op == "/":
        return a // b
    if op == "\\":
        return a % b
    raise ValueError(f"unknown operator {op}")


def substitute(t, binding: dict):
    """Apply ``binding`` and evaluate arithmetic; ``None`` when undefined.

    Unbound variables are left in place.
    """
    tt = type(t)
    if tt is Variable:
        return binding.get(t.name, t)
    if tt is Function:
        args = []
        changed = False
        for a in t.args:
            b = substitute(a, binding)
            if b is None:
                return None
            changed = changed or b is not a
            args.append(b)
        return Function(t.name, args) if changed else t
    if tt is BinOp:
        left = substitute(t.left, binding)
        right = substitute(t.right, binding)
        if left is None or right is None:
            return None
        if type(left) is int and type(right) is int:
            return arith(t.op, left, right)
        if type(left) is Variable or type(right) is Variable:
            return BinOp(t.op, left, right)
        return None
    if tt is Negate:
        arg = substitute(t.arg, binding)
        if arg is None:
            return None
        if type(arg) is int:
            return -arg
        if type(arg) is Variable:
            return Negate(arg)
        return None
    return t


def match(pattern, ground, binding: dict):
    """Extend ``binding`` so that ``pattern`` equals ``ground``; ``None`` on failure.

    Arithmetic subterms must have all their variables bound already.
    """
    tp = type(pattern)
    if tp is Variable:
        bound = binding.get(pattern.name)
        if bound is None:
            out = dict(binding)
            out[pattern.name] = ground
            return out
        return binding if bound == ground else None
    if tp is Function:
        if type(ground) is not Function or ground.name != pattern.name:
            return None
        if len(ground.args) != len(pattern.args):
            return None
        for p, g in zip(pattern.args, ground.args):
            binding = match(p, g, binding)
            if binding is None:
                return None
        return binding
    if tp is BinOp or tp is Negate:
        value = substitute(pattern, binding)
        return binding if value is not None and value == ground else None
    if tp is int:
        return binding if type(ground) is int and ground == pattern else None
    return binding if pattern == ground else None
