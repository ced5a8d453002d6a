"""Series literals such as ``"t2^3 - 1/2*z*t1 + (2-m)/(2*m)*i"``.

Python's own expression parser does the tokenizing; only a small whitelist
of node types is evaluated.  ``^`` is accepted as the power operator and
named parameters (``m``, ``alpha``, ...) are substituted from a dict.
"""

from __future__ import annotations

import ast

from .numbers import RationalComplex
from .series import TruncatedSeries, Truncation


class ParseError(ValueError):
    pass


def _is_var(name: str, trunc: Truncation | None) -> bool:
    if trunc is None:
        return False
    if name == "z" or (name == "s" and trunc.uses_s):
        return True
    return name.startswith("t") and name[1:].isdigit()


class _Eval:
    def __init__(self, trunc, params, resolve=None, lift=None):
        self.trunc = trunc
        self.params = {k: RationalComplex.coerce(v) for k, v in (params or {}).items()}
        self.resolve = resolve
        if lift is not None:
            self.lift = lift

    def lift(self, x):
        if isinstance(x, TruncatedSeries):
            return x
        return TruncatedSeries.constant(x, self.trunc)

    def scalar(self, x):
        if isinstance(x, RationalComplex):
            return x
        if not isinstance(x, TruncatedSeries):
            return None
        if len(x) == 0:
            return RationalComplex(0)
        if len(x) == 1 and x.terms()[0][0][0] == 0 and sum(x.terms()[0][0][1]) == 0 and not x.terms()[0][0][2]:
            return x.constant_term()
        return None

    def ev(self, node):
        if isinstance(node, ast.Expression):
            return self.ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ParseError(f"only integer literals are allowed, got {node.value!r}")
            return RationalComplex(node.value)
        if isinstance(node, ast.Name):
            name = node.id
            if name == "i":
                return RationalComplex(0, 1)
            if name in self.params:
                return self.params[name]
            if self.resolve is not None:
                v = self.resolve(name)
                if v is not None:
                    return v
            if _is_var(name, self.trunc):
                try:
                    return TruncatedSeries.variable(name, self.trunc)
                except ValueError as e:
                    raise ParseError(str(e)) from None
            raise ParseError(f"unknown name {name!r}")
        if isinstance(node, ast.UnaryOp):
            v = self.ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
            raise ParseError("unsupported unary operator")
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                return self.power(node)
            a = self.ev(node.left)
            b = self.ev(node.right)
            if isinstance(node.op, ast.Add):
                return self.combine(a, b, lambda x, y: x + y)
            if isinstance(node.op, ast.Sub):
                return self.combine(a, b, lambda x, y: x - y)
            if isinstance(node.op, ast.Mult):
                return self.combine(a, b, lambda x, y: x * y)
            if isinstance(node.op, ast.Div):
                d = self.scalar(b)
                if d is None:
                    raise ParseError("division only by constants")
                if d.is_zero():
                    raise ParseError("division by zero")
                return a / d if isinstance(a, RationalComplex) else a * d.inverse()
            raise ParseError("unsupported operator")
        raise ParseError(f"unsupported syntax: {type(node).__name__}")

    def combine(self, a, b, fn):
        if isinstance(a, RationalComplex) and isinstance(b, RationalComplex):
            return fn(a, b)
        return fn(self.lift(a), self.lift(b))

    def power(self, node):
        e = self.ev(node.right)
        if not isinstance(e, RationalComplex) or not e.is_real() or e.re.denominator != 1:
            raise ParseError("exponent must be an integer constant")
        k = int(e.re)
        if isinstance(node.left, ast.Name) and node.left.id == "z" and self.trunc is not None and self.resolve is None:
            try:
                return TruncatedSeries.monomial(1, k, (0,) * self.trunc.n_vars, self.trunc)
            except ValueError as err:
                raise ParseError(str(err)) from None
        base = self.ev(node.left)
        if isinstance(base, RationalComplex):
            if base.is_zero() and k < 0:
                raise ParseError("division by zero")
            return base ** k
        if k < 0:
            raise ParseError("negative powers only for z and constants")
        return base ** k


def _tree(text: str):
    if not isinstance(text, str):
        raise ParseError("expression must be a string")
    try:
        return ast.parse(text.replace("^", "**").strip(), mode="eval")
    except SyntaxError as e:
        raise ParseError(f"cannot parse {text!r}: {e.msg}") from None


def parse_series(text: str, trunc: Truncation, params=None) -> TruncatedSeries:
    """Parse a series literal into the given truncation."""
    v = _Eval(trunc, params).ev(_tree(text))
    return v if isinstance(v, TruncatedSeries) else TruncatedSeries.constant(v, trunc)


def parse_scalar(text: str, params=None) -> RationalComplex:
    """Parse an exact constant such as '-3/4' or '1/2 + 2/3*i'."""
    v = _Eval(None, params).ev(_tree(text))
    if not isinstance(v, RationalComplex):
        raise ParseError("expected a constant")
    return v


def evaluate_expression(text: str, resolve, lift, params=None):
    """Evaluate a literal over a custom ring.

    ``resolve(name)`` maps variable names to ring elements (or None) and
    ``lift(c)`` embeds a RationalComplex constant.
    """
    v = _Eval(None, params, resolve, lift).ev(_tree(text))
    return v if not isinstance(v, RationalComplex) else lift(v)
