"""Exact Gaussian-rational scalars."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq


def as_fraction(x) -> Fraction:
    if type(x) is Fraction:
        return x
    if isinstance(x, bool):
        raise TypeError(f"not an exact rational: {x!r}")
    if isinstance(x, Rational):
        # gmpy2 types register as Rational but carry mpz parts
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class RationalComplex:
    """re + i*im with exact rational parts.

    Instances are immutable and hashable.  Integers, Fractions and gmpy2
    rationals coerce on arithmetic.
    """

    __slots__ = ("_re", "_im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "_re", as_fraction(re))
        object.__setattr__(self, "_im", as_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("RationalComplex is immutable")

    @property
    def re(self) -> Fraction:
        return self._re

    @property
    def im(self) -> Fraction:
        return self._im

    @classmethod
    def coerce(cls, x) -> "RationalComplex":
        if isinstance(x, RationalComplex):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact")
        if isinstance(x, str):
            return cls.parse(x)
        return cls(x)

    @classmethod
    def parse(cls, text: str) -> "RationalComplex":
        """Parse '3', '-1/2', '1/2+3/4*i', 'i/3' and similar."""
        from .parse import parse_scalar

        return parse_scalar(text)

    def to_mpq(self) -> tuple:
        return mpq(self._re.numerator, self._re.denominator), mpq(self._im.numerator, self._im.denominator)

    @classmethod
    def from_mpq(cls, re, im=0) -> "RationalComplex":
        return cls(as_fraction(re), as_fraction(im))

    def is_zero(self) -> bool:
        return self._re == 0 and self._im == 0

    def is_real(self) -> bool:
        return self._im == 0

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self._re, -self._im)

    def __add__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return RationalComplex(self._re + o._re, self._im + o._im)

    __radd__ = __add__

    def __neg__(self):
        return RationalComplex(-self._re, -self._im)

    def __sub__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return RationalComplex(self._re - o._re, self._im - o._im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return RationalComplex(self._re * o._re - self._im * o._im, self._re * o._im + self._im * o._re)

    __rmul__ = __mul__

    def inverse(self) -> "RationalComplex":
        n = self._re * self._re + self._im * self._im
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return RationalComplex(self._re / n, -self._im / n)

    def __truediv__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return RationalComplex.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = RationalComplex(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._re == o._re and self._im == o._im

    def __hash__(self):
        return hash((self._re, self._im))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"RationalComplex({self})"

    def __str__(self):
        if self._im == 0:
            return str(self._re)
        if self._re == 0:
            return f"{self._im}*i"
        sign = "+" if self._im > 0 else "-"
        return f"{self._re}{sign}{abs(self._im)}*i"

    def to_json(self) -> list:
        return [self._re.numerator, self._re.denominator, self._im.numerator, self._im.denominator]

    @classmethod
    def from_json(cls, data) -> "RationalComplex":
        if len(data) != 4:
            raise ValueError(f"coefficient needs 4 integers, got {data!r}")
        rn, rd, in_, id_ = (int(x) for x in data)
        if rd <= 0 or id_ <= 0:
            raise ValueError("denominators must be positive")
        return cls(Fraction(rn, rd), Fraction(in_, id_))


ZERO = RationalComplex(0)
ONE = RationalComplex(1)
I = RationalComplex(0, 1)
