"""Truncated multivariate series in z and t_1..t_n with exact coefficients.

A monomial z^k t^beta (optionally times the auxiliary s with s^2 = t_2) is
packed into one Python int so that multiplying monomials is integer addition.
Coefficients live in two dicts of gmpy2 rationals (real and imaginary part);
the imaginary dict is usually empty.

Besides the truncation box every series carries a *reliable window*
(z_rel, t_rel, w_rel): only coefficients with z-exponent <= z_rel, t-degree
<= t_rel and (z-exponent + t-degree) <= w_rel are known, and only those are
stored.  Derivatives and products shrink the window, so equality and zero
tests compare exactly what is known and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as _iproduct

from gmpy2 import mpq

from .numbers import RationalComplex, as_fraction

_W = 16
_M = (1 << _W) - 1
_ZERO = mpq(0)


class TruncationMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Truncation:
    """Box in which series live: z_min <= z-exponent <= z_max, t-degree <= t_deg.

    With ``uses_s`` the auxiliary s (s^2 = t_2) is available and counts as
    half a t-degree.
    """

    z_max: int = 8
    t_deg: int = 12
    n_vars: int = 2
    z_min: int = 0
    uses_s: bool = False

    def __post_init__(self):
        if self.z_max < 0 or self.z_min > 0 or self.t_deg < 0 or self.n_vars < 1:
            raise ValueError(f"invalid truncation {self}")
        if 2 * (self.z_max - self.z_min) + 8 > _M or 4 * self.t_deg + 8 > _M:
            raise ValueError("truncation too large for the packed monomial layout")
        if self.uses_s and self.n_vars < 2:
            raise ValueError("s is tied to t2 and needs n_vars >= 2")

    def with_(self, **kw) -> "Truncation":
        d = dict(z_max=self.z_max, t_deg=self.t_deg, n_vars=self.n_vars, z_min=self.z_min, uses_s=self.uses_s)
        d.update(kw)
        return Truncation(**d)

    @property
    def laurent(self) -> bool:
        return self.z_min < 0

    def to_json(self) -> dict:
        return {"z_max": self.z_max, "z_min": self.z_min, "t_deg": self.t_deg,
                "n_vars": self.n_vars, "uses_s": self.uses_s}

    @classmethod
    def from_json(cls, d: dict) -> "Truncation":
        return cls(z_max=int(d["z_max"]), t_deg=int(d["t_deg"]), n_vars=int(d["n_vars"]),
                   z_min=int(d.get("z_min", 0)), uses_s=bool(d.get("uses_s", False)))


class _Codec:
    """Field layout: [z - z_min | half t-degree | e_1 .. e_n | s]."""

    def __init__(self, tr: Truncation):
        n = tr.n_vars
        self.n = n
        self.off = -tr.z_min
        self.shift_e = [_W * (2 + i) for i in range(n)]
        self.shift_s = _W * (2 + n)
        self.unit_t = [(1 << s) + (2 << _W) for s in self.shift_e]
        self.unit_s = (1 << self.shift_s) + (1 << _W)
        # s*s -> t2 keeps the half-degree unchanged
        self.s_fix = (1 << self.shift_e[1]) - (2 << self.shift_s) if tr.uses_s else 0

    def encode(self, z: int, exps, s: int = 0) -> int:
        hd = 2 * sum(exps) + s
        k = (z + self.off) + (hd << _W) + (s << self.shift_s)
        for e, sh in zip(exps, self.shift_e):
            k += e << sh
        return k

    def decode(self, k: int):
        z = (k & _M) - self.off
        exps = tuple((k >> sh) & _M for sh in self.shift_e)
        s = k >> self.shift_s
        return z, exps, s

    def z_of(self, k: int) -> int:
        return (k & _M) - self.off

    def hd_of(self, k: int) -> int:
        return (k >> _W) & _M

    def e_of(self, k: int, i: int) -> int:
        return (k >> self.shift_e[i]) & _M


@lru_cache(maxsize=None)
def _codec(tr: Truncation) -> _Codec:
    return _Codec(tr)


def _clip(tr: Truncation, zr, trel, wr):
    zr = min(zr, tr.z_max)
    if tr.laurent:
        # negative z-powers can pull unknown high-z terms down, so in a
        # Laurent box the z-cap is folded into the weight cap
        wr = zr if wr is None else min(wr, zr)
        zr = tr.z_max
    trel = min(trel, tr.t_deg)
    if wr is not None and wr >= tr.z_max + tr.t_deg and not tr.laurent:
        wr = None
    return zr, trel, wr


def _min_w(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _q(x):
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class TruncatedSeries:
    """Immutable truncated series; see the module docstring for the window."""

    __slots__ = ("trunc", "_re", "_im", "z_rel", "t_rel", "w_rel")

    def __init__(self, trunc: Truncation, re=None, im=None, z_rel=None, t_rel=None, w_rel=None, _trusted=False):
        self.trunc = trunc
        zr = trunc.z_max if z_rel is None else z_rel
        trl = trunc.t_deg if t_rel is None else t_rel
        self.z_rel, self.t_rel, self.w_rel = _clip(trunc, zr, trl, w_rel)
        re = {} if re is None else re
        im = {} if im is None else im
        if not _trusted:
            re = self._admit(re)
            im = self._admit(im)
        self._re = re
        self._im = im

    # -- construction -----------------------------------------------------
    def _admit(self, d: dict) -> dict:
        """Drop zeros and everything outside the window."""
        c = _codec(self.trunc)
        zo_cap, hd_cap, w2 = self._caps()
        out = {}
        for k, v in d.items():
            if not v:
                continue
            zo = k & _M
            hd = (k >> _W) & _M
            if zo > zo_cap or hd > hd_cap or (w2 is not None and 2 * zo + hd > w2):
                continue
            if self.trunc.laurent and 2 * (zo - c.off) + hd < 0:
                raise ValueError("Laurent series must have z-exponent + t-degree >= 0")
            out[k] = v
        return out

    def _caps(self):
        off = -self.trunc.z_min
        zo_cap = self.z_rel + off
        hd_cap = 2 * self.t_rel
        w2 = None if self.w_rel is None else 2 * self.w_rel + 2 * off
        return zo_cap, hd_cap, w2

    def _new(self, re, im, z_rel=None, t_rel=None, w_rel="same", trusted=False):
        return TruncatedSeries(self.trunc, re, im,
                               self.z_rel if z_rel is None else z_rel,
                               self.t_rel if t_rel is None else t_rel,
                               self.w_rel if w_rel == "same" else w_rel,
                               _trusted=trusted)

    @classmethod
    def zero(cls, trunc: Truncation) -> "TruncatedSeries":
        return cls(trunc)

    @classmethod
    def constant(cls, c, trunc: Truncation) -> "TruncatedSeries":
        return cls.monomial(c, 0, (0,) * trunc.n_vars, trunc)

    @classmethod
    def one(cls, trunc: Truncation) -> "TruncatedSeries":
        return cls.constant(1, trunc)

    @classmethod
    def monomial(cls, c, z: int, exps, trunc: Truncation, s: int = 0) -> "TruncatedSeries":
        c = RationalComplex.coerce(c)
        exps = tuple(exps)
        if len(exps) != trunc.n_vars:
            raise ValueError("exponent vector length differs from n_vars")
        if s and not trunc.uses_s:
            raise ValueError("s used in a truncation without uses_s")
        if s > 1:
            exps = exps[:1] + (exps[1] + s // 2,) + exps[2:]
            s %= 2
        if z < trunc.z_min or min(exps, default=0) < 0:
            raise ValueError("exponent below the truncation range")
        if z > trunc.z_max or 2 * sum(exps) + s > 2 * trunc.t_deg:
            return cls(trunc)
        k = _codec(trunc).encode(z, exps, s)
        re, im = c.to_mpq()
        return cls(trunc, {k: re}, {k: im})

    @classmethod
    def variable(cls, name: str, trunc: Truncation) -> "TruncatedSeries":
        n = trunc.n_vars
        if name == "z":
            return cls.monomial(1, 1, (0,) * n, trunc)
        if name == "s":
            return cls.monomial(1, 0, (0,) * n, trunc, s=1)
        if name.startswith("t") and name[1:].isdigit():
            i = int(name[1:])
            if not 1 <= i <= n:
                raise ValueError(f"variable {name} outside t1..t{n}")
            e = [0] * n
            e[i - 1] = 1
            return cls.monomial(1, 0, e, trunc)
        raise ValueError(f"unknown variable {name!r}")

    @classmethod
    def from_terms(cls, terms, trunc: Truncation, window=None) -> "TruncatedSeries":
        """Build from an iterable of ((z, exps[, s]), coefficient)."""
        c = _codec(trunc)
        re, im = {}, {}
        for key, coeff in (terms.items() if isinstance(terms, dict) else terms):
            z, exps = key[0], tuple(key[1])
            s = key[2] if len(key) > 2 else 0
            if len(exps) != trunc.n_vars:
                raise ValueError("exponent vector length differs from n_vars")
            if s not in (0, 1) or (s and not trunc.uses_s):
                raise ValueError("s exponent must be 0 or 1 and needs uses_s")
            if z < trunc.z_min or min(exps, default=0) < 0:
                raise ValueError("exponent below the truncation range")
            if z > trunc.z_max or 2 * sum(exps) + s > 2 * trunc.t_deg:
                continue
            k = c.encode(z, exps, s)
            a, b = RationalComplex.coerce(coeff).to_mpq()
            re[k] = re.get(k, _ZERO) + a
            im[k] = im.get(k, _ZERO) + b
        zr, trl, wr = window if window is not None else (None, None, None)
        return cls(trunc, re, im, zr, trl, wr)

    # -- inspection -------------------------------------------------------
    @property
    def window(self):
        return (self.z_rel, self.t_rel, self.w_rel)

    def is_full_precision(self) -> bool:
        return self.z_rel == self.trunc.z_max and self.t_rel == self.trunc.t_deg and self.w_rel is None

    def window_is_empty(self) -> bool:
        return self.t_rel < 0 or self.z_rel < self.trunc.z_min or (self.w_rel is not None and self.w_rel < 0 and not self.trunc.laurent)

    def is_zero(self) -> bool:
        return not self._re and not self._im

    def __bool__(self):
        return not self.is_zero()

    def _keys(self):
        ks = set(self._re)
        ks.update(self._im)
        return ks

    def _sort_key(self, k):
        z, e, s = _codec(self.trunc).decode(k)
        return (z, 2 * sum(e) + s, e, s)

    def terms(self):
        """Sorted list of ((z, exps, s), RationalComplex)."""
        c = _codec(self.trunc)
        out = []
        for k in sorted(self._keys(), key=self._sort_key):
            out.append((c.decode(k), RationalComplex.from_mpq(self._re.get(k, 0), self._im.get(k, 0))))
        return out

    def __len__(self):
        return len(self._keys())

    def coefficient(self, z: int, exps, s: int = 0) -> RationalComplex:
        tr = self.trunc
        if z < tr.z_min or z > tr.z_max or 2 * sum(exps) + s > 2 * tr.t_deg:
            return RationalComplex(0)
        k = _codec(tr).encode(z, tuple(exps), s)
        return RationalComplex.from_mpq(self._re.get(k, 0), self._im.get(k, 0))

    def constant_term(self) -> RationalComplex:
        return self.coefficient(0, (0,) * self.trunc.n_vars)

    def max_z(self):
        c = _codec(self.trunc)
        return max((c.z_of(k) for k in self._keys()), default=None)

    def min_z(self):
        c = _codec(self.trunc)
        return min((c.z_of(k) for k in self._keys()), default=None)

    def t_degree(self):
        return max((_codec(self.trunc).hd_of(k) for k in self._keys()), default=-2) // 2

    def is_real(self) -> bool:
        return not self._im

    def leading_term(self):
        ts = self.terms()
        return ts[0] if ts else None

    # -- ring operations --------------------------------------------------
    def _check(self, other: "TruncatedSeries"):
        if other.trunc != self.trunc:
            raise TruncationMismatch(f"{self.trunc} vs {other.trunc}")

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.constant(other, self.trunc)

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self._addsub(o, 1)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self._addsub(o, -1)

    def __rsub__(self, other):
        return (-self) + other

    def _addsub(self, o, sign):
        re = dict(self._re)
        im = dict(self._im)
        for src, dst in ((o._re, re), (o._im, im)):
            for k, v in src.items():
                dst[k] = dst.get(k, _ZERO) + v if sign > 0 else dst.get(k, _ZERO) - v
        return TruncatedSeries(self.trunc, re, im, min(self.z_rel, o.z_rel), min(self.t_rel, o.t_rel),
                               _min_w(self.w_rel, o.w_rel))

    def __neg__(self):
        return self._new({k: -v for k, v in self._re.items()}, {k: -v for k, v in self._im.items()}, trusted=True)

    def scale(self, c) -> "TruncatedSeries":
        a, b = RationalComplex.coerce(c).to_mpq()
        if not a and not b:
            return self._new({}, {}, trusted=True)
        re, im = {}, {}
        if a:
            for k, v in self._re.items():
                re[k] = a * v
            for k, v in self._im.items():
                im[k] = a * v
        if b:
            for k, v in self._im.items():
                re[k] = re.get(k, _ZERO) - b * v
            for k, v in self._re.items():
                im[k] = im.get(k, _ZERO) + b * v
        return self._new(re, im)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return self._mul(other)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other):
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            raise TypeError("divide series via reciprocal() or divide_t_monomial()")
        return self.scale(RationalComplex.coerce(other).inverse())

    def _mul(self, o: "TruncatedSeries") -> "TruncatedSeries":
        tr = self.trunc
        zr = min(self.z_rel, o.z_rel)
        trl = min(self.t_rel, o.t_rel)
        wr = _min_w(self.w_rel, o.w_rel)
        res = TruncatedSeries(tr, None, None, zr, trl, wr, _trusted=True)
        if self.is_zero() or o.is_zero():
            return res
        zo_cap, hd_cap, w2 = res._caps()
        c = _codec(tr)
        off = c.off
        sfix = c.s_fix
        sshift = c.shift_s
        re, im = {}, {}
        parts = []
        if self._re and o._re:
            parts.append((self._re, o._re, re, 1))
        if self._im and o._im:
            parts.append((self._im, o._im, re, -1))
        if self._re and o._im:
            parts.append((self._re, o._im, im, 1))
        if self._im and o._re:
            parts.append((self._im, o._re, im, 1))
        for a, b, out, sign in parts:
            bl = sorted(b.items(), key=lambda kv: (kv[0] >> _W) & _M)
            get = out.get
            for ka, va in a.items():
                base = ka - off
                hda = (ka >> _W) & _M
                if hda > hd_cap:
                    continue
                for kb, vb in bl:
                    k = base + kb
                    hd = (k >> _W) & _M
                    if hd > hd_cap:
                        break
                    zo = k & _M
                    if zo > zo_cap:
                        continue
                    if w2 is not None and 2 * zo + hd > w2:
                        continue
                    if sfix and (k >> sshift) >= 2:
                        k += sfix
                    if sign > 0:
                        out[k] = get(k, _ZERO) + va * vb
                    else:
                        out[k] = get(k, _ZERO) - va * vb
        res._re = {k: v for k, v in re.items() if v}
        res._im = {k: v for k, v in im.items() if v}
        return res

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = TruncatedSeries.one(self.trunc)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            if other.trunc != self.trunc:
                return False
            return (self - other).is_zero()
        try:
            return (self - other).is_zero()
        except TypeError:
            return NotImplemented

    __hash__ = None

    # -- calculus and structural maps --------------------------------------
    def _map_keys(self, fn, z_rel=None, t_rel=None, w_rel="same"):
        """Apply fn(key, coeff) -> (key', coeff') or None to every term."""
        re, im = {}, {}
        for src, dst in ((self._re, re), (self._im, im)):
            for k, v in src.items():
                r = fn(k, v)
                if r is None:
                    continue
                k2, v2 = r
                if v2:
                    dst[k2] = dst.get(k2, _ZERO) + v2
        return self._new(re, im, z_rel, t_rel, w_rel)

    def dt(self, i: int) -> "TruncatedSeries":
        """Partial derivative in t_{i+1} (0-based index)."""
        c = _codec(self.trunc)
        sh = c.shift_e[i]
        unit = c.unit_t[i]
        s_shift = c.shift_s

        def f(k, v):
            e = (k >> sh) & _M
            s = (k >> s_shift) if self.trunc.uses_s else 0
            if i == 1 and s:
                if e == 0:
                    raise ValueError("derivative of s needs t2 to a negative power")
                return k - unit, v * (e + mpq(1, 2))
            if e == 0:
                return None
            return k - unit, v * e

        return self._map_keys(f, t_rel=self.t_rel - 1, w_rel=None if self.w_rel is None else self.w_rel - 1)

    def dz(self) -> "TruncatedSeries":
        zmin = self.trunc.z_min
        c = _codec(self.trunc)

        def f(k, v):
            z = c.z_of(k)
            if z == 0:
                return None
            if z == zmin:
                raise ValueError("z-derivative leaves the truncation range")
            return k - 1, v * z

        return self._map_keys(f, z_rel=self.z_rel - 1, w_rel=None if self.w_rel is None else self.w_rel - 1)

    def integrate_t(self, i: int) -> "TruncatedSeries":
        """Antiderivative in t_{i+1} vanishing on t_{i+1} = 0."""
        c = _codec(self.trunc)
        sh = c.shift_e[i]
        unit = c.unit_t[i]
        s_shift = c.shift_s
        cap = 2 * self.trunc.t_deg

        def f(k, v):
            e = (k >> sh) & _M
            s = (k >> s_shift) if self.trunc.uses_s else 0
            k2 = k + unit
            if ((k2 >> _W) & _M) > cap:
                return None
            if i == 1 and s:
                return k2, v / (e + mpq(3, 2))
            return k2, v / (e + 1)

        return self._map_keys(f, t_rel=self.t_rel + 1, w_rel=None if self.w_rel is None else self.w_rel + 1)

    def shift_z(self, j: int) -> "TruncatedSeries":
        """Multiply by z^j."""
        tr = self.trunc
        c = _codec(tr)

        def f(k, v):
            z = c.z_of(k) + j
            if z > tr.z_max:
                return None
            if z < tr.z_min:
                raise ValueError("z-shift leaves the truncation range")
            return k + j, v

        return self._map_keys(f, z_rel=self.z_rel + j, w_rel=None if self.w_rel is None else self.w_rel + j)

    def mul_t(self, i: int, power: int = 1) -> "TruncatedSeries":
        """Multiply by t_{i+1}^power."""
        c = _codec(self.trunc)
        step = c.unit_t[i] * power
        cap = 2 * self.trunc.t_deg

        def f(k, v):
            k2 = k + step
            if ((k2 >> _W) & _M) > cap:
                return None
            return k2, v

        return self._map_keys(f, t_rel=self.t_rel + power, w_rel=None if self.w_rel is None else self.w_rel + power)

    def flip_z(self) -> "TruncatedSeries":
        """Substitute z -> -z."""
        c = _codec(self.trunc)
        return self._map_keys(lambda k, v: (k, -v if c.z_of(k) % 2 else v))

    def z_coefficient(self, k: int) -> "TruncatedSeries":
        """Coefficient of z^k as a z-free series."""
        tr = self.trunc
        c = _codec(tr)
        if k > self.z_rel:
            return TruncatedSeries(tr, None, None, tr.z_max, -1, None)
        trl = self.t_rel if self.w_rel is None else min(self.t_rel, self.w_rel - k)
        if k < tr.z_min:
            return TruncatedSeries(tr, None, None, tr.z_max, trl, None)
        return self._map_keys(lambda key, v: (key - k, v) if c.z_of(key) == k else None,
                              z_rel=tr.z_max, t_rel=trl, w_rel=None)

    def z_part(self, lo=None, hi=None) -> "TruncatedSeries":
        """Terms with lo <= z-exponent <= hi (window unchanged)."""
        c = _codec(self.trunc)

        def f(k, v):
            z = c.z_of(k)
            if (lo is not None and z < lo) or (hi is not None and z > hi):
                return None
            return k, v

        return self._map_keys(f)

    def t_degree_part(self, d: int) -> "TruncatedSeries":
        """Terms of total t-degree d (window unchanged)."""
        return self._map_keys(lambda k, v: (k, v) if ((k >> _W) & _M) // 2 == d else None)

    def at_t0(self) -> "TruncatedSeries":
        """Restriction to t = 0 (a z-only series)."""
        tr = self.trunc
        zr = self.z_rel if self.w_rel is None else min(self.z_rel, self.w_rel)
        if self.t_rel < 0:
            return TruncatedSeries(tr, None, None, tr.z_min - 1, tr.t_deg, None)
        return self._map_keys(lambda k, v: (k, v) if ((k >> _W) & _M) == 0 else None,
                              z_rel=zr, t_rel=tr.t_deg, w_rel=None)

    def restrict(self, z_rel=None, t_rel=None, w_rel=None) -> "TruncatedSeries":
        """Shrink the window (never enlarges it)."""
        zr = self.z_rel if z_rel is None else min(self.z_rel, z_rel)
        trl = self.t_rel if t_rel is None else min(self.t_rel, t_rel)
        return TruncatedSeries(self.trunc, self._re, self._im, zr, trl, _min_w(self.w_rel, w_rel))

    def declare_exact(self, z_rel=None, t_rel=None, w_rel=None) -> "TruncatedSeries":
        """Replace the window; used when the value is known exactly by construction."""
        tr = self.trunc
        return TruncatedSeries(tr, self._re, self._im, tr.z_max if z_rel is None else z_rel,
                               tr.t_deg if t_rel is None else t_rel, w_rel, _trusted=True)

    def retruncate(self, trunc: Truncation) -> "TruncatedSeries":
        """Move into another box with the same variables (window clipped)."""
        if trunc.n_vars != self.trunc.n_vars:
            raise TruncationMismatch("number of t-variables differs")
        if trunc == self.trunc:
            return self
        src = _codec(self.trunc)
        dst = _codec(trunc)
        re, im = {}, {}
        for sd, dd in ((self._re, re), (self._im, im)):
            for k, v in sd.items():
                z, e, s = src.decode(k)
                if s and not trunc.uses_s:
                    raise TruncationMismatch("target truncation lacks s")
                if z < trunc.z_min:
                    raise TruncationMismatch("term below target z_min")
                if z > trunc.z_max or 2 * sum(e) + s > 2 * trunc.t_deg:
                    continue
                dd[dst.encode(z, e, s)] = v
        return TruncatedSeries(trunc, re, im, self.z_rel, self.t_rel, self.w_rel)

    def divide_t_monomial(self, exps, s: int = 0) -> "TruncatedSeries":
        """Exact division by t^exps * s^s; raises if some term is not divisible."""
        tr = self.trunc
        c = _codec(tr)
        exps = list(exps)
        if s and not tr.uses_s:
            raise ValueError("s division needs uses_s")
        deg2 = 2 * sum(exps) + s

        def f(k, v):
            z, e, ks = c.decode(k)
            e = list(e)
            if s:
                if ks:
                    ks = 0
                else:
                    if e[1] < 1:
                        raise ValueError("series not divisible by s")
                    e[1] -= 1
                    ks = 1
            e2 = [a - b for a, b in zip(e, exps)]
            if min(e2) < 0:
                raise ValueError("series not divisible by the monomial")
            return c.encode(z, e2, ks), v

        trl = self.t_rel - (deg2 + 1) // 2
        wr = None if self.w_rel is None else self.w_rel - (deg2 + 1) // 2
        return self._map_keys(f, t_rel=trl, w_rel=wr)

    def reciprocal(self) -> "TruncatedSeries":
        """Multiplicative inverse; needs an invertible constant term and no negative z."""
        if (self.min_z() or 0) < 0:
            raise ValueError("reciprocal of a series with negative z-powers")
        c0 = self.constant_term()
        if c0.is_zero():
            raise ZeroDivisionError("constant term is zero")
        x = TruncatedSeries.constant(c0.inverse(), self.trunc)
        one = TruncatedSeries.one(self.trunc)
        for _ in range(_newton_steps(self.trunc)):
            e = one - self * x
            if e.is_zero():
                break
            x = x + x * e
        return x.restrict(self.z_rel, self.t_rel, self.w_rel)

    # -- formatting -------------------------------------------------------
    def __repr__(self):
        return f"TruncatedSeries({self})"

    def __str__(self):
        return format_terms(self.terms(), self.trunc.uses_s) if not self.is_zero() else "0"

    def to_json(self):
        terms = [[[z, list(e) + ([s] if self.trunc.uses_s else [])], c.to_json()] for (z, e, s), c in self.terms()]
        if self.is_full_precision():
            return terms
        return {"terms": terms, "window": [self.z_rel, self.t_rel, self.w_rel]}

    @classmethod
    def from_json(cls, data, trunc: Truncation) -> "TruncatedSeries":
        window = None
        if isinstance(data, str):
            from .parse import parse_series

            return parse_series(data, trunc)
        if isinstance(data, dict):
            window = tuple(data.get("window", (None, None, None)))
            data = data["terms"]
        terms = []
        for item in data:
            (z, exps), coeff = item
            exps = list(exps)
            s = 0
            if trunc.uses_s:
                if len(exps) != trunc.n_vars + 1:
                    raise ValueError("term needs n_vars exponents plus the s exponent")
                s = exps.pop()
            terms.append(((int(z), tuple(int(e) for e in exps), int(s)), RationalComplex.from_json(coeff)))
        return cls.from_terms(terms, trunc, window)


def _newton_steps(tr: Truncation) -> int:
    span = 2 * (tr.z_max + tr.t_deg) + 2
    n = 1
    while (1 << n) <= span:
        n += 1
    return n + 1


def format_terms(terms, uses_s=False) -> str:
    parts = []
    for (z, e, s), c in terms:
        mono = []
        if z:
            mono.append("z" if z == 1 else f"z^{z}")
        for i, k in enumerate(e):
            if k:
                mono.append(f"t{i + 1}" if k == 1 else f"t{i + 1}^{k}")
        if s:
            mono.append("s")
        parts.append(_format_coeff(c, mono))
    out = " + ".join(parts)
    return out.replace("+ -", "- ")


def _format_coeff(c: RationalComplex, mono) -> str:
    body = "*".join(mono)
    if c.im == 0:
        if not body:
            return str(c.re)
        if c.re == 1:
            return body
        if c.re == -1:
            return "-" + body
        return f"{c.re}*{body}"
    cs = f"({c})"
    return cs if not body else f"{cs}*{body}"


def exp_series(s: TruncatedSeries) -> TruncatedSeries:
    """exp(S) for S without constant term and without negative z-powers."""
    if not s.constant_term().is_zero():
        raise ValueError("exp_series needs a zero constant term")
    if (s.min_z() or 0) < 0:
        raise ValueError("exp_series needs nonnegative z-powers")
    out = TruncatedSeries.one(s.trunc)
    term = out
    k = 1
    while True:
        term = (term * s).scale(Fraction(1, k))
        if term.is_zero():
            break
        out = out + term
        k += 1
    return out.restrict(s.z_rel, s.t_rel, s.w_rel)


def substitute_sqrt(s: TruncatedSeries, trunc: Truncation) -> TruncatedSeries:
    """Embed into a truncation with s (s^2 = t2), so t2^k reads as s^(2k)."""
    if not trunc.uses_s:
        raise ValueError("target truncation must have uses_s")
    return s.retruncate(trunc)


def monomials(n_vars: int, max_deg: int):
    """All exponent tuples of total degree <= max_deg, graded."""
    for d in range(max_deg + 1):
        for e in _iproduct(range(d + 1), repeat=n_vars):
            if sum(e) == d:
                yield e


def compose(f: TruncatedSeries, values) -> TruncatedSeries:
    """f(values[0], ..., values[n-1]) for z-free f and substitutes without constant term."""
    tr = f.trunc
    if (f.max_z() or 0) != 0 or (f.min_z() or 0) != 0:
        raise ValueError("compose needs a z-free series")
    if len(values) != tr.n_vars:
        raise ValueError("need one substitute per variable")
    for v in values:
        if not v.constant_term().is_zero() or (v.max_z() or 0) != 0:
            raise ValueError("substitutes must be z-free without constant term")
    if tr.uses_s:
        raise ValueError("compose does not support s")
    powers = [[TruncatedSeries.one(tr)] for _ in values]

    def power(i, k):
        while len(powers[i]) <= k:
            powers[i].append(powers[i][-1] * values[i])
        return powers[i][k]

    out = TruncatedSeries.zero(tr)
    for (z, e, s), c in f.terms():
        term = None
        for i, k in enumerate(e):
            if k:
                p = power(i, k)
                term = p if term is None else term * p
        term = TruncatedSeries.one(tr) if term is None else term
        out = out + term.scale(c)
    return out.restrict(t_rel=f.t_rel if f.w_rel is None else min(f.t_rel, f.w_rel))


def divide_by_degree(a: TruncatedSeries) -> TruncatedSeries:
    """Divide each term of t-degree d by d; a term of degree 0 is an error."""
    tr = a.trunc
    c = _codec(tr)
    re, im = {}, {}
    for src, dst in ((a._re, re), (a._im, im)):
        for k, v in src.items():
            hd = c.hd_of(k)
            if hd == 0:
                raise ValueError("degree-zero term cannot be divided by its degree")
            dst[k] = v * mpq(2, hd)
    return a._new(re, im, trusted=True)


def homotopy_integral(form) -> TruncatedSeries:
    """F with dF = sum_i form[i] dt_i and F(0) = 0, for a closed form (closedness not checked)."""
    acc = None
    for i, f in enumerate(form):
        term = f.mul_t(i)
        acc = term if acc is None else acc + term
    return divide_by_degree(acc)
