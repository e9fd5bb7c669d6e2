"""Scalar backends.

Two arithmetic modes are used throughout the package:

* exact mode -- elements of the field Q(i), represented by
  :class:`GaussianRational` (a pair of ``fractions.Fraction``);
* float mode -- ordinary ``complex`` double precision.

Exact mode is mandatory wherever a criterion depends on testing a sum
for *exact* vanishing (root-system arithmetic, parameter vectors);
float mode is used for numeric realization and residual checks.
Matrices are numpy arrays: ``dtype=object`` filled with
:class:`GaussianRational` in exact mode, ``dtype=complex128`` in float
mode.  The two modes never mix silently: combining a
:class:`GaussianRational` with a float raises ``TypeError``.
"""

from __future__ import annotations

import re
from fractions import Fraction

DEFAULT_RTOL = 1e-9

_EXACT_TOKEN = r"[+-]?\d+(?:/\d+)?"
_RE_BOTH = re.compile(rf"^(?P<re>{_EXACT_TOKEN})(?P<im>[+-]\d+(?:/\d+)?)i$")
_RE_IMAG = re.compile(rf"^(?P<im>{_EXACT_TOKEN})i$")
_RE_REAL = re.compile(rf"^(?P<re>{_EXACT_TOKEN})$")


class GaussianRational:
    """An element a + b*i of Q(i) with exact Fraction coordinates."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @staticmethod
    def _coerce(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussianRational(
            (self.re * o.re + self.im * o.im) / n,
            (self.im * o.re - self.re * o.im) / n,
        )

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            return NotImplemented
        out = GaussianRational(1)
        base = self
        e = exponent
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def norm2(self) -> Fraction:
        """Squared modulus |z|^2, exact."""
        return self.re * self.re + self.im * self.im

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def sort_key(self):
        return (self.re, self.im)

    def __repr__(self):
        return f"GaussianRational({self.re!r}, {self.im!r})"

    def __str__(self):
        return format_exact(self)


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def format_exact(x: GaussianRational) -> str:
    """Render as "a/b+c/d i"; the imaginary part is omitted when zero."""
    if x.im == 0:
        return str(x.re)
    sign = "+" if x.im >= 0 else "-"
    return f"{x.re}{sign}{abs(x.im)} i"


def parse_exact(text: str) -> GaussianRational:
    """Parse "a/b+c/d i" (either part optional) into Q(i)."""
    s = re.sub(r"\s+", "", text)
    if not s:
        raise ValueError("empty exact scalar")
    m = _RE_BOTH.match(s)
    if m:
        return GaussianRational(Fraction(m["re"]), Fraction(m["im"]))
    m = _RE_IMAG.match(s)
    if m:
        return GaussianRational(0, Fraction(m["im"]))
    m = _RE_REAL.match(s)
    if m:
        return GaussianRational(Fraction(m["re"]))
    raise ValueError(f"cannot parse exact scalar {text!r}")


def rationalize(x, max_denominator: int = 10**6) -> GaussianRational:
    """Nearest Q(i) point with bounded denominators.

    Only for explicit opt-in conversion of float data; criterion code
    never calls this implicitly.
    """
    z = complex(x)
    return GaussianRational(
        Fraction(z.real).limit_denominator(max_denominator),
        Fraction(z.imag).limit_denominator(max_denominator),
    )


def as_exact(x) -> GaussianRational:
    """Coerce ints, Fractions, strings and GaussianRationals; reject floats."""
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x)
    if isinstance(x, str):
        return parse_exact(x)
    raise TypeError(f"not an exact scalar: {x!r} (floats must be rationalized explicitly)")


def scalar_key(x):
    """Sort key ordering by (Re, Im); works in both modes."""
    if isinstance(x, GaussianRational):
        return (x.re, x.im)
    z = complex(x)
    return (z.real, z.imag)


def scalars_equal(a, b, exact: bool, rtol: float = DEFAULT_RTOL) -> bool:
    if exact:
        return as_exact(a) == as_exact(b)
    za, zb = complex(a), complex(b)
    return abs(za - zb) <= rtol * max(1.0, abs(za), abs(zb))
