"""Exact and high-precision scalar arithmetic plus truncated Laurent series.

Every identity check in this package runs over Gaussian rationals
(``ExactScalar``), so residuals of algebraic identities are exactly zero or
exactly not.  Floating arithmetic (``ApproxScalar``, backed by mpmath at a
configurable bit precision) only enters for absolute values, sup estimates,
decay-ratio fits and square roots.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable, Union

import mpmath

__all__ = [
    "ExactScalar",
    "ApproxScalar",
    "TruncatedLaurent",
    "laurent_mul",
    "geometric_tail_bound",
    "NonContractive",
    "VariableMismatch",
    "precision_bits",
]

DEFAULT_PRECISION_BITS = 128
_PRECISION_ENV = "VOXFORM_PRECISION_BITS"


class VoxformError(Exception):
    """Base class for all structured errors raised by this package."""


class NonContractive(VoxformError):
    """A geometric bound was requested with ratio |R| <= 1."""


class VariableMismatch(VoxformError):
    """Two Laurent series over different variables were combined."""


def precision_bits() -> int:
    """Working precision for ApproxScalar, overridable via the environment."""
    raw = os.environ.get(_PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION_BITS
    bits = int(raw)
    if bits < 8:
        raise ValueError(f"{_PRECISION_ENV} must be >= 8, got {bits}")
    return bits


RationalLike = Union[int, Fraction]

_FRAC_ZERO = Fraction(0)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to an exact rational")


class ExactScalar:
    """A Gaussian rational re + im*i with reduced, positive-denominator parts.

    Fraction already normalizes (reduced form, positive denominator), so the
    invariants hold by construction.  Arithmetic never rounds.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("ExactScalar is immutable")

    # -- constructors --------------------------------------------------

    @staticmethod
    def coerce(x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return ExactScalar(x)
        raise TypeError(f"cannot coerce {x!r} to ExactScalar")

    @staticmethod
    def parse(text: str) -> "ExactScalar":
        """Parse literals like ``3``, ``-1/4``, ``1/2+3/4i``, ``-2/3i``."""
        s = text.strip().replace(" ", "")
        if not s:
            raise ValueError("empty scalar literal")
        if s.endswith(("i", "j")):
            body = s[:-1]
            # split into real and imaginary parts at the last +/- that is
            # not a leading sign
            for pos in range(len(body) - 1, 0, -1):
                if body[pos] in "+-" and body[pos - 1] not in "+-/":
                    re_part, im_part = body[:pos], body[pos:]
                    if im_part in ("+", "-"):
                        im_part += "1"
                    return ExactScalar(Fraction(re_part), Fraction(im_part))
            if body in ("", "+", "-"):
                body += "1"
            return ExactScalar(0, Fraction(body))
        return ExactScalar(Fraction(s), 0)

    # -- ring operations -----------------------------------------------

    def __add__(self, other):
        if isinstance(other, ExactScalar):
            o = other
        elif isinstance(other, (int, Fraction)):
            o = ExactScalar(other)
        else:
            return NotImplemented
        out = object.__new__(ExactScalar)
        object.__setattr__(out, "re", self.re + o.re)
        object.__setattr__(out, "im", self.im + o.im)
        return out

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ExactScalar):
            o = other
        elif isinstance(other, (int, Fraction)):
            o = ExactScalar(other)
        else:
            return NotImplemented
        out = object.__new__(ExactScalar)
        object.__setattr__(out, "re", self.re - o.re)
        object.__setattr__(out, "im", self.im - o.im)
        return out

    def __rsub__(self, other):
        return ExactScalar.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ExactScalar):
            o = other
        elif isinstance(other, (int, Fraction)):
            o = ExactScalar(other)
        else:
            return NotImplemented
        out = object.__new__(ExactScalar)
        if not self.im and not o.im:  # real fast path
            object.__setattr__(out, "re", self.re * o.re)
            object.__setattr__(out, "im", _FRAC_ZERO)
            return out
        object.__setattr__(out, "re", self.re * o.re - self.im * o.im)
        object.__setattr__(out, "im", self.re * o.im + self.im * o.re)
        return out

    __rmul__ = __mul__

    def __neg__(self):
        return ExactScalar(-self.re, -self.im)

    def inverse(self) -> "ExactScalar":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero ExactScalar")
        return ExactScalar(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * ExactScalar.coerce(other).inverse()

    def __rtruediv__(self, other):
        return ExactScalar.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("ExactScalar powers must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        out = ExactScalar(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- queries ---------------------------------------------------------

    def __eq__(self, other):
        try:
            o = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def conjugate(self) -> "ExactScalar":
        return ExactScalar(self.re, -self.im)

    def abs_squared(self) -> Fraction:
        """|z|^2 as an exact rational; the basis of all region predicates."""
        return self.re * self.re + self.im * self.im

    def is_rational(self) -> bool:
        return self.im == 0

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def to_mpc(self) -> mpmath.mpc:
        return mpmath.mpc(mpmath.mpf(self.re.numerator) / self.re.denominator,
                          mpmath.mpf(self.im.numerator) / self.im.denominator)


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
I = ExactScalar(0, 1)


class ApproxScalar:
    """Complex floating value with an explicit unit-roundoff bound.

    Each primitive operation satisfies |exact - approx| <= 2^(1-P) * |exact|
    for working precision P bits; ``eps`` records that bound.
    """

    __slots__ = ("value", "eps", "prec")

    def __init__(self, value, prec: int | None = None):
        self.prec = prec if prec is not None else precision_bits()
        with mpmath.workprec(self.prec):
            if isinstance(value, ExactScalar):
                self.value = value.to_mpc()
            elif isinstance(value, Fraction):
                self.value = mpmath.mpc(mpmath.mpf(value.numerator) / value.denominator)
            else:
                self.value = mpmath.mpc(value)
        self.eps = mpmath.mpf(2) ** (1 - self.prec)

    def _wrap(self, v):
        return ApproxScalar(v, self.prec)

    def __add__(self, other):
        o = other if isinstance(other, ApproxScalar) else ApproxScalar(other, self.prec)
        with mpmath.workprec(self.prec):
            return self._wrap(self.value + o.value)

    __radd__ = __add__

    def __sub__(self, other):
        o = other if isinstance(other, ApproxScalar) else ApproxScalar(other, self.prec)
        with mpmath.workprec(self.prec):
            return self._wrap(self.value - o.value)

    def __mul__(self, other):
        o = other if isinstance(other, ApproxScalar) else ApproxScalar(other, self.prec)
        with mpmath.workprec(self.prec):
            return self._wrap(self.value * o.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = other if isinstance(other, ApproxScalar) else ApproxScalar(other, self.prec)
        with mpmath.workprec(self.prec):
            return self._wrap(self.value / o.value)

    def __pow__(self, n):
        with mpmath.workprec(self.prec):
            return self._wrap(self.value ** n)

    def __neg__(self):
        return self._wrap(-self.value)

    def abs(self) -> mpmath.mpf:
        with mpmath.workprec(self.prec):
            return abs(self.value)

    def sqrt(self) -> "ApproxScalar":
        """Principal branch."""
        with mpmath.workprec(self.prec):
            return self._wrap(mpmath.sqrt(self.value))

    def __repr__(self):
        return f"~{self.value}"


def sqrt_exact_or_approx(x: ExactScalar, prec: int | None = None):
    """Square root of a nonnegative rational: exact when p/q is a square of
    rationals, otherwise an ApproxScalar (principal branch)."""
    if x.im == 0 and x.re >= 0:
        num, den = x.re.numerator, x.re.denominator
        rn, rd = _isqrt_exact(num), _isqrt_exact(den)
        if rn is not None and rd is not None:
            return ExactScalar(Fraction(rn, rd))
    return ApproxScalar(x, prec).sqrt()


def _isqrt_exact(n: int):
    if n < 0:
        return None
    r = int(n ** 0.5)
    for c in (r - 1, r, r + 1, r + 2):
        if c >= 0 and c * c == n:
            return c
    return None


# -- truncated Laurent series -------------------------------------------


class TruncatedLaurent:
    """A Laurent polynomial in one variable, exact coefficients, with an
    ``order`` marking the largest exponent whose coefficient is trusted.

    Exponents outside [lo, order] are never stored.
    """

    __slots__ = ("var", "lo", "order", "coeffs")

    def __init__(self, var: str, lo: int, order: int, coeffs: dict | None = None):
        if lo > order:
            raise ValueError(f"lo={lo} exceeds order={order}")
        self.var = var
        self.lo = lo
        self.order = order
        self.coeffs: dict[int, ExactScalar] = {}
        for e, c in (coeffs or {}).items():
            c = ExactScalar.coerce(c)
            if c.is_zero():
                continue
            if e < lo or e > order:
                raise ValueError(f"exponent {e} outside [{lo}, {order}]")
            self.coeffs[e] = c

    @staticmethod
    def constant(var: str, value, order: int) -> "TruncatedLaurent":
        return TruncatedLaurent(var, 0, order, {0: ExactScalar.coerce(value)})

    @staticmethod
    def variable(var: str, order: int) -> "TruncatedLaurent":
        return TruncatedLaurent(var, 0, order, {1: ONE})

    def coefficient(self, e: int) -> ExactScalar:
        if e > self.order:
            raise ValueError(f"coefficient at {e} beyond truncation order {self.order}")
        return self.coeffs.get(e, ZERO)

    def __add__(self, other: "TruncatedLaurent") -> "TruncatedLaurent":
        if self.var != other.var:
            raise VariableMismatch(f"{self.var!r} vs {other.var!r}")
        order = min(self.order, other.order)
        lo = min(self.lo, other.lo)
        out: dict[int, ExactScalar] = {}
        for e, c in list(self.coeffs.items()) + list(other.coeffs.items()):
            if e <= order:
                out[e] = out.get(e, ZERO) + c
        return TruncatedLaurent(self.var, lo, order, out)

    def __neg__(self):
        return TruncatedLaurent(self.var, self.lo, self.order,
                                {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "TruncatedLaurent":
        s = ExactScalar.coerce(s)
        return TruncatedLaurent(self.var, self.lo, self.order,
                                {e: c * s for e, c in self.coeffs.items()})

    def shift(self, k: int) -> "TruncatedLaurent":
        """Multiply by var**k."""
        return TruncatedLaurent(self.var, self.lo + k, self.order + k,
                                {e + k: c for e, c in self.coeffs.items()})

    def derivative(self) -> "TruncatedLaurent":
        out = {e - 1: c * e for e, c in self.coeffs.items() if e != 0}
        return TruncatedLaurent(self.var, self.lo - 1, self.order - 1, out)

    def evaluate(self, z: ExactScalar) -> ExactScalar:
        total = ZERO
        for e in sorted(self.coeffs):
            total = total + self.coeffs[e] * (z ** e)
        return total

    def __eq__(self, other):
        if not isinstance(other, TruncatedLaurent):
            return NotImplemented
        return (self.var == other.var and self.coeffs == other.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return f"0 (+O({self.var}^{self.order + 1}))"
        terms = [f"({c})*{self.var}^{e}" for e, c in sorted(self.coeffs.items())]
        return " + ".join(terms) + f" + O({self.var}^{self.order + 1})"


def laurent_mul(f: TruncatedLaurent, g: TruncatedLaurent) -> TruncatedLaurent:
    """Convolution product; the result order is the largest exponent whose
    coefficient is fully determined: min(order_f + lo_g, order_g + lo_f)."""
    if f.var != g.var:
        raise VariableMismatch(f"{f.var!r} vs {g.var!r}")
    order = min(f.order + g.lo, g.order + f.lo)
    lo = f.lo + g.lo
    out: dict[int, ExactScalar] = {}
    for e1, c1 in f.coeffs.items():
        for e2, c2 in g.coeffs.items():
            e = e1 + e2
            if e <= order:
                out[e] = out.get(e, ZERO) + c1 * c2
    return TruncatedLaurent(f.var, lo, order, out)


def geometric_tail_bound(M, R, L: int):
    """Upper bound M * R^(-L) / (1 - 1/R) for the tail sum_{l>L} M * R^(-l).

    M, R enter as ApproxScalar (or anything mpmath understands); the return
    value is an mpmath float.  Raises NonContractive when |R| <= 1.
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    Rm = R.abs() if isinstance(R, ApproxScalar) else abs(mpmath.mpf(R))
    Mm = M.abs() if isinstance(M, ApproxScalar) else abs(mpmath.mpf(M))
    if Rm <= 1:
        raise NonContractive(f"ratio |R|={Rm} is not > 1; tail cannot be certified")
    return Mm * Rm ** (-L) / (1 - 1 / Rm)
