"""Truncated Taylor (jet) arithmetic over the complex numbers.

Two carriers are provided:

* ``Jet1``: univariate, Taylor coefficients c_0..c_N of f(x0 + eps).
* ``BoxJet``: multivariate, degree bounded separately in each variable
  (coefficient array of shape (n_1, ..., n_d)).  ``Jet3`` is the box of shape
  (2, 2, 2) in (x, y, t): its coefficients are exactly the mixed partials
  f, f_x, f_y, f_t, f_xy, f_xt, f_yt, f_xyt at the base point.

Elementary functions work on plain numbers, ``Jet1`` and ``BoxJet`` alike, so
a formula written once can be evaluated pointwise or differentiated.  On jets
they are applied by composition: f(a0 + N) = sum_m f^(m)(a0)/m! N^m, where N
is the nilpotent (or truncated) part of the argument.
"""
from __future__ import annotations

import cmath
import math
import numbers
import warnings

import numpy as np

from .errors import BranchWarning, DegenerateJet, DivisionBySingularJet, DomainError

EPS_SING = 1e-14
# Angular distance to the negative real axis below which log/sqrt/power warn.
BRANCH_MARGIN = 1e-3

_SCALARS = (numbers.Number, np.number)


def _finite(arr):
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite jet coefficient")
    return arr


class _JetBase:
    __array_priority__ = 1000
    __slots__ = ("c",)

    # subclasses provide: _like(coeffs), max_power, value

    def _coerce(self, other):
        if isinstance(other, _SCALARS):
            return complex(other)
        if isinstance(other, _JetBase):
            if other.c.shape != self.c.shape:
                raise ValueError(f"jet shape mismatch {self.c.shape} vs {other.c.shape}")
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if isinstance(o, complex):
            c = self.c.copy()
            c.flat[0] += o
            return self._like(c)
        return self._like(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return (-self) + o

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if isinstance(o, complex):
            return self._like(self.c * o)
        return self._like(self._mul(self.c, o.c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if isinstance(o, complex):
            if abs(o) < EPS_SING:
                raise DivisionBySingularJet(f"division by {o}")
            return self._like(self.c / o)
        return self * recip(o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return recip(self) * o

    def __pow__(self, n):
        if isinstance(n, numbers.Integral):
            return pow_n(self, int(n))
        return power(self, n)

    @property
    def value(self) -> complex:
        return complex(self.c.flat[0])

    def shifted(self):
        """The jet minus its constant term (the nilpotent part)."""
        c = self.c.copy()
        c.flat[0] = 0
        return self._like(c)

    def allclose(self, other, tol=1e-12):
        o = other.c if isinstance(other, _JetBase) else np.asarray(other)
        scale = max(1.0, float(np.max(np.abs(self.c))))
        return bool(np.max(np.abs(self.c - o)) <= tol * scale)


class Jet1(_JetBase):
    """Univariate jet of fixed order N (N + 1 Taylor coefficients)."""

    __slots__ = ()

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a jet needs at least one coefficient")
        self.c = _finite(c)

    @classmethod
    def variable(cls, x0, order):
        c = np.zeros(order + 1, dtype=complex)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, v, order):
        c = np.zeros(order + 1, dtype=complex)
        c[0] = v
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs):
        """Jet from the values f, f', f'', ... at the base point."""
        return cls([d / math.factorial(m) for m, d in enumerate(derivs)])

    def _like(self, c):
        return Jet1(c)

    @staticmethod
    def _mul(a, b):
        return np.convolve(a, b)[: a.size]

    @property
    def order(self) -> int:
        return self.c.size - 1

    max_power = order

    def deriv(self, m: int) -> complex:
        """m-th derivative at the base point."""
        return complex(self.c[m] * math.factorial(m))

    def derivatives(self):
        return [self.deriv(m) for m in range(self.c.size)]

    def differentiate(self):
        """Jet of f' (order drops by one)."""
        if self.order == 0:
            raise DegenerateJet("cannot differentiate an order-0 jet")
        m = np.arange(1, self.c.size)
        return Jet1(self.c[1:] * m)

    def truncate(self, order):
        return Jet1(self.c[: order + 1])

    def compose(self, inner: "Jet1") -> "Jet1":
        """Series of f(inner), self being f expanded at inner's constant term."""
        n = inner.shifted()
        out = Jet1.constant(self.c[-1], inner.order)
        for cm in self.c[-2::-1]:
            out = out * n + cm
        return out

    def invert(self, x0) -> "Jet1":
        """Inverse series: returns g with g(y0 + eps) = x0 + delta(eps), f(x0 + delta) = y0 + eps."""
        c1 = self.c[1] if self.order >= 1 else 0
        if abs(c1) < EPS_SING:
            raise DegenerateJet("inverse series needs a nonzero first derivative")
        N = self.order
        eps = Jet1.variable(0.0, N)
        tail = Jet1(np.concatenate([[0, 0], self.c[2:]]))
        d = eps / c1
        for _ in range(N):
            d = (eps - tail.compose(d)) / c1
        return d + x0

    def __repr__(self):
        return f"Jet1({np.array2string(self.c, precision=6)})"


class BoxJet(_JetBase):
    """Multivariate jet with per-variable degree bound shape[i] - 1."""

    __slots__ = ("point",)

    def __init__(self, coeffs, point=None):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 0:
            raise ValueError("BoxJet needs at least one variable")
        self.c = _finite(c)
        self.point = None if point is None else tuple(complex(p) for p in point)

    def _like(self, c):
        return type(self)(c, self.point)

    @classmethod
    def variables(cls, point, shape):
        """Coordinate jets (one per axis) at ``point``."""
        shape = tuple(shape)
        out = []
        for ax, p in enumerate(point):
            c = np.zeros(shape, dtype=complex)
            c.flat[0] = p
            if shape[ax] > 1:
                idx = [0] * len(shape)
                idx[ax] = 1
                c[tuple(idx)] = 1.0
            out.append(BoxJet(c, point))
        return tuple(out)

    @classmethod
    def constant(cls, v, shape, point=None):
        c = np.zeros(tuple(shape), dtype=complex)
        c.flat[0] = v
        return cls(c, point)

    @property
    def shape(self):
        return self.c.shape

    @property
    def max_power(self) -> int:
        return int(sum(n - 1 for n in self.c.shape))

    @staticmethod
    def _mul(a, b):
        out = np.zeros_like(a)
        shape = a.shape
        for idx in zip(*np.nonzero(a)):
            src = tuple(slice(0, n - i) for n, i in zip(shape, idx))
            dst = tuple(slice(i, n) for n, i in zip(shape, idx))
            out[dst] += a[idx] * b[src]
        return out

    def __getitem__(self, idx):
        return complex(self.c[idx])

    def partial(self, *orders) -> complex:
        """Mixed partial derivative of the given per-variable orders."""
        f = 1
        for m in orders:
            f *= math.factorial(m)
        return complex(self.c[tuple(orders)] * f)

    def section(self, axis, index):
        """Coefficients with one variable's degree fixed, as a lower-rank BoxJet."""
        c = np.take(self.c, index, axis=axis)
        pt = None if self.point is None else self.point[:axis] + self.point[axis + 1 :]
        return BoxJet(c, pt)

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape}, value={self.value:.6g})"


class Jet3(BoxJet):
    """Jet in (x, y, t) with degree <= 1 per variable."""

    __slots__ = ()
    SHAPE = (2, 2, 2)

    def __init__(self, coeffs, point=None):
        super().__init__(coeffs, point)
        if self.c.shape != self.SHAPE:
            raise ValueError(f"Jet3 needs shape {self.SHAPE}, got {self.c.shape}")

    def _like(self, c):
        return Jet3(c, self.point)

    @classmethod
    def variables(cls, point, shape=SHAPE):
        return tuple(Jet3(v.c, v.point) for v in BoxJet.variables(point, cls.SHAPE))

    @classmethod
    def constant(cls, v, shape=SHAPE, point=None):
        return super().constant(v, cls.SHAPE, point)

    def d(self, a: int, b: int, c: int) -> complex:
        """Partial derivative d^(a+b+c)/dx^a dy^b dt^c, each order in {0, 1}."""
        return complex(self.c[a, b, c])


# ---------------------------------------------------------------------------
# elementary functions


def _branch_check(a0, name):
    if abs(a0) > 0 and abs(abs(cmath.phase(a0)) - math.pi) < BRANCH_MARGIN:
        warnings.warn(f"{name} argument {a0!r} is near the principal branch cut", BranchWarning, stacklevel=4)


def _ident(a0, m):
    return Jet1.variable(a0, m)


def _taylor(name, a0, m, arg=None):
    """Taylor coefficients of f(a0 + eps) up to eps^m."""
    fact = np.array([math.factorial(j) for j in range(m + 1)], dtype=float)
    if name == "exp":
        return Jet1(cmath.exp(a0) / fact)
    if name in ("sinh", "cosh"):
        s, c = cmath.sinh(a0), cmath.cosh(a0)
        even, odd = (s, c) if name == "sinh" else (c, s)
        return Jet1([(even if j % 2 == 0 else odd) / fact[j] for j in range(m + 1)])
    if name in ("sin", "cos"):
        vals = [cmath.sin(a0), cmath.cos(a0), -cmath.sin(a0), -cmath.cos(a0)]
        shift = 0 if name == "sin" else 1
        return Jet1([vals[(j + shift) % 4] / fact[j] for j in range(m + 1)])
    if name == "log":
        if abs(a0) < EPS_SING:
            raise DomainError("log of a jet with vanishing constant term")
        _branch_check(a0, "log")
        return Jet1([cmath.log(a0)] + [(-1) ** (j + 1) / (j * a0**j) for j in range(1, m + 1)])
    if name == "recip":
        if abs(a0) < EPS_SING:
            raise DivisionBySingularJet(f"reciprocal of jet with constant term {a0!r}")
        return Jet1([(-1) ** j / a0 ** (j + 1) for j in range(m + 1)])
    if name == "power":
        r = arg
        if abs(a0) < EPS_SING:
            raise DomainError("non-integer power of a jet with vanishing constant term")
        _branch_check(a0, "power")
        base = cmath.sqrt(a0) if r == 0.5 else cmath.exp(r * cmath.log(a0))
        out, coef = [], base
        for j in range(m + 1):
            out.append(coef)
            coef = coef * (r - j) / ((j + 1) * a0)
        return Jet1(out)
    if name in ("tanh", "coth", "tan"):
        x = _ident(a0, m)
        if name == "tanh":
            num, den = sinh(x), cosh(x)
        elif name == "coth":
            num, den = cosh(x), sinh(x)
        else:
            num, den = sin(x), cos(x)
        if abs(den.value) < EPS_SING:
            raise DomainError(f"{name} pole at {a0!r}")
        return num * recip(den)
    raise ValueError(f"unknown elementary function {name!r}")


def _scalar(name, z, arg=None):
    z = complex(z)
    if name == "exp":
        return cmath.exp(z)
    if name in ("sinh", "cosh", "sin", "cos"):
        return getattr(cmath, name)(z)
    if name == "log":
        if abs(z) < EPS_SING:
            raise DomainError("log(0)")
        _branch_check(z, "log")
        return cmath.log(z)
    if name == "recip":
        if abs(z) < EPS_SING:
            raise DivisionBySingularJet(f"1/{z!r}")
        return 1 / z
    if name == "power":
        if abs(z) < EPS_SING:
            if complex(arg).real > 0:
                return 0j
            raise DomainError("non-positive power of 0")
        _branch_check(z, "power")
        return cmath.sqrt(z) if arg == 0.5 else cmath.exp(arg * cmath.log(z))
    if name == "tanh":
        c = cmath.cosh(z)
        if abs(c) < EPS_SING:
            raise DomainError(f"tanh pole at {z!r}")
        return cmath.tanh(z)
    if name == "coth":
        s = cmath.sinh(z)
        if abs(s) < EPS_SING:
            raise DomainError(f"coth pole at {z!r}")
        return cmath.cosh(z) / s
    if name == "tan":
        c = cmath.cos(z)
        if abs(c) < EPS_SING:
            raise DomainError(f"tan pole at {z!r}")
        return cmath.sin(z) / c
    raise ValueError(f"unknown elementary function {name!r}")


def _horner(d: Jet1, n):
    out = d.c[-1] + 0 * n
    for cm in d.c[-2::-1]:
        out = out * n + cm
    return out


def _apply(name, a, arg=None):
    if isinstance(a, _JetBase):
        a0 = a.value
        d = _taylor(name, a0, a.max_power, arg)
        return _horner(d, a.shifted())
    return _scalar(name, a, arg)


def exp(a):
    return _apply("exp", a)


def log(a):
    return _apply("log", a)


def sinh(a):
    return _apply("sinh", a)


def cosh(a):
    return _apply("cosh", a)


def tanh(a):
    return _apply("tanh", a)


def coth(a):
    return _apply("coth", a)


def sin(a):
    return _apply("sin", a)


def cos(a):
    return _apply("cos", a)


def tan(a):
    return _apply("tan", a)


def recip(a):
    return _apply("recip", a)


def power(a, r):
    """Principal-branch a**r for non-integer r."""
    return _apply("power", a, complex(r) if not isinstance(r, float) else r)


def sqrt(a):
    return _apply("power", a, 0.5)


def pow_n(a, n: int):
    """Integer power by repeated squaring (negative n via the reciprocal)."""
    if n < 0:
        return recip(pow_n(a, -n))
    out = 1.0 if not isinstance(a, _JetBase) else a._like(np.zeros_like(a.c)) + 1.0
    base = a
    while n:
        if n & 1:
            out = out * base
        n >>= 1
        if n:
            base = base * base
    return out if isinstance(a, _JetBase) else complex(out)


ELEMENTARY = {
    "exp": exp, "log": log, "sqrt": sqrt, "sinh": sinh, "cosh": cosh, "tanh": tanh,
    "coth": coth, "sin": sin, "cos": cos, "tan": tan, "recip": recip,
}


def jet_elementary(f, a, n=None):
    """Apply a named elementary function; ``pow_n`` takes the exponent ``n``."""
    if f == "pow_n":
        return pow_n(a, n)
    try:
        return ELEMENTARY[f](a)
    except KeyError:
        raise ValueError(f"unknown elementary function {f!r}") from None


def jet_arith(a, b, op):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def schwarzian(a: Jet1) -> complex:
    """{f; x} = f'''/f' - 3/2 (f''/f')^2 from a jet of order >= 3."""
    if a.order < 3:
        raise DegenerateJet("schwarzian needs a jet of order >= 3")
    c1, c2, c3 = a.c[1], a.c[2], a.c[3]
    if abs(c1) < EPS_SING:
        raise DegenerateJet("schwarzian needs f' != 0")
    return complex(6 * c3 / c1 - 6 * (c2 / c1) ** 2)


def jet_of(f, x0, order):
    """Jet of a polymorphic callable f at x0."""
    return f(Jet1.variable(x0, order))
