"""The four reduced third-order systems in (U', V') and their first integrals.

With W = nu U the qualitative system reads

    W''' + 2 c_v W'V'' + f1 W'' + f2 W'V' + f4 V'' + f3 W' + f5 V' + f6 = 0
    V''' - 2 c_u^2/c_v W'W'' + f1 V'' - f2 W'^2 - f4 W'' + g3 V' + g5 W' + g6 = 0

and the gauge c_u = c_v = 1, f2 = f3 = f4 = 0 is used throughout.  The
no-logarithm conditions single out four coefficient families, labelled by
f1 in {k coth(k xi), 1/xi, k, 0}.

All formulas are written with the polymorphic functions of ``jets`` so they
evaluate on numbers and on jets alike.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import jets as J
from .errors import DomainError, SingularPoint

EPS_POLE = 1e-8


class ReducedCase(str, Enum):
    TRI = "tri"
    RAT = "rat"
    EXP = "exp"
    ZER = "zer"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise ValueError(f"unknown reduced case {tag!r}; expected one of tri, rat, exp, zer") from None


@dataclass(frozen=True)
class ReducedConstants:
    """nu, k and the integration constants K2, K4, K5, K6, K7.

    For Tri and Rat a translation of V' removes K7; it is therefore treated as
    0 in those cases unless ``keep_K7`` is set.
    """

    nu: complex = 1.0
    k: complex = 1.0
    K2: complex = 0.0
    K4: complex = 0.0
    K5: complex = 0.0
    K6: complex = 0.0
    K7: complex = 0.0
    keep_K7: bool = False

    def __post_init__(self):
        for name in ("nu", "k", "K2", "K4", "K5", "K6", "K7"):
            val = complex(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.nu == 0:
            raise ValueError("nu must be nonzero")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def K7_for(self, case) -> complex:
        case = ReducedCase.parse(case)
        if case in (ReducedCase.TRI, ReducedCase.RAT) and not self.keep_K7:
            return 0j
        return self.K7

    def normalised(self, case):
        """(K6, shift) of the frame where K7 is absent: V' -> V' + shift, K6 -> K6 - K5 shift."""
        K7 = self.K7_for(case)
        if ReducedCase.parse(case) in (ReducedCase.TRI, ReducedCase.RAT):
            return self.K6 - 2 * self.K5 * K7, 2 * K7
        return self.K6, 0j


@dataclass
class ReducedState:
    xi: complex
    up: complex
    upp: complex
    vp: complex
    vpp: complex

    def as_array(self):
        return np.array([self.up, self.upp, self.vp, self.vpp], dtype=complex)

    @classmethod
    def from_array(cls, xi, y):
        return cls(xi, *(complex(v) for v in y))


@dataclass(frozen=True)
class GaugeChoice:
    c_u: complex = 1.0
    c_v: complex = 1.0
    f2: complex = 0.0
    f3: complex = 0.0
    f4: complex = 0.0


GAUGE = GaugeChoice()


def _zero(xi):
    return 0 * xi


@dataclass(frozen=True)
class CoefficientFamily:
    """Coefficient functions of xi; each accepts a number or a jet."""

    f1: Callable
    g3: Callable
    f5: Callable
    f6: Callable
    g6: Callable
    g5: Callable = field(default=_zero)
    case: ReducedCase | None = None


def coefficient_family(case, c: ReducedConstants) -> CoefficientFamily:
    case = ReducedCase.parse(case)
    k, K5, K6 = c.k, c.K5, c.K6
    K7 = c.K7_for(case)
    if case in (ReducedCase.TRI, ReducedCase.EXP) and c.k == 0:
        raise DomainError("k must be nonzero for the tri and exp families")
    if case is ReducedCase.TRI:
        def s(xi):
            ct = J.coth(k * xi)
            return k**2 * (1 - ct * ct)
        return CoefficientFamily(
            f1=lambda xi: k * J.coth(k * xi),
            g3=s,
            f5=lambda xi: 2 * K5 * s(xi),
            f6=lambda xi: s(xi) * (2 * K6 - K5 * k * J.coth(k * xi)),
            g6=lambda xi: s(xi) * (2 * K7 + 2 * K5**2 * k * J.coth(k * xi)),
            case=case,
        )
    if case is ReducedCase.RAT:
        return CoefficientFamily(
            f1=lambda xi: 1 / xi,
            g3=lambda xi: -1 / (xi * xi),
            f5=lambda xi: -2 * K5 / (xi * xi),
            f6=lambda xi: -2 * K6 / (xi * xi) + K5 / J.pow_n(xi, 3),
            g6=lambda xi: -2 * K7 / (xi * xi) - 2 * K5**2 / J.pow_n(xi, 3),
            case=case,
        )
    if case is ReducedCase.EXP:
        def e(xi):
            return J.exp(-2 * k * xi)
        return CoefficientFamily(
            f1=lambda xi: k + 0 * xi,
            g3=_zero,
            f5=lambda xi: -8 * K5 * k * e(xi),
            f6=lambda xi: -8 * K6 * e(xi),
            g6=lambda xi: -16 * K5**2 * k * e(xi) * e(xi) - 8 * K7 * k * e(xi),
            case=case,
        )
    return CoefficientFamily(
        f1=_zero,
        g3=_zero,
        f5=lambda xi: -8 * K5 + 0 * xi,
        f6=lambda xi: -8 * K6 + 0 * xi,
        g6=lambda xi: -8 * K7 + 32 * K5**2 * xi,
        case=case,
    )


def _combine(terms, relative):
    total = complex(sum(terms))
    if not relative:
        return total
    scale = max(abs(complex(t)) for t in terms)
    return abs(total) / scale if scale > 0 else 0.0


def nolog_residuals(fam: CoefficientFamily, xi, branch=1, relative=False):
    """(Q2, Q4a, Q4b) of the no-logarithm conditions for the sign branch = +-1 of i."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    x = J.Jet1.variable(xi, 2)
    f1, g3, g5, f5, f6, g6 = (J.Jet1.constant(0, 2) + h(x) for h in (fam.f1, fam.g3, fam.g5, fam.f5, fam.f6, fam.g6))
    d = lambda j, m=1: j.deriv(m)
    si = branch * 1j
    q2 = (g3.value, -d(f1), si * g5.value)
    q4a = (d(f1, 2), 2 * f1.value * d(f1), si * d(f5), si * 2 * f1.value * f5.value)
    q4b = (d(g6), 2 * f1.value * g6.value, -f5.value**2 / 2,
           si * d(f6), si * 2 * f1.value * f6.value, si * f5.value * d(f1) / 2)
    return tuple(_combine(t, relative) for t in (q2, q4a, q4b))


def check_pole(case, c: ReducedConstants, xi, eps=EPS_POLE):
    case = ReducedCase.parse(case)
    x0 = xi.value if isinstance(xi, J.Jet1) else complex(xi)
    if case is ReducedCase.TRI and abs(np.sinh(complex(c.k) * x0)) < eps:
        raise SingularPoint(f"sinh(k xi) vanishes at xi={x0!r}")
    if case is ReducedCase.RAT and abs(x0) < eps:
        raise SingularPoint("xi = 0 is a pole of the rational family")


def qualitative_rhs(fam: CoefficientFamily, nu, s: ReducedState, gauge: GaugeChoice = GAUGE):
    """(U''', V''') from the qualitative system with an arbitrary gauge."""
    xi = s.xi
    f1, g3, g5, f5, f6, g6 = (h(xi) for h in (fam.f1, fam.g3, fam.g5, fam.f5, fam.f6, fam.g6))
    w1, w2, v1, v2 = nu * s.up, nu * s.upp, s.vp, s.vpp
    g = gauge
    w3 = -(2 * g.c_v * w1 * v2 + f1 * w2 + g.f2 * w1 * v1 + g.f4 * v2 + g.f3 * w1 + f5 * v1 + f6)
    v3 = (2 * g.c_u**2 / g.c_v) * w1 * w2 - f1 * v2 + g.f2 * w1 * w1 + g.f4 * w2 - g3 * v1 - g5 * w1 - g6
    return w3 / nu, v3


def reduced_rhs(case, c: ReducedConstants, s: ReducedState, fam: CoefficientFamily | None = None):
    """(U''', V''') of the reduced system of the given case."""
    check_pole(case, c, s.xi)
    fam = fam or coefficient_family(case, c)
    return qualitative_rhs(fam, c.nu, s)


def rhs_function(case, c: ReducedConstants):
    """f(xi, y) for y = (U', U'', V', V''), suitable for the integrator."""
    fam = coefficient_family(case, c)

    def f(xi, y):
        s = ReducedState(xi, y[0], y[1], y[2], y[3])
        u3, v3 = reduced_rhs(case, c, s, fam)
        return [y[1], u3, y[3], v3]

    return f


def integral_terms(case, c: ReducedConstants, s: ReducedState):
    """Additive terms of K2 and K4 (their sums are the first integrals)."""
    case = ReducedCase.parse(case)
    check_pole(case, c, s.xi)
    nu, k, K5 = c.nu, c.k, c.K5
    xi, up, upp, vpp = s.xi, s.up, s.upp, s.vpp
    K6, shift = c.normalised(case)
    vp = s.vp + shift
    if case is ReducedCase.TRI:
        sh, ct = J.sinh(k * xi), J.coth(k * xi)
        t2 = [-nu**2 * up * up, vpp, k * ct * vp, K5**2 * k**2 * ct * ct]
        t4 = [J.pow_n(nu * sh / k * upp - K5 * k / sh, 2), J.pow_n(sh / k * vpp, 2), -4 * K5 * nu * up * vp,
              -vp * vp, -4 * K6 * nu * up, -4 * K5**2 * k * ct * vp, -4 * K5 * K6 * k * ct]
    elif case is ReducedCase.RAT:
        t2 = [-nu**2 * up * up, vpp, vp / xi, K5**2 / (xi * xi)]
        t4 = [J.pow_n(nu * xi * upp - K5 / xi, 2), J.pow_n(xi * vpp, 2), -4 * nu * K5 * up * vp, -vp * vp,
              -4 * nu * K6 * up, -4 * K5**2 * vp / xi, -4 * K5 * K6 / xi]
    elif case is ReducedCase.EXP:
        K7 = c.K7
        e = J.exp(-2 * k * xi)
        e2 = J.exp(2 * k * xi)
        t2 = [-nu**2 * up * up, vpp, k * vp, 4 * K5**2 * e * e, 4 * K7 * e]
        t4 = [e2 * nu**2 * upp * upp, e2 * vpp * vpp, -8 * nu * K5 * k * upp, -16 * nu * K5 * k * up * vp,
              -8 * nu * (2 * K6 + K5 * k**2) * up, -16 * K7 * k * vp, -32 * K5**2 * k * vp * e, -32 * K5 * K6 * e]
    else:
        K7 = c.K7
        t2 = [-nu**2 * up * up, vpp, 16 * K5**2 * xi * xi, -8 * K7 * xi]
        t4 = [nu**2 * upp * upp, vpp * vpp, -8 * nu * K5 * upp, -16 * nu * K5 * up * vp, -16 * nu * K6 * up,
              (64 * K5**2 * xi - 16 * K7) * vp, 64 * K5 * K6 * xi]
    return t2, t4


def first_integrals(case, c: ReducedConstants, s: ReducedState):
    t2, t4 = integral_terms(case, c, s)
    return sum(t2), sum(t4)


def integral_scales(case, c: ReducedConstants, s: ReducedState):
    """Largest additive-term magnitude of K2 and of K4 (for relative comparisons)."""
    t2, t4 = integral_terms(case, c, s)
    return max(abs(complex(t)) for t in t2), max(abs(complex(t)) for t in t4)


MONOMIAL_VARS = ("U''", "V''", "U'", "V'")
MONOMIAL_WEIGHTS = (2, 2, 1, 1)


def integral_monomials(weight: int):
    """Exponent tuples (a, b, c, d) of U''^a V''^b U'^c V'^d with 2a + 2b + c + d = weight."""
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    out = []
    for a in range(weight // 2 + 1):
        for b in range((weight - 2 * a) // 2 + 1):
            rest = weight - 2 * a - 2 * b
            for cc in range(rest, -1, -1):
                out.append((a, b, cc, rest - cc))
    return out


def monomial_str(exps):
    parts = []
    for name, e in zip(MONOMIAL_VARS, exps):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) or "1"


def elliptic_relation(c: ReducedConstants, s: ReducedState, variant="corrected", relative=False):
    """First-order quartic satisfied by U' when K5 = K7 = 0 (Zer).

    nu^2 U''^2 + nu^4 U'^4 + 2 nu^2 K2 U'^2 - 16 nu K6 U' + K2^2 - K4 (corrected);
    ``uncorrected`` uses K2 in place of K2^2.
    """
    if variant not in ("corrected", "uncorrected"):
        raise ValueError("variant must be 'corrected' or 'uncorrected'")
    nu, K2, K4, K6 = c.nu, c.K2, c.K4, c.K6
    up, upp = s.up, s.upp
    const = K2 * K2 if variant == "corrected" else K2
    terms = [nu**2 * upp * upp, nu**4 * up**4, 2 * nu**2 * K2 * up * up, -16 * nu * K6 * up, const, -K4]
    return _combine(terms, relative)


def dintegrals_dxi(case, c: ReducedConstants, s: ReducedState):
    """dK2/dxi and dK4/dxi along the flow, computed with first-order jets in xi."""
    u3, v3 = reduced_rhs(case, c, s)
    x = J.Jet1([s.xi, 1])
    js = ReducedState(x, J.Jet1([s.up, s.upp]), J.Jet1([s.upp, u3]), J.Jet1([s.vp, s.vpp]), J.Jet1([s.vpp, v3]))
    k2, k4 = first_integrals(case, c, js)
    return k2.c[1], k4.c[1]
