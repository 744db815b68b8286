"""Closed-form reduction variables (xi, du, dv) of the coupled system.

A reduction writes

    xi = xi(x, y, t),   nu u = W(xi) + du(x, y, t),   v = V(xi) + int dv dt,

with (W, V) = (nu U, V) solving one of the four reduced systems.  The triple
(xi, du, dv) must satisfy seven PDEs (``admissibility_residuals``); this
module builds the explicit solutions for each family, evaluates them as
jets, and reassembles (u, v) from an integrated trajectory.

Every evaluator is written with the polymorphic functions of ``jets`` and
takes a point (x, y, t), returning a Jet3.  Only derivatives of dv in x and
y are ever needed; its t-slots carry no information.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from . import jets as J
from . import reduced as R
from .errors import (
    BranchWarning,
    ConstraintUnsatisfiable,
    DegenerateTimeFunctions,
    DivisionBySingularJet,
    DomainError,
    PoleAtSample,
    SingularLocus,
    ZeroWronskian,
)
from .integrator import ComplexPath, dense_eval, integrate, integrate_ode
from .jets import BoxJet, Jet1, Jet3
from .sg2d import FieldSample, pde_residual

MAX_DEGREE = 8
CONSTRAINT_TOL = 1e-10
LOCUS_TOL = 1e-12
WRONSKIAN_TOL = 1e-10

CASE_SPECS = (
    "generic_example", "generic_full", "rational", "zer", "zer_k5_zero",
    "exp", "exp_k5_zero", "exp_wronskian_zero", "zer_wronskian_zero",
)
CASE_FAMILY = {
    "generic_example": R.ReducedCase.TRI, "generic_full": R.ReducedCase.TRI, "rational": R.ReducedCase.RAT,
    "zer": R.ReducedCase.ZER, "zer_k5_zero": R.ReducedCase.ZER, "zer_wronskian_zero": R.ReducedCase.ZER,
    "exp": R.ReducedCase.EXP, "exp_k5_zero": R.ReducedCase.EXP, "exp_wronskian_zero": R.ReducedCase.EXP,
}


# ---------------------------------------------------------------------------
# time functions


@dataclass(frozen=True)
class TimeFunctions:
    """Named polynomials of t with complex coefficients (low to high degree)."""

    coeffs: Mapping[str, tuple] = field(default_factory=dict)
    max_degree: int = MAX_DEGREE

    def __post_init__(self):
        norm = {}
        for name, cs in self.coeffs.items():
            arr = tuple(complex(c) for c in (cs if np.iterable(cs) else [cs]))
            if len(arr) == 0:
                arr = (0j,)
            if len(arr) - 1 > self.max_degree:
                raise ValueError(f"{name} has degree {len(arr) - 1} > {self.max_degree}")
            norm[name] = arr
        object.__setattr__(self, "coeffs", norm)

    @classmethod
    def of(cls, **kw):
        return cls(dict(kw))

    def has(self, name):
        return name in self.coeffs

    def poly(self, name, m=0) -> Polynomial:
        if name not in self.coeffs:
            raise KeyError(f"time function {name!r} is not defined")
        p = Polynomial(np.array(self.coeffs[name], dtype=complex))
        return p.deriv(m) if m else p

    def __call__(self, name, t, m=0):
        """m-th derivative of the named function at t (a number or a jet)."""
        c = self.poly(name, m).coef
        out = complex(c[-1]) + 0 * t
        for a in c[-2::-1]:
            out = out * t + complex(a)
        return out

    def is_zero(self, name, m=0):
        return bool(np.all(np.abs(self.poly(name, m).coef) < CONSTRAINT_TOL)) if self.has(name) else True


# ---------------------------------------------------------------------------
# reduction variables


@dataclass(frozen=True)
class ReductionVariables:
    """Evaluators point -> Jet3 for xi, du, dv, attached constants and constraint values."""

    case: str
    family: R.ReducedCase
    constants: R.ReducedConstants
    xi: Callable
    du: Callable
    dv: Callable
    constraints: Mapping[str, complex] = field(default_factory=dict)
    extras: Mapping[str, object] = field(default_factory=dict)

    def jets(self, point):
        return self.xi(point), self.du(point), self.dv(point)

    @property
    def satisfied(self):
        return all(abs(v) < CONSTRAINT_TOL for v in self.constraints.values())


def _vars(point):
    return Jet3.variables(tuple(complex(p) for p in point))


def _derivative_t(A: BoxJet):
    """Jet3 of dA/dt from a BoxJet of shape (2, 2, 3)."""
    c = A.c[:, :, 1:] * np.array([1.0, 2.0])
    return Jet3(c, A.point)


def _antiderivative_evaluator(A: Callable):
    """dv evaluator from a polymorphic t-antiderivative A(X, Y, T)."""

    def dv(point):
        X, Y, T = BoxJet.variables(tuple(complex(p) for p in point), (2, 2, 3))
        return _derivative_t(A(X, Y, T))

    return dv


def _lift(f: Callable):
    def ev(point):
        return f(*_vars(point))

    return ev


def compose_taylor(coeffs, arg):
    """sum_j coeffs[j] (arg - arg0)^j for a jet ``arg`` (Taylor composition)."""
    d = Jet1(np.asarray(coeffs, dtype=complex))
    if not isinstance(arg, J._JetBase):
        return complex(d.c[0])
    return J._horner(d, arg.shifted())


def compose2(F: BoxJet, P, T):
    """F(p, t) given as a 2-variable BoxJet at (p0, t0), composed with jets P, T."""
    dP, dT = P.shifted(), T.shifted()
    out = 0 * P
    powT = [1.0 + 0 * T]
    for _ in range(F.shape[1] - 1):
        powT.append(powT[-1] * dT)
    powP = 1.0 + 0 * P
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            if F.c[i, j] != 0:
                out = out + complex(F.c[i, j]) * powP * powT[j]
        powP = powP * dP
    return out


def _f1_prime(fam, xi0):
    return fam.f1(Jet1.variable(xi0, 1)).c[1]


def _check_locus(xi: Jet3, tol=LOCUS_TOL):
    xx, yy, tt = xi.d(1, 0, 0), xi.d(0, 1, 0), xi.d(0, 0, 1)
    if abs(xx * yy * tt) < tol * max(1.0, abs(xi.value)) ** 3:
        raise SingularLocus("xi_x xi_y xi_t vanishes at this point")


def _terms(xi: Jet3, du: Jet3, dv: Jet3, fam):
    """The additive terms of the seven admissibility equations."""
    x0 = xi.value
    X, Y, T = xi.d(1, 0, 0), xi.d(0, 1, 0), xi.d(0, 0, 1)
    XT, YT, XY = xi.d(1, 0, 1), xi.d(0, 1, 1), xi.d(1, 1, 0)
    XYT = X * Y * T
    f1, f5, f6, g6 = (complex(h(x0)) for h in (fam.f1, fam.f5, fam.f6, fam.g6))
    f1p = _f1_prime(fam, x0)
    ux, uy, uxt, uyt, uxyt = du.d(1, 0, 0), du.d(0, 1, 0), du.d(1, 0, 1), du.d(0, 1, 1), du.d(1, 1, 1)
    vx, vy, vxy = dv.d(1, 0, 0), dv.d(0, 1, 0), dv.d(1, 1, 0)
    return [
        (XT * Y, X * YT),
        (XY, -X * Y * f1),
        (ux * Y, uy * X),
        (ux * YT, uy * XT, -XYT * f5),
        (vx * Y, vy * X, XYT * f1p),
        (uxyt, ux * vy, uy * vx, -XYT * f6),
        (vxy, -uxt * uy, -ux * uyt, -XYT * g6),
    ]


RELATIVE_FLOOR = 1e-6


def _combine_all(groups, relative):
    """Sum each group; relative values divide by the largest term of the group,
    floored at RELATIVE_FLOOR times the largest term of all groups (so that an
    equation whose terms all vanish does not report rounding noise as O(1))."""
    totals = [complex(sum(g)) for g in groups]
    if not relative:
        return totals
    sizes = [max(abs(complex(t)) for t in g) for g in groups]
    floor = RELATIVE_FLOOR * max(sizes)
    return [abs(tot) / max(sz, floor) if max(sz, floor) > 0 else 0.0 for tot, sz in zip(totals, sizes)]


def _evaluate(rv: ReductionVariables, point):
    try:
        xi, du, dv = rv.jets(point)
    except (DivisionBySingularJet, DomainError, ZeroDivisionError) as e:
        raise SingularLocus(f"reduction variables are singular at {point}: {e}") from e
    _check_locus(xi)
    return xi, du, dv


def admissibility_residuals(rv: ReductionVariables, point, relative=False):
    """The seven admissibility residuals at (x, y, t)."""
    xi, du, dv = _evaluate(rv, point)
    fam = R.coefficient_family(rv.family, rv.constants)
    return _combine_all(_terms(xi, du, dv, fam), relative)


def gradient_consistency(rv: ReductionVariables, point):
    """Direct jets of du, dv minus the gradient formulas (four values)."""
    xi, du, dv = _evaluate(rv, point)
    fam = R.coefficient_family(rv.family, rv.constants)
    x0 = xi.value
    X, Y, T = xi.d(1, 0, 0), xi.d(0, 1, 0), xi.d(0, 0, 1)
    XT, YT = xi.d(1, 0, 1), xi.d(0, 1, 1)
    w = X * YT - Y * XT
    # |xi_x xi_y| joins the scale so rounding-level xi_xt, xi_yt count as zero
    if abs(w) <= WRONSKIAN_TOL * max(abs(X * YT), abs(Y * XT), abs(X * Y), 1e-300):
        raise ZeroWronskian("xi_x xi_yt - xi_y xi_xt vanishes; use the F/G construction")
    f5, f6 = complex(fam.f5(x0)), complex(fam.f6(x0))
    f1p = _f1_prime(fam, x0)
    if abs(f5) < LOCUS_TOL:
        raise SingularLocus("f5 vanishes; the gradient formulas do not apply")
    bracket = du.d(1, 1, 1) / (X * Y * T) - f6
    ux = X * X * Y * T * f5 / w
    uy = Y * Y * X * T * f5 / (-w)
    vx = w / (2 * Y * f5) * bracket - X * T / 2 * f1p
    vy = -w / (2 * X * f5) * bracket - Y * T / 2 * f1p
    return [du.d(1, 0, 0) - ux, du.d(0, 1, 0) - uy, dv.d(1, 0, 0) - vx, dv.d(0, 1, 0) - vy]


def wronskian(rv: ReductionVariables, point):
    xi = rv.xi(point)
    return xi.d(1, 0, 0) * xi.d(0, 1, 1) - xi.d(0, 1, 0) * xi.d(1, 0, 1)


# ---------------------------------------------------------------------------
# builders


def _require(cond, msg):
    if not cond:
        raise ConstraintUnsatisfiable(msg)


def _generic_example(tf, c, enforce):
    k, K5, K6 = c.k, c.K5, c.K6
    cons = {"K5^2+1": K5 * K5 + 1, "K6-2K5K7": K6 - 2 * K5 * c.K7}
    if enforce:
        _require(abs(cons["K5^2+1"]) < CONSTRAINT_TOL, "the generic reduction needs K5^2 = -1")
        _require(abs(cons["K6-2K5K7"]) < CONSTRAINT_TOL, "the generic reduction needs K6 = 2 K5 K7")

    def xi(X, Y, T):
        a, b = J.sqrt(X * (Y - 2 * T)), J.sqrt(Y * (X - 2 * T))
        return J.log((a + b) / (a - b)) / k

    def du(X, Y, T):
        return K5 / 2 * J.log(X * Y / ((X - 2 * T) * (Y - 2 * T)))

    def dv(X, Y, T):
        return (-K6 * J.sqrt(X * Y) / (k * K5 * T * J.sqrt((X - 2 * T) * (Y - 2 * T)))
                - (4 * T - X - Y) / (2 * (X - 2 * T) * (Y - 2 * T)))

    return _lift(xi), _lift(du), _lift(dv), cons, {}


def _generic_blocks(tf, c):
    """Pieces of the general (lambda1, lambda2, lambda3) block as functions of jets."""
    k, K5, K6 = c.k, c.K5, c.K6

    def parts(X, Y, T):
        l1, l2, l3 = tf("lambda1", T), tf("lambda2", T), tf("lambda3", T)
        l1p, l2p, l3p = tf("lambda1", T, 1), tf("lambda2", T, 1), tf("lambda3", T, 1)
        N1 = (1 + l1) * (X - l3) + l2
        N2 = (1 - l1) * (Y - l3) - l2
        D1 = (1 - l1) * (X - l3) - l2
        D2 = (1 + l1) * (Y - l3) + l2
        A = l2 * l1p - l1 * l2p + (l1 * l1 + 1) * l3p
        B = l2p - 2 * l1 * l3p
        return l1, l2, N1, N2, D1, D2, A, B

    def xi(X, Y, T):
        _, _, N1, N2, D1, D2, _, _ = parts(X, Y, T)
        a, b = J.sqrt(N1 * N2), J.sqrt(D1 * D2)
        return J.log((a + b) / (a - b)) / k

    def du(X, Y, T):
        _, _, N1, N2, D1, D2, A, B = parts(X, Y, T)
        r = J.sqrt(D2 * N1 / (D1 * N2))
        return K5 * J.log((A + B) * r + (A - B) / r)

    def dv0(X, Y, T):
        l1, l2, N1, N2, D1, D2, A, B = parts(X, Y, T)
        return ((A - B) / (4 * (l1 + 1)) * (1 / N1 + 1 / D2)
                - (A + B) / (4 * (l1 - 1)) * (1 / N2 + 1 / D1)
                - K6 / (2 * k * K5 * l2) * ((A + B) * D2 * N1 - (A - B) * D1 * N2) / J.sqrt(N1 * D1 * N2 * D2))

    def dv1(X, Y, T):
        l1, _, N1, N2, D1, D2, A, B = parts(X, Y, T)
        return -2 * (1 - l1 * l1) * ((1 - l1) * N1 + (1 + l1) * N2) / ((A + B) * D2 * N1 + (A - B) * D1 * N2)

    return xi, du, dv0, dv1


def _generic_full(tf, c, enforce, c1=None):
    for name in ("lambda1", "lambda2", "lambda3"):
        if not tf.has(name):
            raise DegenerateTimeFunctions(f"generic_full needs {name}")
    if tf.is_zero("lambda2"):
        raise DegenerateTimeFunctions("lambda2 must not vanish identically")
    cons = {"K5^2+1": c.K5 * c.K5 + 1, "K6-2K5K7": c.K6 - 2 * c.K5 * c.K7}
    if enforce:
        _require(abs(cons["K5^2+1"]) < CONSTRAINT_TOL, "the generic reduction needs K5^2 = -1")
        _require(abs(cons["K6-2K5K7"]) < CONSTRAINT_TOL, "the generic reduction needs K6 = 2 K5 K7")
    xi, du, dv0, dv1 = _generic_blocks(tf, c)
    lxi, ldu, ldv0, ldv1 = _lift(xi), _lift(du), _lift(dv0), _lift(dv1)
    cc = c.replace(keep_K7=True)
    fam = R.coefficient_family(R.ReducedCase.TRI, cc)

    def c1_at(point):
        """c1 solving admissibility residual 7 at this point (numeric closure)."""
        x, u, v0, v1 = lxi(point), ldu(point), ldv0(point), ldv1(point)
        r7 = complex(sum(_terms(x, u, v0, fam)[6]))
        slope = v1.d(1, 1, 0)
        if abs(slope) < LOCUS_TOL:
            raise SingularLocus("residual 7 does not involve c1 here")
        return -r7 / slope

    def dv(point):
        cv = c1(point[2]) if callable(c1) else (c1 if c1 is not None else c1_at(point))
        return ldv0(point) + complex(cv) * ldv1(point)

    return lxi, ldu, dv, cons, {"c1_at": c1_at, "dv0": ldv0, "dv1": ldv1}


def c1_consistency(rv: ReductionVariables, t, xy_points):
    """Values of the numerically closed c1 at fixed t and their relative spread."""
    vals = np.array([rv.extras["c1_at"]((x, y, t)) for x, y in xy_points])
    ref = vals.mean()
    spread = float(np.max(np.abs(vals - ref)) / max(1.0, abs(ref)))
    return vals, spread


def _rational(tf, c, enforce):
    for name in ("h1", "h2"):
        if not tf.has(name):
            raise DegenerateTimeFunctions(f"the rational reduction needs {name}")
    if tf.is_zero("h1", 1) and tf.is_zero("h2", 1):
        raise DegenerateTimeFunctions("(h1', h2') must not vanish identically")
    K5, K6 = c.K5, c.K6
    if abs(K5) < CONSTRAINT_TOL:
        raise ConstraintUnsatisfiable("the rational reduction divides by K5")
    wr = tf.poly("h2", 1) * tf.poly("h1", 2) - tf.poly("h1", 1) * tf.poly("h2", 2)
    wr_size = float(np.max(np.abs(wr.coef)))
    cons = {"(K5^2+1)(h2'h1''-h1'h2'')": (K5 * K5 + 1) * wr_size, "K6-2K5K7": K6 - 2 * K5 * c.K7}
    if enforce:
        _require(abs(cons["(K5^2+1)(h2'h1''-h1'h2'')"]) < CONSTRAINT_TOL,
                 "the rational reduction needs K5^2 = -1 or proportional h1', h2'")
        _require(abs(cons["K6-2K5K7"]) < CONSTRAINT_TOL, "the rational reduction needs K6 = 2 K5 K7")

    def pieces(X, Y, T):
        h1, h2 = tf("h1", T), tf("h2", T)
        a, b = X + h1, Y + h2
        return a, b, a * tf("h2", T, 1) - b * tf("h1", T, 1)

    def xi(X, Y, T):
        a, b, _ = pieces(X, Y, T)
        return J.sqrt(a * b)

    def du(X, Y, T):
        a, b, w = pieces(X, Y, T)
        return K5 * J.log(w) - K5 / 2 * J.log(a * b)

    def dv_antiderivative(X, Y, T):
        a, b, w = pieces(X, Y, T)
        return J.log(w) - J.log(a * b) / 4 + K6 / K5 * J.sqrt(a * b)

    return _lift(xi), _lift(du), _antiderivative_evaluator(dv_antiderivative), cons, {}


def zer_h1(h0, h0p, c, C1=0.0, C2=0.0, variant="corrected"):
    """h1 = C1 h0 + C2/h0 + K7/(4 K5^2) (``uncorrected`` drops the 4) and its t-derivative."""
    div = 4 if variant == "corrected" else 1
    if variant not in ("corrected", "uncorrected"):
        raise ValueError(f"unknown h1 variant {variant!r}")
    h1 = C1 * h0 + C2 / h0 + c.K7 / (div * c.K5**2)
    h1p = C1 * h0p - C2 * h0p / (h0 * h0)
    return h1, h1p


def _zer(tf, c, enforce, C1=0.0, C2=0.0, h1_variant="corrected"):
    if not tf.has("h0") or tf.is_zero("h0", 1):
        raise DegenerateTimeFunctions("the zer reduction needs h0' != 0 (else use zer_wronskian_zero)")
    K5, K6 = c.K5, c.K6
    if abs(K5) < CONSTRAINT_TOL:
        raise ConstraintUnsatisfiable("K5 = 0: use zer_k5_zero")
    C1, C2 = complex(C1), complex(C2)

    def pieces(X, Y, T):
        h0, h0p = tf("h0", T), tf("h0", T, 1)
        h1, h1p = zer_h1(h0, h0p, c, C1, C2, h1_variant)
        return h0, h0p / h0, h1, h1p, X * h0 - Y / h0

    def xi(X, Y, T):
        h0, _, h1, _, _ = pieces(X, Y, T)
        return X * h0 + Y / h0 + h1

    def du(X, Y, T):
        _, lh, _, h1p, p = pieces(X, Y, T)
        return 2 * K5 * p * p + 4 * K5 * h1p / lh * p

    def dv(X, Y, T):
        _, lh, _, _, p = pieces(X, Y, T)
        return K6 / K5 * lh * p

    return _lift(xi), _lift(du), _lift(dv), {}, {"h1_variant": h1_variant}


def _zer_k5_zero(tf, c, enforce):
    if not tf.has("h0") or tf.is_zero("h0", 1):
        raise DegenerateTimeFunctions("the zer reduction needs h0' != 0")
    cons = {"K5": c.K5, "K6": c.K6}
    if enforce:
        _require(abs(c.K5) < CONSTRAINT_TOL and abs(c.K6) < CONSTRAINT_TOL, "this branch needs K5 = K6 = 0")
    K7 = c.K7

    def pieces(X, Y, T):
        h0 = tf("h0", T)
        return X * h0 - Y / h0, h0, tf("h0", T, 1) / h0

    def xi(X, Y, T):
        _, h0, _ = pieces(X, Y, T)
        return X * h0 + Y / h0 + tf("h1", T) if tf.has("h1") else X * h0 + Y / h0

    def du(X, Y, T):
        return 0 * X

    def dv(X, Y, T):
        p, _, lh = pieces(X, Y, T)
        h1p = tf("h1", T, 1) if tf.has("h1") else 0.0
        farb = tf("farb", T) if tf.has("farb") else 0.0
        return 4 / 3 * K7 * lh * p**3 + 4 * K7 * h1p * p * p + farb * p

    return _lift(xi), _lift(du), _lift(dv), cons, {}


def exp_constants(c: R.ReducedConstants):
    """(K5, K6, K7) in the normalisation where f5 = -8 K5 k^2 exp(-2 k xi)."""
    return c.K5 / c.k, c.K6 / c.k**2, c.K7 / c.k


def _exp_pieces(tf, X, Y, T, k):
    l2, l3 = tf("lambda2", T), tf("lambda3", T)
    a, b = X - l3, Y - l3
    return l2, tf("lambda2", T, 1), tf("lambda3", T, 1), J.log(a * b / ((X - Y) * l2)) / k, 1 / a + 1 / b


def _exp(tf, c, enforce):
    if tf.is_zero("lambda3", 1):
        raise ZeroWronskian("lambda3' = 0: use exp_wronskian_zero")
    if tf.is_zero("lambda2"):
        raise DegenerateTimeFunctions("lambda2 must not vanish identically")
    k = c.k
    K5n, K6n, _ = exp_constants(c)
    if abs(K5n) < CONSTRAINT_TOL:
        raise ConstraintUnsatisfiable("K5 = 0: use exp_k5_zero")

    def xi(X, Y, T):
        return _exp_pieces(tf, X, Y, T, k)[3]

    def du(X, Y, T):
        l2, l2p, l3p, _, q = _exp_pieces(tf, X, Y, T, k)
        return K5n * l2 * (2 * l2 * q * q + 4 * (l2p / l3p) * q)

    def dv(X, Y, T):
        _, _, l3p, _, q = _exp_pieces(tf, X, Y, T, k)
        return -((K6n + k * K5n) / (k * K5n)) * l3p * q

    # residual 7 has no solution on this branch: nothing to enforce, the check is numeric
    return _lift(xi), _lift(du), _lift(dv), {}, {}


def _exp_k5_zero(tf, c, enforce):
    if tf.is_zero("lambda3", 1):
        raise ZeroWronskian("lambda3' = 0: use exp_wronskian_zero")
    cons = {"K5": c.K5, "K6": c.K6}
    if enforce:
        _require(abs(c.K5) < CONSTRAINT_TOL and abs(c.K6) < CONSTRAINT_TOL, "this branch needs K5 = K6 = 0")
    k = c.k
    _, _, K7n = exp_constants(c)

    def xi(X, Y, T):
        return _exp_pieces(tf, X, Y, T, k)[3]

    def du(X, Y, T):
        return 0 * X

    def dv(X, Y, T):
        l2, l2p, l3p, _, q = _exp_pieces(tf, X, Y, T, k)
        farb = tf("farb", T) if tf.has("farb") else 0.0
        return -4 / (3 * k) * K7n * l2 * l2 * l3p * q**3 - 4 / k * K7n * l2 * l2p * q * q + farb * q

    return _lift(xi), _lift(du), _lift(dv), cons, {}


def _fg_evaluators(state: "FGState", p_of, order=4):
    """du = F(p, t), dv = G(p, t) as Jet3 evaluators; dv only in its (x, y) slots."""

    def du(point):
        X, Y, T = _vars(point)
        P = p_of(X, Y)
        F = state.F_jet(P.value, T.value, (order, order))
        return compose2(F, P, T)

    def dv(point):
        X, Y, T = _vars(point)
        P = p_of(X, Y)
        gp = state.Gp_jet(P.value, T.value, (order - 1, 1))
        G = Jet1(np.concatenate([[0], [gp.c[i, 0] / (i + 1) for i in range(order - 1)]]))
        out = compose_taylor(G.c, P)
        c = out.c.copy()
        c[:, :, 1] = 0
        return Jet3(c, out.point)

    return du, dv


def _exp_wronskian_zero(tf, c, enforce, fg: "FGState" = None):
    if not tf.is_zero("lambda3", 1):
        raise ConstraintUnsatisfiable("this branch needs lambda3' = 0")
    cons = {"K5": c.K5}
    if enforce:
        _require(abs(c.K5) < CONSTRAINT_TOL, "the wronskian-zero branch needs K5 = 0")
    if fg is None:
        raise ValueError("exp_wronskian_zero needs an FGState for F and G")
    k = c.k
    l3 = complex(tf.poly("lambda3").coef[0])

    def xi(X, Y, T):
        return J.log((X - l3) * (Y - l3) / ((X - Y) * tf("lambda2", T))) / k

    du, dv = _fg_evaluators(fg, lambda X, Y: 1 / (X - l3) + 1 / (Y - l3))
    return _lift(xi), du, dv, cons, {}


def _zer_wronskian_zero(tf, c, enforce, fg: "FGState" = None):
    cons = {"K5": c.K5}
    if enforce:
        _require(abs(c.K5) < CONSTRAINT_TOL, "the wronskian-zero branch needs K5 = 0")
    if fg is None:
        raise ValueError("zer_wronskian_zero needs an FGState for F and G")

    def xi(X, Y, T):
        return X + Y + T

    du, dv = _fg_evaluators(fg, lambda X, Y: X - Y)
    return _lift(xi), du, dv, cons, {}


_BUILDERS = {
    "generic_example": _generic_example, "generic_full": _generic_full, "rational": _rational,
    "zer": _zer, "zer_k5_zero": _zer_k5_zero, "exp": _exp, "exp_k5_zero": _exp_k5_zero,
    "exp_wronskian_zero": _exp_wronskian_zero, "zer_wronskian_zero": _zer_wronskian_zero,
}


def build_reduction(case_spec, tf: TimeFunctions | None, c: R.ReducedConstants, enforce=True, **opts):
    """Reduction variables of the given case.

    ``enforce`` raises ConstraintUnsatisfiable on violated constraints; with
    ``enforce=False`` they are only recorded.  Extra options: ``C1``, ``C2``,
    ``h1_variant`` (zer), ``c1`` (generic_full, a value or a function of t;
    default is the numeric closure), ``fg`` (wronskian-zero branches).
    """
    if case_spec not in _BUILDERS:
        raise ValueError(f"unknown reduction {case_spec!r}; expected one of {', '.join(CASE_SPECS)}")
    tf = tf or TimeFunctions()
    xi, du, dv, cons, extras = _BUILDERS[case_spec](tf, c, enforce, **opts)
    family = CASE_FAMILY[case_spec]
    # the constraints carry K7 explicitly, so it is kept in the Tri and Rat systems
    cc = c.replace(keep_K7=True) if family in (R.ReducedCase.TRI, R.ReducedCase.RAT) else c
    return ReductionVariables(case_spec, family, cc, xi, du, dv, dict(cons), dict(extras))


# ---------------------------------------------------------------------------
# reconstruction of (u, v)


def _compose_xi(derivs, xi: Jet3):
    """Jet3 of g(xi) from (g, g', g'', g''') at xi0."""
    return compose_taylor([derivs[j] / math.factorial(j) for j in range(4)], xi)


def reconstruct_fields(rv: ReductionVariables, state: R.ReducedState, third, point) -> FieldSample:
    """u = U(xi) + du/nu and the t-derivatives of v = V(xi) + int dv dt at one point.

    ``state`` must sit at xi(point); ``third`` is (U''', V''') there.  U(xi0)
    and V(xi0) never enter the system and are set to 0.
    """
    xi, du, dv = _evaluate(rv, point)
    if abs(state.xi - xi.value) > 1e-9 * max(1.0, abs(xi.value)):
        raise ValueError("the state is not at xi(point)")
    nu = rv.constants.nu
    U = _compose_xi((0, state.up, state.upp, third[0]), xi)
    V = _compose_xi((0, state.vp, state.vpp, third[1]), xi)
    vc = V.c.copy()
    vc[:, :, 1] += dv.c[:, :, 0]
    return FieldSample(u=U + du / nu, v=Jet3(vc, V.point), nu=nu, v_t_only=True)


def complex_grid(center, spread=0.05, n=5, twist=0.3):
    """n x n x n points displaced around center along complex directions."""
    offs = np.linspace(-1, 1, n) * spread
    dirs = [np.exp(1j * twist * (a + 1)) for a in range(3)]
    return [tuple(center[a] + o * dirs[a] for a, o in enumerate(idx))
            for idx in np.array(np.meshgrid(offs, offs, offs, indexing="ij")).reshape(3, -1).T]


@dataclass
class EndToEndReport:
    case: str
    n_points: int
    max_pde: float
    max_admissibility: float
    max_drift: float
    warnings: int
    per_point: list


def verify_end_to_end(rv: ReductionVariables, s0: R.ReducedState, points, tol=1e-11, adm_relative=True):
    """Integrate (U, V) from s0 to xi(point) for every point and evaluate the PDE.

    Returns the largest relative |E1|, |E2| and admissibility residuals.
    """
    rows, n_warn = [], 0
    max_pde = max_adm = max_drift = 0.0
    for pt in points:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BranchWarning)
            xi0 = rv.xi(pt).value
            path = ComplexPath((s0.xi, xi0)) if abs(xi0 - s0.xi) > 1e-13 else None
            if path is None:
                st, third = s0, R.reduced_rhs(rv.family, rv.constants, s0)
            else:
                tr = integrate(rv.family, rv.constants, s0, path, tol=tol)
                st, third = dense_eval(tr, path.length)
                max_drift = max(max_drift, *tr.max_drift)
            sample = reconstruct_fields(rv, st, third, pt)
            e1, e2 = pde_residual(sample, relative=True)
            adm = admissibility_residuals(rv, pt, relative=adm_relative)
        n_warn += sum(1 for w in caught if issubclass(w.category, BranchWarning))
        max_pde = max(max_pde, e1, e2)
        max_adm = max(max_adm, max(abs(a) for a in adm))
        rows.append({"point": pt, "E1": e1, "E2": e2, "admissibility": adm})
    return EndToEndReport(rv.case, len(points), max_pde, max_adm, max_drift, n_warn, rows)


# ---------------------------------------------------------------------------
# d'Alembert table and the (a, b) functional equation


@dataclass(frozen=True)
class DAlembertPair:
    """xi = f(Z) and psi(Z) turning the first two admissibility equations into Z_xy = 0, [psi(Z)]_xyt = 0."""

    case: R.ReducedCase
    k: complex
    f: Callable
    psi: Callable

    def f1(self, xi):
        c = R.ReducedConstants(k=self.k)
        return R.coefficient_family(self.case, c).f1(xi)

    def ode_residuals(self, Z0):
        """(f'' - f1(f) f'^2, psi''' - 2 (f''/f') psi'') at Z0."""
        Z = Jet1.variable(complex(Z0), 3)
        fz, pz = self.f(Z), self.psi(Z)
        f1 = self.f1(Jet1.constant(fz.value, 0)).value
        d1, d2 = fz.deriv(1), fz.deriv(2)
        return d2 - f1 * d1 * d1, pz.deriv(3) - 2 * d2 / d1 * pz.deriv(2)


def dalembert_pair(case, k=1.0) -> DAlembertPair:
    case = R.ReducedCase.parse(case)
    k = complex(k)
    if case is R.ReducedCase.TRI:
        return DAlembertPair(case, k, lambda Z: J.log(J.coth(Z)) / k, lambda Z: J.log(J.sinh(2 * Z)))
    if case is R.ReducedCase.RAT:
        return DAlembertPair(case, k, J.exp, lambda Z: J.exp(2 * Z))
    if case is R.ReducedCase.EXP:
        return DAlembertPair(case, k, lambda Z: -J.log(Z) / k, J.log)
    return DAlembertPair(case, k, lambda Z: Z, lambda Z: Z * Z)


@dataclass(frozen=True)
class ABPair:
    """a(x, t) = l1 + l2/(x - l3), b(y, t) = m1 + m2/(y - m3).

    The constraints m1 = -l1, m2 = -l2, m3 = l3 are applied unless the time
    functions define mu1, mu2, mu3 explicitly (used to show they are needed).
    """

    tf: TimeFunctions

    def a(self, X, T):
        return self.tf("lambda1", T) + self.tf("lambda2", T) / (X - self.tf("lambda3", T))

    def _mu(self, i, T):
        name = f"mu{i}"
        if self.tf.has(name):
            return self.tf(name, T)
        return self.tf(f"lambda{i}", T) * (1 if i == 3 else -1)

    def b(self, Y, T):
        return self._mu(1, T) + self._mu(2, T) / (Y - self._mu(3, T))

    def _guard(self, z, t):
        l2, l3 = self.tf("lambda2", t), self.tf("lambda3", t)
        if abs(l2) < LOCUS_TOL:
            raise PoleAtSample("lambda2 vanishes at this t")
        if abs(z - l3) < LOCUS_TOL or abs(z - self._mu(3, t)) < LOCUS_TOL:
            raise PoleAtSample("the sample sits on a pole of a or b")

    def schwarzian_t(self, z, t, which="a"):
        """({a;x}, d/dt {a;x}) at (z, t) (or the same for b in y)."""
        self._guard(z, t)
        Z, T = BoxJet.variables((complex(z), complex(t)), (4, 2))
        g = self.a(Z, T) if which == "a" else self.b(Z, T)
        c1, c2, c3 = (g.section(0, i) for i in (1, 2, 3))
        s = 6 * c3 / c1 - 6 * (c2 / c1) * (c2 / c1)
        return complex(s.c[0]), complex(s.c[1])

    def log_residual(self, point):
        """[log(a + b)]_xyt at (x, y, t)."""
        x, y, t = point
        self._guard(x, t)
        self._guard(y, t)
        X, Y, T = _vars(point)
        return J.log(self.a(X, T) + self.b(Y, T)).d(1, 1, 1)


def ab_pair(tf: TimeFunctions) -> ABPair:
    for name in ("lambda1", "lambda2", "lambda3"):
        if not tf.has(name):
            raise DegenerateTimeFunctions(f"ab_pair needs {name}")
    if tf.is_zero("lambda2"):
        raise DegenerateTimeFunctions("lambda2 must not vanish identically")
    return ABPair(tf)


# ---------------------------------------------------------------------------
# wronskian-zero F/G systems


@dataclass(frozen=True)
class FGState:
    """F(p, t) and G_p(p, t) as callables producing BoxJets in (p, t).

    ``F_jet(p0, t0, shape)`` and ``Gp_jet(p0, t0, shape)`` return BoxJets of
    the given shape at (p0, t0).  G enters the system only through G_p.
    K6, K7, k are the constants of the reduced system; see ``fg_constants``.
    """

    F_jet: Callable
    Gp_jet: Callable
    K6: complex
    K7: complex
    k: complex = 1.0
    tf: TimeFunctions | None = None


def fg_constants(K6, K7, k, variant):
    """(K6, K7) as they enter the F/G equations.

    For exp the equations are written with f5 = -8 K5 k^2 exp(-2 k xi), i.e.
    (K6/k^2, K7/k) in terms of the reduced-system constants.
    """
    if variant == "exp":
        return K6 / k**2, K7 / k
    if variant == "zer":
        return K6, K7
    raise ValueError(f"unknown F/G variant {variant!r}")


def fg_residuals(state: FGState, variant, point):
    """The two residuals of the F/G system ('exp' or 'zer') at (p, t)."""
    p0, t0 = (complex(z) for z in point)
    F = state.F_jet(p0, t0, (3, 2))
    Gp = state.Gp_jet(p0, t0, (2, 1))
    Fp, Fpt, Fppt = F.partial(1, 0), F.partial(1, 1), F.partial(2, 1)
    gp, gpp = Gp.partial(0, 0), Gp.partial(1, 0)
    K6, K7 = fg_constants(state.K6, state.K7, state.k, variant)
    if variant == "exp":
        l2l2p = state.tf("lambda2", t0) * state.tf("lambda2", t0, 1)
        s6, s7 = 8 * K6 / state.k * l2l2p, 8 * K7 / state.k * l2l2p
    else:
        s6, s7 = -8 * K6, -8 * K7
    return complex(Fppt + 2 * Fp * gp + s6), complex(-2 * Fp * Fpt + gpp + s7)


def truncation_constraint(K6, K7, k):
    return (k * K7 + 1j * K6) * (2 * k * K7 + 1j * K6)


def _dp(jet: BoxJet):
    """d/dp of a BoxJet in (p, t); the p-shape drops by one."""
    n = jet.shape[0]
    c = jet.c[1:] * np.arange(1, n)[:, None]
    return BoxJet(c, jet.point)


def _fg_source(variant, K6, k, tf):
    """The K6 term of the first F/G equation as a function of t (K6 in equation form)."""
    if variant == "exp":
        return lambda T: 8 * K6 / k * tf("lambda2", T) * tf("lambda2", T, 1)
    if variant == "zer":
        return lambda T: -8 * K6 + 0 * T
    raise ValueError(f"unknown F/G variant {variant!r}")


def _dt(jet: BoxJet):
    n = jet.shape[1]
    return BoxJet(jet.c[:, 1:] * np.arange(1, n)[None, :], jet.point)


def _crop(jet: BoxJet, shape):
    return BoxJet(jet.c[: shape[0], : shape[1]], jet.point)


def _gp_from_first(F_jet, source):
    """G_p solving the first F/G equation: G_p = -(F_ppt + source)/(2 F_p)."""

    def Gp_jet(p0, t0, shape):
        F = F_jet(p0, t0, (shape[0] + 2, shape[1] + 1))
        Fp = _dp(F)
        _, T = BoxJet.variables((p0, t0), shape)
        return -(_crop(_dt(_dp(Fp)), shape) + source(T)) / (2 * _crop(Fp, shape))

    return Gp_jet


def truncation_fixture(variant, K6, K7, k=1.0, tf=None, branch=None, c0=0.7, strict=True):
    """F = i log(phi) - (i/2) log(phi_p), G_p from the first equation.

    Branch 'a' (k K7 + i K6 = 0): phi = tan(omega p) with 2 omega^2 = {phi;p}
    = -8 i K6 lambda2^2/k^3 + c0 (exp) or 16 i K6 t + c0 (zer).
    Branch 'b' (2 k K7 + i K6 = 0): phi homographic in p with t-dependent coefficients.
    Constants are those of the reduced system (k = 1 for zer).  With
    ``strict=False`` the branch constraint is not enforced (fault injection).
    """
    K6, K7, k = complex(K6), complex(K7), complex(k)
    if variant == "zer" and k != 1:
        raise ValueError("the zer F/G system has no k; use k = 1")
    f1, f2 = k * K7 + 1j * K6, 2 * k * K7 + 1j * K6
    if branch is None:
        branch = "a" if abs(f1) < CONSTRAINT_TOL else "b"
    if branch == "a":
        _require(abs(f1) < CONSTRAINT_TOL or not strict, "branch a needs k K7 + i K6 = 0")
        if variant == "exp":
            def schw(T):
                return -8j * K6 * tf("lambda2", T) ** 2 / k**3 + c0
        else:
            def schw(T):
                return 16j * K6 * T + c0

        def phi(P, T):
            return J.tan(J.sqrt(schw(T) / 2) * P)
    elif branch == "b":
        _require(abs(f2) < CONSTRAINT_TOL or not strict, "branch b needs 2 k K7 + i K6 = 0")

        def phi(P, T):
            return ((1 + 0.4 * T) * P + 0.3 + T * T) / ((0.2 - 0.1 * T) * P + 1)
    else:
        raise ValueError(f"unknown truncation branch {branch!r}")

    def F_jet(p0, t0, shape):
        P, T = BoxJet.variables((p0, t0), (shape[0] + 1, shape[1]))
        ph = phi(P, T)
        return 1j * J.log(_crop(ph, shape)) - 0.5j * J.log(_dp(ph))

    source = _fg_source(variant, fg_constants(K6, K7, k, variant)[0], k, tf)
    return FGState(F_jet, _gp_from_first(F_jet, source), K6, K7, k, tf)


def ode2_taylor(rhs, r0, y0, dy0, order):
    """Taylor coefficients at r0 of the solution of y'' = rhs(r, y) (rhs polymorphic)."""
    c = np.zeros(order + 1, dtype=complex)
    c[0], c[1] = y0, dy0
    for m in range(2, order + 1):
        r = Jet1.variable(complex(r0), m - 2)
        y = Jet1(c[: m - 1])
        c[m] = rhs(r, y).c[m - 2] / (m * (m - 1))
    return c


@dataclass(frozen=True)
class EllipticFixture:
    """F(p, t) = F_r(r), r = p - lambda2^2 (exp) or r = p - t (zer), with phi = F_r'.

    phi solves phi'' = rhs(r, phi), obtained by integrating from (r0, phi0, dphi0);
    G_p is the closed form of the second equation.  K6, K7, k are the
    constants of the reduced system (k = 1 for zer).
    """

    variant: str
    K6: complex
    K7: complex
    k: complex
    c: complex
    r0: complex
    phi0: complex
    dphi0: complex
    tf: TimeFunctions | None = None

    def r_of(self, P, T):
        if self.variant == "exp":
            return P - self.tf("lambda2", T) ** 2
        return P - T

    @property
    def eq_constants(self):
        return fg_constants(self.K6, self.K7, self.k, self.variant)

    def rhs(self, r, phi):
        (K6, K7), k, c = self.eq_constants, self.k, self.c
        if self.variant == "exp":
            return 4 * K6 / k + c * phi - 2 * phi * phi * phi - 8 * K7 / k * r * phi
        return -8 * K6 + 2 * phi * (c - phi * phi + 8 * K7 * r)

    def phi_at(self, r, tol=1e-12):
        """(phi, phi') at r, integrating along the straight segment from r0."""
        r = complex(r)
        if abs(r - self.r0) < 1e-15:
            return self.phi0, self.dphi0

        def f(s, y):
            return [y[1], self.rhs(s, y[0])]

        sol = integrate_ode(f, np.array([self.phi0, self.dphi0], dtype=complex), ComplexPath((self.r0, r)), tol=tol)
        return complex(sol.y[-1][0]), complex(sol.y[-1][1])

    def F_jet(self, p0, t0, shape):
        P, T = BoxJet.variables((p0, t0), shape)
        r = self.r_of(P, T)
        phi, dphi = self.phi_at(r.value)
        ph = ode2_taylor(self.rhs, r.value, phi, dphi, sum(shape))
        Fr = np.concatenate([[0], ph[:-1] / np.arange(1, len(ph))])
        return compose_taylor(Fr, r)

    def Gp_jet(self, p0, t0, shape):
        P, T = BoxJet.variables((p0, t0), shape)
        r = self.r_of(P, T)
        phi, dphi = self.phi_at(r.value)
        ph = compose_taylor(ode2_taylor(self.rhs, r.value, phi, dphi, sum(shape)), r)
        K7 = self.eq_constants[1]
        if self.variant == "exp":
            s = self.tf("lambda2", T) * self.tf("lambda2", T, 1)
            return s * (-2 * ph * ph - 8 * K7 / self.k * r + self.c)
        return -ph * ph + 8 * K7 * r + self.c

    def state(self):
        return FGState(self.F_jet, self.Gp_jet, self.K6, self.K7, self.k, self.tf)
