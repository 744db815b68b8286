"""The coupled (u, v) system, its rotation from (phi, psi), and leading-order analysis.

    E1 = u_xyt + u_x v_yt + u_y v_xt
    E2 = v_xyt - nu^2 (u_xt u_y + u_x u_yt)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InvalidSigma, MissingAntiderivative, RootFindingFailure
from .jets import Jet3, log

SNAP_TOL = 1e-9


@dataclass(frozen=True)
class FieldSample:
    """Jets of u and v at one point.

    When ``v_t_only`` is set, only the coefficients of v carrying a
    t-derivative are meaningful (the t-antiderivative part of v is unknown);
    asking for the others raises ``MissingAntiderivative``.
    """

    u: Jet3
    v: Jet3
    nu: complex
    v_t_only: bool = False

    def __post_init__(self):
        if self.u.point is not None and self.v.point is not None and self.u.point != self.v.point:
            raise ValueError("u and v jets have different base points")

    def v_partial(self, a, b, c):
        if self.v_t_only and c == 0:
            raise MissingAntiderivative("v has no t-derivative in this slot; its t-antiderivative was not built")
        return self.v.d(a, b, c)


@dataclass(frozen=True)
class LeadingFamily:
    a: complex
    b: complex


FAMILIES = (LeadingFamily(1j, 1), LeadingFamily(-1j, 1))


def pde_residual(s: FieldSample, relative=False):
    """(E1, E2) at the base point; with ``relative`` each is divided by its largest term."""
    u, nu = s.u, s.nu
    vx_t, vy_t, vxyt = s.v_partial(1, 0, 1), s.v_partial(0, 1, 1), s.v_partial(1, 1, 1)
    t1 = (u.d(1, 1, 1), u.d(1, 0, 0) * vy_t, u.d(0, 1, 0) * vx_t)
    t2 = (vxyt, -nu**2 * u.d(1, 0, 1) * u.d(0, 1, 0), -nu**2 * u.d(1, 0, 0) * u.d(0, 1, 1))
    return _combine(t1, relative), _combine(t2, relative)


def _combine(terms, relative):
    total = complex(sum(terms))
    if not relative:
        return total
    scale = max(abs(t) for t in terms)
    return abs(total) / scale if scale > 0 else 0.0


def rotate_variables(phi, psi, sigma, nu, point=None):
    """u = (phi+psi)/(2nu), v = i(phi-psi)/2; maps (X, Y, T) to (sigma X + Y, sigma X - Y, T).

    Works on numbers or jets.  Returns (u, v) or (u, v, (x, y, t)) if a point is given.
    """
    if abs(complex(sigma) ** 4 - 1) > 1e-12:
        raise InvalidSigma(f"sigma^4 must be 1, got sigma={sigma!r}")
    u = (phi + psi) / (2 * nu)
    v = 1j * (phi - psi) / 2
    if point is None:
        return u, v
    X, Y, T = point
    return u, v, (sigma * X + Y, sigma * X - Y, T)


def unrotate_variables(u, v, nu):
    """Inverse of rotate_variables on the fields: phi = nu u - i v, psi = nu u + i v."""
    return nu * u - 1j * v, nu * u + 1j * v


def _indicial_matrix(j, nu):
    return [[nu * j**2 * (j - 3), 2j * j * (j - 1)], [2 * nu * j * (j - 2), 1j * j * (j - 1) * (j - 2)]]


def indicial_det(j, nu):
    (a, b), (c, d) = _indicial_matrix(complex(j), complex(nu))
    return a * d - b * c


def indicial_polynomial(nu) -> Polynomial:
    """The determinant as an exact polynomial in j (numpy convention, low to high)."""
    j = Polynomial([0, 1])
    (a, b), (c, d) = _indicial_matrix(j, complex(nu))
    p = a * d - b * c
    return Polynomial(np.asarray(p.coef, dtype=complex))


def fuchs_indices(nu):
    """The six roots of the indicial determinant, with multiplicity, sorted by real part.

    Roots come from the companion-matrix eigenvalues; any root within SNAP_TOL
    of an integer is replaced by that integer.
    """
    p = indicial_polynomial(nu)
    # np.roots strips exactly-zero trailing coefficients into exact zero roots.
    roots = np.roots(p.coef[::-1])
    out = []
    scale = max(abs(c) for c in p.coef)
    for r in roots:
        near = round(r.real)
        if abs(r - near) < SNAP_TOL:
            r = complex(near, 0)
        res = abs(p(r)) / scale
        if res > SNAP_TOL:
            raise RootFindingFailure(f"root {r!r} has residual {res:.3e}")
        out.append(complex(r))
    return sorted(out, key=lambda z: (z.real, z.imag))


def max_root_residual(nu, roots):
    p = indicial_polynomial(nu)
    scale = max(abs(c) for c in p.coef)
    return max(abs(p(r)) / scale for r in roots)


def verify_leading_order(fam: LeadingFamily, nu, point=(0.3 + 0.1j, -0.2 + 0.4j, 0.5 - 0.2j)):
    """Coefficients of the phi^-3 balance of (E1, E2) for u ~ (a/nu) log phi, v ~ b log phi.

    A linear phi is used: then both fields are exactly logarithmic and E1, E2
    equal their leading coefficients times phi_x phi_y phi_t / phi^3, so the
    residuals returned are (E1, E2) phi^3 / (phi_x phi_y phi_t), namely
    (2a(1-b)/nu, 2(b + a^2)).
    """
    X, Y, T = Jet3.variables(point)
    gx, gy, gt = 1.3 - 0.4j, 0.7 + 0.9j, -1.1 + 0.2j
    phi = 0.05 + 0.02j + gx * (X - point[0]) + gy * (Y - point[1]) + gt * (T - point[2])
    lp = log(phi)
    s = FieldSample(u=lp * (fam.a / nu), v=lp * complex(fam.b), nu=complex(nu))
    e1, e2 = pde_residual(s)
    norm = phi.value**3 / (gx * gy * gt)
    return e1 * norm, e2 * norm


def vrelation_sample(u: Jet3, nu, sign=1):
    """Test-data generator for the reduction v = +-i nu u noted for the system."""
    return FieldSample(u=u, v=u * (sign * 1j * nu), nu=complex(nu))


__all__ = [
    "FieldSample", "LeadingFamily", "FAMILIES", "pde_residual", "rotate_variables", "unrotate_variables",
    "indicial_det", "indicial_polynomial", "fuchs_indices", "max_root_residual", "verify_leading_order",
    "vrelation_sample",
]
