"""Dormand-Prince 5(4) integration along piecewise-linear paths in the complex plane.

The path is parametrised by arc length s.  On each straight segment the ODE
dy/dxi = F(xi, y) becomes the complex-valued system dy/ds = e F(xi0 + e s, y)
with |e| = 1, integrated with the embedded (5, 4) pair of Dormand and Prince
(Hairer, Norsett, Wanner, Solving ODE I, table 5.2) and local error control.

Dense output is a quintic Hermite interpolant in xi between accepted nodes,
built from y, y' = F and y'' = F_xi + F_y F; the latter comes from evaluating F
on first-order jets, so F must be written with the polymorphic functions of
``jets`` (all reduced systems are).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import reduced as R
from .errors import (
    DivisionBySingularJet, DomainError, OutOfRange, SingularPoint, StepSizeUnderflow, ToleranceNotMet,
)
from .jets import Jet1

# Dormand-Prince 5(4) tableau
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
_RHS_FAILURES = (SingularPoint, DomainError, DivisionBySingularJet, OverflowError, ZeroDivisionError, FloatingPointError)


@dataclass(frozen=True)
class ComplexPath:
    """Piecewise-linear path through the given waypoints."""

    waypoints: tuple

    def __post_init__(self):
        pts = tuple(complex(w) for w in self.waypoints)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must be distinct")
        object.__setattr__(self, "waypoints", pts)

    @classmethod
    def segment(cls, a, b):
        return cls((a, b))

    @property
    def lengths(self):
        return [abs(b - a) for a, b in zip(self.waypoints, self.waypoints[1:])]

    @property
    def breaks(self):
        return np.concatenate([[0.0], np.cumsum(self.lengths)])

    @property
    def length(self) -> float:
        return float(sum(self.lengths))

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[-1]

    def point(self, s):
        br = self.breaks
        if s < -1e-12 * max(1.0, self.length) or s > br[-1] * (1 + 1e-12) + 1e-15:
            raise OutOfRange(f"path parameter {s} outside [0, {br[-1]}]")
        i = min(max(int(np.searchsorted(br, s, side="right")) - 1, 0), len(self.lengths) - 1)
        a, b = self.waypoints[i], self.waypoints[i + 1]
        return a + (b - a) * ((s - br[i]) / self.lengths[i])

    def reversed(self):
        return ComplexPath(self.waypoints[::-1])

    def distance_to(self, z) -> float:
        """Smallest distance from z to the path."""
        best = math.inf
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            d = b - a
            tpar = min(max(((z - a) * d.conjugate()).real / abs(d) ** 2, 0.0), 1.0)
            best = min(best, abs(a + tpar * d - z))
        return best


def path_poles(case, c: R.ReducedConstants, path: ComplexPath):
    """Coefficient poles of the reduced system lying near the path's bounding region."""
    case = R.ReducedCase.parse(case)
    if case is R.ReducedCase.RAT:
        return [0j]
    if case is R.ReducedCase.TRI:
        # sinh(k xi) = 0  <=>  xi = i pi n / k
        step = 1j * math.pi / c.k
        reach = max(abs(w) for w in path.waypoints) + 1.0
        nmax = int(reach / abs(step)) + 1
        return [n * step for n in range(-nmax, nmax + 1)]
    return []


def check_path(case, c, path: ComplexPath, eps=R.EPS_POLE):
    for p in path_poles(case, c, path):
        if path.distance_to(p) < eps:
            raise SingularPoint(f"path passes within {eps} of the pole xi={p!r}")


def _vec(f, xi, y):
    return np.asarray(f(xi, y), dtype=complex)


def second_derivative(f, xi, y, dy=None):
    """d^2 y/dxi^2 = F_xi + F_y F via first-order jets."""
    dy = _vec(f, xi, y) if dy is None else dy
    try:
        out = f(Jet1([xi, 1.0]), [Jet1([a, b]) for a, b in zip(y, dy)])
        return np.array([o.c[1] if isinstance(o, Jet1) else 0j for o in out], dtype=complex)
    except TypeError:
        h = 1e-6 * max(1.0, abs(xi))
        fp = _vec(f, xi + h, y + h * dy)
        fm = _vec(f, xi - h, y - h * dy)
        return (fp - fm) / (2 * h)


@dataclass
class OdeSolution:
    path: ComplexPath
    s: np.ndarray
    xi: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    d2y: np.ndarray
    n_rejected: int = 0

    def eval(self, s):
        """Interpolated (y, y') at path parameter s."""
        if s < self.s[0] - 1e-12 or s > self.s[-1] + 1e-12 * max(1.0, self.s[-1]):
            raise OutOfRange(f"path parameter {s} outside [{self.s[0]}, {self.s[-1]}]")
        i = int(np.searchsorted(self.s, s, side="left"))
        if i < len(self.s) and self.s[i] == s:
            return self.y[i].copy(), self.dy[i].copy()
        i = min(max(i - 1, 0), len(self.s) - 2)
        h = self.xi[i + 1] - self.xi[i]
        ds = self.s[i + 1] - self.s[i]
        th = (s - self.s[i]) / ds
        y0, y1 = self.y[i], self.y[i + 1]
        d0, d1 = self.dy[i] * h, self.dy[i + 1] * h
        e0, e1 = self.d2y[i] * h * h, self.d2y[i + 1] * h * h
        t2, t3, t4, t5 = th**2, th**3, th**4, th**5
        val = ((1 - 10 * t3 + 15 * t4 - 6 * t5) * y0 + (th - 6 * t3 + 8 * t4 - 3 * t5) * d0
               + 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * e0 + (10 * t3 - 15 * t4 + 6 * t5) * y1
               + (-4 * t3 + 7 * t4 - 3 * t5) * d1 + 0.5 * (t3 - 2 * t4 + t5) * e1)
        dval = ((-30 * t2 + 60 * t3 - 30 * t4) * y0 + (1 - 18 * t2 + 32 * t3 - 15 * t4) * d0
                + 0.5 * (2 * th - 9 * t2 + 12 * t3 - 5 * t4) * e0 + (30 * t2 - 60 * t3 + 30 * t4) * y1
                + (-12 * t2 + 28 * t3 - 15 * t4) * d1 + 0.5 * (3 * t2 - 8 * t3 + 5 * t4) * e1) / h
        return val, dval


def _error_norm(err, y_old, y_new, tol):
    scale = tol * (1.0 + np.maximum(np.abs(y_old), np.abs(y_new)))
    return float(np.max(np.abs(err) / scale))


def integrate_ode(f, y0, path: ComplexPath, tol=1e-10, h=None, max_steps=200_000, h_init=None):
    """Integrate dy/dxi = f(xi, y) along ``path``.

    With ``h`` given, fixed steps of (at most) that size are taken on each
    segment without error control (used for convergence-order checks).
    """
    y = np.asarray(y0, dtype=complex).copy()
    total = path.length
    hmin = 1e-12 * max(1.0, total)
    s_nodes, xi_nodes, ys, dys = [0.0], [path.start], [y.copy()], []
    k1 = _vec(f, path.start, y)
    dys.append(k1.copy())
    n_steps = n_rej = 0
    s_base = 0.0
    step = h_init or min(total, 0.05)
    for a, b in zip(path.waypoints, path.waypoints[1:]):
        L = abs(b - a)
        e = (b - a) / L
        sl = 0.0
        if h is not None:
            nfix = max(1, math.ceil(L / h - 1e-12))
            hs = [L / nfix] * nfix
        while sl < L * (1 - 1e-14):
            if h is not None:
                if not hs:
                    break
                hh = hs.pop()
            else:
                hh = min(step, L - sl)
                if L - sl - hh < hmin:
                    hh = L - sl
            if hh < hmin:
                raise StepSizeUnderflow(f"step size underflow at s={s_base + sl:.6g}", s=s_base + sl)
            xi0 = a + e * sl
            try:
                ks = [k1 * e]
                for i in range(1, 7):
                    yi = y + hh * sum(A[i][j] * ks[j] for j in range(i))
                    ks.append(e * _vec(f, xi0 + e * hh * C[i], yi))
                y_new = y + hh * sum(B5[j] * ks[j] for j in range(7))
                err = hh * sum(E[j] * ks[j] for j in range(7))
                en = _error_norm(err, y, y_new, tol)
                if not np.all(np.isfinite(y_new)) or not math.isfinite(en):
                    raise FloatingPointError("non-finite step")
            except _RHS_FAILURES:
                if h is not None:
                    raise StepSizeUnderflow(f"right-hand side failed at s={s_base + sl:.6g}", s=s_base + sl)
                step = hh * MIN_FACTOR
                n_rej += 1
                continue
            n_steps += 1
            if n_steps > max_steps:
                raise ToleranceNotMet(f"exceeded {max_steps} steps at s={s_base + sl:.6g}")
            if h is None and en > 1.0:
                step = hh * max(MIN_FACTOR, SAFETY * en ** -0.2)
                n_rej += 1
                continue
            if h is not None:
                sl = L if not hs else sl + hh
            else:
                sl = sl + hh if hh < L - sl else L
            y = y_new
            k1 = ks[6] / e
            s_nodes.append(s_base + sl)
            xi_nodes.append(b if sl >= L else a + e * sl)
            ys.append(y.copy())
            dys.append(k1.copy())
            if h is None:
                fac = MAX_FACTOR if en == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * en ** -0.2))
                step = hh * fac
        s_base += L
    xi_arr = np.array(xi_nodes, dtype=complex)
    y_arr = np.array(ys)
    dy_arr = np.array(dys)
    d2y = np.array([second_derivative(f, x, yy, d) for x, yy, d in zip(xi_arr, y_arr, dy_arr)])
    return OdeSolution(path, np.array(s_nodes), xi_arr, y_arr, dy_arr, d2y, n_rej)


@dataclass
class Trajectory:
    """Solution of a reduced system with first integrals recorded at every node."""

    case: R.ReducedCase
    constants: R.ReducedConstants
    sol: OdeSolution
    tol: float
    K2: np.ndarray = field(default=None)
    K4: np.ndarray = field(default=None)
    drift2: np.ndarray = field(default=None)
    drift4: np.ndarray = field(default=None)

    def __post_init__(self):
        k2, k4 = [], []
        for x, y in zip(self.sol.xi, self.sol.y):
            a, b = R.first_integrals(self.case, self.constants, R.ReducedState.from_array(x, y))
            k2.append(a)
            k4.append(b)
        self.K2 = np.array(k2, dtype=complex)
        self.K4 = np.array(k4, dtype=complex)
        # drift is measured against the largest additive term met along the path
        scales = np.array([R.integral_scales(self.case, self.constants, st) for st in self.states])
        sc2 = max(scales[:, 0].max(), abs(self.K2[0]))
        sc4 = max(scales[:, 1].max(), abs(self.K4[0]))
        self.drift2 = np.abs(self.K2 - self.K2[0]) / (sc2 if sc2 > 0 else 1.0)
        self.drift4 = np.abs(self.K4 - self.K4[0]) / (sc4 if sc4 > 0 else 1.0)

    @property
    def s(self):
        return self.sol.s

    @property
    def xi(self):
        return self.sol.xi

    @property
    def states(self):
        return [R.ReducedState.from_array(x, y) for x, y in zip(self.sol.xi, self.sol.y)]

    @property
    def final(self):
        return R.ReducedState.from_array(self.sol.xi[-1], self.sol.y[-1])

    @property
    def max_drift(self):
        return float(self.drift2.max()), float(self.drift4.max())


def integrate(case, c: R.ReducedConstants, s0: R.ReducedState, path: ComplexPath, tol=1e-10, h=None, **kw):
    """Integrate a reduced system from s0 along ``path`` (which must start at s0.xi)."""
    case = R.ReducedCase.parse(case)
    if abs(path.start - s0.xi) > 1e-12 * max(1.0, abs(s0.xi)):
        raise ValueError("the path must start at the initial state's xi")
    check_path(case, c, path)
    sol = integrate_ode(R.rhs_function(case, c), s0.as_array(), path, tol=tol, h=h, **kw)
    return Trajectory(case, c, sol, tol)


def dense_eval(tr: Trajectory, s):
    """Interpolated state at path parameter s and (U''', V''') recomputed from the system."""
    y, _ = tr.sol.eval(s)
    xi = tr.sol.path.point(s)
    st = R.ReducedState.from_array(xi, y)
    return st, R.reduced_rhs(tr.case, tr.constants, st)
