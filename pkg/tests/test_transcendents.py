import cmath

import numpy as np
import pytest
from hypothesis import given, settings

from sg2dlab import jets as J
from sg2dlab import reduced as R
from sg2dlab import transcendents as T
from sg2dlab.errors import CoefficientPole, GuardViolation, SingularValue
from sg2dlab.integrator import ComplexPath, dense_eval, integrate
from sg2dlab.jets import Jet1

from conftest import complexes, cz


def jet(u0, u1, u2):
    return Jet1.from_derivatives([u0, u1, u2])


def test_cvi_zero_solution():
    p = T.ChazyParams("CVI", d1=0.3, d2=0.7)
    assert T.chazy_residual("CVI", p, jet(0, 0, 0), 0.4) == 0


def test_ciii_constant():
    c, d4, x = 0.7, 1.3, 0.9
    got = T.chazy_residual("CIII", T.ChazyParams("CIII", d4=d4), jet(c, 0, 0), x)
    assert abs(got - 4 * c * c * d4 / x**2) < 1e-13


@settings(max_examples=30, deadline=None)
@given(complexes(1), complexes(1), complexes(1), complexes(1))
def test_civ_weierstrass_data(u0, u1, d3, x):
    d4 = u1 * u1 - 4 * u0**3 - 2 * d3 * u0
    u = jet(u0, u1, 6 * u0 * u0 + d3)
    assert T.chazy_residual("CIV", T.ChazyParams("CIV", d3=d3, d4=d4), u, x, relative=True) < 1e-12


def test_chazy_poles():
    with pytest.raises(CoefficientPole):
        T.chazy_residual("CIII", T.ChazyParams("CIII"), jet(1, 0, 0), 0)
    with pytest.raises(ValueError):
        T.ChazyParams("CII")


def test_pii_zero():
    assert T.painleve_residual("PII", T.PainleveParams("PII"), jet(0, 0, 0), 0.3) == 0


@settings(max_examples=30, deadline=None)
@given(complexes(1), complexes(2))
def test_pii_riccati(u0, x):
    # u' = u^2 + x/2 implies u'' = 2u^3 + xu + 1/2
    u1 = u0 * u0 + x / 2
    u = jet(u0, u1, 2 * u0 * u1 + 0.5)
    assert T.painleve_residual("PII", T.PainleveParams("PII", alpha=0.5), u, x, relative=True) < 1e-12
    assert T.painleve_residual("PII", T.PainleveParams("PII", alpha=0.0), u, x, relative=True) > 1e-6


@settings(max_examples=30, deadline=None)
@given(complexes(1, min_abs=0.1), complexes(1), complexes(1), complexes(1), complexes(1), complexes(1))
def test_piv_textbook(u0, u1, u2, x, al, be):
    p = T.PainleveParams("PIV", alpha=al, beta=be)
    want = u2 - (u1 * u1 / (2 * u0) + 1.5 * u0**3 + 4 * x * u0**2 + 2 * (x * x - al) * u0 + be / u0)
    got = T.painleve_residual("PIV", p, jet(u0, u1, u2), x)
    assert abs(got - want) < 1e-12 * max(1, abs(want))


def test_painleve_singular_value():
    with pytest.raises(SingularValue):
        T.painleve_residual("PV", T.PainleveParams("PV"), jet(1, 0, 0), 0.5)


def test_fvi_gvi_tan_sin():
    x = Jet1.variable(0.4, 1)
    assert max(abs(r) for r in T.fvi_gvi_residuals(J.tan(x), J.sin(x))) < 1e-14


def test_fvi_gvi_coth_cosh():
    x0 = 0.7
    x = Jet1.variable(x0, 1)
    g = cmath.cosh(x0)
    r1, r2, r3 = T.fvi_gvi_residuals(1j * J.coth(x), J.cosh(x))
    assert abs(r3) < 1e-13
    assert abs(r2 - 2 * (g * g - 1)) < 1e-12
    assert abs(r1 + 2 / cmath.sinh(x0) ** 4) < 1e-12


def test_fvi_gvi_zero_f():
    r1, _, _ = T.fvi_gvi_residuals(Jet1.constant(0, 1), J.sin(Jet1.variable(0.2, 1)))
    assert r1 == -1


def test_case1_map_example():
    m = T.param_map(1, R.ReducedConstants(k=1, K2=1, K4=0))
    t = m.target
    assert t.kind == "CVI"
    assert (t.d1, t.d2, t.d3, t.d4) == (0, 2, 0, 1)


def test_case7_map_example():
    m = T.param_map(7, R.ReducedConstants(K7=-1 / 16, K6=0.125j))
    assert m.target.kind == "PII"
    assert abs(m.target.alpha - 1) < 1e-15
    assert abs(m.branches["mu"] - 1) < 1e-15
    assert abs(m.x_of(0.37) - 0.37) < 1e-15


def test_case2_delta():
    m = T.param_map(2, R.ReducedConstants(K2=-1, K5=0.3, K6=0.2))
    assert m.target.kind == "PV"
    assert abs(m.target.delta - 2) < 1e-14


@pytest.mark.parametrize("case_id,c", [
    (2, R.ReducedConstants(K2=0)),
    (3, R.ReducedConstants(K2=1)),
    (5, R.ReducedConstants(K5=1)),
    (7, R.ReducedConstants(K5=0, K7=0)),
    (8, R.ReducedConstants(K7=1)),
])
def test_guards(case_id, c):
    with pytest.raises(GuardViolation):
        T.param_map(case_id, c)


def test_select_case():
    assert T.select_case("zer", R.ReducedConstants(K7=0.2)) == 7
    assert T.select_case("zer", R.ReducedConstants(), autonomous=True) == 9
    assert T.select_case("rat", R.ReducedConstants(K2=0.3)) == 2


@pytest.mark.parametrize("case_id", [1, 2, 3, 6, 7])
def test_constants_round_trip(case_id, rng):
    sysc = T.CASE_SYSTEM[case_id]
    c = R.ReducedConstants(nu=1 + cz(rng, 0.2), k=1 + cz(rng, 0.2), K2=cz(rng, 0.5) if case_id != 3 else 0,
                           K4=cz(rng, 0.5), K5=cz(rng, 0.5) if case_id != 7 else 0, K6=cz(rng, 0.5), K7=cz(rng, 0.5))
    m = T.param_map(case_id, c)
    back = T.constants_from_target(case_id, m)
    for name, val in back.items():
        assert abs(val - getattr(c, name)) < 1e-10 * max(1, abs(val)), (sysc, name)


def run_pullback(case_id, c, rng, xi0, fix=None):
    sysc = T.CASE_SYSTEM[case_id]
    s0 = R.ReducedState(xi0, *(cz(rng, 0.5) for _ in range(4)))
    if fix:
        fix(c, s0)
    K2, K4 = R.first_integrals(sysc, c, s0)
    c = c.replace(K2=0 if case_id == 3 else K2, K4=K4)
    path = ComplexPath((xi0, xi0 + 0.6 + 0.3j))
    tr = integrate(sysc, c, s0, path, tol=1e-11)
    states = [dense_eval(tr, s)[0] for s in np.linspace(0, path.length, 20)]
    return max(T.pullback_check(case_id, c, states))


def rat_k2_zero(c, s):
    s.vpp = c.nu**2 * s.up**2 - s.vp / s.xi - c.K5**2 / s.xi**2


@pytest.mark.parametrize("case_id,xi0,tol,fix", [
    (1, 0.7 + 0.4j, 1e-6, None), (2, 0.7 + 0.4j, 1e-6, None), (3, 0.7 + 0.4j, 1e-6, rat_k2_zero),
    (4, 0.3 + 0.4j, 1e-6, None), (5, 0.3 + 0.4j, 1e-6, None), (6, 0.3 + 0.4j, 1e-6, None),
    (7, 0.3 + 0.4j, 1e-6, None), (8, 0.3 + 0.4j, 1e-9, None),
])
def test_pullbacks(case_id, xi0, tol, fix, rng):
    nu = 0.8 + 0.3j
    c = R.ReducedConstants(nu=nu, k=1.2 + 0.2j if case_id == 1 else 0.9 - 0.2j, K5=cz(rng, 0.5), K6=cz(rng, 0.5),
                           K7=cz(rng, 0.5))
    if case_id in (5, 7, 8):
        c = c.replace(K5=0)
    if case_id == 8:
        c = c.replace(K7=0)
    assert run_pullback(case_id, c, rng, xi0, fix) < tol


def test_pullback_rejects_foreign_integrals(rng):
    c = R.ReducedConstants(K7=0.3, K2=5.0, K4=1.0)
    with pytest.raises(ValueError):
        T.pullback_check(7, c, [R.ReducedState(0.2, 0.1, 0.2, 0.3, 0.4)])
