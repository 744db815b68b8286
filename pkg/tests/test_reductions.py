import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sg2dlab import jets as J
from sg2dlab import reduced as R
from sg2dlab import reductions as RD
from sg2dlab.errors import BranchWarning, ConstraintUnsatisfiable, PoleAtSample, ZeroWronskian
from sg2dlab.reductions import TimeFunctions as TF

from conftest import complexes

K7 = 0.4 - 0.3j
P = (1.3 + 0.2j, 2.7 - 0.1j, 0.2 + 0.05j)
PZ = (1.3 + 0.2j, 0.7 - 0.1j, 0.2 + 0.05j)
PE = (2 + 0.3j, 3.5 - 0.2j, 0.2 + 0.05j)
GENERIC = R.ReducedConstants(k=1.3 + 0.2j, K5=1j, K7=K7, K6=2j * K7)
ZER_C = R.ReducedConstants(K5=0.7 + 0.2j, K6=0.3, K7=0.5 - 0.1j)
ZER_TF = TF.of(h0=[1, 1, 0.5, 1 / 6])
EXP_TF = TF.of(lambda2=[1, 0.3, 0.2], lambda3=[0, 0.5, 0.1], farb=[0.3, 0.1])
EXP_C = R.ReducedConstants(k=1.3, K5=0.4 + 0.1j, K6=0.2, K7=0.3 + 0.25j)


def adm(rv, pt):
    return RD.admissibility_residuals(rv, pt, relative=True)


def test_time_functions():
    tf = TF.of(h=[1, 2, 3])
    assert tf("h", 2.0) == 17 and tf("h", 2.0, 1) == 14 and tf("h", 2.0, 2) == 6
    assert tf.is_zero("h", 3) and not tf.is_zero("h", 2)
    t = J.Jet1.variable(1.0, 2)
    assert tf("h", t).allclose(J.Jet1([6, 8, 3]))
    with pytest.raises(ValueError):
        TF.of(h=list(range(12)))


@pytest.mark.parametrize("sign", [1, -1])
def test_generic_example_admissible(sign, rng):
    c = GENERIC.replace(K5=sign * 1j, K6=sign * 2j * K7)
    rv = RD.build_reduction("generic_example", None, c)
    for _ in range(10):
        pt = tuple(z + complex(*rng.normal(size=2)) * 0.05 for z in P)
        assert max(adm(rv, pt)) < 1e-9
        assert max(abs(g) for g in RD.gradient_consistency(rv, pt)) < 1e-9


def test_generic_example_f1():
    rv = RD.build_reduction("generic_example", None, GENERIC)
    x, y, t = P
    xi = rv.xi(P)
    f1 = xi.d(1, 1, 0) / (xi.d(1, 0, 0) * xi.d(0, 1, 0))
    want = GENERIC.k * (x * y - t * (x + y)) / cmath.sqrt(x * y * (x - 2 * t) * (y - 2 * t))
    assert abs(f1 - want) < 1e-12


def test_generic_example_constraint_break():
    c = GENERIC.replace(K6=2.2j * K7)
    with pytest.raises(ConstraintUnsatisfiable):
        RD.build_reduction("generic_example", None, c)
    rv = RD.build_reduction("generic_example", None, c, enforce=False)
    res = adm(rv, P)
    assert max(res[:6]) < 1e-9 and res[6] > 1e-3
    assert not rv.satisfied


def test_generic_full_closure():
    tf = TF.of(lambda1=[0.1, 0.2], lambda2=[0.5, 1, 0.1], lambda3=[0.2, 0.7, -0.1])
    rv = RD.build_reduction("generic_full", tf, GENERIC)
    assert max(adm(rv, P)) < 1e-9
    _, spread = RD.c1_consistency(rv, P[2], [(1.3 + 0.2j, 2.7 - 0.1j), (1.5, 2.2 + 0.1j), (1.1 - 0.1j, 3.1)])
    assert spread < 1e-10


def test_generic_full_reduces_to_example():
    tf = TF.of(lambda1=[0], lambda2=[0, 1], lambda3=[0, 1])
    rv = RD.build_reduction("generic_full", tf, GENERIC, c1=0.0)
    assert max(adm(rv, P)) < 1e-9


def test_rational_admissible():
    rv = RD.build_reduction("rational", TF.of(h1=[0, 1], h2=[0, 2]), GENERIC.replace(k=1))
    assert max(adm(rv, P)) < 1e-9


@settings(max_examples=10, deadline=None)
@given(complexes(1, min_abs=0.2), complexes(1.5, min_abs=0.1))
def test_rational_proportional_any_K5(alpha, K5):
    tf = TF.of(h1=[0, alpha, 0.3 * alpha], h2=[0, 1, 0.3])
    rv = RD.build_reduction("rational", tf, R.ReducedConstants(K5=K5))
    assert rv.satisfied


def test_rational_needs_constraint():
    tf = TF.of(h1=[0, 1, 0.3], h2=[0, 2, -0.1])
    with pytest.raises(ConstraintUnsatisfiable):
        RD.build_reduction("rational", tf, R.ReducedConstants(K5=0.7))
    rv = RD.build_reduction("rational", tf, R.ReducedConstants(K5=0.7), enforce=False)
    assert adm(rv, P)[6] > 1e-3


@pytest.mark.parametrize("C1,C2", [(0, 0), (0.3, -0.2), (1 + 1j, 0.5)])
def test_zer_admissible(C1, C2):
    rv = RD.build_reduction("zer", ZER_TF, ZER_C, C1=C1, C2=C2)
    assert max(adm(rv, PZ)) < 1e-9
    assert max(abs(g) for g in RD.gradient_consistency(rv, PZ)) < 1e-9


def test_zer_h1_constant():
    # h0 = e^t surrogate, C1 = C2 = 0: h1 = K7/(4 K5^2); the uncorrected K7/K5^2 breaks residual 7
    tf = TF.of(h0=[1 / math.factorial(n) for n in range(8)])
    h0 = tf("h0", 0.3)
    h1, h1p = RD.zer_h1(h0, tf("h0", 0.3, 1), ZER_C)
    assert abs(h1 - ZER_C.K7 / (4 * ZER_C.K5**2)) < 1e-14 and h1p == 0
    h1u, _ = RD.zer_h1(h0, tf("h0", 0.3, 1), ZER_C, variant="uncorrected")
    assert abs(h1u - ZER_C.K7 / ZER_C.K5**2) < 1e-14
    rv = RD.build_reduction("zer", ZER_TF, ZER_C, h1_variant="uncorrected")
    assert adm(rv, PZ)[6] > 1e-3


def test_zer_k5_zero():
    tf = TF.of(h0=[1, 1, 0.5], h1=[0.1, 0.3, 0.2], farb=[0.2, 1])
    rv = RD.build_reduction("zer_k5_zero", tf, R.ReducedConstants(K7=0.5 - 0.1j))
    assert max(adm(rv, PZ)) < 1e-9


def test_exp_negative_result():
    rv = RD.build_reduction("exp", EXP_TF, EXP_C)
    with warnings.catch_warnings():
        warnings.simplefilter("error", BranchWarning)
        for pt in RD.complex_grid(PE, 0.05, 3):
            res = adm(rv, pt)
            assert max(res[:6]) < 1e-9 and res[6] > 1e-3


def test_exp_k5_zero_closes():
    rv = RD.build_reduction("exp_k5_zero", EXP_TF, EXP_C.replace(K5=0, K6=0))
    assert max(adm(rv, PE)) < 1e-9


def test_exp_constant_lambda3_zero_wronskian():
    tf = TF.of(lambda2=[1, 0.3], lambda3=[0.1])
    with pytest.raises(ZeroWronskian):
        RD.build_reduction("exp", tf, EXP_C)
    fx = RD.EllipticFixture("exp", 0.2, 0.3, 1.3, 0.5, 0.2, 0.8, -0.3, tf)
    rv = RD.build_reduction("exp_wronskian_zero", tf, R.ReducedConstants(k=1.3, K6=0.2, K7=0.3), fg=fx.state())
    assert abs(RD.wronskian(rv, PE)) < 1e-12
    with pytest.raises(ZeroWronskian):
        RD.gradient_consistency(rv, PE)


def test_unknown_case():
    with pytest.raises((ValueError, KeyError)):
        RD.build_reduction("quartic", None, GENERIC)


def test_reconstruction_guards_v():
    rv = RD.build_reduction("generic_example", None, GENERIC)
    s = R.ReducedState(rv.xi(P).value, 0.1, 0.2, 0.3, 0.4)
    sample = RD.reconstruct_fields(rv, s, R.reduced_rhs("tri", GENERIC, s), P)
    assert sample.v_t_only


@pytest.mark.parametrize("name,tf,c,center,opts", [
    ("generic_example", None, GENERIC, P, {}),
    ("rational", TF.of(h1=[0, 1], h2=[0, 2]), GENERIC.replace(k=1), P, {}),
    ("zer", ZER_TF, ZER_C, PZ, {"C1": 0.3, "C2": -0.2}),
])
def test_end_to_end(name, tf, c, center, opts):
    rv = RD.build_reduction(name, tf, c, **opts)
    s0 = R.ReducedState(rv.xi(center).value, 0.3 + 0.1j, -0.2 + 0.05j, 0.1 - 0.2j, 0.25 + 0.1j)
    rep = RD.verify_end_to_end(rv, s0, RD.complex_grid(center, 0.05, 3))
    assert rep.max_pde < 1e-7 and rep.max_admissibility < 1e-9 and rep.warnings == 0


@pytest.mark.parametrize("case", list(R.ReducedCase))
def test_dalembert_rows(case):
    pair = RD.dalembert_pair(case, k=1.2)
    for z in (0.3 + 0.2j, 0.7 - 0.1j):
        assert max(abs(r) for r in pair.ode_residuals(z)) < 1e-10


def test_dalembert_rat_row():
    pair = RD.dalembert_pair("rat")
    z = J.Jet1.variable(0.4, 2)
    f = pair.f(z)
    assert abs(f.deriv(2) - f.deriv(1) ** 2 / f.value) < 1e-14


def test_dalembert_zer_row():
    # Z = a(x,t) + b(y,t) with a = x h0(t), b = y/h0(t): [Z^2]_xyt = 0
    h0 = lambda T: 1 + T + 0.5 * T * T
    X, Y, T = J.Jet3.variables((0.3, 0.6, 0.2))
    Z = X * h0(T) + Y / h0(T)
    assert abs(RD.dalembert_pair("zer").psi(Z).d(1, 1, 1)) < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.lists(complexes(0.3), min_size=9, max_size=9), complexes(0.3), complexes(0.3), complexes(0.3))
def test_ab_pair(coef, dx, dy, t):
    tf = TF({f"lambda{i}": [coef[3 * (i - 1) + j] + (1 if (i, j) == (2, 0) else 0) for j in range(3)] for i in (1, 2, 3)})
    ab = RD.ab_pair(tf)
    x, y = 1.5 + dx, -1.2 + dy
    try:
        sa, dsa = ab.schwarzian_t(x, t, "a")
        sb, dsb = ab.schwarzian_t(y, t, "b")
        res = ab.log_residual((x, y, t))
    except PoleAtSample:
        return
    assert abs(sa) < 1e-9 and abs(dsa) < 1e-9 and abs(dsb) < 1e-9
    assert abs(res) < 1e-10


def test_ab_pair_needs_constraint():
    tf = TF.of(lambda1=[0.1, 0.2], lambda2=[1, 0.3], lambda3=[0.2, 0.5], mu1=[-0.1, -0.2], mu2=[-1, -0.3],
               mu3=[0.2, 0.8])
    assert abs(RD.ab_pair(tf).log_residual((1.5, -1.2, 0.3))) > 1e-6


def test_truncation_constraint():
    k, K7 = 1.3, 0.3 - 0.2j
    assert abs(RD.truncation_constraint(1j * k * K7, K7, k)) < 1e-15
    assert abs(RD.truncation_constraint(2j * k * K7, K7, k)) < 1e-15
    assert abs(RD.truncation_constraint(0.2, K7, k)) > 1e-3


def test_fg_zer_linear():
    K7 = 0.3
    g1 = lambda T: 0.4 + T

    def zero_F(p0, t0, shape):
        return J.BoxJet.constant(0, shape, (p0, t0))

    def Gp(p0, t0, shape):
        P, T = J.BoxJet.variables((p0, t0), shape)
        return 8 * K7 * P + g1(T)

    st0 = RD.FGState(zero_F, Gp, 0.0, K7)
    assert max(abs(r) for r in RD.fg_residuals(st0, "zer", (0.4, 0.2))) < 1e-14

    def lin_F(p0, t0, shape):
        P, _ = J.BoxJet.variables((p0, t0), shape)
        return 0.7 * P

    st1 = RD.FGState(lin_F, lambda p0, t0, shape: J.BoxJet.constant(0, shape, (p0, t0)), 0.0, 0.0)
    assert max(abs(r) for r in RD.fg_residuals(st1, "zer", (0.4, 0.2))) < 1e-14


@pytest.mark.parametrize("variant", ["exp", "zer"])
def test_fg_fixtures(variant):
    tf = TF.of(lambda2=[1, 0.3, 0.2], lambda3=[0.1])
    k = 1.3 if variant == "exp" else 1.0
    fx = RD.EllipticFixture(variant, 0.2 + 0.1j, K7, k, 0.5 + 0.1j, 0.2, 0.8 + 0.1j, -0.3 + 0.2j, tf)
    assert max(abs(r) for r in RD.fg_residuals(fx.state(), variant, (1.1 + 0.1j, 0.2))) < 1e-8
    for branch, f in (("a", 1j), ("b", 2j)):
        K6 = f * k * K7
        assert abs(RD.truncation_constraint(K6, K7, k)) < 1e-14
        st1 = RD.truncation_fixture(variant, K6, K7, k, tf, branch=branch)
        assert max(abs(r) for r in RD.fg_residuals(st1, variant, (0.4 + 0.1j, 0.3))) < 1e-8


def test_truncation_fixture_rejects_bad_constants():
    tf = TF.of(lambda2=[1, 0.3, 0.2], lambda3=[0.1])
    with pytest.raises(ConstraintUnsatisfiable):
        RD.truncation_fixture("exp", 0.2, K7, 1.3, tf, branch="a")


def test_fg_admissibility_closes():
    tf = TF.of(lambda2=[1, 0.3, 0.2], lambda3=[0.1])
    fx = RD.EllipticFixture("exp", 0.2 + 0.1j, K7, 1.3, 0.5 + 0.1j, 0.2, 0.8 + 0.1j, -0.3 + 0.2j, tf)
    st = fx.state()
    rv = RD.build_reduction("exp_wronskian_zero", tf, R.ReducedConstants(k=1.3, K6=st.K6, K7=st.K7), fg=st)
    assert max(adm(rv, PE)) < 1e-8
