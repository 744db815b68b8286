import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sg2dlab import reduced as R
from sg2dlab.errors import OutOfRange, SingularPoint, StepSizeUnderflow
from sg2dlab.integrator import ComplexPath, check_path, dense_eval, integrate, integrate_ode

from conftest import cz

XI0 = {R.ReducedCase.TRI: 0.6 + 0.4j, R.ReducedCase.RAT: 0.7 + 0.3j, R.ReducedCase.EXP: 0.3 + 0.2j,
       R.ReducedCase.ZER: 0.2 - 0.1j}


def test_path_validation():
    with pytest.raises(ValueError):
        ComplexPath((1,))
    with pytest.raises(ValueError):
        ComplexPath((1, 1, 2))
    p = ComplexPath((0, 1, 1 + 1j))
    assert p.length == 2 and p.point(1.5) == 1 + 0.5j
    with pytest.raises(OutOfRange):
        p.point(2.5)
    assert abs(p.distance_to(0.5 + 0.3j) - 0.3) < 1e-15


def test_exponential_along_complex_path():
    path = ComplexPath((0, 1 + 1j, 2j))
    sol = integrate_ode(lambda x, y: [y[0]], [1.0], path, tol=1e-12)
    assert abs(sol.y[-1][0] - cmath.exp(2j)) < 1e-10


def test_zer_fixed_point():
    tr = integrate("zer", R.ReducedConstants(), R.ReducedState(0, 2, 0, 5, 0), ComplexPath((0, 1 + 1j, 2)))
    assert tr.max_drift == (0.0, 0.0)
    assert np.allclose(tr.final.as_array(), [2, 0, 5, 0])


@pytest.mark.parametrize("case", list(R.ReducedCase))
def test_conservation(case, rng):
    for _ in range(3):
        c = R.ReducedConstants(nu=1 + cz(rng, 0.3), k=1 + cz(rng, 0.2), K5=cz(rng, 0.5), K6=cz(rng, 0.5),
                               K7=cz(rng, 0.5))
        s0 = R.ReducedState(XI0[case], *(cz(rng, 0.5) for _ in range(4)))
        path = ComplexPath((s0.xi, s0.xi + cmath.exp(1j * rng.uniform(0, 2 * np.pi))))
        tr = integrate(case, c, s0, path, tol=1e-10)
        assert max(tr.max_drift) < 1e-8


def test_fixed_step_order(rng):
    c = R.ReducedConstants(nu=1.1, k=0.9, K5=0.3, K6=-0.2)
    s0 = R.ReducedState(0.6 + 0.4j, 0.2, -0.1, 0.3, 0.05)
    path = ComplexPath((s0.xi, s0.xi + 0.8))
    f = R.rhs_function("tri", c)
    ref = integrate_ode(f, s0.as_array(), path, tol=1e-14).y[-1]
    errs = [np.max(np.abs(integrate_ode(f, s0.as_array(), path, h=h).y[-1] - ref)) for h in (0.2, 0.1)]
    assert errs[0] / errs[1] >= 4


def test_dense_output(rng):
    c = R.ReducedConstants(nu=0.9, k=1.1, K5=0.2, K6=0.3)
    s0 = R.ReducedState(0.6 + 0.4j, 0.3, 0.1, -0.2, 0.2)
    path = ComplexPath((s0.xi, s0.xi + 1.0))
    tol = 1e-10
    tr = integrate("tri", c, s0, path, tol=tol)
    end, _ = dense_eval(tr, path.length)
    assert np.array_equal(end.as_array(), tr.final.as_array())
    mid, _ = dense_eval(tr, 0.5)
    re = integrate("tri", c, s0, ComplexPath((s0.xi, s0.xi + 0.5)), tol=tol).final
    assert np.max(np.abs(mid.as_array() - re.as_array())) < 10 * tol * (1 + np.max(np.abs(re.as_array())))
    h = 1e-4
    _, (u3, v3) = dense_eval(tr, 0.5)
    fd = (dense_eval(tr, 0.5 + h)[0].upp - dense_eval(tr, 0.5 - h)[0].upp) / (2 * h)
    assert abs(fd - u3) < 1e-6 * max(1, abs(u3))


def test_path_through_pole():
    with pytest.raises(SingularPoint):
        check_path("rat", R.ReducedConstants(), ComplexPath((0.5, -0.5)))
    with pytest.raises(SingularPoint):
        integrate("rat", R.ReducedConstants(K5=1), R.ReducedState(0.5, 1, 0, 1, 0), ComplexPath((0.5, -0.5)))


def test_path_must_start_at_state():
    with pytest.raises(ValueError):
        integrate("zer", R.ReducedConstants(), R.ReducedState(0, 1, 0, 0, 0), ComplexPath((1, 2)))


def test_blow_up_underflows():
    # y' = y^2 from y=1 blows up at xi=1
    with pytest.raises(StepSizeUnderflow) as err:
        integrate_ode(lambda x, y: [y[0] ** 2], [1.0], ComplexPath((0, 2)), tol=1e-10)
    assert err.value.s is not None and err.value.s < 1.0 + 1e-6


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 2 * np.pi), st.floats(0.2, 1.0))
def test_zer_drift_any_direction(angle, length):
    c = R.ReducedConstants(K5=0.3, K6=0.2 - 0.1j, K7=0.1)
    s0 = R.ReducedState(0.1, 0.2, 0.1, -0.3, 0.2)
    tr = integrate("zer", c, s0, ComplexPath((0.1, 0.1 + length * cmath.exp(1j * angle))), tol=1e-10)
    assert max(tr.max_drift) < 1e-8
