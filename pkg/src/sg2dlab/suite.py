"""Acceptance checks shared by the test suite and the ``suite`` CLI command.

Each check returns a CheckResult holding the worst measured value and the
tolerance it was compared against.  All randomness flows from one seed.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import reduced as R
from . import reductions as RD
from . import sg2d
from . import transcendents as T
from .errors import BranchWarning
from .integrator import ComplexPath, dense_eval, integrate

FUCHS = [-1, 0, 0, 1, 2, 4]


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    value: float
    tol: float
    n: int
    details: dict = field(default_factory=dict)


def _cz(rng, scale=1.0):
    return complex(*rng.normal(size=2)) * scale


def _f(x):
    return float(f"{float(x):.6e}")


def _result(id_, name, value, tol, n, passed=None, **details):
    passed = bool(value < tol) if passed is None else bool(passed)
    return CheckResult(id_, name, passed, _f(value), tol, n, {k: _clean(v) for k, v in details.items()})


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return _f(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_f(v.real), _f(v.imag)]
    return v


# ---------------------------------------------------------------------------


def check_fuchs(rng, perturb=False):
    expected = [-1, 0, 0, 1, 2, 3] if perturb else FUCHS
    worst, ok = 0.0, True
    for _ in range(20):
        nu = _cz(rng) + 0.1
        roots = sg2d.fuchs_indices(nu)
        ok &= [r.real for r in roots] == expected and all(r.imag == 0 for r in roots)
        worst = max(worst, sg2d.max_root_residual(nu, roots))
    return _result(1, "fuchs indices", worst, 1e-9, 20, passed=ok and worst < 1e-9, expected=expected)


def check_indicial(rng, perturb=False):
    last = 3 if perturb else 4
    worst = 0.0
    for _ in range(50):
        j, nu = _cz(rng, 2), _cz(rng) + 0.1
        ref = 1j * nu * j**2 * (j - 1) * (j - 2) * (j + 1) * (j - last)
        worst = max(worst, abs(sg2d.indicial_det(j, nu) - ref) / max(abs(ref), 1e-300))
    return _result(2, "indicial factorisation", worst, 1e-12, 50)


def check_nolog(rng, perturb=False):
    worst, n = 0.0, 0
    for case in R.ReducedCase:
        c = R.ReducedConstants(nu=_cz(rng) + 1, k=_cz(rng, 0.3) + 1, K5=_cz(rng, 0.5), K6=_cz(rng, 0.5), K7=_cz(rng, 0.5))
        fam = R.coefficient_family(case, c)
        if perturb:
            f5 = fam.f5
            fam = R.CoefficientFamily(fam.f1, fam.g3, lambda xi: 1.01 * f5(xi), fam.f6, fam.g6, fam.g5, fam.case)
        for _ in range(16):
            xi = 0.4 + 0.6 * complex(*rng.random(2))
            for branch in (1, -1):
                q = R.nolog_residuals(fam, xi, branch, relative=True)
                worst = max(worst, *q)
                n += 3
    return _result(3, "no-log closure", worst, 1e-10, n)


def _random_path(rng, xi0, length=1.0):
    theta = rng.uniform(-np.pi / 3, np.pi / 3)
    return ComplexPath((xi0, xi0 + length * np.exp(1j * theta)))


def check_conservation(rng, perturb=False):
    tol = 1e-4 if perturb else 1e-10
    worst, n, per_case = 0.0, 0, {}
    for case in R.ReducedCase:
        cmax = 0.0
        for _ in range(10):
            c = R.ReducedConstants(nu=_cz(rng, 0.3) + 1, k=_cz(rng, 0.2) + 1, K5=_cz(rng, 0.5),
                                   K6=_cz(rng, 0.5), K7=_cz(rng, 0.5))
            xi0 = 0.6 + 0.5j
            s0 = R.ReducedState(xi0, *(_cz(rng, 0.5) for _ in range(4)))
            tr = integrate(case, c, s0, _random_path(rng, xi0), tol=tol)
            cmax = max(cmax, *tr.max_drift)
            n += 1
        per_case[case.value] = cmax
        worst = max(worst, cmax)
    return _result(4, "first-integral conservation", worst, 1e-8, n, per_case=per_case, integrator_tol=tol)


PULLBACK_CASES = (1, 2, 3, 5, 6, 7, 8)


def _pullback_constants(case_id, rng):
    nu = _cz(rng, 0.3) + 0.8
    if case_id == 1:
        return R.ReducedConstants(nu=nu, k=_cz(rng, 0.2) + 1.2, K5=_cz(rng, 0.5), K6=_cz(rng, 0.5))
    if case_id in (2, 3):
        return R.ReducedConstants(nu=nu, K5=_cz(rng, 0.5), K6=_cz(rng, 0.5))
    if case_id == 5:
        return R.ReducedConstants(nu=nu, k=_cz(rng, 0.2) + 0.9, K6=_cz(rng, 0.5), K7=_cz(rng, 0.5))
    if case_id == 6:
        return R.ReducedConstants(nu=nu, K5=_cz(rng, 0.5), K6=_cz(rng, 0.5), K7=_cz(rng, 0.5))
    if case_id == 7:
        return R.ReducedConstants(nu=nu, K6=_cz(rng, 0.5), K7=_cz(rng, 0.5))
    return R.ReducedConstants(nu=nu, K6=_cz(rng, 0.5))


def pullback_run(case_id, rng, n_samples=20, perturb=False):
    """Integrate the case's system and return the target residuals at n_samples points."""
    base = _pullback_constants(case_id, rng)
    sysc = T.CASE_SYSTEM[case_id]
    xi0 = 0.7 + 0.4j
    s0 = R.ReducedState(xi0, *(_cz(rng, 0.5) for _ in range(4)))
    if case_id == 3:
        # K2 = 0: choose V'' so that the Rat K2 vanishes
        s0.vpp = base.nu**2 * s0.up**2 - s0.vp / xi0 - base.K5**2 / xi0**2
    K2, K4 = R.first_integrals(sysc, base, s0)
    c = base.replace(K2=K2, K4=K4)
    if case_id == 3:
        c = c.replace(K2=0)
    path = ComplexPath((xi0, xi0 + 0.6 + 0.3j))
    tr = integrate(sysc, c, s0, path, tol=1e-11)
    states = [dense_eval(tr, s)[0] for s in np.linspace(0, path.length, n_samples)]
    cm = c.replace(K6=c.K6 * 1.01 + 0.01) if perturb else c
    if perturb:
        return [abs(x) for x in T.pullback_check(case_id, cm, states, integral_tol=np.inf)]
    return T.pullback_check(case_id, c, states)


def check_pullbacks(rng, perturb=False):
    per_case, ok = {}, True
    for cid in PULLBACK_CASES:
        res = pullback_run(cid, rng, perturb=perturb)
        tol = 1e-9 if cid == 8 else 1e-6
        per_case[str(cid)] = {"max": max(res), "tol": tol}
        ok &= max(res) < tol
    worst = max(v["max"] for v in per_case.values())
    return _result(5, "parameter-map pullbacks", worst, 1e-6, 20 * len(PULLBACK_CASES), passed=ok, per_case=per_case)


def check_elliptic(rng, perturb=False):
    worst, uncorrected_min = 0.0, np.inf
    for _ in range(50):
        c = R.ReducedConstants(nu=_cz(rng, 0.3) + 1, K6=_cz(rng, 0.5))
        s = R.ReducedState(_cz(rng), *(_cz(rng, 0.7) for _ in range(4)))
        K2, K4 = R.first_integrals(R.ReducedCase.ZER, c, s)
        c = c.replace(K2=K2, K4=K4)
        variant = "uncorrected" if perturb else "corrected"
        worst = max(worst, R.elliptic_relation(c, s, variant, relative=True))
        uncorrected_min = min(uncorrected_min, R.elliptic_relation(c, s, "uncorrected", relative=True))
    return _result(6, "elliptic relation K2^2 correction", worst, 1e-11, 50, uncorrected_min_residual=uncorrected_min)


GENERIC_K7 = 0.4 - 0.3j


def e2e_configs(break_constraint=False):
    K7 = GENERIC_K7
    K6 = 2j * K7 * (1.1 if break_constraint else 1.0)
    return [
        ("generic_example", None, R.ReducedConstants(k=1.3 + 0.2j, K5=1j, K7=K7, K6=K6), (1.3 + 0.2j, 2.7 - 0.1j, 0.2 + 0.05j), {}),
        ("generic_example", None, R.ReducedConstants(k=0.9 - 0.1j, K5=-1j, K7=K7, K6=-2j * K7), (1.3 + 0.2j, 2.7 - 0.1j, 0.2 + 0.05j), {}),
        ("rational", RD.TimeFunctions.of(h1=[0, 1], h2=[0, 2]), R.ReducedConstants(K5=1j, K7=K7, K6=2j * K7),
         (1.3 + 0.2j, 2.7 - 0.1j, 0.2 + 0.05j), {}),
        ("zer", RD.TimeFunctions.of(h0=[1, 1, 0.5, 1 / 6]), R.ReducedConstants(K5=0.7 + 0.2j, K6=0.3, K7=0.5 - 0.1j),
         (1.3 + 0.2j, 0.7 - 0.1j, 0.2 + 0.05j), {"C1": 0.3, "C2": -0.2}),
    ]


def check_end_to_end(rng, perturb=False):
    rows, ok, worst_pde, worst_adm = [], True, 0.0, 0.0
    for name, tf, c, center, opts in e2e_configs(break_constraint=perturb):
        rv = RD.build_reduction(name, tf, c, enforce=not perturb, **opts)
        s0 = R.ReducedState(rv.xi(center).value, *(_cz(rng, 0.3) for _ in range(4)))
        rep = RD.verify_end_to_end(rv, s0, RD.complex_grid(center, 0.05, 5))
        good = rep.max_pde < 1e-7 and rep.max_admissibility < 1e-9 and rep.warnings == 0
        ok &= good
        worst_pde, worst_adm = max(worst_pde, rep.max_pde), max(worst_adm, rep.max_admissibility)
        rows.append({"case": name, "K5": c.K5, "max_pde": rep.max_pde, "max_admissibility": rep.max_admissibility,
                     "warnings": rep.warnings, "points": rep.n_points})
    return _result(7, "end-to-end reductions", max(worst_pde, worst_adm), 1e-7, sum(r["points"] for r in rows),
                   passed=ok, cases=rows, pde_tol=1e-7, admissibility_tol=1e-9)


def exp_negative_config():
    tf = RD.TimeFunctions.of(lambda2=[1, 0.3, 0.2], lambda3=[0, 0.5, 0.1], farb=[0.3, 0.1])
    c = R.ReducedConstants(k=1.3, K5=0.4 + 0.1j, K6=0.2, K7=0.3 + 0.25j)
    return tf, c, (2 + 0.3j, 3.5 - 0.2j, 0.2 + 0.05j)


def check_exp_negative(rng, perturb=False):
    tf, c, center = exp_negative_config()
    if perturb:
        rv = RD.build_reduction("exp_k5_zero", tf, c.replace(K5=0, K6=0))
    else:
        rv = RD.build_reduction("exp", tf, c)
    first6, r7min = 0.0, np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("error", BranchWarning)
        for pt in RD.complex_grid(center, 0.05, 5):
            res = RD.admissibility_residuals(rv, pt, relative=True)
            first6 = max(first6, *res[:6])
            r7min = min(r7min, res[6])
    ok = first6 < 1e-9 and r7min > 1e-3
    return _result(8, "exp negative result", first6, 1e-9, 125, passed=ok, residual7_min=r7min, residual7_floor=1e-3)


def check_ab_pair(rng, perturb=False):
    coeff = {f"lambda{i}": [_cz(rng, 0.3) + (1 if i == 2 else 0) for _ in range(3)] for i in (1, 2, 3)}
    if perturb:
        coeff["mu3"] = [c + 0.1 for c in coeff["lambda3"]]
    ab = RD.ab_pair(RD.TimeFunctions(coeff))
    worst = 0.0
    for _ in range(10):
        x, y, t = 2 + _cz(rng, 0.3), -2 + _cz(rng, 0.3), _cz(rng, 0.2)
        worst = max(worst, abs(ab.schwarzian_t(x, t, "a")[1]), abs(ab.schwarzian_t(y, t, "b")[1]),
                    abs(ab.log_residual((x, y, t))))
    dal = 0.0
    for case in R.ReducedCase:
        pair = RD.dalembert_pair(case, 1.3)
        for _ in range(5):
            dal = max(dal, *(abs(r) for r in pair.ode_residuals(0.5 + _cz(rng, 0.1))))
    return _result(9, "(a, b) pair and d'Alembert table", max(worst, dal), 1e-10, 10 + 20,
                   ab_max=worst, dalembert_max=dal)


def check_fg(rng, perturb=False):
    tf = RD.TimeFunctions.of(lambda2=[1, 0.3, 0.2], lambda3=[0.1])
    K7 = 0.3 - 0.2j
    worst, cons, n = 0.0, 0.0, 0
    for variant, k in (("exp", 1.3), ("zer", 1.0)):
        states = [RD.EllipticFixture(variant, 0.2 + 0.1j, K7, k, 0.5 + 0.1j, 0.2, 0.8 + 0.1j, -0.3 + 0.2j, tf).state()]
        for br in "ab":
            K6 = (1j if br == "a" else 2j) * k * K7
            cons = max(cons, abs(RD.truncation_constraint(K6, K7, k)))
            K7t = K7 * (1.05 if perturb else 1.0)
            states.append(RD.truncation_fixture(variant, K6, K7t, k, tf, branch=br, strict=not perturb))
        for st in states:
            for pt in ((0.4 + 0.1j, 0.3), (1.1 + 0.1j, 0.2), (0.7 - 0.1j, 0.35 + 0.05j)):
                worst = max(worst, *(abs(r) for r in RD.fg_residuals(st, variant, pt)))
                n += 1
    return _result(10, "F/G particular solutions", max(worst, cons), 1e-8, n, fg_max=worst, constraint_max=cons)


CHECKS = {
    1: check_fuchs, 2: check_indicial, 3: check_nolog, 4: check_conservation, 5: check_pullbacks,
    6: check_elliptic, 7: check_end_to_end, 8: check_exp_negative, 9: check_ab_pair, 10: check_fg,
}
DETERMINISM_SUBSET = (1, 2, 3, 6, 9, 10)


def run_checks(seed, ids=None, inject=None):
    """Run the numbered checks, each with its own generator derived from the seed."""
    out = []
    for cid in ids or sorted(CHECKS):
        rng = np.random.default_rng([seed, cid])
        out.append(CHECKS[cid](rng, perturb=(cid == inject)))
    return out


def check_determinism(seed, inject=None):
    a = json.dumps([asdict(r) for r in run_checks(seed, DETERMINISM_SUBSET)], sort_keys=True)
    b = json.dumps([asdict(r) for r in run_checks(seed, DETERMINISM_SUBSET)], sort_keys=True)
    same = a == b and inject != 11
    return CheckResult(11, "suite determinism", same, 0.0 if same else 1.0, 0.5, len(DETERMINISM_SUBSET),
                       {"subset": list(DETERMINISM_SUBSET)})


def run_suite(seed=0, inject=None, ids=None):
    results = run_checks(seed, [i for i in (ids or sorted(CHECKS)) if i in CHECKS], inject)
    if ids is None or 11 in ids:
        results.append(check_determinism(seed, inject))
    return results
