"""Command-line front end: fuchs, integrate, verify-reduction, map, suite.

Exit codes: 0 pass, 1 configuration, 2 indicial, 3 integration,
4 guard or constraint, 5 residual failure.  Complex numbers are written as
[re, im] pairs everywhere.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from dataclasses import asdict
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from . import reduced as R
from . import reductions as RD
from . import sg2d
from . import suite as S
from . import transcendents as T
from .errors import (
    ConfigError,
    ConstraintUnsatisfiable,
    DegenerateTimeFunctions,
    GuardViolation,
    RootFindingFailure,
    SingularLocus,
    SingularPoint,
    StepSizeUnderflow,
    ToleranceNotMet,
    ZeroWronskian,
)
from .integrator import ComplexPath, dense_eval, integrate

EXIT_OK, EXIT_CONFIG, EXIT_INDICIAL, EXIT_INTEGRATION, EXIT_CONSTRAINT, EXIT_RESIDUAL = range(6)
COMMANDS = ("fuchs", "integrate", "verify-reduction", "map", "suite")
CSV_COLUMNS = ("s", "xi_re", "xi_im", "up_re", "up_im", "upp_re", "upp_im", "vp_re", "vp_im", "vpp_re", "vpp_im",
               "K2_re", "K2_im", "K4_re", "K4_im", "drift2", "drift4")
SUITE_EXIT = {1: EXIT_INDICIAL, 2: EXIT_INDICIAL, 4: EXIT_INTEGRATION}

DEFAULT_STATE = {"xi": [0.6, 0.5], "up": 0.3, "upp": -0.2, "vp": 0.1, "vpp": 0.25}
REDUCTION_DEFAULTS = {
    "generic_example": ({"k": [1.3, 0.2], "K5": [0, 1], "K7": [0.4, -0.3], "K6": [0.6, 0.8]}, {},
                        [[1.3, 0.2], [2.7, -0.1], [0.2, 0.05]]),
    "rational": ({"K5": [0, 1], "K7": [0.4, -0.3], "K6": [0.6, 0.8]}, {"h1": [0, 1], "h2": [0, 2]},
                 [[1.3, 0.2], [2.7, -0.1], [0.2, 0.05]]),
    "zer": ({"K5": [0.7, 0.2], "K6": 0.3, "K7": [0.5, -0.1]}, {"h0": [1, 1, 0.5, 1 / 6]},
            [[1.3, 0.2], [0.7, -0.1], [0.2, 0.05]]),
    "zer_k5_zero": ({"K7": [0.5, -0.1]}, {"h0": [1, 1, 0.5], "h1": [0.1, 0.3, 0.2], "farb": [0.2, 1]},
                    [[1.3, 0.2], [0.7, -0.1], [0.2, 0.05]]),
    "exp": ({"k": 1.3, "K5": [0.4, 0.1], "K6": 0.2, "K7": [0.3, 0.25]},
            {"lambda2": [1, 0.3, 0.2], "lambda3": [0, 0.5, 0.1]}, [[2, 0.3], [3.5, -0.2], [0.2, 0.05]]),
    "exp_k5_zero": ({"k": 1.3, "K7": [0.3, 0.25]}, {"lambda2": [1, 0.3, 0.2], "lambda3": [0, 0.5, 0.1], "farb": [0.3, 0.1]},
                    [[2, 0.3], [3.5, -0.2], [0.2, 0.05]]),
    "generic_full": ({"k": [1.3, 0.2], "K5": [0, 1], "K7": [0.4, -0.3], "K6": [0.6, 0.8]},
                     {"lambda1": [0.1, 0.2], "lambda2": [0.5, 1, 0.1], "lambda3": [0.2, 0.7, -0.1]},
                     [[1.3, 0.2], [2.7, -0.1], [0.2, 0.05]]),
}


# ---------------------------------------------------------------------------
# configuration


def load_schema(name):
    return json.loads(resources.files("sg2dlab.schemas").joinpath(name).read_text())


def cnum(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def cpair(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, load_schema("config.schema.json"))
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config schema error at {path}: {e.message}") from None
    return cfg


def load_config(path, overrides):
    cfg = {}
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config schema error at <root>: the config must be a JSON object")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(cfg)


def constants_of(cfg, defaults=None):
    d = dict(defaults or {})
    d.update(cfg.get("constants", {}))
    kw = {k: cnum(v) for k, v in d.items() if k != "keep_K7"}
    return R.ReducedConstants(**kw, keep_K7=bool(d.get("keep_K7", False)))


def time_functions_of(cfg, defaults=None):
    d = dict(defaults or {})
    d.update(cfg.get("time_functions", {}))
    return RD.TimeFunctions({k: [cnum(c) for c in v] for k, v in d.items()})


def state_of(cfg, xi=None):
    d = dict(DEFAULT_STATE)
    d.update(cfg.get("initial_state", {}))
    return R.ReducedState(cnum(d["xi"]) if xi is None else xi, *(cnum(d[k]) for k in ("up", "upp", "vp", "vpp")))


def path_of(cfg, start):
    if "path" in cfg:
        return ComplexPath(tuple(cnum(p) for p in cfg["path"]))
    return ComplexPath((start, start + 1.0))


def _report(command, seed, results, exit_code, data=None, error=None):
    rep = {"tool": "sg2dlab", "version": __version__, "command": command, "seed": seed,
           "passed": exit_code == EXIT_OK, "exit_code": exit_code, "results": results}
    if data is not None:
        rep["data"] = data
    if error:
        rep["error"] = error
    return rep


def _row(name, value, tol, passed=None, **extra):
    value = float(value)
    out = {"name": name, "passed": bool(value < tol) if passed is None else bool(passed), "value": value, "tol": tol}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands; each returns (report, csv_rows or None)


def cmd_fuchs(cfg):
    nu = cnum(cfg.get("nu", cfg.get("constants", {}).get("nu", 1.0)))
    tol = cfg.get("tol", 1e-12)
    try:
        roots = sg2d.fuchs_indices(nu)
    except RootFindingFailure as e:
        return _report("fuchs", cfg.get("seed", 0), [], EXIT_INDICIAL, error=str(e)), None
    res = sg2d.max_root_residual(nu, roots)
    ok = [r.real for r in roots] == S.FUCHS
    rows = [_row("max root residual", res, tol), _row("indices match", 0.0 if ok else 1.0, 0.5)]
    code = EXIT_OK if all(r["passed"] for r in rows) else EXIT_INDICIAL
    data = {"nu": cpair(nu), "indices": [cpair(r) for r in roots]}
    return _report("fuchs", cfg.get("seed", 0), rows, code, data), None


def _trajectory_rows(tr):
    rows = []
    for s, st, k2, k4, d2, d4 in zip(tr.s, tr.states, tr.K2, tr.K4, tr.drift2, tr.drift4):
        vals = [s, st.xi.real, st.xi.imag, st.up.real, st.up.imag, st.upp.real, st.upp.imag, st.vp.real, st.vp.imag,
                st.vpp.real, st.vpp.imag, k2.real, k2.imag, k4.real, k4.imag, d2, d4]
        rows.append(dict(zip(CSV_COLUMNS, (float(v) for v in vals))))
    return rows


def cmd_integrate(cfg):
    seed, tol = cfg.get("seed", 0), cfg.get("tol", 1e-10)
    case = R.ReducedCase.parse(cfg.get("case", "zer"))
    c = constants_of(cfg)
    s0 = state_of(cfg)
    path = path_of(cfg, s0.xi)
    try:
        tr = integrate(case, c, s0, path, tol=tol)
    except StepSizeUnderflow as e:
        msg = f"step size underflow at path parameter s={e.s!r}" if e.s is not None else str(e)
        return _report("integrate", seed, [], EXIT_INTEGRATION, error=msg), None
    except (SingularPoint, ToleranceNotMet) as e:
        return _report("integrate", seed, [], EXIT_INTEGRATION, error=str(e)), None
    d2, d4 = tr.max_drift
    results = [_row("max drift K2", d2, 1e-8), _row("max drift K4", d4, 1e-8)]
    rows = _trajectory_rows(tr)
    data = {"case": case.value, "n_samples": len(rows), "n_rejected": int(tr.sol.n_rejected), "integrator_tol": tol,
            "samples": rows}
    return _report("integrate", seed, results, EXIT_OK, data), rows


def cmd_verify_reduction(cfg):
    seed = cfg.get("seed", 0)
    case = str(cfg.get("case", "generic_example"))
    if case not in RD.CASE_SPECS:
        raise ConfigError(f"unknown reduction {case!r}; expected one of {', '.join(RD.CASE_SPECS)}")
    if case not in REDUCTION_DEFAULTS:
        raise ConfigError(f"{case} needs F/G data; it is verified through the library API")
    dconst, dtf, dcenter = REDUCTION_DEFAULTS[case]
    opts = dict(cfg.get("options", {}))
    pde_tol, adm_tol = opts.pop("pde_tol", 1e-7), opts.pop("admissibility_tol", 1e-9)
    enforce = opts.pop("enforce", True)
    kw = {k: (cnum(v) if k in ("C1", "C2", "c1") else v) for k, v in opts.items()
          if k in ("C1", "C2", "h1_variant", "c1")}
    c, tf = constants_of(cfg, dconst), time_functions_of(cfg, dtf)
    try:
        rv = RD.build_reduction(case, tf, c, enforce=enforce, **kw)
    except (ConstraintUnsatisfiable, DegenerateTimeFunctions, ZeroWronskian) as e:
        return _report("verify-reduction", seed, [], EXIT_CONSTRAINT, error=str(e)), None
    grid = cfg.get("grid", {})
    center = tuple(cnum(z) for z in grid.get("center", dcenter))
    points = RD.complex_grid(center, grid.get("spread", 0.05), grid.get("n", 5))
    try:
        s0 = state_of(cfg, xi=rv.xi(center).value)
        rep = RD.verify_end_to_end(rv, s0, points, tol=cfg.get("tol", 1e-11))
    except (SingularLocus, SingularPoint) as e:
        return _report("verify-reduction", seed, [], EXIT_CONSTRAINT, error=str(e)), None
    except (StepSizeUnderflow, ToleranceNotMet) as e:
        return _report("verify-reduction", seed, [], EXIT_INTEGRATION, error=str(e)), None
    adm_cols = list(zip(*[r["admissibility"] for r in rep.per_point]))
    results = [_row("max PDE residual", rep.max_pde, pde_tol)]
    results += [_row(f"admissibility {i + 1}", max(col), adm_tol) for i, col in enumerate(adm_cols)]
    results.append(_row("branch warnings", rep.warnings, 0.5))
    code = EXIT_OK if all(r["passed"] for r in results) else EXIT_RESIDUAL
    rows = []
    for r in rep.per_point:
        row = {}
        for name, z in zip("xyt", r["point"]):
            row[f"{name}_re"], row[f"{name}_im"] = cpair(z)
        row["E1"], row["E2"] = float(r["E1"]), float(r["E2"])
        row.update({f"adm{i + 1}": float(a) for i, a in enumerate(r["admissibility"])})
        rows.append(row)
    data = {"case": case, "constraints": {k: cpair(v) for k, v in rv.constraints.items()},
            "n_points": rep.n_points, "max_drift": rep.max_drift, "points": rows}
    return _report("verify-reduction", seed, results, code, data), rows


def _map_target(m):
    t = m.target
    if isinstance(t, T.EllipticQuartic):
        return {"equation": "elliptic", "upp_coeff": cpair(t.upp_coeff), "coeffs": [cpair(z) for z in t.coeffs]}
    d = asdict(t)
    kind = d.pop("kind")
    return {"equation": kind, **{k: (cpair(v) if isinstance(v, complex) else v) for k, v in d.items()}}


def cmd_map(cfg):
    seed = cfg.get("seed", 0)
    try:
        case_id = int(cfg.get("case", 7))
    except ValueError:
        raise ConfigError("map needs an integer case 1..9") from None
    if case_id not in T.CASE_SYSTEM:
        raise ConfigError("map needs an integer case 1..9")
    opts = cfg.get("options", {})
    mkw = {"lam": cnum(opts.get("lam", 1.0)), "k0": cnum(opts.get("k0")), "branch": opts.get("branch", 0)}
    c = constants_of(cfg)
    sysc = T.CASE_SYSTEM[case_id]
    s0 = None
    if opts.get("pullback", False):
        s0 = state_of(cfg)
        if case_id == 3:
            s0.vpp = c.nu**2 * s0.up**2 - s0.vp / s0.xi - c.K5**2 / s0.xi**2
        if cfg.get("integrals_from_state", True):
            K2, K4 = R.first_integrals(sysc, c, s0)
            c = c.replace(K2=0 if case_id == 3 else K2, K4=K4)
    try:
        m = T.param_map(case_id, c, **mkw)
    except GuardViolation as e:
        return _report("map", seed, [], EXIT_CONSTRAINT, error=str(e)), None
    data = {"case": case_id, "system": sysc.value, "target": _map_target(m),
            "branches": {k: cpair(v) for k, v in m.branches.items()}}
    results = []
    if s0 is not None:
        path = path_of(cfg, s0.xi)
        try:
            tr = integrate(sysc, c, s0, path, tol=cfg.get("tol", 1e-11))
        except (StepSizeUnderflow, SingularPoint, ToleranceNotMet) as e:
            return _report("map", seed, [], EXIT_INTEGRATION, data, error=str(e)), None
        n = opts.get("samples", 20)
        states = [dense_eval(tr, s)[0] for s in np.linspace(0, path.length, n)]
        res = T.pullback_check(case_id, c, states, **mkw)
        tol = 1e-9 if case_id in (8, 9) else 1e-6
        results.append(_row("max pullback residual", max(res), tol, n=n, mean=float(np.mean(res))))
    code = EXIT_OK if all(r["passed"] for r in results) else EXIT_RESIDUAL
    return _report("map", seed, results, code, data), None


def cmd_suite(cfg):
    seed = cfg.get("seed", 0)
    opts = cfg.get("options", {})
    ids = opts.get("checks")
    if "case" in cfg:
        ids = [int(x) for x in str(cfg["case"]).split(",")]
    results = S.run_suite(seed, inject=opts.get("inject"), ids=ids)
    rows = [asdict(r) for r in results]
    failing = [r.id for r in results if not r.passed]
    code = EXIT_OK if not failing else SUITE_EXIT.get(failing[0], EXIT_RESIDUAL)
    return _report("suite", seed, rows, code), None


HANDLERS = {"fuchs": cmd_fuchs, "integrate": cmd_integrate, "verify-reduction": cmd_verify_reduction,
            "map": cmd_map, "suite": cmd_suite}


# ---------------------------------------------------------------------------


def _csv_text(rows):
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _summary(rep):
    worst = [f"{r['name']}={r['value']:.3e} (tol {r['tol']:.0e})" for r in rep["results"]]
    status = "PASS" if rep["passed"] else "FAIL"
    tail = f"; error: {rep['error']}" if "error" in rep else ""
    return f"{rep['command']}: {status} exit={rep['exit_code']}; " + "; ".join(worst) + tail


def build_parser():
    p = argparse.ArgumentParser(prog="sg2dlab", description="Verification suites for the coupled sine-Gordon reductions.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="write the report (or trajectory CSV) here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--case", default=None, help="case tag (reduced system, reduction, map case id, or suite check ids)")
    p.add_argument("--inject", type=int, default=None, help="suite: perturb one check (fault injection)")
    p.add_argument("--timestamp", action="store_true", help="add a timestamp field to the report")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "tol": args.tol, "case": args.case, "format": args.format}
    try:
        cfg = load_config(args.config, overrides)
        if args.inject is not None:
            cfg.setdefault("options", {})["inject"] = args.inject
            validate_config(cfg)
        cfg.setdefault("seed", 0)
        rep, rows = HANDLERS[args.command](cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.timestamp:
        rep["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    jsonschema.validate(rep, load_schema("report.schema.json"))
    fmt = cfg.get("format", "json")
    if fmt == "csv":
        text = _csv_text(rows if rows is not None else rep["results"])
    else:
        text = json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(_summary(rep))
    else:
        sys.stdout.write(text)
        print(_summary(rep), file=sys.stderr)
    return rep["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
