"""Acceptance criteria 1-11: one PASS/FAIL line per criterion."""
import json

from sg2dlab import cli

SEED = 0


def run_suite_bytes(tmp_path, tag):
    out = tmp_path / f"suite_{tag}.json"
    code = cli.main(["suite", "--seed", str(SEED), "--out", str(out)])
    return code, out.read_bytes()


def test_acceptance(tmp_path, capsys):
    code_a, first = run_suite_bytes(tmp_path, "a")
    code_b, second = run_suite_bytes(tmp_path, "b")
    rep = json.loads(first)
    status = {r["id"]: (r["passed"], r["name"], r["value"], r["tol"]) for r in rep["results"]}
    same = first == second
    ok11, name11, _, _ = status[11]
    status[11] = (ok11 and same, name11 + " (full report, two runs)", 0.0 if same else 1.0, 0.5)
    lines = []
    for cid in range(1, 12):
        passed, name, value, tol = status[cid]
        lines.append(f"criterion {cid:2d} {'PASS' if passed else 'FAIL'}  {name}: {value:.3e} (tol {tol:.0e})")
    with capsys.disabled():
        print()
        print("\n".join(lines))
    assert code_a == code_b == 0
    assert all(s[0] for s in status.values())
