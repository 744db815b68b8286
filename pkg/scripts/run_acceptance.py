"""Run the acceptance suite and print one line per criterion.

    python scripts/run_acceptance.py --seed 0 --out suite.json
"""
import argparse
import json
import sys

from sg2dlab import cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="suite_report.json")
    p.add_argument("--inject", type=int, default=None, help="perturb one check to confirm it can fail")
    args = p.parse_args(argv)
    extra = ["--inject", str(args.inject)] if args.inject is not None else []
    code = cli.main(["suite", "--seed", str(args.seed), "--out", args.out] + extra)
    with open(args.out) as fh:
        rep = json.load(fh)
    for r in rep["results"]:
        print(f"criterion {r['id']:2d} {'PASS' if r['passed'] else 'FAIL'}  {r['name']}: "
              f"{r['value']:.3e} (tol {r['tol']:.0e}, n={r['n']})")
    return code


if __name__ == "__main__":
    sys.exit(main())
