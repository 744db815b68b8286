"""Drift of K2, K4 against the integrator tolerance for the four reduced systems.

    python scripts/conservation_sweep.py --states 5 --tols 1e-6 1e-8 1e-10
"""
import argparse
import cmath

import numpy as np

from sg2dlab import reduced as R
from sg2dlab.integrator import ComplexPath, integrate

XI0 = {R.ReducedCase.TRI: 0.6 + 0.4j, R.ReducedCase.RAT: 0.7 + 0.3j, R.ReducedCase.EXP: 0.3 + 0.2j,
       R.ReducedCase.ZER: 0.2 - 0.1j}


def cz(rng, scale):
    return complex(*rng.normal(size=2)) * scale


def sweep(n_states, tols, seed):
    rows = []
    for case in R.ReducedCase:
        rng = np.random.default_rng([seed, len(case.value)])
        runs = []
        for _ in range(n_states):
            c = R.ReducedConstants(nu=1 + cz(rng, 0.3), k=1 + cz(rng, 0.2), K5=cz(rng, 0.5), K6=cz(rng, 0.5),
                                   K7=cz(rng, 0.5))
            s0 = R.ReducedState(XI0[case], *(cz(rng, 0.5) for _ in range(4)))
            runs.append((c, s0, ComplexPath((s0.xi, s0.xi + cmath.exp(1j * rng.uniform(0, 2 * np.pi))))))
        for tol in tols:
            drift = [max(integrate(case, c, s0, path, tol=tol).max_drift) for c, s0, path in runs]
            rows.append((case.value, tol, max(drift), float(np.median(drift))))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--states", type=int, default=5)
    p.add_argument("--tols", type=float, nargs="+", default=[1e-6, 1e-8, 1e-10, 1e-12])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    print(f"{'case':5s} {'tol':>8s} {'max drift':>11s} {'median':>11s}")
    for case, tol, worst, med in sweep(args.states, args.tols, args.seed):
        print(f"{case:5s} {tol:8.0e} {worst:11.3e} {med:11.3e}")


if __name__ == "__main__":
    main()
