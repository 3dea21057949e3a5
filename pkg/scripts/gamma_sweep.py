"""Sweep the corner power across the admissible range and report the verdict for each."""
import argparse
from dataclasses import replace

import numpy as np

from fkdv.diagnostics import gamma_range, run_propagation_experiment
from fkdv.experiment_io import flagship_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=4)
    args = ap.parse_args()
    base = flagship_config()
    lo, hi = gamma_range(base.ladder_m, base.alpha)
    for gamma in np.linspace(lo, hi, args.count + 1)[1:]:
        cfg = replace(base, initial_profile=replace(base.initial_profile, gamma=float(gamma)))
        res = run_propagation_experiment(cfg)
        checks = " ".join(f"{c.name}={'-' if c.passed is None else int(c.passed)}" for c in res.verdict.checks)
        print(f"gamma={gamma:.3f} est=H^{res.regularity_estimate:.2f} {checks}")


if __name__ == "__main__":
    main()
