"""Run the one-sided corner experiment and print the verdict and energy summary.

    python scripts/run_flagship.py [--n 4096] [--gamma 1.3] [-o results/flagship]
"""
import argparse
import math
from dataclasses import replace

from fkdv.diagnostics import OneSidedProfile, run_propagation_experiment
from fkdv.experiment_io import flagship_config, write_experiment
from fkdv.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--half-length", type=float, default=40 * math.pi)
    ap.add_argument("--gamma", type=float, default=1.3)
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("-o", "--output", default="results/flagship")
    args = ap.parse_args()

    base = flagship_config()
    cfg = replace(base, grid=Grid(args.n, args.half_length),
                  initial_profile=replace(base.initial_profile, gamma=args.gamma, amplitude=args.amplitude))
    res = run_propagation_experiment(cfg)
    write_experiment(res, cfg, args.output)
    if res.regularity_estimate is not None:
        print(f"estimated data regularity: H^{res.regularity_estimate:.3f} (s_alpha = {cfg.s_alpha:g})")
    print(f"{'diagnostic':<28}{'E(0)':>12}{'sup E':>12}{'smoothing':>12}")
    for r in res.records:
        print(f"{r.label:<28}{r.initial_energy:12.4g}{r.sup_energy:12.4g}{r.smoothing_accum:12.4g}")
    for c in res.verdict.checks:
        tag = "n/a " if c.passed is None else ("PASS" if c.passed else "FAIL")
        print(f"{tag}  {c.name}: {c.detail}")
    print("verdict:", "PASS" if res.verdict.passed else "FAIL")


if __name__ == "__main__":
    main()
