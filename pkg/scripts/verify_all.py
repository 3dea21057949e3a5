"""Run the operator and weight batteries and summarize pass/fail counts by group."""
import argparse
from collections import Counter

from fkdv.verification import operator_suite, weight_suite


def summarize(title, checks):
    groups = Counter()
    fails = Counter()
    for c in checks:
        key = c.name.split(" ", 2)[-1].split(":")[0] if c.name.startswith("eps=") else c.name.split(" ")[0]
        groups[key] += 1
        fails[key] += c.passed is False
    print(title)
    for key in groups:
        print(f"  {key:<28} {groups[key] - fails[key]:>4}/{groups[key]:<4} {'FAIL' if fails[key] else 'ok'}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    summarize("operators", operator_suite(quick=args.quick))
    summarize("weights", weight_suite()[1])


if __name__ == "__main__":
    main()
