"""Flat worked example: run the construction for a few slopes and print the checks."""
import argparse
from pathlib import Path

from isoembed.pipeline import write_outputs
from isoembed.verify import worked_example


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--epsilon", type=float, nargs="+", default=[0.25, 0.5, 0.7, 0.8])
    p.add_argument("--out", help="write artifacts for each completed slope under this directory")
    args = p.parse_args()
    for eps in args.epsilon:
        rep = worked_example(eps)
        print(f"epsilon = {eps}")
        if not rep.completed:
            print(f"  not completed: {rep.failure}")
            continue
        for c in rep.checks:
            print(f"  {'ok  ' if c.passed else 'FAIL'} {c.name:16s} {c.value!r:>24} expected {c.expected!r}")
        if args.out:
            write_outputs(rep.artifacts, Path(args.out) / f"eps_{eps:g}")


if __name__ == "__main__":
    main()
