"""Finite-section convergence table for every diagonal model in the corpus.

One row per (model, check): the value at each size, the worst deviation and
the pass flag. ``--csv`` writes the same rows to a file.

    python scripts/convergence_table.py --conjugate --seed 3 --csv table.csv
"""
import argparse
import csv

from amop import corpus
from amop.classify import classify_am
from amop.core import DiagonalModel
from amop.specfile import load_spec
from amop.truncation import TruncationPlan, run_suite


def rows(plan: TruncationPlan):
    for path in corpus.spec_paths():
        model = load_spec(path)
        if not isinstance(model, DiagonalModel):
            continue
        verdict = classify_am(model).verdict.value
        for rec in run_suite(model, plan):
            yield {
                "model": path.stem,
                "verdict": verdict,
                "check": rec.check_id,
                **{f"n={n}": f"{v:.6g}" for n, v in zip(rec.sizes, rec.values)},
                "max_dev": f"{max(rec.deviations):.2e}",
                "passed": rec.passed,
            }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,16,32,64")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--conjugate", action="store_true")
    parser.add_argument("--csv")
    args = parser.parse_args()
    plan = TruncationPlan(tuple(int(s) for s in args.sizes.split(",")), args.seed, args.conjugate)
    table = list(rows(plan))
    cols = list(table[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in table)) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in table:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in cols))
    failed = sum(not r["passed"] for r in table)
    print(f"\n{len(table)} rows, {failed} failing")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows(table)


if __name__ == "__main__":
    main()
