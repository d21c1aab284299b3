"""Diagonal operator diag(n) with and without an infinite-dimensional kernel.

Prints the AM verdicts, the essential spectra of T and of its bounded
transform, and the minimum modulus of the finite sections for both models.

    python scripts/counterexample_demo.py [--sizes 4,8,16,32,64]
"""
import argparse

import numpy as np

from amop.calculus import bounded_transform, minimum_modulus
from amop.classify import classify_am, equivalence_chain_check, spectrum_report
from amop.core import INFINITE, DiagonalModel
from amop.truncation import materialize


def describe(model: DiagonalModel, sizes) -> None:
    report = classify_am(model)
    z = bounded_transform(model)
    print(f"== {model.describe()}")
    print(f"verdict {report.verdict.value} via {report.route} route")
    for clause in report.clauses:
        print(f"  {clause.name}: {clause.holds} ({clause.evidence})")
    print(f"ess spectrum of T:   {spectrum_report(model).essential}")
    print(f"ess spectrum of Z_T: {spectrum_report(z).essential}")
    chain = equivalence_chain_check(model)
    print("chain:", ", ".join(f"{k}={v.value}" for k, v in chain.verdicts.items()),
          "(consistent)" if chain.consistent else "(INCONSISTENT)")
    print(f"{'n':>4} {'m(T_n)':>10} {'m(Z_n)':>10} {'||Z_n||':>10}")
    for n in sizes:
        tn = materialize(model, n)
        zn = bounded_transform(tn)
        print(f"{n:>4} {minimum_modulus(tn):>10.4g} {minimum_modulus(zn):>10.4g} "
              f"{np.linalg.norm(zn.entries, 2):>10.6f}")
    print()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,16,32,64")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    describe(DiagonalModel.from_formula("n", name="diag(n)"), sizes)
    describe(DiagonalModel.from_formula("n", null_dim=INFINITE, name="0 + diag(n)"), sizes)


if __name__ == "__main__":
    main()
