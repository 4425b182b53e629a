"""Exact replay of the two three-orbit scenarios that cannot occur.

For each k-vector case the mean index identity would need the sum of
chi-hat / mean index to reach 1/2, but the attainable supremum stays below.
"""

from fractions import Fraction

from convexchar import morse_ledger as ml


def main():
    for label in ml.SCENARIOS:
        rep = ml.scenario_check(label)
        print(f"{label}: forced index pair {rep.forced_pair}, supremum {rep.supremum} "
              f"= {float(rep.supremum):.6f} < 1/2: {rep.supremum < Fraction(1, 2)}, "
              f"verdict {'infeasible' if rep.infeasible else 'feasible'}")


if __name__ == "__main__":
    main()
