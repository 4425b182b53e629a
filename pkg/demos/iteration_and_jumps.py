"""Iterated indices, minimal periods, and a common index jump certificate."""

import math
from fractions import Fraction

from convexchar import iter_engine as ie

S2, S3 = math.sqrt(2) - 1, math.sqrt(3) - 1


def show(name, p, m_max=8):
    rows = ie.iterate_many(p, m_max)
    print(f"{name}: K = {ie.minimal_period_K(p)}, mean index {ie.mean_index(p).value}")
    print("  m      " + " ".join(f"{r.m:4d}" for r in rows))
    print("  i(y,m) " + " ".join(f"{r.i_maslov:4d}" for r in rows))
    print("  nu     " + " ".join(f"{r.nu:4d}" for r in rows))


def main():
    show("rotation 3/7 with an irrational rotation", ie.r_profile(5, [S2, Fraction(3, 7)]))
    show("N1(-1,1) with an irrational rotation", ie.case3_profile(3, S2))
    show("N1(1,1) with two N1(1,-1)", ie.double_profile(3))

    profiles = [ie.r_profile(3, [S2 / 2], [2.0]), ie.r_profile(3, [S3 / 2], [2.0])]
    cert = ie.common_jump_search(profiles, 10**5)
    print(f"common jump: T = {cert.T}, iterates {list(cert.m_list)}, "
          f"re-verified: {ie.verify_certificate(profiles, cert)}")


if __name__ == "__main__":
    main()
