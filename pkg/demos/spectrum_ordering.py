"""Which power profiles are easy to quantize, and a sharp edge case.

Profiles closer to balanced quantize better: along the built-in family the
loss drops monotonically as weight moves off the dominant mode.  The
ordering is guaranteed only while the dominant mode stays dominant; the
final pair shows a transfer that dethrones it and reverses the comparison.
"""

from __future__ import annotations

import argparse

import numpy as np

from rvqlab.loss import delta1_quadrature
from rvqlab.ordering import majorize_compare, schur_family, verify_schur


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bits", type=int, default=4)
    args = parser.parse_args(argv)

    fam = schur_family()
    print(f"family of {len(fam)} four-mode profiles, most spread first:")
    for idx in (0, 37, 74, 111, len(fam) - 1):
        lam = fam[idx]
        loss = delta1_quadrature(lam, args.bits).value
        body = ", ".join(f"{v:.4f}" for v in lam)
        print(f"  [{body}]  loss = {loss:.6f}")
    rep = verify_schur(fam, lambda p: delta1_quadrature(p, args.bits).value)
    print(f"monotone along the whole chain: {rep.monotone}"
          f" (worst violation {rep.max_violation:.1e})")
    print()

    # moving weight from the top to the bottom can hand the crown to the
    # second mode; the profiles below are ordered by majorization yet the
    # more spread one has the smaller loss
    spread = np.array([0.34250, 0.33189, 0.20383, 0.12178])
    balanced = np.array([0.33189, 0.24398, 0.22030, 0.20383])
    side = majorize_compare(spread, balanced)
    la = delta1_quadrature(spread, args.bits).value
    lb = delta1_quadrature(balanced, args.bits).value
    print("a dethroning transfer breaks the ordering:")
    print(f"  spread   {spread}  loss = {la:.6f}")
    print(f"  balanced {balanced}  loss = {lb:.6f}")
    print(f"  majorize_compare says {side:+d}, yet the spread profile loses less")


if __name__ == "__main__":
    main()
