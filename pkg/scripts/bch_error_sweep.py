#!/usr/bin/env python3
"""Sweep BCH truncation error against exact log-products for the reference pair.

Prints the error table and the fitted convergence order for each
truncation; order k should converge like t^(k+1).
"""

import argparse

import numpy as np

from liemarkov import frobenius, log_product
from liemarkov.closure import bch_truncated
from liemarkov.zoo import reference_pair


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=6, help="number of halvings of t=1/2")
    args = parser.parse_args()

    q1, q2 = reference_pair()
    ts = [2.0 ** -k for k in range(1, args.steps + 1)]
    print(f"{'t':<10} {'order 1':>12} {'order 2':>12} {'order 3':>12}")
    errors = {1: [], 2: [], 3: []}
    for t in ts:
        exact = log_product(t * q1, t * q2)
        row = [t]
        for order in (1, 2, 3):
            err = frobenius(exact - bch_truncated(t * q1, t * q2, order))
            errors[order].append(err)
            row.append(err)
        print(f"{row[0]:<10.6g} {row[1]:>12.4e} {row[2]:>12.4e} {row[3]:>12.4e}")
    slopes = [
        float(np.polyfit(np.log2(ts), np.log2(errors[order]), 1)[0])
        for order in (1, 2, 3)
    ]
    print(f"{'slopes':<10} {slopes[0]:>12.3f} {slopes[1]:>12.3f} {slopes[2]:>12.3f}")


if __name__ == "__main__":
    main()
