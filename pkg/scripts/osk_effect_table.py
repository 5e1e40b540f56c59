#!/usr/bin/env python3
"""Eve's optimal data-bit error with and without OSK over an (M, alpha) grid."""

import argparse
import csv
import sys

from y00lab.attacks import eve_data_error
from y00lab.protocol import ProtocolParams, bob_ber_analytic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64, 128, 256])
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0, 3.0])
    ap.add_argument("-o", "--out", default="-", help="CSV path, '-' for stdout")
    args = ap.parse_args()

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["M", "alpha", "bob_helstrom", "eve_error_osk_off", "eve_error_osk_on", "gap_to_half"])
    for M in args.m:
        for a in args.alpha:
            off = eve_data_error(ProtocolParams(M=M, alpha_mag=a))
            on = eve_data_error(ProtocolParams(M=M, alpha_mag=a, osk_enabled=True))
            w.writerow([M, a, f"{bob_ber_analytic(a, 'helstrom'):.6g}", f"{off:.8f}", f"{on:.8f}", f"{0.5 - off:.3e}"])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
