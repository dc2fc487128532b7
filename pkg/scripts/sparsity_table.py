"""Print mask sparsity for every tabulated code.

Usage: python3 scripts/sparsity_table.py [--csv out.csv]
"""

import argparse
import csv
import sys

from dmecct import codes
from dmecct.mask import code_mask, sparsity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", help="also write the table as CSV")
    args = ap.parse_args()
    rows = []
    for name in codes.BENCHMARK_CODES:
        code = codes.get_code(name)
        kinds = ["conventional", "systematic"] + (["modified"] if code.h_mod is not None else [])
        row = {"code": name, "size": code.seq_len}
        for kind in kinds:
            row[kind] = round(100 * sparsity(code_mask(code, kind)[0]), 2)
        rows.append(row)
    print(f"{'code':<13}{'2n-k':>6}{'conv %':>9}{'sys %':>8}{'mod %':>8}")
    for r in rows:
        mod = f"{r['modified']:8.2f}" if "modified" in r else f"{'-':>8}"
        print(f"{r['code']:<13}{r['size']:>6}{r['conventional']:9.2f}{r['systematic']:8.2f}{mod}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["code", "size", "conventional", "systematic", "modified"])
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
