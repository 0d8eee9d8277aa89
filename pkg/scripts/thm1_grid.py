"""Glued-simulator masses and the brute-force optimality check over a (z, eps) grid.

    python3 scripts/thm1_grid.py --z 1/4,1/3,1/2 --eps 0,z/2 -o thm1.csv
"""
import argparse
import sys

from wcfbox.cli import THM1_FIELDS, dump_csv, sweep_thm1, write_atomic


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--z", default="1/4,1/3,1/2")
    ap.add_argument("--eps", default="0,z/4,z/2")
    ap.add_argument("--convention", choices=["literal", "mirror"], default="literal")
    ap.add_argument("-o", "--output")
    a = ap.parse_args(argv)
    rows = sweep_thm1(a.z, a.eps, brute=True, convention=a.convention)
    write_atomic(a.output, dump_csv(THM1_FIELDS, rows))
    return 0 if all(r["status"] == "ok" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
