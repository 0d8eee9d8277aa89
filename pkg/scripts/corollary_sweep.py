"""Cascade cheat values for every dyadic z with up to n bits, plus the smallest
envelope constant C with eps' <= 2 eps + C eps^2 on the grid."""
import argparse
import sys

from wcfbox.cli import UNBAL_FIELDS, dump_csv, sweep_unbalanced, write_atomic
from wcfbox.fractions_io import fmt
from wcfbox.unbalanced import required_margin


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=6)
    ap.add_argument("--eps", default="0,1/100,1/20,1/10")
    ap.add_argument("-o", "--output")
    a = ap.parse_args(argv)
    rows = sweep_unbalanced(a.max_n, a.eps)
    write_atomic(a.output, dump_csv(UNBAL_FIELDS, rows))
    need = required_margin(a.max_n, a.eps.split(","))
    print(f"required envelope constant: {fmt(need)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
