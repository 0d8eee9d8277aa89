"""Relay two instances of each toy protocol and compare the attacked coin with a single run."""
import argparse
import json
import sys

from wcfbox.attacks import (ETA_A_OUT, T_A, build_mu, conditional_violation,
                            honest_mu_distribution, message_interleaving, mitm_attack, mitm_system)
from wcfbox.fractions_io import fmt
from wcfbox.protocols import comb_toy, quantum_comb_toy, trivial_announce


def report(p):
    m = build_mu(p)
    attacked, single = mitm_attack(m)
    honest = honest_mu_distribution(m).marginal([f"{ETA_A_OUT}@{T_A}"])
    s = mitm_system(m)
    return {"protocol": p.name, "z": fmt(p.params.z),
            "attacked_p1": str(attacked[(1,)]), "single_p1": str(single[(1,)]),
            "honest_mu_p1": str(honest[(1,)]),
            "conditional_honest": fmt(conditional_violation(m)),
            "conditional_attacked": fmt(conditional_violation(m, s)),
            "interleaving": message_interleaving(s)}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--z", default="1/2")
    a = ap.parse_args(argv)
    out = [report(f(a.z)) for f in (trivial_announce, comb_toy)]
    out.append(report(quantum_comb_toy("9/25" if a.z == "1/2" else a.z)))
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
