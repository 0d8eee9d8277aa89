"""Command-line front end: every analysis with JSON / CSV / DOT output."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotDyadic, ParamRange, WcfError
from .fractions_io import fmt, parse_fraction, to_decimal

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class Mismatch(Exception):
    """A computed value disagrees with its reference value."""

    def __init__(self, what: str, expected, actual):
        super().__init__(f"{what}: expected {fmt(expected)}, got {fmt(actual)}")


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    seed: int = 0
    threads: int = 1
    output: str | None = None
    format: str = "json"
    params: dict = field(default_factory=dict)


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw in (None, ""):
        return default
    try:
        return int(raw)
    except ValueError:
        raise ParamRange(f"{name} must be an integer, got {raw!r}")


def write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def dump_csv(fields, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in fields})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, Fraction):
        return str(v)
    return "" if v is None else v


def _frac(text, what="value"):
    try:
        return parse_fraction(text)
    except ValueError as e:
        raise ParamRange(f"{what}: {e}")


def _emit(cfg: RunConfig, obj: dict, csv_fields=None, csv_rows=None, dot=None) -> None:
    if cfg.format == "csv":
        if csv_fields is None:
            raise ParamRange(f"{cfg.command} has no CSV output")
        write_atomic(cfg.output, dump_csv(csv_fields, csv_rows))
    elif cfg.format == "dot":
        if dot is None:
            raise ParamRange(f"{cfg.command} has no DOT output")
        write_atomic(cfg.output, dot)
    else:
        write_atomic(cfg.output, dump_json(obj))


def _toy(name: str, z, eps=None):
    from .protocols import TOYS
    if name not in TOYS:
        raise ParamRange(f"unknown toy {name!r}; choose from {sorted(TOYS)}")
    if name == "cheat_capped":
        return TOYS[name](z, eps if eps is not None else 0)
    return TOYS[name](z)


# ------------------------------------------------------------------ commands

def cmd_poset(cfg: RunConfig) -> int:
    from .poset import Poset, hasse_export
    a = cfg.args
    if a.file:
        with open(a.file) as fh:
            p = Poset.from_dict(json.load(fh))
    else:
        elements = [e for e in (a.elements or "").split(",") if e]
        rel = []
        for r in filter(None, (a.relations or "").split(",")):
            lo, sep, hi = r.partition("<")
            if not sep:
                raise ParamRange(f"relation must look like a<b, got {r!r}")
            rel.append((lo.strip(), hi.strip()))
        p = Poset(elements, rel)
    obj = p.to_dict()
    obj["topological_order"] = list(p.topological_order())
    obj["maximal"] = sorted(p.maximal())
    obj["minimal"] = sorted(p.minimal())
    if a.cuts:
        obj["cuts"] = [sorted(p.labels(m)) for m in p.cut_masks()]
    _emit(cfg, obj, dot=hasse_export(p))
    return EXIT_OK


def cmd_engine(cfg: RunConfig) -> int:
    from .engine import run_exact, sample
    from .serialize import load_system
    a = cfg.args
    s = load_system(a.system)
    ext = {}
    for item in filter(None, (a.inputs or "").split(",")):
        k, _, v = item.partition("=")
        w, _, t = k.rpartition("@")
        ext[(w, t)] = int(v)
    d = run_exact(s, external_inputs=ext or None)
    obj = {"distribution": d.to_json()}
    if a.samples:
        from .engine import sample_many
        counts = sample_many(s, a.samples, cfg.seed, ext or None)
        obj["samples"] = {"seed": cfg.seed, "n": a.samples,
                          "counts": [{"outcome": list(k), "count": v} for k, v in sorted(counts.items())]}
    rows = [{"outcome": " ".join(map(str, r["outcome"])), "p": r["p"],
             "p_decimal": to_decimal(parse_fraction(r["p"])) if "/" in r["p"] or r["p"].isdigit() else r["p"]}
            for r in obj["distribution"]["probs"]]
    _emit(cfg, obj, ["outcome", "p", "p_decimal"], rows)
    return EXIT_OK


def cmd_standalone(cfg: RunConfig) -> int:
    from .serialize import load_protocol
    from .wcf import verify_standalone
    a = cfg.args
    if a.protocol:
        p = load_protocol(a.protocol)
    else:
        p = _toy(a.toy, a.z, a.eps)
    r = verify_standalone(p, threads=cfg.threads)
    _emit(cfg, r.to_json(), r.CSV_FIELDS, [r.csv_row()])
    return EXIT_OK


def cmd_resource(cfg: RunConfig) -> int:
    from .resources import fully_expressing_audit, make_triple
    from .serialize import system_to_dict
    from .engine import SystemGraph
    a = cfg.args
    t = make_triple(a.z, a.eps, a.convention)
    if a.action == "make":
        obj = {"z": fmt(t.params.z), "eps": fmt(t.params.eps), "convention": t.convention,
               "S": system_to_dict(SystemGraph([t.S])),
               "S_A": system_to_dict(SystemGraph([t.S_A])),
               "S_B": system_to_dict(SystemGraph([t.S_B]))}
        _emit(cfg, obj)
        return EXIT_OK
    r = fully_expressing_audit(t.S, t.S_A, t.S_B, t.params, threads=cfg.threads)
    obj = r.to_json()
    fields = ["z", "eps", "max_cB0", "cap_alice", "max_cA1", "cap_bob", "cond1_ok",
              "cond2_ok", "cond3_ok", "ok"]
    _emit(cfg, obj, fields, [obj])
    if a.strict and not r.ok:
        raise Mismatch("fully-expressing caps", t.params.cap_alice, r.max_cb0)
    return EXIT_OK


THM1_FIELDS = ["z", "eps", "status", "mass00", "mass11", "discordant", "delta_lower",
               "delta_lower_decimal", "tv_to_S", "max_agreement", "bound", "sigma_attains", "matches"]


def _thm1_row(z, eps, brute: bool, convention: str) -> dict:
    from .attacks import thm1_demo, thm1_optimality
    r = thm1_demo(z, eps, convention)
    j = r.to_json()
    row = {k: j[k] for k in ("z", "eps", "mass00", "mass11", "discordant", "delta_lower",
                              "tv_to_S", "matches")}
    row["delta_lower_decimal"] = to_decimal(r.delta_lower)
    row["status"] = "ok" if r.matches else "mismatch"
    obj = {"thm1": j}
    if brute:
        o = thm1_optimality(z, eps, convention)
        obj["optimality"] = o.to_json()
        row.update(max_agreement=fmt(o.max_agreement), bound=fmt(o.bound),
                   sigma_attains=o.sigma_attains)
        if o.max_agreement != o.bound:
            row["status"] = "mismatch"
    return row, obj, r


def cmd_attack(cfg: RunConfig) -> int:
    a = cfg.args
    if a.kind == "thm1":
        row, obj, r = _thm1_row(a.z, a.eps, a.brute, a.convention)
        _emit(cfg, obj, THM1_FIELDS, [row])
        for k in ("mass00", "mass11", "discordant", "delta_lower"):
            want = r.expected[k]
            got = getattr(r, k)
            if got != want:
                raise Mismatch(k, want, got)
        if a.brute and obj["optimality"]["max_agreement"] != obj["optimality"]["bound"]:
            raise Mismatch("max agreement", parse_fraction(obj["optimality"]["bound"]),
                           parse_fraction(obj["optimality"]["max_agreement"]))
        return EXIT_OK
    from .attacks import (build_mu, conditional_violation, honest_mu_distribution,
                          message_interleaving, mitm_attack, mitm_system)
    from .serialize import load_protocol
    p = load_protocol(a.instance) if a.instance else _toy(a.toy, a.z)
    m = build_mu(p)
    try:
        attacked, single = mitm_attack(m)
        equal = True
    except AssertionError:
        s = mitm_system(m)
        from .engine import run_exact
        from .attacks import ETA_A_OUT, T_A
        attacked = run_exact(s).marginal([f"{ETA_A_OUT}@{T_A}"])
        single = run_exact(p.system()).marginal([f"{p.coin_a[0]}@{p.coin_a[1]}"])
        equal = False
    honest = honest_mu_distribution(m)
    s = mitm_system(m)
    obj = {"protocol": p.name, "attacked_cA": attacked.to_json(), "single_cA": single.to_json(),
           "equal": equal, "honest_mu": honest.to_json(),
           "interleaving": message_interleaving(s),
           "conditional_honest": _f(conditional_violation(m)),
           "conditional_attacked": _f(conditional_violation(m, s))}
    row = {"protocol": p.name, "equal": equal,
           "attacked_p1": fmt(attacked[(1,)]), "single_p1": fmt(single[(1,)]),
           "honest_mu_p1": fmt(honest.marginal([honest.labels[0]])[(1,)])}
    _emit(cfg, obj, list(row), [row])
    if not equal:
        raise Mismatch("attacked c''_A law", single[(1,)], attacked[(1,)])
    return EXIT_OK


def _f(x):
    return None if x is None else fmt(x)


UNBAL_FIELDS = ["bits", "status", "z", "eps", "eps_prime_alice", "eps_prime_bob", "eps_prime",
                "eps_prime_decimal", "formula_alice", "formula_bob", "formula_bob_printed",
                "ratio", "envelope", "within_envelope", "formulas_match"]


def _unbalanced_row(bits: str, eps, mode: str) -> dict:
    from .unbalanced import (DyadicProb, alice_bound_formula, bob_bound_formula,
                             bob_bound_printed, corollary_check)
    d = DyadicProb(bits)
    e = _frac(eps, "eps")
    if mode == "formula":
        fa, fb = alice_bound_formula(d, e), bob_bound_formula(d, e)
        ea, eb = fa - d.value, fb - (1 - d.value)
        row = {"bits": bits, "z": fmt(d.value), "eps": fmt(e), "eps_prime_alice": fmt(ea),
               "eps_prime_bob": fmt(eb), "eps_prime": fmt(max(ea, eb)),
               "eps_prime_decimal": to_decimal(max(ea, eb)),
               "formula_alice": fmt(fa), "formula_bob": fmt(fb),
               "formula_bob_printed": fmt(bob_bound_printed(d, e)), "status": "ok"}
        return row
    r = corollary_check(d, e)
    row = r.to_json()
    row["eps_prime_decimal"] = to_decimal(r.eps_prime)
    row["status"] = "ok" if (mode == "dp" or r.formulas_match) else "mismatch"
    return row


def cmd_unbalanced(cfg: RunConfig) -> int:
    a = cfg.args
    row = _unbalanced_row(a.z_bits, a.eps, a.mode)
    _emit(cfg, row, UNBAL_FIELDS, [row])
    if row["status"] == "mismatch":
        raise Mismatch(f"closed form vs DP for bits {a.z_bits}",
                       parse_fraction(row["formula_bob"]), parse_fraction(row["formula_alice"]))
    return EXIT_OK


def _parse_partition(text: str):
    from .global_security import Partition
    blocks = text.split("|")
    if len(blocks) != 3:
        raise ParamRange("partition must look like 'a,b|c|d'")
    return Partition(*[frozenset(x for x in b.split(",") if x) for b in blocks])


def cmd_global(cfg: RunConfig) -> int:
    from .global_security import (find_partition, fixed_conditional_audit, partition_check,
                                  theorem4_demo)
    a = cfg.args
    if a.demo:
        from .protocols import cheat_capped, comb_toy
        if a.demo == "sequential":
            pi = cheat_capped(a.z, a.eps)
        else:
            pi = comb_toy(a.z)
        r = theorem4_demo(pi, mode=a.demo)
        obj = r.to_json()
        _emit(cfg, obj)
        if not r.consistent_with_theorem:
            raise Mismatch("partition implies conditional caps", 0, 1)
        return EXIT_OK
    if not a.system:
        raise ParamRange("global-check needs --system or --demo")
    from .serialize import load_system
    from .boxes import parse_slot
    from .wcf import WcfParams
    s = load_system(a.system)

    def positions(wires):
        return {t for w in filter(None, (wires or "").split(",")) for t in s.wire(w).positions}

    pi_pos, eta_pos = positions(a.pi_wires), positions(a.eta_wires)
    if a.partition:
        part = _parse_partition(a.partition)
        holds = partition_check(s.poset, part, pi_pos, eta_pos)
    else:
        part = find_partition(s.poset, pi_pos, eta_pos)
        holds = part is not None
    obj = {"partition": part.to_json() if part else None, "partition_holds": holds}
    if a.coin_a or a.coin_b:
        par = WcfParams(a.z, a.eps)
        ks = lambda t: [parse_slot(x) for x in filter(None, (t or "").split(","))]
        audit = fixed_conditional_audit(
            "system", s, par, parse_slot(a.coin_a) if a.coin_a else None, ks(a.k_alice),
            parse_slot(a.coin_b) if a.coin_b else None, ks(a.k_bob))
        obj["audit"] = audit.to_json()
    _emit(cfg, obj)
    return EXIT_OK


def _grid(text: str, z=None):
    """Comma list of fractions; entries like 'z/2' are relative to z."""
    out = []
    for item in filter(None, (x.strip() for x in (text or "").split(","))):
        if item.startswith("z"):
            if z is None:
                raise ParamRange(f"relative entry {item!r} needs a z")
            rest = item[1:]
            if not rest:
                out.append(z)
            elif rest.startswith("/"):
                out.append(z / _frac(rest[1:]))
            elif rest.startswith("*"):
                out.append(z * _frac(rest[1:]))
            else:
                raise ParamRange(f"bad relative entry {item!r}")
        else:
            out.append(_frac(item))
    return out


def sweep_thm1(zs: str, epss: str, brute: bool = False, convention: str = "literal") -> list:
    rows = []
    for z in _grid(zs):
        for e in _grid(epss, z):
            try:
                row, _, _ = _thm1_row(z, e, brute, convention)
            except (WcfError, ValueError) as exc:
                row = {"z": fmt(z), "eps": fmt(e), "status": f"error: {exc}"}
            rows.append(row)
    return rows


def sweep_unbalanced(max_n: int, epss: str, mode: str = "both") -> list:
    from .unbalanced import all_bit_strings
    rows = []
    for bits in all_bit_strings(max_n):
        for e in _grid(epss):
            try:
                row = _unbalanced_row(bits, e, mode)
            except (WcfError, ValueError) as exc:
                row = {"bits": bits, "eps": fmt(e), "status": f"error: {exc}"}
            rows.append(row)
    return rows


def cmd_sweep(cfg: RunConfig) -> int:
    a = cfg.args
    if a.kind == "thm1":
        rows, fields = sweep_thm1(a.z, a.eps, a.brute, a.convention), THM1_FIELDS
    else:
        rows, fields = sweep_unbalanced(a.max_n, a.eps, a.mode), UNBAL_FIELDS
    if cfg.format == "json":
        write_atomic(cfg.output, dump_json({"fields": fields, "rows": rows}))
    else:
        write_atomic(cfg.output, dump_csv(fields, rows))
    return EXIT_OK


COMMANDS = {"poset": cmd_poset, "engine": cmd_engine, "standalone": cmd_standalone,
            "resource": cmd_resource, "attack": cmd_attack, "unbalanced": cmd_unbalanced,
            "global-check": cmd_global, "sweep": cmd_sweep}


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParamRange(message)


def _common(p):
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    p.add_argument("-f", "--format", choices=["json", "csv", "dot"], default="json")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (default $SEED or 0)")
    p.add_argument("--threads", type=int, default=None, help="workers (default $THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wcfbox", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("poset", help="inspect a poset")
    p.add_argument("--file")
    p.add_argument("--elements", help="comma list")
    p.add_argument("--relations", help="comma list like a<b,b<c")
    p.add_argument("--cuts", action="store_true")
    _common(p)

    p = sub.add_parser("engine", help="exact distribution of a system JSON")
    p.add_argument("--system", required=True)
    p.add_argument("--inputs", help="external inputs like w@t=1,v@t=0")
    p.add_argument("--samples", type=int, default=0)
    _common(p)

    p = sub.add_parser("standalone", help="verify stand-alone WCF security")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--toy")
    g.add_argument("--protocol")
    p.add_argument("--z", default="1/2")
    p.add_argument("--eps", default=None)
    _common(p)

    p = sub.add_parser("resource", help="build or audit the ideal resources")
    p.add_argument("action", choices=["make", "audit"])
    p.add_argument("--z", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--convention", choices=["literal", "mirror"], default="literal")
    p.add_argument("--strict", action="store_true", help="exit 1 when a cap is violated")
    _common(p)

    p = sub.add_parser("attack", help="impossibility and man-in-the-middle attacks")
    p.add_argument("kind", choices=["thm1", "mitm"])
    p.add_argument("--z", default="1/2")
    p.add_argument("--eps", default="0")
    p.add_argument("--brute", action="store_true")
    p.add_argument("--convention", choices=["literal", "mirror"], default="literal")
    p.add_argument("--instance")
    p.add_argument("--toy", default="comb_toy")
    _common(p)

    p = sub.add_parser("unbalanced", help="cascade bias for a dyadic z")
    p.add_argument("--z-bits", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--mode", choices=["formula", "dp", "both"], default="both")
    _common(p)

    p = sub.add_parser("global-check", help="partition condition and conditional audit")
    p.add_argument("--system")
    p.add_argument("--pi-wires")
    p.add_argument("--eta-wires")
    p.add_argument("--partition", help="blocks 'a,b|c|d'")
    p.add_argument("--coin-a")
    p.add_argument("--k-alice")
    p.add_argument("--coin-b")
    p.add_argument("--k-bob")
    p.add_argument("--demo", choices=["sequential", "interleaved"])
    p.add_argument("--z", default="1/2")
    p.add_argument("--eps", default="0")
    _common(p)

    p = sub.add_parser("sweep", help="parameter grids as CSV")
    p.add_argument("kind", choices=["thm1", "unbalanced"])
    p.add_argument("--z", default="")
    p.add_argument("--eps", default="")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--mode", choices=["formula", "dp", "both"], default="both")
    p.add_argument("--brute", action="store_true")
    p.add_argument("--convention", choices=["literal", "mirror"], default="literal")
    _common(p)
    p.set_defaults(format="csv")
    return ap


def make_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    seed = args.seed if args.seed is not None else env_int("SEED", 0)
    threads = args.threads if args.threads is not None else env_int("THREADS", 1)
    if threads < 1:
        raise ParamRange("threads must be at least 1")
    params = {k: str(getattr(args, k)) for k in ("z", "eps") if getattr(args, k, None) is not None}
    return RunConfig(args.command, args, seed, threads, args.output, args.format, params)


def dispatch(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        return dispatch(cfg)
    except Mismatch as e:
        print(f"mismatch: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ParamRange, NotDyadic, ValueError, WcfError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
