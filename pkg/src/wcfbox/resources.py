"""The ideal WCF resource triple (S, S_A, S_B) and related audits."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .boxes import CausalBox, bit, win, wout
from .distribution import Distribution
from .engine import SystemGraph, run_exact
from .errors import NotCombModel, ParamRange, WiringError
from .fractions_io import fmt
from .poset import Poset, chain
from .wcf import CheatArena, WcfParams, WcfProtocol, resource_intcom

# wire ids and positions; primes are spelled with ASCII quotes
C1, B1, P1, CB = "c'", "b'", "p'", "cB"
C2, B2, P2, CA = "c''", "b''", "p''", "cA"
T1_0, T1_1, TB = "t'0", "t'1", "tb"
T2_0, T2_1, TA = "t''0", "t''1", "ta"

SB_CONVENTIONS = ("literal", "mirror")


def _params(z, eps) -> WcfParams:
    return WcfParams(z, eps)


def make_S(z) -> CausalBox:
    """Honest resource: the same biased bit c at ta and tb."""
    par = _params(z, 0)
    p = Poset([TA, TB])

    def k(inp):
        return [(pr, {CA: c, CB: c}) for pr, c in bit(par.z) if pr]

    return CausalBox("S", [], [wout(CA, TA), wout(CB, TB)], p, k)


def _flip_box(name, c_out, b_in, p_in, coin, t0, t1, tc, q, forced):
    """Shared shape of S_A and S_B: coin at t0, reply at t1, output at tc.

    A reply p=1 forces the output to ``forced``; otherwise the output is the
    adversary's b with probability q and the coin with probability 1-q.
    """
    p = chain([t0, t1, tc])
    z = q[0]
    flip = q[1]

    def k(inp):
        b, pp = inp[b_in], inp[p_in]
        out = []
        for pr, c in bit(z):
            if not pr:
                continue
            if pp == 1:
                out.append((pr, {c_out: c, coin: forced}))
                continue
            if flip:
                out.append((pr * flip, {c_out: c, coin: b}))
            if flip != 1:
                out.append((pr * (1 - flip), {c_out: c, coin: c}))
        return out

    return CausalBox(name, [win(b_in, t1), win(p_in, t1)], [wout(c_out, t0), wout(coin, tc)], p, k)


def sa_flip(par: WcfParams) -> Fraction:
    return par.eps / (1 - par.z)


def sb_flip(par: WcfParams, convention: str = "literal") -> Fraction:
    if convention not in SB_CONVENTIONS:
        raise ValueError(f"unknown S_B convention {convention!r}")
    if par.eps == 0:
        return Fraction(0)
    if convention == "literal":
        return par.eps / (1 - par.z)
    return par.eps / par.z


def make_SA(z, eps, flip=None) -> CausalBox:
    """Resource with a dishonest Alice.  ``flip`` overrides eps/(1-z) (used to
    build deliberately broken triples)."""
    par = _params(z, eps)
    q = sa_flip(par) if flip is None else Fraction(flip)
    if not 0 <= q <= 1:
        raise ParamRange(f"flip probability {q} outside [0, 1]")
    return _flip_box("S_A", C1, B1, P1, CB, T1_0, T1_1, TB, (par.z, q), 1)


def make_SB(z, eps, convention: str = "literal", flip=None) -> CausalBox:
    """Resource with a dishonest Bob; c_A is forced to 0 by p''=1."""
    par = _params(z, eps)
    q = sb_flip(par, convention) if flip is None else Fraction(flip)
    if not 0 <= q <= 1:
        raise ParamRange(f"flip probability {q} outside [0, 1]")
    return _flip_box("S_B", C2, B2, P2, CA, T2_0, T2_1, TA, (par.z, q), 0)


@dataclass
class ResourceTriple:
    params: WcfParams
    S: CausalBox
    S_A: CausalBox
    S_B: CausalBox
    convention: str = "literal"


def make_triple(z, eps, convention: str = "literal") -> ResourceTriple:
    par = _params(z, eps)
    return ResourceTriple(par, make_S(par.z), make_SA(par.z, par.eps),
                          make_SB(par.z, par.eps, convention), convention)


# ------------------------------------------------------------- audits

@dataclass
class FullyExpressingReport:
    params: WcfParams
    honest: Distribution
    cond1_ok: bool
    max_cb0: object  # max Pr[c_B = 0] against S_A
    max_ca1: object  # max Pr[c_A = 1] against S_B
    cond2_ok: bool
    cond3_ok: bool
    intcom_SA: int
    intcom_SB: int
    strategies: int

    @property
    def ok(self) -> bool:
        return self.cond1_ok and self.cond2_ok and self.cond3_ok

    def to_json(self) -> dict:
        return {"z": fmt(self.params.z), "eps": fmt(self.params.eps),
                "honest": self.honest.to_json(), "cond1_ok": self.cond1_ok,
                "max_cB0": fmt(self.max_cb0), "cap_alice": fmt(self.params.cap_alice),
                "max_cA1": fmt(self.max_ca1), "cap_bob": fmt(self.params.cap_bob),
                "cond2_ok": self.cond2_ok, "cond3_ok": self.cond3_ok,
                "intcom_SA": self.intcom_SA, "intcom_SB": self.intcom_SB,
                "strategies": self.strategies, "ok": self.ok}


def resource_arena(box: CausalBox) -> CheatArena:
    """Adversary on the left interface of S_A (or right interface of S_B)."""
    base = SystemGraph([box], [])
    coin_wire = box.out_wires[0].id
    sends = [w.id for w in box.in_wires]
    return CheatArena(base, [coin_wire], sends, name="adv_" + box.name)


def max_resource_cheat(box: CausalBox, target: str, value: int, threads=None):
    arena = resource_arena(box)
    pos = box.wire(target).positions[0]
    label = f"{target}@{pos}"
    v, st, n = arena.best(lambda d: d.marginal([label])[(value,)], threads=threads)
    return v, st, n


def fully_expressing_audit(S: CausalBox, S_A: CausalBox, S_B: CausalBox, params: WcfParams,
                           threads=None) -> FullyExpressingReport:
    honest = run_exact(SystemGraph([S]))
    honest = honest.marginal([f"{CA}@{TA}", f"{CB}@{TB}"])
    target = {k: v for k, v in {(0, 0): params.z, (1, 1): 1 - params.z}.items() if v}
    cond1 = honest.probs == target
    m2, _, n2 = max_resource_cheat(S_A, CB, 0, threads)
    m3, _, n3 = max_resource_cheat(S_B, CA, 1, threads)
    return FullyExpressingReport(params, honest, cond1, m2, m3,
                                 m2 <= params.cap_alice, m3 <= params.cap_bob,
                                 resource_intcom(S_A, [C1, B1, P1]),
                                 resource_intcom(S_B, [C2, B2, P2]), n2 + n3)


# ------------------------------------------------------ resource -> protocol

def sigma_wire(w: str) -> str:
    return w + "_s"


def resource_to_protocol(S_B: CausalBox, sigma: Sequence[CausalBox], S_A: CausalBox,
                         params: WcfParams, links: Sequence | None = None,
                         name: str = "resource_protocol") -> WcfProtocol:
    """Alice runs S_B; Bob runs the gluing boxes followed by S_A.

    Without explicit ``links`` each adversary-side wire w of S_A and S_B is
    matched to the gluing wire "w_s"; with no gluing boxes, compatible wires
    of S_B and S_A are coupled directly.
    """
    sigma = tuple(sigma)
    if links is None:
        links = []
        side = [(S_B, [C2, B2, P2]), (S_A, [C1, B1, P1])]
        if sigma:
            ids = {w.id for b in sigma for w in b.in_wires + b.out_wires}
            for box, wires in side:
                for w in wires:
                    sw = sigma_wire(w)
                    if sw not in ids:
                        raise WiringError(f"no gluing wire {sw!r} for {w!r}")
                    links.append((w, sw) if box.wire(w).direction == "out" else (sw, w))
        else:
            outs = [box.wire(w) for box, ws in side for w in ws if box.wire(w).direction == "out"]
            ins = [box.wire(w) for box, ws in side for w in ws if box.wire(w).direction == "in"]
            for o in outs:
                for i in ins:
                    if (o.size, o.positions, o.quantum) == (i.size, i.positions, i.quantum) \
                            and i.id not in {n for _, n in links}:
                        links.append((o.id, i.id))
                        break
    return WcfProtocol(name, [S_B], list(sigma) + [S_A], links, (CA, TA), (CB, TB), params)


def protocol_intcom_matches(p: WcfProtocol) -> bool:
    """Rounds of the transformed protocol equal the adversary-side rounds of S_B."""
    from .wcf import intcom
    try:
        return intcom(p) == resource_intcom(p.alice[0], [C2, B2, P2])
    except NotCombModel:
        return False
