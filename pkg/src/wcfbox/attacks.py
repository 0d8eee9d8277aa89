"""Executable attacks: gluing two ideal resources, and the delay relay on parallel runs."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .boxes import CausalBox, delay_box, win, wout
from .distribution import Distribution, tv_distance
from .engine import SystemGraph, run_exact
from .errors import NotCombModel
from .fractions_io import fmt
from .poset import DelayFn, Poset
from .resources import (B1, B2, C1, C2, CA, CB, P1, P2, T1_0, T1_1, T2_0, T2_1, TA, TB,
                        make_S, make_SA, make_SB, sigma_wire)
from .wcf import WcfParams, WcfProtocol, intcom

SIGMA_ORDER = [(T1_0, T1_1), (T1_0, T2_1), (T2_0, T1_1), (T2_0, T2_1)]
OUTCOMES = [(0, 0), (0, 1), (1, 0), (1, 1)]  # (c_A, c_B)
CELLS = [(0, 0), (0, 1), (1, 0), (1, 1)]      # (c', c'')
REPLIES = list(itertools.product((0, 1), repeat=4))  # (b', p', b'', p'')


# ------------------------------------------------------------- gluing attack

def sigma_from_map(mapping: Mapping[tuple, tuple], name: str = "sigma") -> CausalBox:
    """Deterministic gluing box: (c', c'') -> (b', p', b'', p'')."""
    p = Poset([T1_0, T1_1, T2_0, T2_1], SIGMA_ORDER)
    mapping = {tuple(k): tuple(v) for k, v in mapping.items()}
    s = sigma_wire

    def k(inp):
        b1, p1, b2, p2 = mapping[(inp[s(C1)], inp[s(C2)])]
        return [(Fraction(1), {s(B1): b1, s(P1): p1, s(B2): b2, s(P2): p2})]

    return CausalBox(name, [win(s(C1), T1_0), win(s(C2), T2_0)],
                     [wout(s(B1), T1_1), wout(s(P1), T1_1), wout(s(B2), T2_1), wout(s(P2), T2_1)],
                     p, k)


THM1_MAP = {
    (0, 0): (0, 0, 0, 0),  # pass-through
    (1, 1): (1, 0, 1, 0),
    (0, 1): (0, 1, 1, 0),  # force c_B = 1; c_A = c'' = 1
    (1, 0): (0, 0, 0, 0),  # all zeros
}
PASS_MAP = {(a, b): (a, 0, b, 0) for a, b in CELLS}


def thm1_sigma(z=None, eps=None) -> CausalBox:
    """The explicit gluing strategy; it does not depend on (z, eps)."""
    return sigma_from_map(THM1_MAP, "sigma")


def passthrough_sigma() -> CausalBox:
    return sigma_from_map(PASS_MAP, "sigma")


def glued_system(z, eps, sigma: CausalBox | None = None, convention: str = "literal") -> SystemGraph:
    par = WcfParams(z, eps)
    sa, sb = make_SA(par.z, par.eps), make_SB(par.z, par.eps, convention)
    sigma = sigma or thm1_sigma()
    s = sigma_wire
    links = [(C1, s(C1)), (C2, s(C2)), (s(B1), B1), (s(P1), P1), (s(B2), B2), (s(P2), P2)]
    return SystemGraph([sb, sigma, sa], links)


@dataclass
class AdvantageReport:
    params: WcfParams
    joint: Distribution
    mass00: Fraction
    mass11: Fraction
    discordant: Fraction
    agreement_gap: Fraction
    d_lower: Fraction
    delta_lower: Fraction
    tv_to_S: Fraction
    expected: dict = field(default_factory=dict)

    @property
    def matches(self) -> bool:
        return (self.mass00, self.mass11, self.discordant) == (
            self.expected["mass00"], self.expected["mass11"], self.expected["discordant"])

    def to_json(self) -> dict:
        return {"z": fmt(self.params.z), "eps": fmt(self.params.eps),
                "joint": self.joint.to_json(),
                "mass00": fmt(self.mass00), "mass11": fmt(self.mass11),
                "discordant": fmt(self.discordant), "agreement_gap": fmt(self.agreement_gap),
                "d_lower": fmt(self.d_lower), "delta_lower": fmt(self.delta_lower),
                "tv_to_S": fmt(self.tv_to_S),
                "expected": {k: fmt(v) for k, v in self.expected.items()},
                "matches": self.matches}


def thm1_expected(par: WcfParams) -> dict:
    z, e = par.z, par.eps
    return {"mass00": z * (z + e), "mass11": 1 - z, "discordant": z * (1 - z - e),
            "delta_lower": z * (1 - z - e) / 3}


def thm1_demo(z, eps, convention: str = "literal") -> AdvantageReport:
    par = WcfParams(z, eps)
    labels = [f"{CA}@{TA}", f"{CB}@{TB}"]
    joint = run_exact(glued_system(par.z, par.eps, None, convention)).marginal(labels)
    ideal = run_exact(SystemGraph([make_S(par.z)])).marginal(labels)
    disc = joint[(0, 1)] + joint[(1, 0)]
    gap_ideal = ideal[(0, 1)] + ideal[(1, 0)]
    d = disc - gap_ideal
    return AdvantageReport(par, joint, joint[(0, 0)], joint[(1, 1)], disc, disc, d, d / 3,
                           tv_distance(joint, ideal), thm1_expected(par))


@dataclass
class OptimalityReport:
    params: WcfParams
    maps: int
    min_tv: Fraction
    max_agreement: Fraction      # 1 - min TV to S
    best_map: dict
    max_pr_equal: Fraction       # raw max Pr[c_A = c_B]
    best_equal_map: dict
    sigma_tv: Fraction
    engine_tv: Fraction          # best map re-run through the engine

    @property
    def bound(self) -> Fraction:
        z, e = self.params.z, self.params.eps
        return 1 - z * (1 - z - e)

    @property
    def sigma_attains(self) -> bool:
        return self.sigma_tv == self.min_tv

    def to_json(self) -> dict:
        return {"z": fmt(self.params.z), "eps": fmt(self.params.eps), "maps": self.maps,
                "min_tv": fmt(self.min_tv), "max_agreement": fmt(self.max_agreement),
                "bound": fmt(self.bound), "sigma_tv": fmt(self.sigma_tv),
                "sigma_attains": self.sigma_attains, "engine_tv": fmt(self.engine_tv),
                "max_pr_equal": fmt(self.max_pr_equal),
                "best_map": {f"{a}{b}": list(v) for (a, b), v in self.best_map.items()},
                "best_equal_map": {f"{a}{b}": list(v) for (a, b), v in self.best_equal_map.items()}}


def _cell_tables(par: WcfParams, convention: str):
    """Contribution of (cell, reply) to each (c_A, c_B), read off the box kernels."""
    sa, sb = make_SA(par.z, par.eps), make_SB(par.z, par.eps, convention)
    table = {}
    for (a, b), r in itertools.product(CELLS, REPLIES):
        la = sa.behavior((r[0], r[1]))  # {(c', c_B): p}
        lb = sb.behavior((r[2], r[3]))  # {(c'', c_A): p}
        table[(a, b), r] = [la.get((a, cb), 0) * lb.get((b, ca), 0) for ca, cb in OUTCOMES]
    return table


def _decode(m: int) -> dict:
    return {cell: REPLIES[(m >> (4 * k)) & 15] for k, cell in enumerate(CELLS)}


def thm1_optimality(z, eps, convention: str = "literal") -> OptimalityReport:
    """Exhaustive search over all 16^4 deterministic maps (c', c'') -> (b', p', b'', p'')."""
    par = WcfParams(z, eps)
    table = _cell_tables(par, convention)
    target = [par.z, 0, 0, 1 - par.z]
    dens = [Fraction(x).denominator for v in table.values() for x in v] + \
           [Fraction(x).denominator for x in target]
    scale = math.lcm(*dens)
    dtype = np.int64 if scale < 2 ** 40 else object
    M = np.array([[[int(Fraction(x) * scale) for x in table[cell, r]] for r in REPLIES]
                  for cell in CELLS], dtype=dtype)
    n = 16 ** len(CELLS)
    m = np.arange(n)
    joint = sum(M[k][(m >> (4 * k)) & 15] for k in range(len(CELLS)))
    tgt = np.array([int(Fraction(x) * scale) for x in target], dtype=dtype)
    tv2 = np.abs(joint - tgt).sum(axis=1)
    agree = joint[:, 0] + joint[:, 3]
    i_tv = int(np.argmin(tv2))
    i_eq = int(np.argmax(agree))
    min_tv = Fraction(int(tv2[i_tv]), 2 * scale)
    sigma_idx = sum(REPLIES.index(THM1_MAP[cell]) << (4 * k) for k, cell in enumerate(CELLS))
    sigma_tv = Fraction(int(tv2[sigma_idx]), 2 * scale)
    labels = [f"{CA}@{TA}", f"{CB}@{TB}"]
    best = _decode(i_tv)
    d = run_exact(glued_system(par.z, par.eps, sigma_from_map(best), convention)).marginal(labels)
    ideal = run_exact(SystemGraph([make_S(par.z)])).marginal(labels)
    return OptimalityReport(par, n, min_tv, 1 - min_tv, best,
                            Fraction(int(agree[i_eq]), scale), _decode(i_eq), sigma_tv,
                            tv_distance(d, ideal))


# ------------------------------------------------------------- parallel runs

@dataclass
class MuProtocol:
    """Two independent copies of a protocol glued by AND of the coins.

    Alice runs Alice's part of ``pi`` and Bob's part of ``pi2``; Bob the rest.
    """
    pi: WcfProtocol
    pi2: WcfProtocol
    eta_a: CausalBox
    eta_b: CausalBox
    protocol: WcfProtocol
    suffix: str = "'"

    @property
    def alice_coins(self) -> tuple:
        return (self.pi.coin_a, self.pi2.coin_b)

    @property
    def bob_coins(self) -> tuple:
        return (self.pi.coin_b, self.pi2.coin_a)

    @property
    def z_mu(self) -> Fraction:
        z = self.pi.params.z
        return 1 - (1 - z) ** 2


ETA_A_OUT, ETA_B_OUT, T_A, T_B = "c''A", "c''B", "tA", "tB"


def _and_box(name, a_slot, b_slot, out_id, out_pos, prefix):
    p = Poset([a_slot[1], b_slot[1], out_pos], [(a_slot[1], out_pos), (b_slot[1], out_pos)])
    ia, ib = prefix + "1", prefix + "2"

    def k(inp):
        return [(Fraction(1), {out_id: inp[ia] & inp[ib]})]

    return CausalBox(name, [win(ia, a_slot[1]), win(ib, b_slot[1])], [wout(out_id, out_pos)], p, k)


def build_mu(p: WcfProtocol, suffix: str = "'") -> MuProtocol:
    intcom(p)  # raises NotCombModel
    q = p.relabel(suffix)
    eta_a = _and_box("eta_A", p.coin_a, q.coin_b, ETA_A_OUT, T_A, "ea")
    eta_b = _and_box("eta_B", p.coin_b, q.coin_a, ETA_B_OUT, T_B, "eb")
    links = list(p.links) + list(q.links) + [
        (p.coin_a[0], "ea1"), (q.coin_b[0], "ea2"), (p.coin_b[0], "eb1"), (q.coin_a[0], "eb2")]
    mu = WcfProtocol("mu[" + p.name + "]", p.alice + q.bob + (eta_a,), p.bob + q.alice + (eta_b,),
                     links, (ETA_A_OUT, T_A), (ETA_B_OUT, T_B), None, p.resources + q.resources)
    return MuProtocol(p, q, eta_a, eta_b, mu, suffix)


def mitm_system(m: MuProtocol) -> SystemGraph:
    """Bob routes Alice's two runs into each other through delay boxes."""
    p, q = m.pi, m.pi2
    if p.resources:
        raise NotCombModel("the relay attack needs protocols without trusted resources")
    sg = p.system()
    alice_names = {b.name for b in p.alice}
    boxes = list(p.alice) + list(q.bob) + [m.eta_a]
    links = [(p.coin_a[0], "ea1"), (q.coin_b[0], "ea2")]
    suffix = m.suffix
    for o, n in p.links:
        if sg.boxes[sg.owner[o][0]].name in alice_names:
            src, dst, fwd = o, n + suffix, True
        else:
            src, dst, fwd = o + suffix, n, False
        w = sg.wire(o)
        if fwd:
            pairs = [(t, t + suffix) for t in w.positions]
        else:
            pairs = [(t + suffix, t) for t in w.positions]
        poset = Poset([x for pr in pairs for x in pr], pairs)
        f = DelayFn(poset, dict(pairs))
        th = delay_box(f, "th_in:" + src, "th_out:" + src, w.size, w.quantum, name=f"theta[{src}]")
        boxes.append(th)
        links += [(src, "th_in:" + src), ("th_out:" + src, dst)]
    return SystemGraph(boxes, links)


def _close(d1: Distribution, d2: Distribution, tol) -> bool:
    keys = set(d1.probs) | set(d2.probs)
    if d1.exact and d2.exact:
        return all(d1[k] == d2[k] for k in keys)
    return all(abs(float(d1[k]) - float(d2[k])) <= tol for k in keys)


def mitm_attack(m: MuProtocol, tol: float = 1e-12):
    """(attacked law of c''_A, honest single-run law of c_A); asserts they agree."""
    attacked = run_exact(mitm_system(m)).marginal([f"{ETA_A_OUT}@{T_A}"])
    single = run_exact(m.pi.system()).marginal([f"{m.pi.coin_a[0]}@{m.pi.coin_a[1]}"])
    if not _close(attacked, single, tol):
        raise AssertionError(f"attacked {attacked} differs from single run {single}")
    return attacked, single


def honest_mu_distribution(m: MuProtocol) -> Distribution:
    return run_exact(m.protocol.system()).marginal([f"{ETA_A_OUT}@{T_A}", f"{ETA_B_OUT}@{T_B}"])


def message_interleaving(s: SystemGraph) -> list:
    """Positions of relayed messages (both ends of every delay box), in scheduled order."""
    pos = {t for b in s.boxes if b.name.startswith("theta[")
           for w in b.in_wires + b.out_wires for t in w.positions}
    return [t for t in s.poset.topological_order() if t in pos]


def conditional_violation(m: MuProtocol, attacked: SystemGraph | None = None):
    """max_x Pr[second coin of Alice = 1 | first coin = x]; None if undefined."""
    s = attacked if attacked is not None else m.protocol.system()
    a1, a2 = m.alice_coins
    d = run_exact(s, observe=[a1, a2]).marginal([f"{a1[0]}@{a1[1]}", f"{a2[0]}@{a2[1]}"])
    vals = []
    for x in (0, 1):
        c = d.condition({d.labels[0]: x})
        if c is not None:
            vals.append(c.p({d.labels[1]: 1}))
    return max(vals) if vals else None
