"""Conditional cheat audits for a coin flip composed with other components,
and the sequential-partition condition that guarantees them."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .boxes import slot_name
from .distribution import Distribution
from .engine import SystemGraph, run_exact
from .errors import NotAPartition
from .fractions_io import fmt
from .poset import Poset
from .wcf import CheatArena, WcfParams, WcfProtocol


@dataclass(frozen=True)
class Partition:
    t1: frozenset
    t2: frozenset
    t3: frozenset

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))

    def to_json(self) -> dict:
        return {k: sorted(getattr(self, k)) for k in ("t1", "t2", "t3")}


def _validate_partition(p: Poset, part: Partition) -> None:
    sets = (part.t1, part.t2, part.t3)
    if (part.t1 & part.t2) or (part.t2 & part.t3) or (part.t1 & part.t3):
        raise NotAPartition("blocks overlap")
    if frozenset().union(*sets) != frozenset(p.elements):
        raise NotAPartition("blocks do not cover the poset")


def partition_check(p: Poset, part: Partition, pi_positions: Iterable[str],
                    eta_positions: Iterable[str]) -> bool:
    """Blocks are strictly ordered and pi / eta live in the middle / outer blocks."""
    _validate_partition(p, part)
    pairs = [(part.t1, part.t2), (part.t2, part.t3), (part.t1, part.t3)]
    for lo, hi in pairs:
        if not all(p.lt(x, y) for x in lo for y in hi):
            return False
    pi, eta = set(pi_positions), set(eta_positions)
    return pi <= part.t2 and eta <= (part.t1 | part.t3)


def find_partition(p: Poset, pi_positions: Iterable[str], eta_positions: Iterable[str]) -> Partition | None:
    """Smallest middle block containing pi, grown until every other element
    lies below or above all of it; None when an eta element gets trapped."""
    t2 = set(pi_positions)
    eta = set(eta_positions)
    while True:
        t1, t3, grow = set(), set(), set()
        for x in p.elements:
            if x in t2:
                continue
            if all(p.lt(x, y) for y in t2):
                t1.add(x)
            elif all(p.lt(y, x) for y in t2):
                t3.add(x)
            elif x in eta:
                return None
            else:
                grow.add(x)
        if not grow:
            break
        t2 |= grow
    part = Partition(t1, t2, t3)
    return part if partition_check(p, part, pi_positions, eta_positions) else None


# ----------------------------------------------------------- composed systems

@dataclass
class ComposedSystem:
    """pi running next to eta; eta's classical side outputs are the K values."""
    name: str
    pi: WcfProtocol
    eta_alice: tuple = ()
    eta_bob: tuple = ()
    eta_resources: tuple = ()
    links: tuple = ()
    k_alice: tuple = ()  # slots seen by honest Alice's environment
    k_bob: tuple = ()
    order: Poset | None = None

    def __post_init__(self):
        self.eta_alice, self.eta_bob = tuple(self.eta_alice), tuple(self.eta_bob)
        self.eta_resources = tuple(self.eta_resources)
        self.links = tuple(tuple(l) for l in self.links)
        self.k_alice = tuple(tuple(s) for s in self.k_alice)
        self.k_bob = tuple(tuple(s) for s in self.k_bob)

    @property
    def eta_boxes(self) -> tuple:
        return self.eta_alice + self.eta_bob + self.eta_resources

    def system(self) -> SystemGraph:
        return SystemGraph(self.pi.boxes + self.eta_boxes, self.pi.links + self.links, self.order)

    def pi_positions(self) -> set:
        return {t for b in self.pi.boxes for t in b.poset.elements}

    def eta_positions(self) -> set:
        return {t for b in self.eta_boxes for t in b.poset.elements}


def sequential_composition(first: WcfProtocol, second: WcfProtocol) -> ComposedSystem:
    """Run ``first`` entirely before ``second``; the first coins become K values.

    The second run is the audited coin flip.
    """
    a, b = first.relabel("_1"), second.relabel("_2")
    pa = a.system().poset
    pb = b.system().poset
    order = Poset(pa.elements + pb.elements,
                  list(pa.covers) + list(pb.covers) +
                  [(x, y) for x in pa.maximal() for y in pb.minimal()])
    return ComposedSystem(f"seq[{first.name},{second.name}]", b, a.alice, a.bob, a.resources,
                          a.links, (a.coin_a,), (a.coin_b,), order)


# ---------------------------------------------------------------- audits

@dataclass
class ConditionalTable:
    """Pr[coin = value | K = k] for every k with positive probability."""
    values: dict
    skipped: list

    @property
    def max(self):
        return max(self.values.values()) if self.values else None

    def argmax(self):
        if not self.values:
            return None
        m = self.max
        return next(k for k, v in self.values.items() if v == m)


def conditional_table(d: Distribution, coin: str, value: int, k_labels: Sequence[str],
                      alphabet: Sequence[int] | None = None) -> ConditionalTable:
    vals, skipped = {}, []
    if not k_labels:
        return ConditionalTable({(): d.p({coin: value})}, [])
    sizes = alphabet or [2] * len(k_labels)
    for k in itertools.product(*[range(s) for s in sizes]):
        c = d.condition(dict(zip(k_labels, k)))
        if c is None:
            skipped.append(k)
            continue
        vals[k] = c.p({coin: value})
    return ConditionalTable(vals, skipped)


@dataclass
class ConditionalAuditReport:
    name: str
    params: WcfParams
    max_ca1: object          # max over strategies, k of Pr[c_A = 1 | K_A = k]
    max_cb0: object          # max over strategies, k of Pr[c_B = 0 | K_B = k]
    witness_ca1: dict = field(default_factory=dict)
    witness_cb0: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    strategies: int = 0
    mode: str = "enumerate"

    def _le(self, x, cap):
        return x is None or x <= cap

    @property
    def verdict_consistent(self) -> bool:
        """c_A side against 1-z+eps, c_B side against z+eps (default)."""
        return self._le(self.max_ca1, self.params.cap_bob) and self._le(self.max_cb0, self.params.cap_alice)

    @property
    def verdict_as_printed(self) -> bool:
        """The swapped pairing: c_A side against z+eps, c_B side against 1-z+eps."""
        return self._le(self.max_ca1, self.params.cap_alice) and self._le(self.max_cb0, self.params.cap_bob)

    @property
    def ok(self) -> bool:
        return self.verdict_consistent

    @property
    def max_conditional(self):
        xs = [x for x in (self.max_ca1, self.max_cb0) if x is not None]
        return max(xs) if xs else None

    def to_json(self) -> dict:
        return {"name": self.name, "mode": self.mode,
                "z": fmt(self.params.z), "eps": fmt(self.params.eps),
                "max_cA1_given_K": None if self.max_ca1 is None else fmt(self.max_ca1),
                "max_cB0_given_K": None if self.max_cb0 is None else fmt(self.max_cb0),
                "cap_alice": fmt(self.params.cap_alice), "cap_bob": fmt(self.params.cap_bob),
                "verdict_consistent": self.verdict_consistent,
                "verdict_as_printed": self.verdict_as_printed,
                "witness_cA1": self.witness_ca1, "witness_cB0": self.witness_cb0,
                "skipped": self.skipped, "strategies": self.strategies, "ok": self.ok}


def _side_arena(xi: ComposedSystem, cheater: str) -> CheatArena:
    honest = xi.system()
    gone_boxes = (xi.pi.bob + xi.eta_bob) if cheater == "bob" else (xi.pi.alice + xi.eta_alice)
    gone = {b.name for b in gone_boxes}
    gone_wires = {w.id for b in gone_boxes for w in b.in_wires + b.out_wires}
    base = honest.without(*gone)
    receive = [o for o, n in honest.links if n in gone_wires and o not in gone_wires]
    send = [n for o, n in honest.links if o in gone_wires and n not in gone_wires]
    return CheatArena(base, receive, send, honest.poset, name=f"adv_{cheater}")


def _audit_side(xi: ComposedSystem, cheater: str, threads=None):
    arena = _side_arena(xi, cheater)
    if cheater == "bob":
        coin, value, ks = xi.pi.coin_a, 1, xi.k_alice
    else:
        coin, value, ks = xi.pi.coin_b, 0, xi.k_bob
    coin_l = slot_name(coin)
    k_l = [slot_name(k) for k in ks]
    alphabet = [xi.system().wire(k[0]).size for k in ks]
    best, witness, unreached = None, {}, None
    count = 0
    for st in arena.strategies():
        count += 1
        d = run_exact(arena.play(st), observe=[coin, *ks]).marginal([coin_l, *k_l])
        tab = conditional_table(d, coin_l, value, k_l, alphabet)
        unreached = set(tab.skipped) if unreached is None else unreached & set(tab.skipped)
        if tab.max is not None and (best is None or tab.max > best):
            best = tab.max
            witness = {"k": list(tab.argmax()), "strategy": st.as_table()}
    return best, witness, sorted(unreached or []), count


def conditional_cheat_audit(xi: ComposedSystem, params: WcfParams | None = None,
                            threads=None) -> ConditionalAuditReport:
    """Enumerate deterministic adversaries on each side of the composed system."""
    params = params or xi.pi.params
    m1, w1, s1, n1 = _audit_side(xi, "bob", threads)
    m2, w2, s2, n2 = _audit_side(xi, "alice", threads)
    return ConditionalAuditReport(xi.name, params, m1, m2,
                                  {"k": w1.get("k"), "strategy": w1.get("strategy")},
                                  {"k": w2.get("k"), "strategy": w2.get("strategy")},
                                  {"cA_side": [list(k) for k in s1], "cB_side": [list(k) for k in s2]},
                                  n1 + n2)


def fixed_conditional_audit(name: str, s: SystemGraph, params: WcfParams,
                            coin_a=None, k_alice: Sequence = (), coin_b=None,
                            k_bob: Sequence = ()) -> ConditionalAuditReport:
    """Conditionals for one fully specified system (adversary already wired in)."""
    def side(coin, value, ks):
        if coin is None:
            return None, {}, []
        ks = [tuple(k) for k in ks]
        labels = [slot_name(coin)] + [slot_name(k) for k in ks]
        d = run_exact(s, observe=[tuple(coin), *ks]).marginal(labels)
        tab = conditional_table(d, labels[0], value, labels[1:], [s.wire(k[0]).size for k in ks])
        return tab.max, {"k": list(tab.argmax()) if tab.values else None}, tab.skipped

    m1, w1, s1 = side(coin_a, 1, k_alice)
    m2, w2, s2 = side(coin_b, 0, k_bob)
    return ConditionalAuditReport(name, params, m1, m2, w1, w2,
                                  {"cA_side": [list(k) for k in s1], "cB_side": [list(k) for k in s2]},
                                  0, "fixed")


# ---------------------------------------------------------------- demo

@dataclass
class Theorem4Report:
    mode: str
    partition: Partition | None
    audit: ConditionalAuditReport

    @property
    def partition_holds(self) -> bool:
        return self.partition is not None

    @property
    def consistent_with_theorem(self) -> bool:
        """Partition present implies the audit passes (the contrapositive is not claimed)."""
        return (not self.partition_holds) or self.audit.ok

    def to_json(self) -> dict:
        return {"mode": self.mode, "partition_holds": self.partition_holds,
                "partition": self.partition.to_json() if self.partition else None,
                "audit": self.audit.to_json(),
                "consistent_with_theorem": self.consistent_with_theorem}


def theorem4_demo(pi: WcfProtocol, eta: WcfProtocol | None = None,
                  mode: str = "sequential") -> Theorem4Report:
    """Sequential mode runs ``eta`` (default: a copy of pi) entirely before pi;
    interleaved mode routes two runs of pi into each other."""
    if mode == "sequential":
        xi = sequential_composition(eta if eta is not None else pi, pi)
        part = find_partition(xi.system().poset, xi.pi_positions(), xi.eta_positions())
        return Theorem4Report(mode, part, conditional_cheat_audit(xi))
    if mode == "interleaved":
        from .attacks import build_mu, mitm_system
        m = build_mu(pi)
        s = mitm_system(m)
        pi_pos = {t for b in m.pi.alice for t in b.poset.elements}
        eta_pos = {t for b in m.pi2.bob + (m.eta_a,) for t in b.poset.elements}
        part = find_partition(s.poset, pi_pos, eta_pos)
        audit = fixed_conditional_audit(f"mitm[{pi.name}]", s, pi.params,
                                        coin_a=m.pi.coin_a, k_alice=[m.pi2.coin_b])
        return Theorem4Report(mode, part, audit)
    raise ValueError(f"unknown mode {mode!r}")
