"""Weak coin flipping protocols, deterministic adversaries and stand-alone audits."""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .boxes import CausalBox, QStep, QuantumBox, Slot, Wire, relabel_box, slot_name
from .distribution import Distribution
from .engine import SystemGraph, run_exact
from .errors import ExplosionError, KernelError, NotCombModel, ParamRange
from .fractions_io import fmt, parse_fraction
from .poset import Poset, natural_key, strict_precedence
from .quantum import permutation_unitary

STRATEGY_CAP = 10 ** 6


@dataclass(frozen=True)
class WcfParams:
    z: Fraction
    eps: Fraction

    def __post_init__(self):
        z, eps = parse_fraction(self.z), parse_fraction(self.eps)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "eps", eps)
        if not (0 <= eps <= z <= Fraction(1, 2)):
            raise ParamRange(f"need 0 <= eps <= z <= 1/2, got z={z}, eps={eps}")

    @property
    def cap_alice(self) -> Fraction:
        return self.z + self.eps

    @property
    def cap_bob(self) -> Fraction:
        return 1 - self.z + self.eps


def _boxes(x) -> tuple:
    if x is None:
        return ()
    if isinstance(x, (CausalBox, QuantumBox)):
        return (x,)
    return tuple(x)


@dataclass
class WcfProtocol:
    """Alice's boxes, Bob's boxes and optional trusted resource boxes."""
    name: str
    alice: tuple
    bob: tuple
    links: tuple
    coin_a: Slot
    coin_b: Slot
    params: WcfParams
    resources: tuple = ()
    order: Poset | None = None

    def __post_init__(self):
        self.alice = _boxes(self.alice)
        self.bob = _boxes(self.bob)
        self.resources = _boxes(self.resources)
        self.links = tuple(tuple(l) for l in self.links)
        self._system = None

    @property
    def boxes(self) -> tuple:
        return self.alice + self.bob + self.resources

    @property
    def quantum(self) -> bool:
        return any(isinstance(b, QuantumBox) for b in self.boxes)

    def system(self) -> SystemGraph:
        if self._system is None:
            self._system = SystemGraph(self.boxes, self.links, self.order)
        return self._system

    def side_of(self, box_name: str) -> str:
        if any(b.name == box_name for b in self.alice):
            return "alice"
        if any(b.name == box_name for b in self.bob):
            return "bob"
        return "resource:" + box_name

    @property
    def rounds(self) -> int:
        return intcom(self)

    def relabel(self, suffix: str, pos_map: Callable | None = None,
                wire_map: Callable | None = None) -> "WcfProtocol":
        pm = pos_map or (lambda t: t + suffix)
        wm = wire_map or (lambda w: w + suffix)

        def rb(bs):
            return tuple(relabel_box(b, pm, wm, b.name + suffix) for b in bs)

        order = None
        if self.order is not None:
            order = Poset([pm(t) for t in self.order.elements],
                          [(pm(a), pm(b)) for a, b in self.order.covers])
        return WcfProtocol(self.name + suffix, rb(self.alice), rb(self.bob),
                           tuple((wm(o), wm(n)) for o, n in self.links),
                           (wm(self.coin_a[0]), pm(self.coin_a[1])),
                           (wm(self.coin_b[0]), pm(self.coin_b[1])),
                           self.params, rb(self.resources), order)


def honest_distribution(p: WcfProtocol) -> Distribution:
    d = run_exact(p.system())
    return d.marginal([slot_name(p.coin_a), slot_name(p.coin_b)])


# ----------------------------------------------------------------- adversaries

@dataclass(frozen=True)
class Decision:
    slot: Slot
    size: int
    visible: tuple  # received slots the decision may read


@dataclass
class AdversaryInterface:
    """What a deterministic adversary sees and sends, under ``order``."""
    receives: tuple  # (slot, size)
    decisions: tuple
    order: Poset
    quantum: bool = False

    def __post_init__(self):
        sizes = dict(self.receives)
        self._cells = []
        for di, d in enumerate(self.decisions):
            for prefix in itertools.product(*[range(sizes[s]) for s in d.visible]):
                self._cells.append((di, prefix))
        self._cell_index = {c: i for i, c in enumerate(self._cells)}

    @property
    def cells(self) -> list:
        return self._cells

    def count(self) -> int:
        n = 1
        for di, _ in self._cells:
            n *= self.decisions[di].size
        return n


@dataclass(frozen=True)
class AdversaryStrategy:
    """Deterministic decision tree: one reply per (decision, observed prefix)."""
    iface: AdversaryInterface = field(repr=False, compare=False)
    choices: tuple

    def decide(self, decision: int, prefix: tuple) -> int:
        return self.choices[self.iface._cell_index[(decision, tuple(prefix))]]

    def as_table(self) -> list:
        rows = []
        for (di, prefix), v in zip(self.iface.cells, self.choices):
            d = self.iface.decisions[di]
            rows.append({"send": slot_name(d.slot),
                         "seen": {slot_name(s): x for s, x in zip(d.visible, prefix)},
                         "value": v})
        return rows

    def __str__(self):
        return json.dumps(self.as_table())


def enumerate_adversaries(iface: AdversaryInterface, cap: int = STRATEGY_CAP) -> Iterator[AdversaryStrategy]:
    """All deterministic strategies, in lexicographic order of the choice tuple."""
    n = iface.count()
    if n > cap:
        raise ExplosionError(f"{n} strategies exceed the cap {cap}")
    ranges = [range(iface.decisions[di].size) for di, _ in iface.cells]
    for choice in itertools.product(*ranges):
        yield AdversaryStrategy(iface, choice)


class CheatArena:
    """A system with dangling wires that a deterministic adversary drives.

    ``receive`` are output wires of ``base`` the adversary reads, ``send``
    input wires of ``base`` it feeds.  Adversary wires get fresh ids "~wid".
    """

    def __init__(self, base: SystemGraph, receive: Sequence[str], send: Sequence[str],
                 order: Poset | None = None, name: str = "adversary"):
        self.base = base
        self.receive = tuple(receive)
        self.send = tuple(send)
        self.order = order if order is not None else base.poset
        self.name = name
        recv_slots = [(s, base.wire(w).size) for w in self.receive for s in base.wire(w).slots]
        quantum = any(base.wire(w).quantum for w in self.receive + self.send)
        decisions = []
        send_slots = [s for w in self.send for s in base.wire(w).slots]
        topo = {t: i for i, t in enumerate(self.order.topological_order())}
        send_slots.sort(key=lambda s: (topo[s[1]], natural_key(s[0])))
        for s in send_slots:
            vis = tuple(r for r, _ in recv_slots if self.order.lt(r[1], s[1]))
            decisions.append(Decision(s, base.wire(s[0]).size, vis))
        self.iface = AdversaryInterface(tuple(recv_slots), tuple(decisions), self.order, quantum)

    def strategies(self, cap: int = STRATEGY_CAP):
        return enumerate_adversaries(self.iface, cap)

    def adversary_box(self, strat: AdversaryStrategy):
        wires_in = [Wire("~" + w, "in", self.base.wire(w).size, self.base.wire(w).positions,
                         self.base.wire(w).quantum) for w in self.receive]
        wires_out = [Wire("~" + w, "out", self.base.wire(w).size, self.base.wire(w).positions,
                          self.base.wire(w).quantum) for w in self.send]
        if self.iface.quantum:
            return self._quantum_box(strat, wires_in, wires_out)
        decisions = self.iface.decisions

        def kernel(inp):
            out = {}
            for di, d in enumerate(decisions):
                prefix = tuple(inp[("~" + s[0], s[1])] for s in d.visible)
                out[("~" + d.slot[0], d.slot[1])] = strat.decide(di, prefix)
            return [(Fraction(1), out)]

        return CausalBox(self.name, wires_in, wires_out, self.order, kernel,
                         strict_precedence(self.order))

    def _quantum_box(self, strat, wires_in, wires_out):
        """Classical strategy on quantum wires: copy received basis values
        into memory, answer with basis states."""
        if not all(w.quantum for w in wires_in + wires_out):
            raise KernelError("mixed classical/quantum adversary interfaces are not supported")
        order = self.order
        by_pos: dict = {}
        for di, d in enumerate(self.iface.decisions):
            by_pos.setdefault(d.slot[1], []).append(di)
        topo = order.topological_order()
        steps = []
        consumed = []
        sizes = dict(self.iface.receives)
        for t in [x for x in topo if x in by_pos]:
            consume, alloc, ops = {}, [], []
            for r, _ in self.iface.receives:
                if order.lt(r[1], t) and r not in consumed:
                    reg = f"in_{r[0]}_{r[1]}"
                    consume[("~" + r[0], r[1])] = reg
                    alloc.append(("m" + reg, sizes[r]))
                    d = sizes[r]
                    ops.append((permutation_unitary([d, d], lambda b, d=d: (b[0], (b[1] + b[0]) % d)),
                                [reg, "m" + reg]))
                    consumed.append(r)
            emit = {}
            for di in by_pos[t]:
                dec = self.iface.decisions[di]
                oreg = f"out_{dec.slot[0]}_{t}"
                alloc.append((oreg, dec.size))
                mem = ["min_" + f"{s[0]}_{s[1]}" for s in dec.visible]
                dims = [sizes[s] for s in dec.visible] + [dec.size]

                def fn(b, di=di, size=dec.size):
                    return b[:-1] + ((b[-1] + strat.decide(di, b[:-1])) % size,)

                ops.append((permutation_unitary(dims, fn), mem + [oreg]))
                emit[("~" + dec.slot[0], t)] = oreg
            steps.append(QStep(t, consume, alloc, ops, emit))
        return QuantumBox(self.name, wires_in, wires_out, order, steps, strict_precedence(order))

    def mixture_box(self, mix: Sequence) -> CausalBox:
        """Randomized classical adversary: [(weight, strategy)] with weights summing to 1."""
        boxes = [(w, self.adversary_box(st)) for w, st in mix]
        first = boxes[0][1]

        def kernel(inp):
            key = tuple(inp[s] for s in first.in_slots)
            out: dict = {}
            for w, b in boxes:
                for k, p in b.behavior(key).items():
                    out[k] = out.get(k, 0) + w * p
            return out

        return CausalBox(self.name, first.in_wires, first.out_wires, self.order, kernel, first.chi)

    def play(self, strat) -> SystemGraph:
        """System with the adversary wired in (a strategy or a ready-made box)."""
        adv = strat if isinstance(strat, (CausalBox, QuantumBox)) else self.adversary_box(strat)
        links = list(self.base.links)
        links += [(w, "~" + w) for w in self.receive]
        links += [("~" + w, w) for w in self.send]
        return SystemGraph(self.base.boxes + (adv,), links, self.base.order)

    def best(self, objective: Callable[[Distribution], object], observe: Sequence[Slot] = (),
             threads: int | None = None, cap: int = STRATEGY_CAP):
        """Max of objective over deterministic strategies; first maximiser wins ties."""
        strats = list(self.strategies(cap))

        def score(st):
            return objective(run_exact(self.play(st), observe=observe))

        threads = threads or int(os.environ.get("THREADS", "1") or 1)
        if threads > 1 and len(strats) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                scores = list(pool.map(score, strats))
        else:
            scores = [score(st) for st in strats]
        best_i = 0
        for i, v in enumerate(scores):
            if v > scores[best_i]:
                best_i = i
        return scores[best_i], strats[best_i], len(strats)


def party_arena(p: WcfProtocol, party: str) -> CheatArena:
    """Arena in which ``party``'s boxes are replaced by an adversary."""
    honest = p.system()
    gone = {b.name for b in (p.alice if party == "alice" else p.bob)}
    base = honest.without(*gone)
    gone_wires = {w.id for b in honest.boxes if b.name in gone for w in b.in_wires + b.out_wires}
    receive = [o for o, n in honest.links if n in gone_wires and o not in gone_wires]
    send = [n for o, n in honest.links if o in gone_wires and n not in gone_wires]
    return CheatArena(base, receive, send, honest.poset, name=f"adv_{party}")


def best_cheat_alice(p: WcfProtocol, threads: int | None = None):
    arena = party_arena(p, "alice")
    label = slot_name(p.coin_b)
    v, st, _ = arena.best(lambda d: d.marginal([label])[(0,)], threads=threads)
    return v, st


def best_cheat_bob(p: WcfProtocol, threads: int | None = None):
    arena = party_arena(p, "bob")
    label = slot_name(p.coin_a)
    v, st, _ = arena.best(lambda d: d.marginal([label])[(1,)], threads=threads)
    return v, st


# ---------------------------------------------------------------- intcom

def inner_rounds(p: WcfProtocol) -> list:
    """Inner-interface rounds as [(position, frozenset of senders)] in order."""
    sysg = p.system()
    per_pos: dict = {}
    for o, n in p.links:
        so = p.side_of(sysg.boxes[sysg.owner[o][0]].name)
        sn = p.side_of(sysg.boxes[sysg.owner[n][0]].name)
        if so == sn:
            continue  # internal to one party
        for t in sysg.wire(o).positions:
            per_pos.setdefault(t, set()).add(so)
    order = sysg.poset
    topo = [t for t in order.topological_order() if t in per_pos]
    for a, b in zip(topo, topo[1:]):
        if not order.lt(a, b):
            raise NotCombModel(f"rounds at {a!r} and {b!r} are not causally ordered")
    rounds = [(t, frozenset(per_pos[t])) for t in topo]
    for (ta, sa), (tb, sb) in zip(rounds, rounds[1:]):
        if sa & sb:
            raise NotCombModel(f"{sorted(sa & sb)} send in consecutive rounds {ta!r}, {tb!r}")
    return rounds


def intcom(p: WcfProtocol) -> int:
    return len(inner_rounds(p))


def resource_intcom(box, adversary_wires: Sequence[str]) -> int:
    """Rounds on a resource's adversary interface (alternating directions)."""
    per_pos: dict = {}
    for w in adversary_wires:
        wire = box.wire(w)
        for t in wire.positions:
            per_pos.setdefault(t, set()).add(wire.direction)
    topo = [t for t in box.poset.topological_order() if t in per_pos]
    for a, b in zip(topo, topo[1:]):
        if not box.poset.lt(a, b) or per_pos[a] & per_pos[b] or len(per_pos[a]) > 1:
            raise NotCombModel("adversary-side messages do not alternate")
    return len(topo)


# ---------------------------------------------------------------- reports

QUANTUM_NOTE = ("classical strategy class only: for quantum kernels the maxima are "
                "lower bounds on the optimal cheating probabilities")


@dataclass
class SecurityReport:
    protocol: str
    params: WcfParams
    honest_dist: Distribution
    p_star_alice: object
    p_star_bob: object
    witness_alice: AdversaryStrategy | None
    witness_bob: AdversaryStrategy | None
    s1_ok: bool
    s2_ok: bool
    s3_ok: bool
    intcom: int | None
    quantum: bool = False
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.s1_ok and self.s2_ok and self.s3_ok

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "z": fmt(self.params.z), "eps": fmt(self.params.eps),
            "honest": self.honest_dist.to_json(),
            "p_star_alice": fmt(self.p_star_alice), "cap_alice": fmt(self.params.cap_alice),
            "p_star_bob": fmt(self.p_star_bob), "cap_bob": fmt(self.params.cap_bob),
            "s1_ok": self.s1_ok, "s2_ok": self.s2_ok, "s3_ok": self.s3_ok,
            "intcom": self.intcom, "quantum": self.quantum, "note": self.note,
            "witness_alice": self.witness_alice.as_table() if self.witness_alice else None,
            "witness_bob": self.witness_bob.as_table() if self.witness_bob else None,
        }

    CSV_FIELDS = ["protocol", "z", "eps", "p_star_alice", "cap_alice", "p_star_bob", "cap_bob",
                  "s1_ok", "s2_ok", "s3_ok", "intcom", "quantum"]

    def csv_row(self) -> dict:
        j = self.to_json()
        return {k: (str(j[k]).lower() if isinstance(j[k], bool) else j[k]) for k in self.CSV_FIELDS}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(self.csv_row())
        return buf.getvalue()


def check_s1(d: Distribution, z) -> bool:
    return d.probs == {k: v for k, v in {(0, 0): z, (1, 1): 1 - z}.items() if v != 0}


def verify_standalone(p: WcfProtocol, threads: int | None = None) -> SecurityReport:
    d = honest_distribution(p)
    pa, wa = best_cheat_alice(p, threads)
    pb, wb = best_cheat_bob(p, threads)
    z = p.params.z
    if d.exact:
        s1 = check_s1(d, z)
    else:
        s1 = (abs(float(d[(0, 0)]) - float(z)) < 1e-12 and abs(float(d[(1, 1)]) - float(1 - z)) < 1e-12)
    try:
        rounds = intcom(p)
    except NotCombModel:
        rounds = None
    tol = 0 if (d.exact and isinstance(pa, Fraction) and isinstance(pb, Fraction)) else 1e-12
    return SecurityReport(p.name, p.params, d, pa, pb, wa, wb, s1,
                          pa <= p.params.cap_alice + tol, pb <= p.params.cap_bob + tol, rounds,
                          p.quantum, QUANTUM_NOTE if p.quantum else "")
