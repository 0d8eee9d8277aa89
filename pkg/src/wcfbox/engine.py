"""System graphs of causal boxes and their exact execution."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .boxes import CausalBox, QuantumBox, Slot, Wire, slot_name
from .distribution import Distribution, tv_distance  # noqa: F401  (re-export)
from .errors import (AlreadyLinked, CausalLoopError, DimensionMismatch, ExplosionError,
                     UnschedulableError, WiringError)
from .poset import Poset, natural_key, union_posets
from .quantum import QState

DEFAULT_CAP = 10 ** 7


class SystemGraph:
    """Boxes plus links (output wire id, input wire id).

    ``order`` is an optional extra poset joined into the union of the box
    posets (used to state ambient orderings such as sequential blocks).
    """

    def __init__(self, boxes: Sequence = (), links: Iterable[tuple[str, str]] = (),
                 order: Poset | None = None, open_ok: bool = False):
        self.boxes = tuple(boxes)
        self.links = tuple(tuple(l) for l in links)
        self.order = order
        names = [b.name for b in self.boxes]
        if len(set(names)) != len(names):
            raise WiringError(f"duplicate box names: {names}")
        self.owner: dict[str, tuple[int, Wire]] = {}
        for i, b in enumerate(self.boxes):
            for w in b.in_wires + b.out_wires:
                if w.id in self.owner:
                    raise WiringError(f"wire id {w.id!r} used by two boxes")
                self.owner[w.id] = (i, w)
        self.link_of_in: dict[str, str] = {}
        self.link_of_out: dict[str, str] = {}
        for o, n in self.links:
            self._check_link(o, n)
            self.link_of_in[n] = o
            self.link_of_out[o] = n
        posets = [b.poset for b in self.boxes] + ([order] if order is not None else [])
        self.poset = union_posets(*posets) if posets else Poset([])
        self._plan = None
        if not open_ok:
            self.plan()  # raises CausalLoopError when unschedulable

    def _check_link(self, o, n):
        if o not in self.owner:
            raise WiringError(f"unknown wire {o!r}")
        if n not in self.owner:
            raise WiringError(f"unknown wire {n!r}")
        wo, wn = self.owner[o][1], self.owner[n][1]
        if wo.direction != "out" or wn.direction != "in":
            raise WiringError(f"link must go from an output to an input: {o!r}->{n!r}")
        if o in self.link_of_out or n in self.link_of_in:
            raise AlreadyLinked(f"{o!r} or {n!r} already linked")
        if wo.size != wn.size or wo.quantum != wn.quantum:
            raise DimensionMismatch(f"{o!r} ({wo.size}) vs {n!r} ({wn.size})")
        if wo.positions != wn.positions:
            raise DimensionMismatch(f"{o!r} and {n!r} carry different positions")

    # ---------------------------------------------------------------- building
    def connect(self, out_w: str, in_w: str) -> "SystemGraph":
        return SystemGraph(self.boxes, self.links + ((out_w, in_w),), self.order)

    def add(self, *boxes) -> "SystemGraph":
        return SystemGraph(self.boxes + tuple(boxes), self.links, self.order)

    def without(self, *names: str) -> "SystemGraph":
        """Drop boxes by name together with their links.

        The result may have dangling quantum inputs, so it is not planned
        until it is run.
        """
        keep = [b for b in self.boxes if b.name not in names]
        ids = {w.id for b in keep for w in b.in_wires + b.out_wires}
        links = [(o, n) for o, n in self.links if o in ids and n in ids]
        return SystemGraph(keep, links, self.order, open_ok=True)

    def box(self, name: str):
        for b in self.boxes:
            if b.name == name:
                return b
        raise KeyError(name)

    @property
    def external_inputs(self) -> tuple:
        return tuple(s for b in self.boxes for s in b.in_slots if s[0] not in self.link_of_in)

    @property
    def external_outputs(self) -> tuple:
        outs = [s for b in self.boxes for s in b.out_slots if s[0] not in self.link_of_out]
        return tuple(sorted(outs, key=lambda s: (natural_key(s[1]), natural_key(s[0]))))

    def all_slots(self) -> tuple:
        return tuple(s for b in self.boxes for s in b.in_slots + b.out_slots)

    def wire(self, wid) -> Wire:
        return self.owner[wid][1]

    # ---------------------------------------------------------------- schedule
    def plan(self, schedule_seed: int | None = None) -> list:
        if schedule_seed is None and self._plan is not None:
            return self._plan
        events = {}  # key -> (position, deps)
        for bi, b in enumerate(self.boxes):
            for s in b.in_slots:
                if s[0] in self.link_of_in:
                    src = (self.link_of_in[s[0]], s[1])
                    events[("link", s)] = (s[1], [self._producer(src)])
                else:
                    if b.wires[s[0]].quantum:
                        raise UnschedulableError(f"external quantum input {slot_name(s)} is not supported")
                    events[("ext", s)] = (s[1], [])
            if isinstance(b, QuantumBox):
                prev = None
                for k, st in enumerate(b.steps):
                    deps = [self._arrival(s) for s in st.consume]
                    if prev is not None:
                        deps.append(prev)
                    events[("qstep", bi, k)] = (st.position, deps)
                    prev = ("qstep", bi, k)
            else:
                for s in b.out_slots:
                    deps = [self._arrival(x) for x in b.visible_inputs(s[1])]
                    events[("cout", s)] = (s[1], deps)
        rng = random.Random(schedule_seed) if schedule_seed is not None else None
        indeg = {k: 0 for k in events}
        users: dict = {k: [] for k in events}
        for k, (_, deps) in events.items():
            for d in set(deps):
                indeg[k] += 1
                users[d].append(k)

        def key(k):
            pos = events[k][0]
            tag = k[1] if k[0] != "qstep" else (self.boxes[k[1]].name, k[2])
            return (natural_key(pos), str(tag))

        ready = sorted([k for k, d in indeg.items() if d == 0], key=key)
        order = []
        while ready:
            if rng is None:
                k = ready.pop(0)
            else:
                k = ready.pop(rng.randrange(len(ready)))
            order.append(k)
            for u in users[k]:
                indeg[u] -= 1
                if indeg[u] == 0:
                    ready.append(u)
            if rng is None:
                ready.sort(key=key)
        if len(order) != len(events):
            stuck = sorted(str(k) for k, d in indeg.items() if d > 0)
            raise CausalLoopError(f"no valid schedule; blocked events: {stuck[:6]}")
        if schedule_seed is None:
            self._plan = order
        return order

    def _producer(self, out_slot):
        bi, _ = self.owner[out_slot[0]]
        b = self.boxes[bi]
        if isinstance(b, QuantumBox):
            return ("qstep", bi, b.step_of()[out_slot])
        return ("cout", out_slot)

    def _arrival(self, in_slot):
        return ("link", in_slot) if in_slot[0] in self.link_of_in else ("ext", in_slot)

    def schedule_slots(self) -> list:
        """Slots in execution order (quantum steps expanded)."""
        out = []
        for ev in self.plan():
            if ev[0] == "qstep":
                out.extend(self.boxes[ev[1]].steps[ev[2]].outputs())
            else:
                out.append(ev[1])
        return out

    def __repr__(self):
        return f"SystemGraph(boxes={[b.name for b in self.boxes]}, links={list(self.links)})"


def connect(s: SystemGraph, out_w: str, in_w: str) -> SystemGraph:
    return s.connect(out_w, in_w)


def system(boxes, links=(), order=None) -> SystemGraph:
    return SystemGraph(boxes, links, order)


# -------------------------------------------------------------------- execute

class _Executor:
    def __init__(self, s: SystemGraph, external_inputs, observe, cap, schedule_seed):
        self.s = s
        self.cap = cap
        self.plan = s.plan(schedule_seed)
        self.ext = self._ext_inputs(external_inputs or {})
        self.outputs = list(s.external_outputs) + [tuple(o) for o in observe
                                                    if tuple(o) not in s.external_outputs]
        self.labels = [slot_name(o) for o in self.outputs]
        self.quantum = any(isinstance(b, QuantumBox) for b in s.boxes)
        # per classical output event: which inputs are known and which outputs came first
        known: set = set()
        self.prep = []
        for ev in self.plan:
            if ev[0] == "cout":
                slot = ev[1]
                bi, _ = s.owner[slot[0]]
                b = s.boxes[bi]
                in_known = tuple(x in known for x in b.in_slots)
                prior = tuple(i for i, o in enumerate(b.out_slots) if o in known)
                self.prep.append((b, in_known, prior, b.out_slots.index(slot)))
                known.add(slot)
            elif ev[0] == "qstep":
                self.prep.append(None)
                known.update(s.boxes[ev[1]].steps[ev[2]].outputs())
            else:
                self.prep.append(None)
                known.add(ev[1])
        self.leaves = 0

    def _ext_inputs(self, given: Mapping) -> dict:
        out = {}
        for k, v in given.items():
            if isinstance(k, str) and "@" in k:
                k = tuple(k.rsplit("@", 1))
            if isinstance(k, str):
                w = self.s.wire(k)
                if len(w.positions) != 1:
                    raise ValueError(f"wire {k!r} has several positions; give wire@pos")
                k = (k, w.positions[0])
            out[tuple(k)] = int(v)
        for slot in self.s.external_inputs:
            if slot not in out:
                raise ValueError(f"missing external input {slot_name(slot)}")
            if not 0 <= out[slot] < self.s.wire(slot[0]).size:
                raise ValueError(f"external input out of range on {slot_name(slot)}")
        return out

    def _branches(self, idx, values, q):
        """Yield (value-updates, prob, new qstate) alternatives for event idx."""
        ev = self.plan[idx]
        kind = ev[0]
        if kind == "ext":
            return [({ev[1]: self.ext[ev[1]]}, None, q)]
        if kind == "link":
            slot = ev[1]
            src = (self.s.link_of_in[slot[0]], slot[1])
            if self.s.wire(slot[0]).quantum:
                return [({}, None, q.rename("@" + slot_name(src), "@" + slot_name(slot)))]
            return [({slot: values[src]}, None, q)]
        if kind == "cout":
            b, in_known, prior, target = self.prep[idx]
            inp = tuple(values[x] if k else 0 for x, k in zip(b.in_slots, in_known))
            given = tuple((i, values[b.out_slots[i]]) for i in prior)
            slot = ev[1]
            return [({slot: v}, p, q) for v, p in b.conditional(inp, given, target)]
        # quantum step
        b = self.s.boxes[ev[1]]
        st = b.steps[ev[2]]
        pre = b.name + "/"
        if ev[2] == 0:
            for reg, dim in b.memory:
                q = q.add(pre + reg, dim)
        for s, reg in st.consume.items():
            q = q.rename("@" + slot_name(s), pre + reg)
        for reg, dim in st.alloc:
            q = q.add(pre + reg, dim)
        for u, regs in st.ops:
            q = q.apply(u, [pre + r for r in regs])
        for s, reg in st.emit.items():
            q = q.rename(pre + reg, "@" + slot_name(s))
        alts = [({}, q)]
        for s, reg in st.measure.items():
            nxt = []
            for upd, qq in alts:
                for v, part in qq.measure(pre + reg):
                    nxt.append(({**upd, s: v}, part))
            alts = nxt
        return [(upd, "q", qq) for upd, qq in alts]

    def run(self, rng: random.Random | None = None):
        acc: dict = {}
        q0 = QState() if self.quantum else None
        n = len(self.plan)
        # explicit stack of (event index, values, weight, qstate)
        stack = [(0, {}, Fraction(1), q0)]
        while stack:
            idx, values, w, q = stack.pop()
            if idx == n:
                self.leaves += 1
                if self.leaves > self.cap:
                    raise ExplosionError(f"more than {self.cap} branches")
                key = tuple(values[o] for o in self.outputs)
                weight = w * q.norm2() if q is not None else w
                if rng is not None:
                    return key
                acc[key] = acc.get(key, 0) + weight
                continue
            alts = self._branches(idx, values, q)
            if rng is not None:
                alts = [self._pick(alts, q, rng)]
            for upd, p, qq in reversed(alts):
                nv = {**values, **upd} if upd else values
                nw = w * p if isinstance(p, (Fraction, float, int)) else w
                stack.append((idx + 1, nv, nw, qq))
        return Distribution(self.labels, acc)

    @staticmethod
    def _pick(alts, q, rng):
        if len(alts) == 1:
            return alts[0]
        if alts[0][1] == "q":
            ws = [float(a[2].norm2()) for a in alts]
        else:
            ws = [float(a[1]) for a in alts]
        r = rng.random() * sum(ws)
        for a, wt in zip(alts, ws):
            r -= wt
            if r < 0:
                return a
        return alts[-1]


def run_exact(s: SystemGraph, external_inputs: Mapping | None = None, observe: Sequence[Slot] = (),
              cap: int = DEFAULT_CAP, schedule_seed: int | None = None) -> Distribution:
    """Exact law of the external outputs (plus any ``observe`` slots)."""
    ex = _Executor(s, external_inputs, observe, cap, schedule_seed)
    d = ex.run()
    if d.exact and d.total() != 1:
        raise AssertionError(f"distribution sums to {d.total()}")
    return d


def sample(s: SystemGraph, seed: int, external_inputs: Mapping | None = None,
           observe: Sequence[Slot] = ()) -> dict:
    """One transcript drawn with a seeded generator, as {slot name: value}."""
    ex = _Executor(s, external_inputs, observe, DEFAULT_CAP, None)
    key = ex.run(random.Random(seed))
    return dict(zip(ex.labels, key))


def sample_many(s: SystemGraph, n: int, seed: int, external_inputs=None) -> dict:
    """Outcome counts from n seeded draws (one generator shared across draws)."""
    ex = _Executor(s, external_inputs, (), DEFAULT_CAP, None)
    rng = random.Random(seed)
    counts: dict = {}
    for _ in range(n):
        k = ex.run(rng)
        counts[k] = counts.get(k, 0) + 1
    return counts
