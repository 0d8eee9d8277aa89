"""Causal boxes: wires, classical stochastic kernels and pure-quantum step lists."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .errors import KernelError, UnknownElement
from .poset import (CausalityFn, DelayFn, Poset, delay_to_causality, natural_key,
                    strict_precedence, union_posets)
from .quantum import as_matrix, check_unitary

Slot = tuple  # (wire id, position)


def slot_name(s: Slot) -> str:
    return f"{s[0]}@{s[1]}"


def parse_slot(text: str) -> Slot:
    w, _, t = text.rpartition("@")
    if not w:
        raise ValueError(f"slot must look like wire@position, got {text!r}")
    return (w, t)


@dataclass(frozen=True)
class Wire:
    id: str
    direction: str  # "in" or "out"
    size: int = 2  # alphabet size, or Hilbert dimension when quantum
    positions: tuple = ()
    quantum: bool = False

    def __post_init__(self):
        if self.direction not in ("in", "out"):
            raise ValueError(f"bad direction {self.direction!r}")
        if self.size < 1:
            raise ValueError("alphabet size must be positive")
        if "@" in self.id:
            raise ValueError("wire ids may not contain '@'")
        pos = tuple(sorted(set(self.positions), key=natural_key))
        if len(pos) != len(tuple(self.positions)):
            raise ValueError(f"wire {self.id!r} repeats a position")
        object.__setattr__(self, "positions", pos)

    @property
    def slots(self) -> tuple:
        return tuple((self.id, t) for t in self.positions)


def win(id, positions, size=2, quantum=False) -> Wire:
    if isinstance(positions, str):
        positions = (positions,)
    return Wire(id, "in", size, tuple(positions), quantum)


def wout(id, positions, size=2, quantum=False) -> Wire:
    if isinstance(positions, str):
        positions = (positions,)
    return Wire(id, "out", size, tuple(positions), quantum)


class Inputs(dict):
    """Input transcript; single-position wires may be indexed by wire id."""

    def __missing__(self, key):
        if isinstance(key, str):
            hits = [k for k in self if k[0] == key]
            if len(hits) == 1:
                return dict.__getitem__(self, hits[0])
        raise KeyError(key)


class _BoxBase:
    name: str
    in_wires: tuple
    out_wires: tuple
    poset: Poset
    chi: CausalityFn

    def _setup(self, name, in_wires, out_wires, poset, chi):
        self.name = name
        self.in_wires = tuple(in_wires)
        self.out_wires = tuple(out_wires)
        self.poset = poset
        ids = [w.id for w in self.in_wires + self.out_wires]
        if len(set(ids)) != len(ids):
            raise ValueError(f"box {name!r} has duplicate wire ids")
        for w in self.in_wires + self.out_wires:
            for t in w.positions:
                if t not in poset:
                    raise UnknownElement(f"wire {w.id!r} position {t!r} not in box poset")
        self.chi = chi if chi is not None else strict_precedence(poset)
        self.in_slots = tuple(s for w in self.in_wires for s in w.slots)
        self.out_slots = tuple(s for w in self.out_wires for s in w.slots)
        self.wires = {w.id: w for w in self.in_wires + self.out_wires}

    def wire(self, wid) -> Wire:
        return self.wires[wid]

    def slot_size(self, s: Slot) -> int:
        return self.wires[s[0]].size

    def visible_inputs(self, t) -> tuple:
        """Input slots an output at t may depend on: positions in χ(T^{⪯t})."""
        img = self.chi.image(t)
        return tuple(s for s in self.in_slots if s[1] in img)

    @property
    def quantum(self) -> bool:
        return False


class CausalBox(_BoxBase):
    """Classical box; the kernel maps a full input transcript to a joint output law.

    The kernel is called with an :class:`Inputs` dict and returns either a
    mapping {outcome tuple aligned with out_slots: prob} or an iterable of
    (prob, {slot or wire id: value}) pairs.
    """

    def __init__(self, name: str, in_wires: Sequence[Wire], out_wires: Sequence[Wire],
                 poset: Poset, kernel: Callable, chi: CausalityFn | None = None):
        self._setup(name, in_wires, out_wires, poset, chi)
        for w in self.in_wires + self.out_wires:
            if w.quantum:
                raise KernelError(f"classical box {name!r} has quantum wire {w.id!r}")
        self.kernel = kernel
        self._cache: dict = {}
        self._cond_cache: dict = {}
        self._out_index = {s: i for i, s in enumerate(self.out_slots)}

    def input_space(self):
        return itertools.product(*[range(self.slot_size(s)) for s in self.in_slots])

    def _normalize(self, raw) -> dict:
        out: dict = {}
        if isinstance(raw, Mapping):
            items = [(p, k) for k, p in raw.items()]
        else:
            items = list(raw)
        for p, k in items:
            if isinstance(k, Mapping):
                vals = [None] * len(self.out_slots)
                for key, v in k.items():
                    if isinstance(key, str):
                        hits = [s for s in self.out_slots if s[0] == key]
                        if len(hits) != 1:
                            raise KernelError(f"{self.name}: wire {key!r} is ambiguous or unknown")
                        key = hits[0]
                    vals[self._out_index[key]] = v
                if any(v is None for v in vals):
                    raise KernelError(f"{self.name}: kernel left an output unset")
                k = tuple(vals)
            if isinstance(k, int):
                k = (k,)
            k = tuple(int(v) for v in k)
            if len(k) != len(self.out_slots):
                raise KernelError(f"{self.name}: outcome length mismatch")
            for s, v in zip(self.out_slots, k):
                if not 0 <= v < self.slot_size(s):
                    raise KernelError(f"{self.name}: value {v} out of range on {slot_name(s)}")
            if isinstance(p, int):
                p = Fraction(p)
            if p < 0:
                raise KernelError(f"{self.name}: negative probability")
            if p:
                out[k] = out.get(k, 0) + p
        total = sum(out.values(), Fraction(0))
        if total != 1 and not (isinstance(total, float) and abs(total - 1) < 1e-12):
            raise KernelError(f"{self.name}: kernel row sums to {total}, not 1")
        return out

    def behavior(self, inp: tuple) -> dict:
        """Joint law of all outputs given the complete input tuple (in_slots order)."""
        inp = tuple(inp)
        hit = self._cache.get(inp)
        if hit is None:
            hit = self._normalize(self.kernel(Inputs(zip(self.in_slots, inp))))
            self._cache[inp] = hit
        return hit

    def conditional(self, inp: tuple, given: tuple, target: int) -> list:
        """P(output[target] | outputs at `given` (index, value) pairs) as [(v, p)]."""
        key = (inp, given, target)
        hit = self._cond_cache.get(key)
        if hit is not None:
            return hit
        acc: dict = {}
        for k, p in self.behavior(inp).items():
            if all(k[i] == v for i, v in given):
                acc[k[target]] = acc.get(k[target], 0) + p
        mass = sum(acc.values())
        if mass == 0:
            raise KernelError(f"{self.name}: conditioning on an impossible output prefix")
        hit = [(v, acc[v] / mass) for v in sorted(acc)]
        self._cond_cache[key] = hit
        return hit

    def table(self) -> dict:
        return {inp: self.behavior(inp) for inp in self.input_space()}

    def __repr__(self):
        return f"CausalBox({self.name!r}, in={[w.id for w in self.in_wires]}, out={[w.id for w in self.out_wires]})"


def table_kernel(in_slots: Sequence[Slot], rows: Mapping[tuple, Mapping[tuple, object]]) -> Callable:
    """Kernel backed by an explicit table keyed by input tuples."""
    in_slots = tuple(in_slots)

    def k(inp):
        key = tuple(inp[s] for s in in_slots)
        try:
            return rows[key]
        except KeyError:
            raise KernelError(f"no kernel row for inputs {key}") from None

    return k


def deterministic_kernel(fn: Callable[[Inputs], Mapping]) -> Callable:
    def k(inp):
        return [(Fraction(1), fn(inp))]
    return k


def bit(p0) -> list:
    """[(p, 0), (1-p, 1)] for a biased bit with Pr[0] = p0."""
    p0 = Fraction(p0) if not isinstance(p0, float) else p0
    return [(p0, 0), (1 - p0, 1)]


# ------------------------------------------------------------------ quantum

@dataclass
class QStep:
    """One step of a quantum box, fired at ``position``.

    consume: input slot -> local register name (absorbs the message register)
    alloc:   fresh local registers (name, dim) initialised to |0>
    ops:     (matrix, [local registers]) applied in order
    emit:    quantum output slot -> local register sent out
    measure: classical output slot -> local register measured and discarded
    """
    position: str
    consume: Mapping = field(default_factory=dict)
    alloc: Sequence = ()
    ops: Sequence = ()
    emit: Mapping = field(default_factory=dict)
    measure: Mapping = field(default_factory=dict)

    def outputs(self) -> tuple:
        return tuple(self.emit) + tuple(self.measure)


class QuantumBox(_BoxBase):
    """Pure-state box given as an ordered step list; dims at most 4."""

    MAX_DIM = 4

    def __init__(self, name: str, in_wires: Sequence[Wire], out_wires: Sequence[Wire],
                 poset: Poset, steps: Sequence[QStep], chi: CausalityFn | None = None,
                 memory: Sequence = ()):
        self._setup(name, in_wires, out_wires, poset, chi)
        self.memory = tuple(memory)
        self.steps = []
        for st in steps:
            ops = tuple((as_matrix(u), tuple(regs)) for u, regs in st.ops)
            for u, _ in ops:
                check_unitary(u)
            self.steps.append(QStep(st.position, dict(st.consume), tuple(st.alloc), ops,
                                    dict(st.emit), dict(st.measure)))
        self._validate()

    def _validate(self):
        produced = []
        consumed = set()
        # taint[reg]: input slots whose content may have flowed into reg
        taint: dict = {reg: set() for reg, _ in self.memory}
        for k, st in enumerate(self.steps):
            if not st.outputs():
                raise KernelError(f"{self.name}: step {k} produces no output")
            vis = set(self.visible_inputs(st.position))
            for s, reg in st.consume.items():
                if s not in self.in_slots:
                    raise KernelError(f"{self.name}: step {k} consumes unknown slot {s}")
                if s in consumed:
                    raise KernelError(f"{self.name}: slot {s} consumed twice")
                consumed.add(s)
                taint[reg] = {s}
            for reg, _ in st.alloc:
                taint[reg] = set()
            for _, regs in st.ops:
                mixed = set().union(*(taint.get(r, set()) for r in regs))
                for r in regs:
                    taint[r] = set(mixed)
            for reg in list(st.emit.values()) + list(st.measure.values()):
                bad = taint.get(reg, set()) - vis
                if bad:
                    s = sorted(bad)[0]
                    raise KernelError(f"{self.name}: output at {st.position} uses input {slot_name(s)} outside chi")
                taint.pop(reg, None)
            for s in st.emit:
                if not self.wires[s[0]].quantum:
                    raise KernelError(f"{self.name}: emit on classical wire {s[0]!r}")
            for s in st.measure:
                if self.wires[s[0]].quantum:
                    raise KernelError(f"{self.name}: measurement into quantum wire {s[0]!r}")
            for s in st.outputs():
                if s[1] != st.position:
                    raise KernelError(f"{self.name}: step at {st.position} emits at {s[1]}")
                produced.append(s)
            for _, d in st.alloc:
                if d > self.MAX_DIM:
                    raise KernelError("register dimension above 4")
        if sorted(produced) != sorted(self.out_slots):
            raise KernelError(f"{self.name}: steps must produce every output slot exactly once")
        for w in self.in_wires + self.out_wires:
            if w.quantum and w.size > self.MAX_DIM:
                raise KernelError("wire dimension above 4")

    @property
    def quantum(self) -> bool:
        return True

    def step_of(self) -> dict:
        return {s: k for k, st in enumerate(self.steps) for s in st.outputs()}

    def __repr__(self):
        return f"QuantumBox({self.name!r}, steps={len(self.steps)})"


# ------------------------------------------------------------- combinators

def _parallel_chi(p: Poset, a: _BoxBase, b: _BoxBase) -> CausalityFn:
    images = {}
    for t in p.elements:
        down = p.downset(t)
        img = set(a.chi(frozenset(x for x in down if x in a.poset)))
        img |= b.chi(frozenset(x for x in down if x in b.poset))
        images[t] = p.closure_of(img)
    return CausalityFn(p, images)


def parallel(a: CausalBox, b: CausalBox, name: str | None = None) -> CausalBox:
    """Product box on the union poset; each factor reads only its own inputs."""
    if a.quantum or b.quantum:
        raise KernelError("parallel() composes classical boxes; put quantum boxes in a SystemGraph")
    p = union_posets(a.poset, b.poset)
    chi = _parallel_chi(p, a, b)
    def kernel(inp):
        ia = tuple(inp[s] for s in a.in_slots)
        ib = tuple(inp[s] for s in b.in_slots)
        da, db = a.behavior(ia), b.behavior(ib)
        return {ka + kb: pa * pb for ka, pa in da.items() for kb, pb in db.items()}

    return CausalBox(name or f"{a.name}|{b.name}", a.in_wires + b.in_wires,
                     a.out_wires + b.out_wires, p, kernel, chi)


def delay_box(f: DelayFn, in_id: str, out_id: str, size: int = 2, quantum: bool = False,
              name: str | None = None) -> _BoxBase:
    """Relay moving the message at t on ``in_id`` to f(t) on ``out_id``."""
    images = list(f.mapping.values())
    if len(set(images)) != len(images):
        raise KernelError("delay function must be injective (one message per position)")
    p = f.poset
    chi = delay_to_causality(p, f)
    dom = f.domain
    inw = Wire(in_id, "in", size, dom, quantum)
    outw = Wire(out_id, "out", size, tuple(f(t) for t in dom), quantum)
    name = name or f"delay[{in_id}->{out_id}]"
    if quantum:
        steps = [QStep(f(t), consume={(in_id, t): f"r{k}"}, emit={(out_id, f(t)): f"r{k}"})
                 for k, t in sorted(enumerate(dom), key=lambda kt: natural_key(f(kt[1])))]
        return QuantumBox(name, [inw], [outw], p, steps, chi)

    def kernel(inp):
        return [(Fraction(1), {(out_id, f(t)): inp[(in_id, t)] for t in dom})]

    return CausalBox(name, [inw], [outw], p, kernel, chi)


def identity_box(name: str, in_id: str, out_id: str, positions, size=2) -> CausalBox:
    """Pass-through on the same positions; causal only because outputs sit on
    a later copy of each position (``pos + '+'``)."""
    pos = tuple(positions)
    later = tuple(t + "+" for t in pos)
    p = Poset(pos + later, list(zip(pos, later)))
    return delay_box(DelayFn(p, dict(zip(pos, later))), in_id, out_id, size, name=name)


# ------------------------------------------------------------ causality check

@dataclass
class CausalityViolation:
    cut: frozenset
    inputs_a: tuple
    inputs_b: tuple

    def __str__(self):
        return f"marginal on {sorted(self.cut)} differs between inputs {self.inputs_a} and {self.inputs_b}"


def check_causality(box: CausalBox) -> list:
    """Outputs inside each cut C must not depend on inputs outside χ(C)."""
    violations = []
    p = box.poset
    inputs = list(box.input_space())
    for m in p.cut_masks():
        cut = p.labels(m)
        allowed = box.chi(cut)
        out_idx = [i for i, s in enumerate(box.out_slots) if s[1] in cut]
        in_idx = [i for i, s in enumerate(box.in_slots) if s[1] in allowed]
        groups: dict = {}
        for inp in inputs:
            key = tuple(inp[i] for i in in_idx)
            marg: dict = {}
            for k, pr in box.behavior(inp).items():
                kk = tuple(k[i] for i in out_idx)
                marg[kk] = marg.get(kk, 0) + pr
            if key in groups:
                ref_inp, ref = groups[key]
                if ref != marg:
                    violations.append(CausalityViolation(cut, ref_inp, inp))
            else:
                groups[key] = (inp, marg)
    return violations


def relabel_box(box: _BoxBase, pos_map: Callable[[str], str], wire_map: Callable[[str], str],
                name: str | None = None) -> _BoxBase:
    """Copy of a box with positions and wire ids renamed."""
    p = Poset([pos_map(t) for t in box.poset.elements],
              [(pos_map(a), pos_map(b)) for a, b in box.poset.covers])
    chi = CausalityFn(p, {pos_map(t): {pos_map(x) for x in img} for t, img in box.chi.images.items()})

    def rw(w: Wire) -> Wire:
        return Wire(wire_map(w.id), w.direction, w.size, tuple(pos_map(t) for t in w.positions), w.quantum)

    def rs(s):
        return (wire_map(s[0]), pos_map(s[1]))

    name = name or box.name
    if isinstance(box, QuantumBox):
        steps = [QStep(pos_map(st.position), {rs(s): r for s, r in st.consume.items()}, st.alloc,
                       st.ops, {rs(s): r for s, r in st.emit.items()},
                       {rs(s): r for s, r in st.measure.items()}) for st in box.steps]
        return QuantumBox(name, [rw(w) for w in box.in_wires], [rw(w) for w in box.out_wires],
                          p, steps, chi, box.memory)
    inv = {rs(s): s for s in box.in_slots}
    orig = box

    new_out = [rs(s) for s in orig.out_slots]

    def kernel(inp):
        base = Inputs((inv[s], v) for s, v in inp.items())
        law = orig.behavior(tuple(base[s] for s in orig.in_slots))
        return [(pr, dict(zip(new_out, k))) for k, pr in law.items()]

    return CausalBox(name, [rw(w) for w in box.in_wires], [rw(w) for w in box.out_wires],
                     p, kernel, chi)
