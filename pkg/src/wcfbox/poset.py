"""Finite posets, cuts, causality functions and delay functions.

Subsets are handled internally as integer bitmasks over a fixed element
ordering; the public API speaks frozensets of labels.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import CycleError, IncompatibleError, NotAdvancing, NotASubposet, UnknownElement

_NUM = re.compile(r"(\d+)")


def natural_key(label: str):
    """Sort key that orders t2 before t10."""
    parts = _NUM.split(str(label))
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p != "")


class Poset:
    """A finite partial order on string labels."""

    def __init__(self, elements: Iterable[str], relations: Iterable[tuple[str, str]] = ()):
        elems = list(elements)
        if len(set(elems)) != len(elems):
            raise ValueError("duplicate element labels")
        self.elements: tuple[str, ...] = tuple(sorted(elems, key=natural_key))
        self.index = {t: i for i, t in enumerate(self.elements)}
        n = len(self.elements)
        below = [1 << i for i in range(n)]  # direct relations first
        for a, b in relations:
            for x in (a, b):
                if x not in self.index:
                    raise UnknownElement(f"unknown element {x!r}")
            below[self.index[b]] |= 1 << self.index[a]
        # transitive closure (Warshall on bitmasks)
        for k in range(n):
            bk = 1 << k
            for i in range(n):
                if below[i] & bk:
                    below[i] |= below[k]
        for i in range(n):
            for j in range(i + 1, n):
                if below[i] >> j & 1 and below[j] >> i & 1:
                    raise CycleError(
                        f"cycle through {self.elements[i]!r} and {self.elements[j]!r}")
        self._down = below
        self._up = [0] * n
        for i in range(n):
            m = below[i]
            for j in range(n):
                if m >> j & 1:
                    self._up[j] |= 1 << i
        covers = []
        for i in range(n):
            strict = below[i] & ~(1 << i)
            for j in range(n):
                if not strict >> j & 1:
                    continue
                # j covered by i unless some k sits strictly between
                mid = strict & self._up[j] & ~(1 << j)
                if not mid:
                    covers.append((self.elements[j], self.elements[i]))
        self.covers: frozenset[tuple[str, str]] = frozenset(covers)
        self._full = (1 << n) - 1
        self._topo = None

    # basic relation queries
    def _idx(self, t):
        try:
            return self.index[t]
        except KeyError:
            raise UnknownElement(f"unknown element {t!r}") from None

    def le(self, a, b) -> bool:
        return bool(self._down[self._idx(b)] >> self._idx(a) & 1)

    def lt(self, a, b) -> bool:
        return a != b and self.le(a, b)

    def mask(self, labels: Iterable[str]) -> int:
        m = 0
        for t in labels:
            m |= 1 << self._idx(t)
        return m

    def labels(self, m: int) -> frozenset:
        return frozenset(t for i, t in enumerate(self.elements) if m >> i & 1)

    def down_mask(self, t) -> int:
        return self._down[self._idx(t)]

    def downset(self, t) -> frozenset:
        return self.labels(self.down_mask(t))

    def strict_downset(self, t) -> frozenset:
        return self.labels(self.down_mask(t) & ~(1 << self._idx(t)))

    def upset(self, t) -> frozenset:
        return self.labels(self._up[self._idx(t)])

    def closure_of(self, labels: Iterable[str]) -> frozenset:
        return self.labels(self.down_closure_mask(self.mask(labels)))

    def down_closure_mask(self, m: int) -> int:
        out = 0
        i = 0
        while m:
            if m & 1:
                out |= self._down[i]
            m >>= 1
            i += 1
        return out

    def relation(self) -> frozenset:
        """All pairs (a, b) with a ⪯ b."""
        return frozenset((a, b) for b in self.elements for a in self.downset(b))

    def topological_order(self) -> tuple[str, ...]:
        """Smallest linear extension under natural label order."""
        if self._topo is None:
            done = 0
            order = []
            n = len(self.elements)
            while len(order) < n:
                for i in range(n):
                    if not done >> i & 1 and (self._down[i] & ~(1 << i)) & ~done == 0:
                        order.append(self.elements[i])
                        done |= 1 << i
                        break
            self._topo = tuple(order)
        return self._topo

    def maximal(self, labels=None) -> frozenset:
        m = self._full if labels is None else self.mask(labels)
        return frozenset(t for t in self.labels(m)
                         if not (self._up[self.index[t]] & m & ~(1 << self.index[t])))

    def minimal(self, labels=None) -> frozenset:
        m = self._full if labels is None else self.mask(labels)
        return frozenset(t for t in self.labels(m)
                         if not (self._down[self.index[t]] & m & ~(1 << self.index[t])))

    def cut_masks(self) -> Iterator[int]:
        """Every downward-closed subset, each exactly once."""
        order = [self.index[t] for t in self.topological_order()]
        preds = [self._down[i] & ~(1 << i) for i in range(len(self.elements))]

        def rec(k, m):
            if k == len(order):
                yield m
                return
            i = order[k]
            yield from rec(k + 1, m)
            if preds[i] & ~m == 0:
                yield from rec(k + 1, m | 1 << i)

        yield from rec(0, 0)

    def cuts(self) -> list["Cut"]:
        return [Cut(self, self.labels(m)) for m in self.cut_masks()]

    def is_bounded_mask(self, m: int) -> bool:
        if m == 0:
            return True
        return any(self._down[i] & m == m for i in range(len(self.elements)))

    def __eq__(self, other):
        return (isinstance(other, Poset) and set(self.elements) == set(other.elements)
                and self.relation() == other.relation())

    def __hash__(self):
        return hash((frozenset(self.elements), self.covers))

    def __len__(self):
        return len(self.elements)

    def __contains__(self, t):
        return t in self.index

    def __repr__(self):
        return f"Poset({list(self.elements)}, covers={sorted(self.covers)})"

    def to_dict(self) -> dict:
        return {"elements": list(self.elements),
                "covers": [list(e) for e in sorted(self.covers, key=lambda e: (natural_key(e[0]), natural_key(e[1])))]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Poset":
        return build_poset(d["elements"], [tuple(e) for e in d.get("covers", [])])


def build_poset(elements: Iterable[str], covers: Iterable[tuple[str, str]] = ()) -> Poset:
    return Poset(elements, covers)


def chain(labels: Iterable[str]) -> Poset:
    labels = list(labels)
    return Poset(labels, list(zip(labels, labels[1:])))


@dataclass(frozen=True)
class Cut:
    poset: Poset = field(repr=False, compare=False)
    members: frozenset

    @property
    def bounded(self) -> bool:
        return self.poset.is_bounded_mask(self.poset.mask(self.members))


def is_cut(p: Poset, s: Iterable[str]) -> bool:
    m = p.mask(s)
    return p.down_closure_mask(m) == m


def is_cut_by_union(p: Poset, s: Iterable[str]) -> bool:
    """Second implementation: C equals the union of principal cuts of its members."""
    s = frozenset(s)
    for t in s:
        if t not in p:
            raise UnknownElement(f"unknown element {t!r}")
    union = set()
    for t in s:
        union |= p.downset(t)
    return union == s


def union_posets(*posets: Poset) -> Poset:
    elems = []
    seen = set()
    rel = []
    for p in posets:
        for t in p.elements:
            if t not in seen:
                seen.add(t)
                elems.append(t)
        rel.extend(p.covers)
    try:
        return Poset(elems, rel)
    except CycleError as e:
        raise IncompatibleError(f"posets are incompatible: {e}") from None


def is_subposet(part: Poset, u: Poset) -> bool:
    if not all(t in u for t in part.elements):
        return False
    return all(u.le(a, b) for a, b in part.covers)


def restrict_cut(u: Poset, c: Cut | Iterable[str], part: Poset) -> Cut:
    if not is_subposet(part, u):
        raise NotASubposet("part is not contained in the union")
    members = c.members if isinstance(c, Cut) else frozenset(c)
    if not is_cut(u, members):
        raise ValueError("c is not a cut of u")
    return Cut(part, frozenset(t for t in members if t in part))


class CausalityFn:
    """χ stored by its images on principal cuts, extended by union."""

    def __init__(self, poset: Poset, images: Mapping[str, Iterable[str]]):
        self.poset = poset
        self.images = {t: frozenset(images.get(t, ())) for t in poset.elements}
        for t, img in self.images.items():
            for x in img:
                if x not in poset:
                    raise UnknownElement(f"image of {t!r} mentions unknown {x!r}")
        self._img_mask = [poset.mask(self.images[t]) for t in poset.elements]

    def apply_mask(self, m: int) -> int:
        out = 0
        i = 0
        while m:
            if m & 1:
                out |= self._img_mask[i]
            m >>= 1
            i += 1
        return out

    def __call__(self, cut: Iterable[str]) -> frozenset:
        if isinstance(cut, Cut):
            cut = cut.members
        return self.poset.labels(self.apply_mask(self.poset.mask(cut)))

    def image(self, t) -> frozenset:
        return self.images[t]

    def to_dict(self) -> dict:
        return {t: sorted(img, key=natural_key) for t, img in self.images.items()}

    def __eq__(self, other):
        return isinstance(other, CausalityFn) and self.poset == other.poset and self.images == other.images

    def __repr__(self):
        return f"CausalityFn({self.to_dict()})"


def strict_precedence(p: Poset) -> CausalityFn:
    """χ(T^{⪯t}) = T^{≺t}: outputs at t see inputs strictly before t."""
    return CausalityFn(p, {t: p.strict_downset(t) for t in p.elements})


def constant_empty(p: Poset) -> CausalityFn:
    return CausalityFn(p, {})


@dataclass
class Violation:
    condition: str
    witness: tuple
    detail: str = ""

    def to_dict(self):
        return {"condition": self.condition,
                "witness": [sorted(w, key=natural_key) for w in self.witness],
                "detail": self.detail}


@dataclass
class CausalityReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def conditions(self) -> set:
        return {v.condition for v in self.violations}


def validate_causality_fn(p: Poset, chi: CausalityFn, first_only: bool = True) -> CausalityReport:
    """Exhaustive check of the causality-function conditions over all cuts.

    With first_only, one witness per condition is kept.
    """
    found: dict[str, list] = {}

    def add(cond, witness, detail=""):
        if first_only and cond in found:
            return
        found.setdefault(cond, []).append(Violation(cond, tuple(p.labels(w) for w in witness), detail))

    cuts = list(p.cut_masks())
    image = {m: chi.apply_mask(m) for m in cuts}
    for m in cuts:
        im = image[m]
        if p.down_closure_mask(im) != im:
            add("image_is_cut", (m,), "image is not downward closed")
    for i, m in enumerate(cuts):
        for m2 in cuts[i:]:
            u = m | m2
            if image.get(u, chi.apply_mask(u)) != image[m] | image[m2]:
                add("homomorphism", (m, m2))
            if m & m2 == m and image[m] & ~image[m2]:
                add("monotone", (m, m2))
            elif m & m2 == m2 and image[m2] & ~image[m]:
                add("monotone", (m2, m))
    for m in cuts:
        if not m or not p.is_bounded_mask(m):
            continue
        im = image[m]
        if im & ~m or im == m:
            add("decreasing", (m,), "chi(C) is not a proper subset of C")
        # finite escape: iterate until empty or repetition
        seen = set()
        cur = m
        while cur and cur not in seen:
            seen.add(cur)
            cur = chi.apply_mask(cur)
        if cur:
            # every element in the recurring set never escapes
            stuck = cur
            for s in seen:
                stuck &= s
            if stuck & m:
                add("finite_escape", (m,), f"stuck elements {sorted(p.labels(stuck & m), key=natural_key)}")
    return CausalityReport([v for vs in found.values() for v in vs])


@dataclass(frozen=True)
class DelayFn:
    poset: Poset = field(compare=False)
    mapping: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))
        for t, ft in self.mapping.items():
            if t not in self.poset or ft not in self.poset:
                raise UnknownElement(f"delay mapping {t!r}->{ft!r} leaves the poset")
            if not self.poset.lt(t, ft):
                raise NotAdvancing(f"{t!r} does not strictly precede {ft!r}")

    @property
    def domain(self) -> tuple:
        return tuple(sorted(self.mapping, key=natural_key))

    def __call__(self, t):
        return self.mapping[t]

    def compose(self, other: "DelayFn") -> "DelayFn":
        """(other ∘ self) on the points where self's image lies in other's domain."""
        p = union_posets(self.poset, other.poset)
        m = {t: other.mapping[ft] for t, ft in self.mapping.items() if ft in other.mapping}
        return DelayFn(p, m)


def delay_to_causality(p: Poset, f: DelayFn | Mapping[str, str]) -> CausalityFn:
    """χ_f(C) = ⋃ { T^{⪯t} : f(t) ∈ C }, stored on principal cuts."""
    if not isinstance(f, DelayFn):
        f = DelayFn(p, f)
    images = {}
    for s in p.elements:
        img = set()
        for t, ft in f.mapping.items():
            if p.le(ft, s):
                img |= p.downset(t)
        images[s] = img
    return CausalityFn(p, images)


def hasse_export(p: Poset, name: str = "poset") -> str:
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for t in p.elements:
        lines.append(f'  "{t}";')
    for a, b in sorted(p.covers, key=lambda e: (natural_key(e[0]), natural_key(e[1]))):
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
