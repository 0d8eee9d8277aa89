"""Unbalanced coin flipping from a cascade of balanced coins, and its cheat bounds."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distribution import Distribution
from .errors import LengthMismatch, NotDyadic, ParamRange
from .fractions_io import fmt, parse_fraction, to_decimal

HALF = Fraction(1, 2)
MARGIN_CONSTANT = 10
GENERAL_MAX_N = 4


@dataclass(frozen=True)
class DyadicProb:
    """z = 0.b1 b2 ... bn in binary; canonical (last bit 1) and at most 1/2."""
    bits: tuple

    def __post_init__(self):
        bits = self.bits
        if isinstance(bits, str):
            if not bits or set(bits) - {"0", "1"}:
                raise NotDyadic(f"not a bit string: {bits!r}")
            bits = tuple(int(c) for c in bits)
        bits = tuple(int(b) for b in bits)
        object.__setattr__(self, "bits", bits)
        if not bits:
            raise NotDyadic("empty bit string")
        if bits[-1] != 1:
            raise NotDyadic(f"non-canonical expansion {self.text} (trailing zero)")
        if self.value > HALF:
            raise ParamRange(f"z = {self.value} exceeds 1/2")

    @classmethod
    def from_fraction(cls, z) -> "DyadicProb":
        z = parse_fraction(z)
        d = z.denominator
        if z <= 0 or d & (d - 1):
            raise NotDyadic(f"{z} has no finite binary expansion in (0, 1)")
        n = d.bit_length() - 1
        num = z.numerator
        return cls(tuple((num >> (n - 1 - i)) & 1 for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def text(self) -> str:
        return "".join(map(str, self.bits))

    @property
    def value(self) -> Fraction:
        return sum((Fraction(b, 2 ** (i + 1)) for i, b in enumerate(self.bits)), Fraction(0))

    @property
    def ones_positions(self) -> tuple:
        return tuple(i + 1 for i, b in enumerate(self.bits) if b == 1)

    @property
    def zeros_positions(self) -> tuple:
        return tuple(i + 1 for i, b in enumerate(self.bits) if b == 0)


def _dyadic(bits) -> DyadicProb:
    return bits if isinstance(bits, DyadicProb) else DyadicProb(bits)


def _raw_bits(bits) -> tuple:
    if isinstance(bits, DyadicProb):
        return bits.bits
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise NotDyadic(f"not a bit string: {bits!r}")
        return tuple(int(c) for c in bits)
    return tuple(int(b) for b in bits)


def tau_program(bits, outcomes: Sequence[int]) -> int:
    """Walk the instance outcomes until the first one that differs from b_i.

    Any bit string is accepted here; range checks live in DyadicProb.
    """
    b = _raw_bits(bits)
    c = tuple(outcomes)
    n = len(b)
    if len(c) != n:
        raise LengthMismatch(f"{len(c)} outcomes for {n} bits")
    i = 1
    while i < n:
        if c[i - 1] != b[i - 1]:
            break
        i += 1
    return c[i - 1]


def honest_cascade_distribution(bits) -> Distribution:
    d = _dyadic(bits)
    w = Fraction(1, 2 ** d.n)
    acc = {0: Fraction(0), 1: Fraction(0)}
    for c in itertools.product((0, 1), repeat=d.n):
        acc[tau_program(d, c)] += w
    out = Distribution(["c"], {(k,): v for k, v in acc.items()})
    if out[(0,)] != d.value:
        raise AssertionError(f"cascade gives Pr[0]={out[(0,)]}, expected {d.value}")
    return out


def _eps(eps) -> Fraction:
    e = parse_fraction(eps)
    if not 0 <= e <= HALF:
        raise ParamRange(f"eps must lie in [0, 1/2], got {e}")
    return e


def alice_bound_formula(bits, eps) -> Fraction:
    d, e = _dyadic(bits), _eps(eps)
    hi, lo = HALF + e, HALF - e
    return sum((hi ** (a - i + 1) * lo ** (i - 1) for i, a in enumerate(d.ones_positions, 1)),
               Fraction(0))


def bob_bound_printed(bits, eps) -> Fraction:
    """Mirror sum over the zero positions only (first-deviation paths)."""
    d, e = _dyadic(bits), _eps(eps)
    hi, lo = HALF + e, HALF - e
    return sum((hi ** (a - i + 1) * lo ** (i - 1) for i, a in enumerate(d.zeros_positions, 1)),
               Fraction(0))


def bob_bound_formula(bits, eps) -> Fraction:
    """Bob's closed form: first-deviation paths plus the path that matches every
    bit, where the last coin (b_n = 1) is output and Bob wins."""
    d, e = _dyadic(bits), _eps(eps)
    hi, lo = HALF + e, HALF - e
    terminal = hi ** len(d.ones_positions) * lo ** len(d.zeros_positions)
    return bob_bound_printed(d, e) + terminal


def _wins(party: str, c: int) -> bool:
    return c == 0 if party == "alice" else c == 1


def best_cascade_cheat(bits, eps, party: str) -> Fraction:
    """Dynamic program: each conditional Pr[C_i=0 | prefix] is set to one of the caps."""
    if party not in ("alice", "bob"):
        raise ValueError("party must be 'alice' or 'bob'")
    d, e = _dyadic(bits), _eps(eps)
    caps = (HALF - e, HALF + e)
    n = d.n
    # V[i]: win probability when about to play instance i+1 after matching b_1..b_i
    v_next = None
    for i in range(n - 1, -1, -1):
        best = None
        for p0 in caps:
            w = Fraction(0)
            for c, pc in ((0, p0), (1, 1 - p0)):
                if i == n - 1 or c != d.bits[i]:
                    w += pc * int(_wins(party, c))
                else:
                    w += pc * v_next
            best = w if best is None or w > best else best
        v_next = best
    return v_next


def general_cascade_cheat(bits, eps, party: str) -> Fraction:
    """Maximum over every tree that assigns a cap to every prefix node (n <= 4).

    Win probabilities come from running tau_program on all outcome sequences;
    integer scaling keeps the search exact.
    """
    d, e = _dyadic(bits), _eps(eps)
    n = d.n
    if n > GENERAL_MAX_N:
        raise ValueError(f"general enumeration limited to n <= {GENERAL_MAX_N}")
    den = 2 * e.denominator
    lo0 = int((HALF - e) * den)  # Pr[C=0] under the low cap, scaled by den
    hi0 = int((HALF + e) * den)
    nodes = 2 ** n - 1
    trees = np.arange(2 ** nodes, dtype=np.int64)
    choice = (trees[:, None] >> np.arange(nodes)) & 1  # 1 -> high cap on Pr[C=0]
    p0 = np.where(choice == 1, hi0, lo0).astype(object if den ** n > 2 ** 62 else np.int64)
    total = np.zeros(len(trees), dtype=p0.dtype)
    for c in itertools.product((0, 1), repeat=n):
        if not _wins(party, tau_program(d, c)):
            continue
        prob = np.ones(len(trees), dtype=p0.dtype)
        for k in range(n):
            node = 2 ** k - 1 + int("".join(map(str, c[:k])) or "0", 2)
            prob = prob * (p0[:, node] if c[k] == 0 else den - p0[:, node])
        total = total + prob
    return Fraction(int(total.max()), den ** n)


@dataclass
class CascadeBiasReport:
    bits: str
    z: Fraction
    eps: Fraction
    alice_win_max: Fraction
    bob_win_max: Fraction
    eps_prime_alice: Fraction
    eps_prime_bob: Fraction
    eps_prime: Fraction
    formula_alice: Fraction
    formula_bob: Fraction
    formula_bob_printed: Fraction
    envelope: Fraction

    @property
    def formulas_match(self) -> bool:
        return self.alice_win_max == self.formula_alice and self.bob_win_max == self.formula_bob

    @property
    def within_envelope(self) -> bool:
        return self.eps_prime <= self.envelope

    @property
    def ratio(self):
        return None if self.eps == 0 else self.eps_prime / self.eps

    CSV_FIELDS = ["bits", "z", "eps", "eps_prime_alice", "eps_prime_bob", "eps_prime",
                  "formula_alice", "formula_bob", "formula_bob_printed", "ratio",
                  "envelope", "within_envelope", "formulas_match"]

    def to_json(self) -> dict:
        return {
            "bits": self.bits, "z": fmt(self.z), "eps": fmt(self.eps),
            "alice_win_max": fmt(self.alice_win_max), "bob_win_max": fmt(self.bob_win_max),
            "eps_prime_alice": fmt(self.eps_prime_alice), "eps_prime_bob": fmt(self.eps_prime_bob),
            "eps_prime": fmt(self.eps_prime), "formula_alice": fmt(self.formula_alice),
            "formula_bob": fmt(self.formula_bob), "formula_bob_printed": fmt(self.formula_bob_printed),
            "ratio": None if self.ratio is None else fmt(self.ratio),
            "ratio_decimal": None if self.ratio is None else to_decimal(self.ratio, 6),
            "envelope": fmt(self.envelope), "within_envelope": self.within_envelope,
            "formulas_match": self.formulas_match,
        }


def corollary_check(bits, eps, margin=MARGIN_CONSTANT) -> CascadeBiasReport:
    d, e = _dyadic(bits), _eps(eps)
    a = best_cascade_cheat(d, e, "alice")
    b = best_cascade_cheat(d, e, "bob")
    ea, eb = a - d.value, b - (1 - d.value)
    return CascadeBiasReport(d.text, d.value, e, a, b, ea, eb, max(ea, eb),
                             alice_bound_formula(d, e), bob_bound_formula(d, e),
                             bob_bound_printed(d, e), 2 * e + margin * e * e)


def canonical_bit_strings(max_n: int) -> list:
    """All canonical expansions of values in (0, 1/2] with at most max_n bits."""
    out = []
    for n in range(1, max_n + 1):
        for c in itertools.product("01", repeat=n):
            s = "".join(c)
            try:
                DyadicProb(s)
            except (NotDyadic, ParamRange):
                continue
            out.append(s)
    return out


def all_bit_strings(max_n: int) -> list:
    return ["".join(c) for n in range(1, max_n + 1) for c in itertools.product("01", repeat=n)]


def required_margin(max_n: int, eps_grid: Sequence) -> Fraction:
    """Smallest C with eps' <= 2 eps + C eps^2 over the grid (eps = 0 cells ignored)."""
    need = Fraction(0)
    for s in canonical_bit_strings(max_n):
        for e in eps_grid:
            e = _eps(e)
            if e == 0:
                continue
            r = corollary_check(s, e)
            need = max(need, (r.eps_prime - 2 * e) / (e * e))
    return need
