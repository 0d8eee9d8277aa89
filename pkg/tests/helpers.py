"""Random posets and small independent oracles shared by the test modules."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from hypothesis import strategies as st

from wcfbox.poset import Poset


def random_poset(rng: random.Random, n=None, density=0.3, prefix="t") -> Poset:
    n = rng.randint(1, 8) if n is None else n
    labels = [f"{prefix}{i}" for i in range(n)]
    perm = labels[:]
    rng.shuffle(perm)
    rel = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return Poset(labels, rel)


def induced(u: Poset, keep) -> Poset:
    keep = list(keep)
    return Poset(keep, [(a, b) for a in keep for b in keep if a != b and u.le(a, b)])


def random_subposet(rng: random.Random, u: Poset) -> Poset:
    keep = [t for t in u.elements if rng.random() < 0.6] or [u.elements[0]]
    return induced(u, keep)


def random_delay(rng: random.Random, p: Poset) -> dict:
    """Injective map t -> f(t) with t < f(t) on a random subset of p."""
    used, out = set(), {}
    for t in p.elements:
        later = [x for x in p.elements if p.lt(t, x) and x not in used]
        if later and rng.random() < 0.6:
            ft = rng.choice(later)
            used.add(ft)
            out[t] = ft
    return out


def brute_is_cut(p: Poset, s) -> bool:
    s = set(s)
    return all(a in s for b in s for a in p.elements if p.le(a, b))


def subsets(elements):
    return itertools.chain.from_iterable(itertools.combinations(elements, r)
                                         for r in range(len(elements) + 1))


@st.composite
def posets(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    labels = [f"t{i}" for i in range(n)]
    perm = draw(st.permutations(labels))
    rel = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if draw(st.booleans())]
    return Poset(labels, rel)


fractions_half = st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=12)


@st.composite
def z_eps(draw):
    z = draw(fractions_half)
    eps = draw(st.fractions(min_value=0, max_value=z, max_denominator=12)) if z > 0 else Fraction(0)
    return z, eps


def thm1_joint_oracle(z, eps, mapping, flip_b=None):
    """Joint law of (c_A, c_B) for the glued resources, by direct enumeration.

    c' and c'' are the two resources' private coins (0 with probability z);
    the gluing map answers (b', p', b'', p'').  p'=1 forces c_B=1, p''=1
    forces c_A=0; otherwise each output copies b with the flip probability.
    """
    z, eps = Fraction(z), Fraction(eps)
    qa = eps / (1 - z)
    qb = qa if flip_b is None else flip_b
    out = {}
    for c1, w1 in ((0, z), (1, 1 - z)):
        for c2, w2 in ((0, z), (1, 1 - z)):
            b1, p1, b2, p2 = mapping[(c1, c2)]
            cb = {1: Fraction(1)} if p1 else _mix(b1, c1, qa)
            ca = {0: Fraction(1)} if p2 else _mix(b2, c2, qb)
            for a, pa in ca.items():
                for b, pb in cb.items():
                    out[(a, b)] = out.get((a, b), 0) + w1 * w2 * pa * pb
    return {k: v for k, v in out.items() if v}


def _mix(b, c, q):
    d = {}
    d[b] = d.get(b, 0) + q
    d[c] = d.get(c, 0) + 1 - q
    return {k: v for k, v in d.items() if v}


# filled by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list = []
