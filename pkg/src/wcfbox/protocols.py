"""Small reference protocols used by tests, the CLI and the experiment scripts."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .boxes import CausalBox, QStep, QuantumBox, bit, win, wout
from .errors import ParamRange
from .fractions_io import parse_fraction
from .poset import Poset, chain
from .quantum import fraction_sqrt, permutation_unitary
from .wcf import WcfParams, WcfProtocol


def _z(z):
    z = parse_fraction(z)
    if not (0 <= z <= Fraction(1, 2)):
        raise ParamRange(f"z must lie in [0, 1/2], got {z}")
    return z


def trivial_announce(z) -> WcfProtocol:
    """Alice samples the coin and tells Bob.  Completely insecure against Alice."""
    z = _z(z)
    pa = Poset(["t0", "ta"], [("t0", "ta")])
    pb = Poset(["t0", "tb"], [("t0", "tb")])

    def ka(inp):
        return [(p, {"m": x, "cA": x}) for p, x in bit(z)]

    def kb(inp):
        return [(Fraction(1), {"cB": inp["m_in"]})]

    alice = CausalBox("alice", [], [wout("m", "t0"), wout("cA", "ta")], pa, ka)
    bob = CausalBox("bob", [win("m_in", "t0")], [wout("cB", "tb")], pb, kb)
    return WcfProtocol("trivial_announce", alice, bob, [("m", "m_in")],
                       ("cA", "ta"), ("cB", "tb"), WcfParams(z, 0))


def bob_announce(z) -> WcfProtocol:
    """Bob samples the coin and tells Alice; Alice has no moves at all."""
    z = _z(z)
    pa = Poset(["t0", "ta"], [("t0", "ta")])
    pb = Poset(["t0", "tb"], [("t0", "tb")])

    def kb(inp):
        return [(p, {"m": x, "cB": x}) for p, x in bit(z)]

    def ka(inp):
        return [(Fraction(1), {"cA": inp["m_in"]})]

    alice = CausalBox("alice", [win("m_in", "t0")], [wout("cA", "ta")], pa, ka)
    bob = CausalBox("bob", [], [wout("m", "t0"), wout("cB", "tb")], pb, kb)
    return WcfProtocol("bob_announce", alice, bob, [("m", "m_in")],
                       ("cA", "ta"), ("cB", "tb"), WcfParams(z, 0))


def cheat_capped(z, eps_a=0, eps_b=None) -> WcfProtocol:
    """A trusted dealer R that lets each party bias the coin by a bounded amount.

    Each party sends a request bit at t0 (honest value 0).  A lone request
    from Alice turns c=1 into 0 with probability eps_a/(1-z); a lone request
    from Bob turns c=0 into 1 with probability eps_b/z.  R then hands both
    parties the same bit at t1.
    """
    z = _z(z)
    ea = parse_fraction(eps_a)
    eb = ea if eps_b is None else parse_fraction(eps_b)
    if not (0 <= ea <= z and 0 <= eb <= z):
        raise ParamRange("need 0 <= eps_a, eps_b <= z")
    params = WcfParams(z, max(ea, eb))
    pr = chain(["t0", "t1"])
    pa = chain(["t0", "t1", "ta"])
    pb = chain(["t0", "t1", "tb"])

    def kr(inp):
        ra, rb = inp["ra_R"], inp["rb_R"]
        out = []
        for p, c in bit(z):
            if p == 0:
                continue
            q = Fraction(0)
            if ra == 1 and rb == 0 and c == 1 and z < 1:
                q = ea / (1 - z)
            if rb == 1 and ra == 0 and c == 0 and z > 0:
                q = eb / z
            for pp, v in ((1 - q, c), (q, 1 - c)):
                if pp:
                    out.append((p * pp, {"ka_R": v, "kb_R": v}))
        return out

    def kalice(inp):
        return [(Fraction(1), {"ra": 0, "cA": inp["ka"]})]

    def kbob(inp):
        return [(Fraction(1), {"rb": 0, "cB": inp["kb"]})]

    r = CausalBox("R", [win("ra_R", "t0"), win("rb_R", "t0")],
                  [wout("ka_R", "t1"), wout("kb_R", "t1")], pr, kr)
    alice = CausalBox("alice", [win("ka", "t1")], [wout("ra", "t0"), wout("cA", "ta")], pa, kalice)
    bob = CausalBox("bob", [win("kb", "t1")], [wout("rb", "t0"), wout("cB", "tb")], pb, kbob)
    links = [("ra", "ra_R"), ("rb", "rb_R"), ("ka_R", "ka"), ("kb_R", "kb")]
    return WcfProtocol("cheat_capped", alice, bob, links, ("cA", "ta"), ("cB", "tb"), params,
                       resources=r)


def comb_toy(z) -> WcfProtocol:
    """Three-message classical exchange: x at t0, challenge y at t1, x xor y at t2."""
    z = _z(z)
    pa = chain(["t0", "t1", "t2", "ta"])
    pb = chain(["t0", "t1", "t2", "tb"])

    def ka(inp):
        y = inp["y_in"]
        return [(p, {"m0": x, "m2": x ^ y, "cA": x}) for p, x in bit(z)]

    def kb(inp):
        m0, m2 = inp["m0_in"], inp["m2_in"]
        out = []
        for p, y in bit(Fraction(1, 2)):
            c = m0 if (m2 ^ y) == m0 else 1
            out.append((p, {"y": y, "cB": c}))
        return out

    alice = CausalBox("alice", [win("y_in", "t1")],
                      [wout("m0", "t0"), wout("m2", "t2"), wout("cA", "ta")], pa, ka)
    bob = CausalBox("bob", [win("m0_in", "t0"), win("m2_in", "t2")],
                    [wout("y", "t1"), wout("cB", "tb")], pb, kb)
    links = [("m0", "m0_in"), ("y", "y_in"), ("m2", "m2_in")]
    return WcfProtocol("comb_toy", alice, bob, links, ("cA", "ta"), ("cB", "tb"), WcfParams(z, 0))


ROT = [[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]]


def quantum_comb_toy(z) -> WcfProtocol:
    """Alice shares sqrt(z)|00> + sqrt(1-z)|11>; Bob copies the basis value,
    rotates the qubit and hands it back; Alice undoes the rotation, clears the
    qubit and returns it.  Exact when z and 1-z are rational squares."""
    z = _z(z)
    a, b = fraction_sqrt(z), fraction_sqrt(1 - z)
    exact = isinstance(a, Fraction) and isinstance(b, Fraction)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    # |00> -> a|00> + b|11>, |11> -> -b|00> + a|11>, identity elsewhere
    prep = [[a, zero, zero, -b], [zero, one, zero, zero], [zero, zero, one, zero], [b, zero, zero, a]]
    rot = np.array(ROT, dtype=object)
    rot_inv = rot.T.copy()
    cnot = permutation_unitary([2, 2], lambda x: (x[0], x[1] ^ x[0]))
    pa = chain(["t0", "t1", "t2", "ta"])
    pb = chain(["t0", "t1", "t2", "tb"])
    alice = QuantumBox(
        "alice", [win("qa_in", "t1", quantum=True)],
        [wout("qa", ("t0", "t2"), quantum=True), wout("cA", "ta")], pa,
        [QStep("t0", alloc=[("q", 2)], ops=[(prep, ["q", "k"])], emit={("qa", "t0"): "q"}),
         QStep("t2", consume={("qa_in", "t1"): "q2"},
               ops=[(rot_inv, ["q2"]), (cnot, ["k", "q2"])], emit={("qa", "t2"): "q2"}),
         QStep("ta", measure={("cA", "ta"): "k"})],
        memory=[("k", 2)])
    bob = QuantumBox(
        "bob", [win("qb_in", ("t0", "t2"), quantum=True)],
        [wout("qb", "t1", quantum=True), wout("cB", "tb")], pb,
        [QStep("t1", consume={("qb_in", "t0"): "q"}, alloc=[("c", 2)],
               ops=[(cnot, ["q", "c"]), (rot, ["q"])], emit={("qb", "t1"): "q"}),
         QStep("tb", consume={("qb_in", "t2"): "back"}, measure={("cB", "tb"): "c"})])
    return WcfProtocol("quantum_comb_toy", alice, bob, [("qa", "qb_in"), ("qb", "qa_in")],
                       ("cA", "ta"), ("cB", "tb"), WcfParams(z, 0))


TOYS = {
    "trivial_announce": trivial_announce,
    "bob_announce": bob_announce,
    "cheat_capped": cheat_capped,
    "comb_toy": comb_toy,
    "quantum_comb_toy": quantum_comb_toy,
}
