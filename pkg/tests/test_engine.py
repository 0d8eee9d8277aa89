import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcfbox.boxes import (CausalBox, QStep, QuantumBox, bit, check_causality, delay_box,
                          identity_box, parallel, win, wout)
from wcfbox.distribution import Distribution, tv_distance
from wcfbox.engine import SystemGraph, run_exact, sample, sample_many
from wcfbox.errors import (AlreadyLinked, CausalLoopError, DimensionMismatch, DomainMismatch,
                           ExplosionError, KernelError)
from wcfbox.poset import CausalityFn, DelayFn, Poset, chain
from wcfbox.protocols import quantum_comb_toy, trivial_announce
from wcfbox.quantum import QState, fraction_sqrt, permutation_unitary

F = Fraction


def coin(name, wire, pos, p0):
    return CausalBox(name, [], [wout(wire, pos)], Poset([pos]),
                     lambda inp: [(p, {wire: x}) for p, x in bit(p0)])


def copier(name, src, dst, t_in, t_out):
    return CausalBox(name, [win(src, t_in)], [wout(dst, t_out)], chain([t_in, t_out]),
                     lambda inp: [(F(1), {dst: inp[src]})])


def test_single_coin_read_back():
    d = run_exact(SystemGraph([coin("c", "x", "t0", F(1, 3))]))
    assert d.probs == {(0,): F(1, 3), (1,): F(2, 3)}


def test_trivial_announce_honest():
    d = run_exact(trivial_announce("1/3").system()).marginal(["cA@ta", "cB@tb"])
    assert d.probs == {(0, 0): F(1, 3), (1, 1): F(2, 3)}


def test_parallel_product():
    a, b = coin("a", "x", "t0", F(1, 2)), coin("b", "y", "s0", F(1, 4))
    d = run_exact(SystemGraph([parallel(a, b)]))
    assert d[(0, 0)] == F(1, 8) and d[(1, 1)] == F(3, 8)


def test_parallel_with_empty_box():
    a = coin("a", "x", "t0", F(1, 3))
    e = CausalBox("e", [], [], Poset(["u"]), lambda inp: [(F(1), {})])
    assert run_exact(SystemGraph([parallel(a, e)])).probs == run_exact(SystemGraph([a])).probs


def test_chain_of_identities():
    c = coin("c", "x", "t0", F(1, 5))
    ids = [identity_box("i1", "a_in", "a_out", ["t0"]),
           identity_box("i2", "b_in", "b_out", ["t0+"]),
           identity_box("i3", "c_in", "c_out", ["t0++"])]
    s = SystemGraph([c] + ids, [("x", "a_in"), ("a_out", "b_in"), ("b_out", "c_in")])
    assert run_exact(s).probs == {(0,): F(1, 5), (1,): F(4, 5)}


def test_link_errors():
    c = coin("c", "x", "t0", F(1, 2))
    k = copier("k", "y", "z", "t0", "t1")
    s = SystemGraph([c, k], [("x", "y")])
    with pytest.raises(AlreadyLinked):
        s.connect("x", "y")
    big = CausalBox("b", [win("w", "t0", size=3)], [], Poset(["t0"]), lambda i: [(F(1), {})])
    with pytest.raises(DimensionMismatch):
        SystemGraph([c, big], [("x", "w")])


def test_self_loop_is_causal_loop():
    # chi lets the output at t0 see the input at t0; feeding it back deadlocks
    p = Poset(["t0"])
    box = CausalBox("b", [win("i", "t0")], [wout("o", "t0")], p,
                    lambda inp: [(F(1), {"o": inp["i"]})], CausalityFn(p, {"t0": {"t0"}}))
    with pytest.raises(CausalLoopError):
        SystemGraph([box], [("o", "i")])


def test_self_loop_respecting_chi_is_fine():
    box = CausalBox("b", [win("i", "t1")], [wout("o", "t1")], chain(["t0", "t1"]),
                    lambda inp: [(F(1), {"o": 0})])
    d = run_exact(SystemGraph([box], [("o", "i")]), observe=[("i", "t1")])
    assert d.probs == {(0,): 1}


def test_kernel_violating_chi_detected():
    b = CausalBox("b", [win("i", "t0")], [wout("o", "t0")], Poset(["t0"]),
                  lambda inp: [(F(1), {"o": inp["i"]})])
    assert check_causality(b)


def test_row_must_sum_to_one():
    with pytest.raises(KernelError):
        CausalBox("b", [], [wout("o", "t0")], Poset(["t0"]),
                  lambda inp: [(F(1, 2), {"o": 0})]).table()


def test_explosion_cap():
    boxes = [coin(f"c{i}", f"x{i}", f"t{i}", F(1, 2)) for i in range(8)]
    with pytest.raises(ExplosionError):
        run_exact(SystemGraph(boxes), cap=10)


def test_delay_box_moves_messages():
    p = chain(["t0", "t0'", "t1", "t1'"])
    f = DelayFn(p, {"t0": "t0'", "t1": "t1'"})
    d = delay_box(f, "in", "out")
    assert d.behavior((0, 1)) == {(0, 1): 1}
    assert check_causality(d) == []


def test_delay_box_composition():
    p = chain(["a", "b", "c"])
    f, g = DelayFn(p, {"a": "b"}), DelayFn(p, {"b": "c"})
    c = coin("c", "x", "a", F(1, 3))
    s = SystemGraph([c, delay_box(f, "i1", "o1"), delay_box(g, "i2", "o2")],
                    [("x", "i1"), ("o1", "i2")])
    direct = SystemGraph([c, delay_box(f.compose(g), "i", "o")], [("x", "i")])
    assert run_exact(s).probs == run_exact(direct).probs


def test_empty_delay_box():
    d = delay_box(DelayFn(chain(["a", "b"]), {}), "i", "o")
    assert d.in_slots == () and d.out_slots == ()


def test_schedule_independence():
    s = trivial_announce("1/3").system()
    base = run_exact(s)
    for seed in range(5):
        assert run_exact(s, schedule_seed=seed) == base


def test_sample_determinism_and_point_mass():
    s = trivial_announce("1/3").system()
    assert sample(s, 7) == sample(s, 7)
    det = SystemGraph([coin("c", "x", "t0", F(1))])
    assert sample(det, 3) == {"x@t0": 0}


def test_fair_coin_frequency():
    counts = sample_many(SystemGraph([coin("c", "x", "t0", F(1, 2))]), 100000, 11)
    n0 = counts.get((0,), 0)
    assert abs(n0 - 50000) <= 5 * math.sqrt(100000 * 0.25)


def test_sample_chi_square():
    s = trivial_announce("1/3").system()
    d = run_exact(s)
    n = 100000
    counts = sample_many(s, n, 5)
    stat = sum((counts.get(k, 0) - n * float(p)) ** 2 / (n * float(p)) for k, p in d.probs.items())
    assert stat < 10.83  # 0.999 quantile, one degree of freedom


def test_tv_distance():
    a = Distribution(["x"], {(0,): F(1)})
    b = Distribution(["x"], {(1,): F(1)})
    assert tv_distance(a, a) == 0 and tv_distance(a, b) == 1
    with pytest.raises(DomainMismatch):
        tv_distance(a, Distribution(["y"], {(0,): F(1)}))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.fractions(0, 1, max_denominator=9), min_size=1, max_size=4))
def test_run_exact_sums_to_one(ps):
    boxes = [coin(f"c{i}", f"x{i}", f"t{i}", p) for i, p in enumerate(ps)]
    d = run_exact(SystemGraph(boxes))
    assert d.total() == 1


@settings(max_examples=40, deadline=None)
@given(st.fractions(0, 1, max_denominator=7), st.fractions(0, 1, max_denominator=7))
def test_causality_check_on_noisy_copier(p0, q):
    def k(inp):
        x = inp["i"]
        return [(1 - q, {"o": x}), (q, {"o": 1 - x})] if q not in (0, 1) else [(F(1), {"o": x ^ int(q)})]
    b = CausalBox("b", [win("i", "t0")], [wout("o", "t1")], chain(["t0", "t1"]), k)
    assert check_causality(b) == []


# ------------------------------------------------------------------ quantum

def test_qstate_measure_bell_like():
    a, b = F(3, 5), F(4, 5)
    prep = np.array([[a, 0, 0, -b], [0, 1, 0, 0], [0, 0, 1, 0], [b, 0, 0, a]], dtype=object)
    s = QState().add("q", 2).add("k", 2).apply(prep, ["q", "k"])
    assert s.norm2() == 1
    outs = dict((v, st.norm2()) for v, st in s.measure("q"))
    assert outs == {0: F(9, 25), 1: F(16, 25)}


def test_fraction_sqrt():
    assert fraction_sqrt(F(9, 25)) == F(3, 5)
    assert isinstance(fraction_sqrt(F(1, 3)), float)


def test_permutation_unitary_rejects_non_bijection():
    with pytest.raises(KernelError):
        permutation_unitary([2], lambda x: (0,))


def test_quantum_toy_exact():
    d = run_exact(quantum_comb_toy("9/25").system()).marginal(["cA@ta", "cB@tb"])
    assert d.exact and d.probs == {(0, 0): F(9, 25), (1, 1): F(16, 25)}


def test_quantum_toy_float_close():
    d = run_exact(quantum_comb_toy("1/3").system()).marginal(["cA@ta", "cB@tb"])
    assert not d.exact
    assert abs(d[(0, 0)] - 1 / 3) < 1e-12 and abs(d[(1, 1)] - 2 / 3) < 1e-12


def test_quantum_box_output_outside_chi():
    with pytest.raises(KernelError):
        QuantumBox("b", [win("i", "t0", quantum=True)], [wout("o", "t0", quantum=True)],
                   Poset(["t0"]), [QStep("t0", consume={("i", "t0"): "r"}, emit={("o", "t0"): "r"})])


def test_quantum_box_dimension_limit():
    with pytest.raises(KernelError):
        QuantumBox("b", [], [wout("o", "t0")], Poset(["t0"]),
                   [QStep("t0", alloc=[("r", 5)], measure={("o", "t0"): "r"})])


def test_quantum_delay_box():
    p = chain(["t0", "t1"])
    d = delay_box(DelayFn(p, {"t0": "t1"}), "i", "o", quantum=True)
    assert d.quantum
