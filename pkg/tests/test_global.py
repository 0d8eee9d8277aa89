from fractions import Fraction

import pytest

from wcfbox.boxes import CausalBox, win, wout
from wcfbox.errors import NotAPartition
from wcfbox.global_security import (ComposedSystem, Partition, conditional_cheat_audit,
                                    conditional_table, find_partition, partition_check,
                                    sequential_composition, theorem4_demo)
from wcfbox.distribution import Distribution
from wcfbox.poset import Poset, chain
from wcfbox.protocols import cheat_capped, comb_toy, trivial_announce
from wcfbox.wcf import WcfParams, verify_standalone

F = Fraction


def test_partition_blocks_must_cover():
    p = chain(["a", "b", "c"])
    with pytest.raises(NotAPartition):
        partition_check(p, Partition({"a"}, {"b"}, set()), {"b"}, {"a"})
    with pytest.raises(NotAPartition):
        partition_check(p, Partition({"a", "b"}, {"b"}, {"c"}), {"b"}, {"a"})


def test_partition_chain():
    p = chain(["a", "b", "c"])
    assert partition_check(p, Partition({"a"}, {"b"}, {"c"}), {"b"}, {"a", "c"})
    assert not partition_check(p, Partition({"b"}, {"a"}, {"c"}), {"a"}, {"b", "c"})


def test_single_instance_empty_eta():
    p = cheat_capped("1/2", "1/10").system().poset
    part = find_partition(p, set(p.elements), set())
    assert part is not None and not part.t1 and not part.t3


def test_sequential_blocks():
    xi = sequential_composition(cheat_capped("1/2", "1/10"), cheat_capped("1/2", "1/10"))
    p = xi.system().poset
    part = find_partition(p, xi.pi_positions(), xi.eta_positions())
    assert part is not None
    assert part.t2 == xi.pi_positions() and part.t1 == xi.eta_positions() and not part.t3
    assert partition_check(p, part, xi.pi_positions(), xi.eta_positions())


@pytest.mark.parametrize("eps", ["0", "1/10", "1/4"])
def test_sequential_audit(eps):
    e = F(eps)
    xi = sequential_composition(cheat_capped("1/2", e), cheat_capped("1/2", e))
    r = conditional_cheat_audit(xi)
    assert r.max_ca1 == F(1, 2) + e and r.max_cb0 == F(1, 2) + e
    assert r.ok and r.verdict_as_printed


def test_interleaved_demo():
    r = theorem4_demo(comb_toy("1/2"), mode="interleaved")
    assert not r.partition_holds
    assert r.audit.max_conditional == 1 and not r.audit.ok
    assert r.consistent_with_theorem


def test_sequential_demo():
    r = theorem4_demo(cheat_capped("1/2", "1/10"))
    assert r.partition_holds and r.audit.ok


def test_empty_eta_equals_standalone():
    for p in (cheat_capped("1/3", "1/10", "1/20"), comb_toy("1/2"), trivial_announce("1/4")):
        r = conditional_cheat_audit(ComposedSystem("solo", p))
        s = verify_standalone(p)
        assert (r.max_cb0, r.max_ca1) == (s.p_star_alice, s.p_star_bob)


def test_post_processing_eta_passes():
    p = cheat_capped("1/2", "1/10")
    post = CausalBox("post", [], [wout("kpost", "tpost")], Poset(["tpost"], []),
                     lambda inp: [(F(1, 2), {"kpost": 0}), (F(1, 2), {"kpost": 1})])
    # K' is emitted after the coin and is not conditioned on
    xi = ComposedSystem("post", p, eta_alice=(post,), links=())
    r = conditional_cheat_audit(xi)
    assert r.ok and r.max_ca1 == F(3, 5)


def test_audit_invariant_under_relabelled_k():
    p = cheat_capped("1/2", "1/10")
    xi = sequential_composition(p, p)
    (kw, kt), = xi.k_alice
    neg = CausalBox("neg", [win("neg_in", kt)], [wout("neg_out", "tk")], chain([kt, "tk"]),
                    lambda inp: [(F(1), {"neg_out": 1 - inp["neg_in"]})])
    order = Poset(list(xi.order.elements) + ["tk"],
                  list(xi.order.covers) + [(kt, "tk")] +
                  [("tk", y) for y in xi.pi.system().poset.minimal()])
    xi2 = ComposedSystem("neg", xi.pi, xi.eta_alice + (neg,), xi.eta_bob, xi.eta_resources,
                         xi.links + ((kw, "neg_in"),), (("neg_out", "tk"),), xi.k_bob, order)
    a, b = conditional_cheat_audit(xi), conditional_cheat_audit(xi2)
    assert (a.max_ca1, a.max_cb0) == (b.max_ca1, b.max_cb0)


def test_conditional_table_skips_zero_mass():
    d = Distribution(["c", "k"], {(0, 0): F(1, 2), (1, 0): F(1, 2)})
    t = conditional_table(d, "c", 1, ["k"])
    assert t.values == {(0,): F(1, 2)} and t.skipped == [(1,)]


def test_both_cap_readings_reported():
    xi = sequential_composition(cheat_capped("1/4", "1/8"), cheat_capped("1/4", "1/8"))
    r = conditional_cheat_audit(xi)
    j = r.to_json()
    assert "verdict_consistent" in j and "verdict_as_printed" in j
    assert r.max_ca1 == F(3, 4) + F(1, 8) and r.max_cb0 == F(1, 4) + F(1, 8)
    assert r.verdict_consistent and not r.verdict_as_printed


def test_partition_implies_audit_on_shipped_set():
    cases = [theorem4_demo(cheat_capped(z, e)) for z, e in
             [("1/2", "0"), ("1/2", "1/10"), ("1/4", "1/8"), ("1/3", "1/6")]]
    cases.append(theorem4_demo(comb_toy("1/2"), mode="interleaved"))
    cases.append(theorem4_demo(trivial_announce("1/2"), mode="interleaved"))
    for r in cases:
        assert r.consistent_with_theorem
