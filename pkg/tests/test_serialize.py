import json
from fractions import Fraction

import pytest

from wcfbox.engine import run_exact
from wcfbox.protocols import TOYS
from wcfbox.serialize import (dumps, protocol_from_dict, protocol_to_dict, system_from_dict,
                              system_to_dict)
from wcfbox.wcf import verify_standalone

ARGS = {"cheat_capped": ("1/3", "1/10")}


def _toy(name):
    return TOYS[name](*ARGS.get(name, ("1/4",)))


@pytest.mark.parametrize("name", sorted(TOYS))
def test_round_trip_preserves_distribution(name):
    p = _toy(name)
    d = protocol_to_dict(p)
    q = protocol_from_dict(json.loads(dumps(d)))
    assert run_exact(q.system()) == run_exact(p.system())
    assert dumps(protocol_to_dict(q)) == dumps(d)


@pytest.mark.parametrize("name", ["trivial_announce", "cheat_capped", "comb_toy"])
def test_round_trip_preserves_security(name):
    p = _toy(name)
    q = protocol_from_dict(json.loads(dumps(protocol_to_dict(p))))
    a, b = verify_standalone(p), verify_standalone(q)
    assert (a.p_star_alice, a.p_star_bob) == (b.p_star_alice, b.p_star_bob)


def test_flat_layout():
    doc = {
        "wires": [{"id": "c", "positions": ["t1"]}, {"id": "c_in", "positions": ["t1"]},
                  {"id": "d", "positions": ["t2"]}],
        "posets": [{"elements": ["t1"], "relations": []}],
        "boxes": [
            {"name": "coin", "in": [], "out": ["c"], "poset": 0,
             "kernel": {"rows": [{"given": {}, "dist": {"c@t1=0": "1/3", "c@t1=1": "2/3"}}]}},
            {"name": "copy", "in": ["c_in"], "out": ["d"],
             "poset": {"elements": ["t1", "t2"], "relations": [["t1", "t2"]]},
             "chi": {"principal_images": {"t1": [], "t2": ["t1"]}},
             "kernel": {"rows": [{"given": {"c_in@t1": 0}, "dist": {"d@t2=0": "1"}},
                                 {"given": {"c_in@t1": 1}, "dist": {"d@t2=1": "1"}}]}},
        ],
        "links": [["c", "c_in"]],
    }
    s = system_from_dict(doc)
    d = run_exact(s)
    assert d.marginal(["d@t2"])[(0,)] == Fraction(1, 3)
    again = system_from_dict(json.loads(dumps(system_to_dict(s))))
    assert run_exact(again) == d


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        system_from_dict({"format": "other/9", "boxes": []})
    with pytest.raises(ValueError):
        protocol_from_dict({"boxes": [], "links": []})
