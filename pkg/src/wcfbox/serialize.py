"""JSON round trip for systems of boxes (classical tables, quantum step lists)."""
from __future__ import annotations

import json
from typing import Mapping, Sequence

import numpy as np

from .boxes import (CausalBox, QStep, QuantumBox, Wire, parse_slot, slot_name, table_kernel)
from .engine import SystemGraph
from .fractions_io import fmt, parse_fraction
from .poset import CausalityFn, Poset
from .quantum import is_exact
from .wcf import WcfParams, WcfProtocol

FORMAT = "wcfbox-system/1"


def _wire(w: Wire) -> dict:
    d = {"id": w.id, "positions": list(w.positions), "size": w.size}
    if w.quantum:
        d["quantum"] = True
    return d


def _unwire(d: Mapping, direction: str) -> Wire:
    return Wire(d["id"], direction, int(d.get("size", 2)), tuple(d["positions"]), bool(d.get("quantum", False)))


def _matrix(u: np.ndarray) -> dict:
    if is_exact(u):
        return {"exact": [[fmt(x) for x in row] for row in u]}
    return {"complex": [[[float(x.real), float(x.imag)] for x in row] for row in u]}


def _unmatrix(d: Mapping) -> np.ndarray:
    if "exact" in d:
        return np.array([[parse_fraction(x) for x in row] for row in d["exact"]], dtype=object)
    return np.array([[complex(a, b) for a, b in row] for row in d["complex"]], dtype=complex)


def box_to_dict(b) -> dict:
    base = {"name": b.name, "poset": b.poset.to_dict(), "chi": b.chi.to_dict(),
            "in_wires": [_wire(w) for w in b.in_wires], "out_wires": [_wire(w) for w in b.out_wires]}
    if isinstance(b, QuantumBox):
        base["kind"] = "quantum"
        base["memory"] = [[r, d] for r, d in b.memory]
        base["steps"] = [{
            "position": st.position,
            "consume": {slot_name(s): r for s, r in st.consume.items()},
            "alloc": [[r, d] for r, d in st.alloc],
            "ops": [{"matrix": _matrix(u), "regs": list(regs)} for u, regs in st.ops],
            "emit": {slot_name(s): r for s, r in st.emit.items()},
            "measure": {slot_name(s): r for s, r in st.measure.items()},
        } for st in b.steps]
        return base
    base["kind"] = "classical"
    base["table"] = [{"in": list(inp),
                      "out": [{"outcome": list(k), "p": fmt(p)} for k, p in sorted(law.items())]}
                     for inp, law in sorted(b.table().items())]
    return base


def box_from_dict(d: Mapping):
    poset = Poset.from_dict(d["poset"])
    chi = CausalityFn(poset, d["chi"]) if "chi" in d else None
    ins = [_unwire(w, "in") for w in d["in_wires"]]
    outs = [_unwire(w, "out") for w in d["out_wires"]]
    if d.get("kind", "classical") == "quantum":
        steps = [QStep(st["position"],
                       {parse_slot(k): r for k, r in st.get("consume", {}).items()},
                       [tuple(a) for a in st.get("alloc", [])],
                       [(_unmatrix(op["matrix"]), op["regs"]) for op in st.get("ops", [])],
                       {parse_slot(k): r for k, r in st.get("emit", {}).items()},
                       {parse_slot(k): r for k, r in st.get("measure", {}).items()})
                 for st in d["steps"]]
        return QuantumBox(d["name"], ins, outs, poset, steps, chi,
                          [tuple(m) for m in d.get("memory", [])])
    in_slots = [s for w in ins for s in w.slots]
    rows = {}
    for row in d["table"]:
        rows[tuple(row["in"])] = {tuple(o["outcome"]): parse_fraction(o["p"]) for o in row["out"]}
    return CausalBox(d["name"], ins, outs, poset, table_kernel(in_slots, rows), chi)


def system_to_dict(s: SystemGraph, protocol: WcfProtocol | None = None) -> dict:
    d = {"format": FORMAT, "boxes": [box_to_dict(b) for b in s.boxes],
         "links": [list(l) for l in s.links],
         "order": s.order.to_dict() if s.order is not None else None}
    if protocol is not None:
        d["protocol"] = protocol_block(protocol)
    return d


def protocol_block(p: WcfProtocol) -> dict:
    out = {"name": p.name, "alice": [b.name for b in p.alice], "bob": [b.name for b in p.bob],
           "resources": [b.name for b in p.resources],
           "coin_a": slot_name(p.coin_a), "coin_b": slot_name(p.coin_b)}
    if p.params is not None:
        out["z"], out["eps"] = fmt(p.params.z), fmt(p.params.eps)
    return out


def _parse_assignment(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        k, _, v = part.partition("=")
        out[parse_slot(k.strip())] = int(v)
    return out


def _box_from_flat(d: Mapping, wires: Mapping, posets: Sequence) -> CausalBox:
    """Flat layout: wires declared once at top level, kernels as given/dist rows.

    ``dist`` keys are assignments such as ``"c@t1=0,d@t2=1"``.
    """
    poset = d["poset"]
    poset = Poset.from_dict(posets[poset] if isinstance(poset, int) else poset)
    chi = d.get("chi")
    if chi is not None:
        chi = CausalityFn(poset, chi.get("principal_images", chi))
    ins = [Wire(w, "in", int(wires[w].get("alphabet", 2)), tuple(wires[w]["positions"])) for w in d["in"]]
    outs = [Wire(w, "out", int(wires[w].get("alphabet", 2)), tuple(wires[w]["positions"])) for w in d["out"]]
    in_slots = [s for w in ins for s in w.slots]
    out_slots = [s for w in outs for s in w.slots]
    rows = {}
    for row in d["kernel"]["rows"]:
        given = {parse_slot(k): int(v) for k, v in row.get("given", {}).items()}
        key = tuple(given[s] for s in in_slots)
        law = {}
        for a, p in row["dist"].items():
            asg = _parse_assignment(a)
            law[tuple(asg[s] for s in out_slots)] = parse_fraction(p)
        rows[key] = law
    return CausalBox(d["name"], ins, outs, poset, table_kernel(in_slots, rows), chi)


def system_from_dict(d: Mapping) -> SystemGraph:
    if d.get("format", FORMAT) != FORMAT:
        raise ValueError(f"unsupported format {d.get('format')!r}")
    if "wires" in d:
        wires = {w["id"]: w for w in d["wires"]}
        boxes = [_box_from_flat(b, wires, d.get("posets", [])) for b in d["boxes"]]
    else:
        boxes = [box_from_dict(b) for b in d["boxes"]]
    order = Poset.from_dict(d["order"]) if d.get("order") else None
    return SystemGraph(boxes, [tuple(l) for l in d.get("links", [])], order)


def protocol_from_dict(d: Mapping) -> WcfProtocol:
    if "protocol" not in d:
        raise ValueError("JSON has no protocol block")
    s = system_from_dict(d)
    pb = d["protocol"]
    by_name = {b.name: b for b in s.boxes}
    params = WcfParams(pb["z"], pb.get("eps", "0")) if "z" in pb else None
    return WcfProtocol(pb.get("name", "protocol"), [by_name[n] for n in pb["alice"]],
                       [by_name[n] for n in pb["bob"]], s.links, parse_slot(pb["coin_a"]),
                       parse_slot(pb["coin_b"]), params,
                       [by_name[n] for n in pb.get("resources", [])], s.order)


def protocol_to_dict(p: WcfProtocol) -> dict:
    return system_to_dict(p.system(), p)


def dumps(obj: Mapping) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_system(path) -> SystemGraph:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def load_protocol(path) -> WcfProtocol:
    with open(path) as fh:
        return protocol_from_dict(json.load(fh))


__all__ = ["box_to_dict", "box_from_dict", "system_to_dict", "system_from_dict",
           "protocol_to_dict", "protocol_from_dict", "load_system", "load_protocol", "dumps"]
