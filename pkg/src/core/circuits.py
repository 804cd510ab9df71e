# src/core/circuits.py
"""
Netlist text for the qubit-resonator block and its two-block extensions.

Block layout: qubit junction Jq and Cq between nodes a and b; on each side a
resonator capacitor, an inductor and a coupling junction (or array) to the
block ground. With La > 0 each coupling branch is an array shunted by L behind
a series inductance La, and the internal nodes d are massless.
"""
from __future__ import annotations

from typing import List, Optional

from .models import CouplerParams


def _num(value: float) -> str:
    return repr(float(value))


def _coupling_junction(name: str, ej_each: float, k: int, node_a: str, node_b: str) -> str:
    if k == 1:
        return f"jj {name} {_num(ej_each)}GHz {node_a} {node_b}"
    return f"jjarray {name} {_num(k * ej_each)}GHz k={k} {node_a} {node_b}"


def block_statements(p: CouplerParams, suffix: str = "", ground: str = "g",
                     phi_x: str = "phi_x", phi_Xb: str = "phi_Xb") -> List[str]:
    """Branches, loops and the (phi_q, phi_r) variables of one block."""
    a, b = f"a{suffix}", f"b{suffix}"
    s = suffix
    lines = [
        f"cap Cq{s} {_num(p.Cq)}fF {a} {b}",
        f"cap C1{s} {_num(p.C)}fF {a} {ground}",
        f"cap C2{s} {_num(p.C)}fF {b} {ground}",
        f"jj Jq{s} {_num(p.ej_q)}GHz {a} {b}",
    ]
    if p.has_added_inductance:
        d1, d2 = f"d1{suffix}", f"d2{suffix}"
        lines += [
            f"ind La1{s} {_num(p.La)}nH {a} {d1}",
            f"ind La2{s} {_num(p.La)}nH {b} {d2}",
            f"ind L1{s} {_num(p.L1)}nH {d1} {ground}",
            f"ind L2{s} {_num(p.L2)}nH {d2} {ground}",
            _coupling_junction(f"J1{s}", p.ej1, p.k, d1, ground),
            _coupling_junction(f"J2{s}", p.ej2, p.k, d2, ground),
            f"loop {phi_x} J1{s}:+ L1{s}:-",
            f"loop {phi_x} J2{s}:+ L2{s}:-",
            f"loop {phi_Xb} Jq{s}:+ La2{s}:+ L2{s}:+ L1{s}:- La1{s}:-",
        ]
    else:
        lines += [
            f"ind L1{s} {_num(p.L1)}nH {a} {ground}",
            f"ind L2{s} {_num(p.L2)}nH {b} {ground}",
            _coupling_junction(f"J1{s}", p.ej1, p.k, a, ground),
            _coupling_junction(f"J2{s}", p.ej2, p.k, b, ground),
            f"loop {phi_x} J1{s}:+ L1{s}:-",
            f"loop {phi_x} J2{s}:+ L2{s}:-",
            f"loop {phi_Xb} Jq{s}:+ L2{s}:+ L1{s}:-",
        ]
    lines += [
        f"var phi_q{s} {a}:1 {b}:-1",
        f"var phi_r{s} {a}:1 {b}:1 {ground}:-2",
    ]
    return lines


def coupler_netlist(p: CouplerParams, title: str = "qubit-resonator block") -> str:
    lines = [f"# {title}", "tree devoret", "ground g"]
    lines += block_statements(p)
    return "\n".join(lines) + "\n"


def two_block_netlist(p1: CouplerParams, p2: CouplerParams, Cb: Optional[float] = None,
                      Cs: float = 0.0) -> str:
    """
    Two blocks on a common ground, each qubit node tied through C_g to a
    coupling node. Cb=None fuses the two coupling nodes into one; otherwise the
    nodes are joined by Cb. Cs is a stray capacitance from the fused node to ground.
    """
    lines = ["# two capacitively coupled blocks", "tree devoret", "ground g"]
    lines += block_statements(p1, "_1", phi_x="phi_x1", phi_Xb="phi_Xb1")
    lines += block_statements(p2, "_2", phi_x="phi_x2", phi_Xb="phi_Xb2")
    fused = Cb is None
    nodes = {"_1": "n" if fused else "n_1", "_2": "n" if fused else "n_2"}
    for s, p in (("_1", p1), ("_2", p2)):
        if p.Cg > 0:
            lines.append(f"cap Cga{s} {_num(p.Cg)}fF a{s} {nodes[s]}")
            lines.append(f"cap Cgb{s} {_num(p.Cg)}fF b{s} {nodes[s]}")
    if fused:
        if Cs > 0 and (p1.Cg > 0 or p2.Cg > 0):
            lines.append(f"cap Cs {_num(Cs)}fF n g")
    elif Cb > 0 and p1.Cg > 0 and p2.Cg > 0:
        lines.append(f"cap Cb {_num(Cb)}fF n_1 n_2")
    return "\n".join(lines) + "\n"
