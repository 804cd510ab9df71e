import pytest

from src.core.circuits import coupler_netlist
from src.core.errors import NetlistSyntaxError, TopologyError, UnsupportedTopologyError
from src.core.netlist import (
    ARRAY,
    CAPACITOR,
    JUNCTION,
    assign_loop_fluxes,
    choose_spanning_tree,
    fundamental_cycle,
    parse,
    serialize,
)

from conftest import FLUXONIUM_LIKE

PARALLEL_JUNCTIONS = """
cap C 10fF a g
jj J1 5GHz a g
jj J2 5GHz a g
loop phi J1:+ J2:-
ground g
"""


def test_parse_transmon(transmon_graph):
    g = transmon_graph
    assert g.nodes == ("q", "g")
    assert g.ground == "g"
    assert [b.kind for b in g.branches] == [CAPACITOR, JUNCTION]
    assert g.branch("J").value == pytest.approx(15.0)
    assert g.to_networkx().number_of_edges() == 2


def test_short_forms_and_units():
    g = parse("C 1pF a g; J 500MHz a g\nL 1500pH a g")
    assert g.branch_names == ("C1", "J1", "L1")
    assert g.branch("C1").value == pytest.approx(1000.0)
    assert g.branch("J1").value == pytest.approx(0.5)
    assert g.branch("L1").value == pytest.approx(1.5)


def test_syntax_error_position():
    with pytest.raises(NetlistSyntaxError) as info:
        parse("jj J 5GHz a g\ncap C 10xF a g")
    assert info.value.line == 2
    assert info.value.column == 7
    assert info.value.to_dict()["kind"] == "netlist_syntax_error"


@pytest.mark.parametrize("text", [
    "cap C 10fF a a",
    "cap C 10fF a g\ncap C 12fF a g",
    "cap C -10fF a g\njj J 5GHz a g",
    "widget W 1fF a g",
    "c 10fF a g",
    "",
])
def test_rejected_statements(text):
    with pytest.raises(NetlistSyntaxError):
        parse(text)


def test_dangling_node():
    with pytest.raises(TopologyError):
        parse("cap C 10fF a g\njj J 5GHz a g\nind L 2nH a b")


def test_open_loop_rejected():
    with pytest.raises(TopologyError):
        parse("cap C 10fF a g\njj J 5GHz a g\nind L 2nH a g\nloop phi J:+ L:+")


@pytest.mark.parametrize("rule, in_tree", [("burkard", "J"), ("devoret", "L")])
def test_spanning_tree_rules(rule, in_tree):
    g = parse(FLUXONIUM_LIKE)
    tree = choose_spanning_tree(g, rule)
    assert tree.tree_branches == (in_tree,)
    assert len(tree.tree_branches) == len(g.nodes) - 1
    assert set(tree.chord_branches) | set(tree.tree_branches) == set(g.branch_names)


def test_junction_loop_needs_devoret_tree():
    g = parse(PARALLEL_JUNCTIONS)
    with pytest.raises(UnsupportedTopologyError):
        choose_spanning_tree(g, "burkard")
    assert choose_spanning_tree(g, "devoret").rule == "devoret"


def test_loop_flux_lands_on_chord():
    g = parse(FLUXONIUM_LIKE)
    tree = choose_spanning_tree(g, "burkard")
    fluxes = assign_loop_fluxes(g, tree)
    assert fluxes.coefficients("L") == {"phi": -1.0}
    assert fluxes.coefficients("J") == {}
    assert fluxes.coefficients("C") == {}
    cycle = fundamental_cycle(g, tree, "L")
    assert cycle == {"L": 1, "J": -1}


def test_array_guard_warning():
    g = parse("cap C 50fF a g\njjarray A 30GHz k=5 a g")
    assert g.branch("A").kind == ARRAY
    assert g.branch("A").ej_each == pytest.approx(6.0)
    assert any("A:" in w for w in g.warnings)


def test_coupler_netlist_declares_mode_variables(k1):
    g = parse(coupler_netlist(k1))
    assert [v.name for v in g.variables] == ["phi_q", "phi_r"]
    assert g.flux_symbols == ("phi_x", "phi_Xb")
    assert g.tree_rule == "devoret"


def test_serialization_is_canonical(add):
    g = parse(coupler_netlist(add))
    text = serialize(g)
    assert serialize(parse(text)) == text
    lines = [l for l in text.splitlines() if l.startswith(("cap", "ind", "jj"))]
    names = [l.split()[1] for l in lines]
    assert names == sorted(names)
