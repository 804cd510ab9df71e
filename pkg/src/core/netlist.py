# src/core/netlist.py
"""
Line-oriented circuit netlists.

    node <name>
    cap <name> <value>fF <nodeA> <nodeB>
    ind <name> <value>nH <nodeA> <nodeB>
    jj <name> <EJ>GHz <nodeA> <nodeB>
    jjarray <name> <EJ_total>GHz k=<int> [Cj=<fF>] <nodeA> <nodeB>
    imp <name> R=<Ohm> Cz=<fF> <nodeA> <nodeB>
    loop <fluxSymbol> <branch:+|-> ...
    ground <node>
    tree <burkard|devoret>
    var <name> <node>:<coef> ...

'#' starts a comment, ';' separates statements on one line. The short forms
`C <value> a b`, `L <value> a b` and `J <value> a b` get generated names.
A branch phase runs from nodeA to nodeB; a loop sign of + means the loop
traverses the branch from nodeA to nodeB.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import NetlistSyntaxError, TopologyError, UnsupportedTopologyError
from .settings import TREE_RULES, get_settings

logger = logging.getLogger(__name__)

CAPACITOR = "capacitor"
INDUCTOR = "inductor"
JUNCTION = "junction"
ARRAY = "array"
IMPEDANCE = "impedance"

BRANCH_KINDS = (CAPACITOR, INDUCTOR, JUNCTION, ARRAY, IMPEDANCE)

_KEYWORDS = {
    "cap": CAPACITOR, "c": CAPACITOR,
    "ind": INDUCTOR, "l": INDUCTOR,
    "jj": JUNCTION, "j": JUNCTION,
    "jjarray": ARRAY,
    "imp": IMPEDANCE,
}

_UNITS = {
    CAPACITOR: {"fF": 1.0, "pF": 1e3},
    INDUCTOR: {"nH": 1.0, "pH": 1e-3, "uH": 1e3},
    JUNCTION: {"GHz": 1.0, "MHz": 1e-3},
    ARRAY: {"GHz": 1.0, "MHz": 1e-3},
    "resistance": {"": 1.0, "Ohm": 1.0, "kOhm": 1e3},
}

_SERIAL_UNITS = {CAPACITOR: "fF", INDUCTOR: "nH", JUNCTION: "GHz", ARRAY: "GHz"}
_SERIAL_KEYWORDS = {CAPACITOR: "cap", INDUCTOR: "ind", JUNCTION: "jj", ARRAY: "jjarray", IMPEDANCE: "imp"}

_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.+-]*$")


@dataclass(frozen=True)
class Branch:
    name: str
    kind: str
    node_a: str
    node_b: str
    # capacitance fF, inductance nH, or total Josephson energy GHz (k * E_J per junction for arrays)
    value: float = 0.0
    k: int = 1
    # impedance ports: resistance (Ohm) in series with Cz (fF)
    R: Optional[float] = None
    Cz: Optional[float] = None
    # junction capacitance per array junction (fF), only used for guards
    Cj: Optional[float] = None

    @property
    def ej_each(self) -> float:
        return self.value / self.k

    @property
    def endpoints(self) -> Tuple[str, str]:
        return self.node_a, self.node_b


@dataclass(frozen=True)
class FluxLoop:
    name: str
    flux_symbol: str
    # (branch name, +1 / -1) in traversal order
    branches: Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class VariableDecl:
    name: str
    coefficients: Tuple[Tuple[str, float], ...]


@dataclass(frozen=True)
class CircuitGraph:
    nodes: Tuple[str, ...]
    branches: Tuple[Branch, ...]
    loops: Tuple[FluxLoop, ...] = ()
    ground: Optional[str] = None
    variables: Tuple[VariableDecl, ...] = ()
    tree_rule: Optional[str] = None
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def branch(self, name: str) -> Branch:
        for b in self.branches:
            if b.name == name:
                return b
        raise KeyError(name)

    @property
    def branch_names(self) -> Tuple[str, ...]:
        return tuple(b.name for b in self.branches)

    @property
    def flux_symbols(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for loop in self.loops:
            seen.setdefault(loop.flux_symbol, None)
        return tuple(seen)

    def branches_of(self, *kinds: str) -> Tuple[Branch, ...]:
        return tuple(b for b in self.branches if b.kind in kinds)

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.nodes)
        for b in self.branches:
            g.add_edge(b.node_a, b.node_b, key=b.name, kind=b.kind)
        return g

    def canonical(self) -> "CircuitGraph":
        """Same circuit with nodes, branches and loops in serialization order."""
        return replace(
            self,
            nodes=tuple(sorted(self.nodes)),
            branches=tuple(sorted(self.branches, key=lambda b: b.name)),
            loops=tuple(sorted(self.loops, key=_loop_sort_key)),
            variables=tuple(sorted(self.variables, key=lambda v: v.name)),
        )


@dataclass(frozen=True)
class SpanningTree:
    tree_branches: Tuple[str, ...]
    chord_branches: Tuple[str, ...]
    rule: str = "burkard"


@dataclass(frozen=True)
class FluxAssignment:
    """
    offsets[branch][symbol] = c means the branch phase carries + 2 pi c Phi_symbol / Phi0
    on top of its node-phase difference. Tree branches carry nothing.
    """
    offsets: Dict[str, Dict[str, float]]
    tree: SpanningTree

    def coefficients(self, branch: str) -> Dict[str, float]:
        return dict(self.offsets.get(branch, {}))

    def phase_offset(self, branch: str, flux_map: Mapping[str, float]) -> float:
        return sum(2.0 * math.pi * c * flux_map.get(sym, 0.0) for sym, c in self.offsets.get(branch, {}).items())


def _loop_sort_key(loop: FluxLoop) -> Tuple[str, int]:
    symbol, _, idx = loop.name.rpartition("#")
    return symbol, int(idx) if idx.isdigit() else 0


# -----------------------------------------------------------------------------
# Parsing
# -----------------------------------------------------------------------------
class _Statement:
    def __init__(self, line_no: int, tokens: List[Tuple[str, int]]):
        self.line_no = line_no
        self.tokens = tokens

    def error(self, message: str, index: int = 0) -> NetlistSyntaxError:
        col = self.tokens[index][1] if index < len(self.tokens) else (self.tokens[-1][1] if self.tokens else 1)
        return NetlistSyntaxError(message, self.line_no, col)

    def text(self, index: int) -> str:
        if index >= len(self.tokens):
            raise self.error("Statement is missing arguments", len(self.tokens) - 1)
        return self.tokens[index][0]


def _split(text: str) -> List[_Statement]:
    statements: List[_Statement] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        offset = 0
        for chunk in line.split(";"):
            tokens = [(m.group(0), offset + m.start() + 1) for m in re.finditer(r"\S+", chunk)]
            if tokens:
                statements.append(_Statement(line_no, tokens))
            offset += len(chunk) + 1
    return statements


def _value(stmt: _Statement, index: int, units: Mapping[str, float], what: str) -> float:
    token = stmt.text(index)
    m = _NUMBER.match(token)
    if not m:
        raise stmt.error(f"Cannot read {what} from {token!r}", index)
    number, unit = m.groups()
    if unit not in units:
        raise stmt.error(f"Unit {unit or '(none)'!r} not allowed for {what}; use one of {sorted(u for u in units if u)}", index)
    v = float(number) * units[unit]
    if not v > 0 or math.isinf(v):
        raise stmt.error(f"{what} must be positive, got {token}", index)
    return v


def _keyed(stmt: _Statement, index: int, key: str, units: Mapping[str, float], what: str) -> float:
    token = stmt.text(index)
    prefix = key + "="
    if not token.startswith(prefix):
        raise stmt.error(f"Expected {prefix}<value>", index)
    sub = _Statement(stmt.line_no, [(token[len(prefix):], stmt.tokens[index][1] + len(prefix))])
    return _value(sub, 0, units, what)


def _name(stmt: _Statement, index: int) -> str:
    token = stmt.text(index)
    if not _NAME.match(token) or ":" in token:
        raise stmt.error(f"Invalid name {token!r}", index)
    return token


def parse(text: str) -> CircuitGraph:
    """Parse netlist text into a validated CircuitGraph."""
    from .array import validate_array_guards

    node_order: Dict[str, None] = {}
    declared_nodes: Dict[str, _Statement] = {}
    branches: List[Branch] = []
    branch_lines: Dict[str, _Statement] = {}
    loop_stmts: List[_Statement] = []
    var_stmts: List[_Statement] = []
    ground: Optional[str] = None
    ground_stmt: Optional[_Statement] = None
    tree_rule: Optional[str] = None
    auto_count: Dict[str, int] = {}

    for stmt in _split(text):
        keyword = stmt.text(0)
        lowered = keyword.lower()
        if lowered == "node":
            name = _name(stmt, 1)
            declared_nodes.setdefault(name, stmt)
            node_order.setdefault(name, None)
            continue
        if lowered == "ground":
            ground, ground_stmt = _name(stmt, 1), stmt
            continue
        if lowered == "tree":
            rule = stmt.text(1).lower()
            if rule not in TREE_RULES:
                raise stmt.error(f"Unknown tree rule {rule!r}", 1)
            tree_rule = rule
            continue
        if lowered == "loop":
            loop_stmts.append(stmt)
            continue
        if lowered == "var":
            var_stmts.append(stmt)
            continue
        kind = _KEYWORDS.get(lowered)
        if kind is None or (len(lowered) == 1 and keyword.islower()):
            raise stmt.error(f"Unknown statement {keyword!r}", 0)

        idx = 1
        if len(lowered) == 1 or _NUMBER.match(stmt.text(1)):
            # short form without a name
            auto_count[keyword.upper()] = auto_count.get(keyword.upper(), 0) + 1
            name = f"{keyword.upper()}{auto_count[keyword.upper()]}"
        else:
            name = _name(stmt, 1)
            idx = 2
        if name in branch_lines:
            raise stmt.error(f"Duplicate branch name {name!r}", 1)

        kwargs: Dict[str, object] = {}
        if kind == IMPEDANCE:
            kwargs["R"] = _keyed(stmt, idx, "R", _UNITS["resistance"], "resistance")
            kwargs["Cz"] = _keyed(stmt, idx + 1, "Cz", _UNITS[CAPACITOR], "series capacitance")
            idx += 2
        else:
            kwargs["value"] = _value(stmt, idx, _UNITS[kind], kind)
            idx += 1
            if kind == ARRAY:
                token = stmt.text(idx)
                if not re.match(r"^k=\d+$", token) or int(token[2:]) < 1:
                    raise stmt.error("Expected k=<positive integer>", idx)
                kwargs["k"] = int(token[2:])
                idx += 1
                if stmt.text(idx).startswith("Cj="):
                    kwargs["Cj"] = _keyed(stmt, idx, "Cj", _UNITS[CAPACITOR], "junction capacitance")
                    idx += 1
        node_a, node_b = _name(stmt, idx), _name(stmt, idx + 1)
        if len(stmt.tokens) > idx + 2:
            raise stmt.error("Unexpected trailing tokens", idx + 2)
        if node_a == node_b:
            raise stmt.error(f"Branch {name!r} connects node {node_a!r} to itself", idx)
        branches.append(Branch(name=name, kind=kind, node_a=node_a, node_b=node_b, **kwargs))
        branch_lines[name] = stmt
        node_order.setdefault(node_a, None)
        node_order.setdefault(node_b, None)

    if not branches:
        raise NetlistSyntaxError("Netlist contains no branches", 1)

    nodes = tuple(node_order)
    by_name = {b.name: b for b in branches}
    loops = _parse_loops(loop_stmts, by_name)
    variables = _parse_vars(var_stmts, nodes)
    if ground is not None and ground not in node_order:
        raise ground_stmt.error(f"Ground node {ground!r} is not connected to any branch", 1)

    degree: Dict[str, int] = {n: 0 for n in nodes}
    for b in branches:
        degree[b.node_a] += 1
        degree[b.node_b] += 1
    for n, deg in degree.items():
        if deg < 2:
            stmt = declared_nodes.get(n) or next(s for bn, s in branch_lines.items()
                                                 if n in by_name[bn].endpoints)
            raise TopologyError(f"Dangling node {n!r} (line {stmt.line_no})", node=n, line=stmt.line_no)

    graph = CircuitGraph(nodes=nodes, branches=tuple(branches), loops=loops, ground=ground,
                         variables=variables, tree_rule=tree_rule)
    if not nx.is_connected(graph.to_networkx()):
        raise TopologyError("Circuit graph is not connected")

    warnings: List[str] = []
    for b in graph.branches_of(ARRAY):
        warnings.extend(validate_array_guards(b))
    for w in warnings:
        logger.warning("netlist: %s", w)
    logger.debug("netlist: parsed %d nodes, %d branches, %d loops", len(nodes), len(branches), len(loops))
    return replace(graph, warnings=tuple(warnings))


def _parse_loops(stmts: Sequence[_Statement], by_name: Mapping[str, Branch]) -> Tuple[FluxLoop, ...]:
    loops: List[FluxLoop] = []
    counts: Dict[str, int] = {}
    for stmt in stmts:
        symbol = _name(stmt, 1)
        if len(stmt.tokens) < 4:
            raise stmt.error("A loop needs at least two branches", len(stmt.tokens) - 1)
        entries: List[Tuple[str, int]] = []
        for i in range(2, len(stmt.tokens)):
            token = stmt.text(i)
            m = re.match(r"^(.+):([+-])1?$", token)
            if not m:
                raise stmt.error(f"Expected <branch>:+ or <branch>:-, got {token!r}", i)
            bname, sign = m.group(1), (1 if m.group(2) == "+" else -1)
            if bname not in by_name:
                raise stmt.error(f"Loop references unknown branch {bname!r}", i)
            if any(bname == e[0] for e in entries):
                raise stmt.error(f"Branch {bname!r} appears twice in one loop", i)
            entries.append((bname, sign))
        _check_closed(stmt, entries, by_name)
        counts[symbol] = counts.get(symbol, 0) + 1
        loops.append(FluxLoop(name=f"{symbol}#{counts[symbol]}", flux_symbol=symbol, branches=tuple(entries)))
    return tuple(loops)


def _check_closed(stmt: _Statement, entries: Sequence[Tuple[str, int]], by_name: Mapping[str, Branch]) -> None:
    balance: Dict[str, int] = {}
    sub = nx.MultiGraph()
    for bname, sign in entries:
        b = by_name[bname]
        start, end = (b.node_a, b.node_b) if sign > 0 else (b.node_b, b.node_a)
        balance[start] = balance.get(start, 0) - 1
        balance[end] = balance.get(end, 0) + 1
        sub.add_edge(b.node_a, b.node_b, key=bname)
    if any(v != 0 for v in balance.values()) or not nx.is_connected(sub):
        raise TopologyError(f"Loop on line {stmt.line_no} is not a closed, consistently oriented cycle",
                            line=stmt.line_no)


def _parse_vars(stmts: Sequence[_Statement], nodes: Sequence[str]) -> Tuple[VariableDecl, ...]:
    decls: List[VariableDecl] = []
    seen = set()
    for stmt in stmts:
        name = _name(stmt, 1)
        if name in seen:
            raise stmt.error(f"Duplicate variable {name!r}", 1)
        seen.add(name)
        coeffs: List[Tuple[str, float]] = []
        for i in range(2, len(stmt.tokens)):
            token = stmt.text(i)
            node, _, coef = token.partition(":")
            if node not in nodes:
                raise stmt.error(f"Variable refers to unknown node {node!r}", i)
            try:
                value = float(Fraction(coef))
            except (ValueError, ZeroDivisionError):
                raise stmt.error(f"Bad coefficient {coef!r}", i) from None
            coeffs.append((node, value))
        if not coeffs:
            raise stmt.error("Variable needs at least one node coefficient", 1)
        decls.append(VariableDecl(name, tuple(coeffs)))
    return tuple(decls)


# -----------------------------------------------------------------------------
# Canonical serialization
# -----------------------------------------------------------------------------
def serialize(graph: CircuitGraph) -> str:
    g = graph.canonical()
    lines: List[str] = []
    if g.tree_rule:
        lines.append(f"tree {g.tree_rule}")
    if g.ground:
        lines.append(f"ground {g.ground}")
    lines.extend(f"node {n}" for n in g.nodes)
    for b in g.branches:
        kw = _SERIAL_KEYWORDS[b.kind]
        if b.kind == IMPEDANCE:
            lines.append(f"{kw} {b.name} R={b.R!r} Cz={b.Cz!r}fF {b.node_a} {b.node_b}")
        elif b.kind == ARRAY:
            cj = f" Cj={b.Cj!r}fF" if b.Cj else ""
            lines.append(f"{kw} {b.name} {b.value!r}GHz k={b.k}{cj} {b.node_a} {b.node_b}")
        else:
            lines.append(f"{kw} {b.name} {b.value!r}{_SERIAL_UNITS[b.kind]} {b.node_a} {b.node_b}")
    for loop in g.loops:
        refs = " ".join(f"{name}:{'+' if s > 0 else '-'}" for name, s in loop.branches)
        lines.append(f"loop {loop.flux_symbol} {refs}")
    for v in g.variables:
        refs = " ".join(f"{node}:{coef!r}" for node, coef in v.coefficients)
        lines.append(f"var {v.name} {refs}")
    return "\n".join(lines) + "\n"


# -----------------------------------------------------------------------------
# Spanning tree and flux assignment
# -----------------------------------------------------------------------------
_PRIORITY = {
    # lower goes into the tree first
    "burkard": {JUNCTION: 0, ARRAY: 0, IMPEDANCE: 0, INDUCTOR: 1, CAPACITOR: 2},
    "devoret": {INDUCTOR: 0, JUNCTION: 1, ARRAY: 1, IMPEDANCE: 1, CAPACITOR: 2},
}


def choose_spanning_tree(graph: CircuitGraph, rule: Optional[str] = None) -> SpanningTree:
    """
    Kruskal over branch priorities, ties broken by input order.
    burkard puts every junction, array and impedance into the tree.
    """
    rule = rule or graph.tree_rule or get_settings().tree_rule
    if rule not in _PRIORITY:
        raise UnsupportedTopologyError(f"Unknown tree rule {rule!r}")
    priority = _PRIORITY[rule]

    if rule == "burkard":
        forced = nx.MultiGraph()
        for b in graph.branches:
            if priority[b.kind] == 0:
                forced.add_edge(b.node_a, b.node_b, key=b.name)
        if forced.number_of_edges() > forced.number_of_nodes() - nx.number_connected_components(forced):
            raise UnsupportedTopologyError(
                "Junctions and impedances alone form a closed loop; no tree can contain them all",
                branches=sorted(k for _, _, k in forced.edges(keys=True)),
            )

    g = nx.MultiGraph()
    g.add_nodes_from(graph.nodes)
    n_branches = len(graph.branches)
    for index, b in enumerate(graph.branches):
        g.add_edge(b.node_a, b.node_b, key=b.name, weight=priority[b.kind] * n_branches + index)
    chosen = {key for _, _, key in nx.minimum_spanning_edges(g, algorithm="kruskal", weight="weight",
                                                             keys=True, data=False)}
    tree = tuple(b.name for b in graph.branches if b.name in chosen)
    chords = tuple(b.name for b in graph.branches if b.name not in chosen)
    caps = [name for name in tree if graph.branch(name).kind == CAPACITOR]
    if caps:
        logger.info("tree: capacitors %s needed to span the graph", caps)
    logger.debug("tree(%s): tree=%s chords=%s", rule, tree, chords)
    return SpanningTree(tree_branches=tree, chord_branches=chords, rule=rule)


def fundamental_cycle(graph: CircuitGraph, tree: SpanningTree, chord: str) -> Dict[str, int]:
    """Signed branch set of the cycle closed by chord, traversed along the chord's orientation."""
    t = nx.Graph()
    t.add_nodes_from(graph.nodes)
    for name in tree.tree_branches:
        b = graph.branch(name)
        t.add_edge(b.node_a, b.node_b, branch=name)
    c = graph.branch(chord)
    cycle = {chord: 1}
    path = nx.shortest_path(t, c.node_b, c.node_a)
    for x, y in zip(path, path[1:]):
        name = t.edges[x, y]["branch"]
        b = graph.branch(name)
        cycle[name] = 1 if (b.node_a, b.node_b) == (x, y) else -1
    return cycle


def assign_loop_fluxes(graph: CircuitGraph, tree: SpanningTree) -> FluxAssignment:
    """
    Distribute the declared loop fluxes over the chords. Each declared loop
    fixes the signed sum of its branch phases; fundamental cycles not covered
    by a declared loop carry zero flux.
    """
    chords = list(tree.chord_branches)
    index = {name: i for i, name in enumerate(chords)}
    n = len(chords)
    if n == 0:
        if graph.loops:
            raise TopologyError("Loops declared on a circuit without closed cycles")
        return FluxAssignment(offsets={}, tree=tree)

    rows: List[np.ndarray] = []
    symbols: List[Optional[str]] = []
    for loop in graph.loops:
        row = np.zeros(n)
        for name, sign in loop.branches:
            if name in index:
                row[index[name]] += sign
        candidate = np.vstack(rows + [row])
        if np.linalg.matrix_rank(candidate) < len(rows) + 1:
            raise TopologyError(f"Loop {loop.name} is not independent of the loops declared before it",
                                loop=loop.name)
        rows.append(row)
        symbols.append(loop.flux_symbol)
    for name in chords:
        if len(rows) == n:
            break
        row = np.zeros(n)
        row[index[name]] = 1.0
        candidate = np.vstack(rows + [row])
        if np.linalg.matrix_rank(candidate) == len(rows) + 1:
            rows.append(row)
            symbols.append(None)
    if len(rows) > n:
        raise TopologyError("More independent loops declared than the circuit has")

    M = np.vstack(rows)
    offsets: Dict[str, Dict[str, float]] = {name: {} for name in graph.branch_names}
    for sym in graph.flux_symbols:
        rhs = np.array([1.0 if s == sym else 0.0 for s in symbols])
        solution = np.linalg.solve(M, rhs)
        for name, coef in zip(chords, solution):
            if abs(coef) > 1e-12:
                rounded = round(coef)
                offsets[name][sym] = float(rounded) if abs(coef - rounded) < 1e-12 else float(coef)
    logger.debug("fluxes: %s", {k: v for k, v in offsets.items() if v})
    return FluxAssignment(offsets=offsets, tree=tree)
