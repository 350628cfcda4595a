"""Chain-of-evidence graph from hypotheses back to constructs and quotations.

Edges point from the more concrete element to the more abstract one, except
``houses`` (construct to variable) and ``grounds`` (quotation to
proposition), which keep their natural reading. Tracing walks the former
forwards and the latter backwards.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .grid import HypothesisGrid
from .model import Theory, resolve
from .refine import RefinedHypothesis, id_key

NODE_TYPES = ("hypothesis", "cell", "proposition", "variable", "indicator", "construct", "quotation", "archetype")
EDGE_TYPES = ("houses", "measures", "relates", "grounds", "derives_from", "merges", "instantiates")

_FORWARD = {"derives_from", "merges", "relates"}
_BACKWARD = {"houses", "grounds"}
_SHAPES = {
    "hypothesis": "box",
    "cell": "ellipse",
    "proposition": "diamond",
    "variable": "ellipse",
    "indicator": "plaintext",
    "construct": "box3d",
    "quotation": "note",
    "archetype": "component",
}


class TraceError(LookupError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    type: str
    label: str
    attrs: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    type: str


@dataclass
class TraceGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)

    def add_node(self, node_id: str, type_: str, label: str, **attrs: str) -> str:
        self.nodes[node_id] = Node(node_id, type_, label, tuple((k, str(v)) for k, v in attrs.items()))
        return node_id

    def add_edge(self, source: str, target: str, type_: str) -> None:
        for end in (source, target):
            if end not in self.nodes:
                raise TraceError(f"dangling reference: {end}")
        self.edges.append(Edge(source, target, type_))

    def count(self, type_: str) -> int:
        return sum(1 for n in self.nodes.values() if n.type == type_)

    def upstream_index(self) -> dict[str, list[tuple[str, Edge]]]:
        """Map each node to its neighbours one step closer to the theory's concepts."""
        index: dict[str, list[tuple[str, Edge]]] = {n: [] for n in self.nodes}
        for e in self.edges:
            if e.type in _FORWARD:
                index[e.source].append((e.target, e))
            elif e.type in _BACKWARD:
                index[e.target].append((e.source, e))
        for neighbours in index.values():
            neighbours.sort(key=lambda pair: (pair[0], pair[1].type))
        return index

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "type": n.type, "label": n.label, **dict(n.attrs)}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": [
                {"source": e.source, "target": e.target, "type": e.type}
                for e in sorted(self.edges, key=lambda e: (e.source, e.target, e.type))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _nid(type_: str, key: str) -> str:
    return f"{type_}:{key}"


def build_graph(
    theory: Theory,
    grids: Sequence[HypothesisGrid],
    hypotheses: Sequence[RefinedHypothesis],
) -> TraceGraph:
    g = TraceGraph()
    for c in theory.constructs:
        cid = g.add_node(_nid("construct", c.name), "construct", c.name)
        for v in c.variables:
            vkey = f"{c.name}.{v.name}"
            vid = g.add_node(_nid("variable", vkey), "variable", v.display)
            g.add_edge(cid, vid, "houses")
            for tok in v.domain.values:
                iid = g.add_node(_nid("indicator", f"{vkey}={tok}"), "indicator", tok)
                g.add_edge(iid, vid, "measures")

    for p in theory.propositions:
        pid = g.add_node(
            _nid("proposition", p.id), "proposition", p.id,
            kind=p.kind, strategic=str(p.strategic).lower(), text=p.text,
        )
        for ref in (p.left, p.right):
            try:
                pairs = resolve(theory, ref)
            except LookupError as exc:
                raise TraceError(f"dangling reference in {p.id}: {exc}") from None
            if pairs:
                for c, v in pairs:
                    g.add_edge(pid, _nid("variable", f"{c.name}.{v.name}"), "relates")
            else:
                g.add_edge(pid, _nid("construct", ref.construct), "relates")
        for i, q in enumerate(p.quotes, 1):
            qid = g.add_node(_nid("quotation", f"{p.id}#{i}"), "quotation", q.source, excerpt=q.excerpt)
            g.add_edge(qid, pid, "grounds")

    for grid in grids:
        for cell in grid.cells:
            cid = g.add_node(
                _nid("cell", cell.id), "cell", cell.id,
                left=str(cell.left), right=str(cell.right),
            )
            g.add_edge(cid, _nid("proposition", grid.proposition), "derives_from")
            for b in cell.bindings:
                g.add_edge(cid, _nid("indicator", f"{b.construct}.{b.variable}={b.token}"), "instantiates")

    by_id = {h.id: h for h in hypotheses}
    for h in hypotheses:
        attrs = {"status": h.status.value, "statement": h.statement}
        if h.rationale:
            attrs["rationale"] = h.rationale
        if h.refuted:
            attrs["refuted"] = "true"
        g.add_node(_nid("hypothesis", h.id), "hypothesis", h.id, **attrs)
    for h in hypotheses:
        hid = _nid("hypothesis", h.id)
        if h.parent is not None:
            if h.parent not in by_id:
                raise TraceError(f"dangling reference: hypothesis {h.id} splits unknown {h.parent}")
            g.add_edge(hid, _nid("hypothesis", h.parent), "derives_from")
            continue
        edge_type = "merges" if len(h.cells) > 1 else "derives_from"
        for c in h.cells:
            g.add_edge(hid, _nid("cell", c.id), edge_type)

    for a in theory.archetypes:
        aid = g.add_node(_nid("archetype", a.name), "archetype", a.name)
        for (c, v), tok in a.assignments:
            g.add_edge(aid, _nid("indicator", f"{c}.{v}={tok}"), "instantiates")

    _check_acyclic(g)
    return g


def _check_acyclic(g: TraceGraph) -> None:
    succ: dict[str, list[str]] = {}
    indeg = {n: 0 for n in g.nodes}
    for e in g.edges:
        if e.type in ("derives_from", "merges"):
            succ.setdefault(e.source, []).append(e.target)
            indeg[e.target] += 1
    queue = deque(n for n, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        n = queue.popleft()
        seen += 1
        for m in succ.get(n, ()):
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    if seen != len(indeg):
        raise TraceError("cycle along derives_from/merges edges")


@dataclass
class Trace:
    root: str
    nodes: list[tuple[int, Node]]  # (depth, node) in breadth-first order
    edges: list[Edge]
    paths: list[list[str]]
    warnings: list[str]

    def of_type(self, type_: str) -> list[Node]:
        return [n for _, n in self.nodes if n.type == type_]

    def summary(self) -> str:
        """One line: hypothesis <- cells <- proposition <- variables <- constructs <- quotations."""
        parts = []
        for type_ in ("hypothesis", "cell", "proposition", "variable", "construct", "quotation"):
            keys = sorted((n.id.split(":", 1)[1] for n in self.of_type(type_)), key=id_key)
            if keys:
                parts.append(", ".join(keys))
        return " <- ".join(parts)

    def to_dict(self) -> dict:
        node = self.nodes[0][1]
        return {
            "hypothesis": node.label,
            "annotations": dict(node.attrs),
            "nodes": [{"id": n.id, "type": n.type, "label": n.label, "depth": d} for d, n in self.nodes],
            "edges": [{"source": e.source, "target": e.target, "type": e.type} for e in self.edges],
            "paths": self.paths,
            "warnings": self.warnings,
        }


def _bound_variables(graph: TraceGraph, root: str, up: dict) -> set[str]:
    cells, stack, seen = set(), [root], {root}
    while stack:
        n = stack.pop()
        for m, e in up[n]:
            if e.type in ("derives_from", "merges") and m not in seen:
                seen.add(m)
                if graph.nodes[m].type == "cell":
                    cells.add(m)
                elif graph.nodes[m].type == "hypothesis":
                    stack.append(m)
    out = set()
    for e in graph.edges:
        if e.type == "instantiates" and e.source in cells:
            out.add("variable:" + e.target.split(":", 1)[1].split("=", 1)[0])
    return out


def trace(graph: TraceGraph, hypothesis_id: str) -> Trace:
    """Breadth-first walk from a hypothesis back to its quotations."""
    root = _nid("hypothesis", hypothesis_id)
    if root not in graph.nodes:
        raise TraceError(f"unknown hypothesis '{hypothesis_id}'")
    up = graph.upstream_index()
    # a proposition's variables are followed only if the traced cells bind them
    bound = _bound_variables(graph, root, up)
    depth = {root: 0}
    order = [root]
    edges: list[Edge] = []
    frontier = [root]
    while frontier:
        nxt: list[str] = []
        for n in frontier:
            for m, e in up[n]:
                if e.type == "relates" and graph.nodes[m].type == "variable" and m not in bound:
                    continue
                if e not in edges:
                    edges.append(e)
                if m not in depth:
                    depth[m] = depth[n] + 1
                    nxt.append(m)
        nxt.sort()
        order.extend(nxt)
        frontier = nxt

    # every path ending at a quotation, or at a proposition with none
    props = [n for n in order if graph.nodes[n].type == "proposition"]
    warnings = []
    sinks = set()
    for p in props:
        quotes = [m for m, e in up[p] if e.type == "grounds"]
        if quotes:
            sinks.update(quotes)
        else:
            sinks.add(p)
            warnings.append(f"{graph.nodes[p].label} has no grounding quotations; trace ends at the proposition")
    paths: list[list[str]] = []

    def walk(n: str, path: list[str]):
        if n in sinks:
            paths.append(path)
            return
        for m, e in up[n]:
            if e.type == "houses" or m in path:
                continue
            walk(m, path + [m])

    walk(root, [root])
    unique = sorted({tuple(p) for p in paths})
    return Trace(
        root=root,
        nodes=[(depth[n], graph.nodes[n]) for n in order],
        edges=edges,
        paths=[list(p) for p in unique],
        warnings=warnings,
    )


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(nodes: Iterable[Node], edges: Iterable[Edge], name: str = "theory") -> str:
    lines = [f"digraph {_dot_id(name)} {{", "  rankdir=BT;"]
    for n in sorted(nodes, key=lambda n: n.id):
        attrs = {"label": n.label, "type": n.type, "shape": _SHAPES[n.type]}
        attrs.update({k: v for k, v in n.attrs if k in ("status", "rationale", "refuted")})
        body = ", ".join(f"{k}={_dot_id(v)}" for k, v in attrs.items())
        lines.append(f"  {_dot_id(n.id)} [{body}];")
    for e in sorted(edges, key=lambda e: (e.source, e.target, e.type)):
        lines.append(f"  {_dot_id(e.source)} -> {_dot_id(e.target)} [label={_dot_id(e.type)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_dot(graph: TraceGraph) -> str:
    return to_dot(graph.nodes.values(), graph.edges)


def trace_dot(result: Trace) -> str:
    return to_dot((n for _, n in result.nodes), result.edges, name=result.root)
