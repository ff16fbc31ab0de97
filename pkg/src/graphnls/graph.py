"""Metric multigraphs with exact rational edge lengths.

A graph is a finite set of vertices joined by bounded edges (intervals
``[0, length]``) and half-lines (``[0, inf)``).  Every edge has a fixed
orientation: ``x = 0`` sits at ``tail`` and ``x = length`` at ``head``.  A
half-line starts at ``tail``; its ``head`` is a private marker vertex that
never appears in :attr:`MetricGraph.vertices` and is ignored by degree
computations.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable
from urllib.parse import parse_qsl

from .errors import BadParams, DisconnectedGraph, EmptyCore, InputError, UnknownName

INF_PREFIX = "inf:"

_SQRT_RE = re.compile(r"^\s*(?:(?P<coef>[0-9/.]+)\s*\*\s*)?sqrt\(\s*(?P<arg>[0-9/.]+)\s*\)\s*$")


def to_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal/ratio string, or float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a length: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # floats are taken at their exact binary value
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise InputError(f"cannot parse {value!r} as a rational number") from None
    raise InputError(f"not a number: {value!r}")


def parse_length(value) -> tuple[Fraction, str | None]:
    """Parse a JSON length.  Returns ``(rational value, irrational tag)``.

    ``"sqrt(2)"`` or ``"3/2*sqrt(5)"`` produce an irrational tag and a
    rational approximation used only for numerics.
    """
    if isinstance(value, str):
        m = _SQRT_RE.match(value)
        if m:
            coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
            arg = Fraction(m.group("arg"))
            root = math.sqrt(arg)
            if Fraction(root) ** 2 == arg:
                return coef * Fraction(root), None
            approx = coef * Fraction(root).limit_denominator(10**12)
            return approx, value.strip()
    return to_fraction(value), None


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: Fraction | None = None
    irrational: str | None = None

    @property
    def halfline(self) -> bool:
        return self.length is None

    @property
    def bounded(self) -> bool:
        return self.length is not None

    @property
    def is_loop(self) -> bool:
        return self.bounded and self.tail == self.head

    def other(self, v: str) -> str:
        return self.head if v == self.tail else self.tail


@dataclass(frozen=True)
class CycleInfo:
    """A cycle traversed in order; ``forward[i]`` says whether edge i is run tail->head."""

    edges: tuple[str, ...]
    forward: tuple[bool, ...]
    start: str
    L: Fraction
    multiples: tuple[int, ...]

    @property
    def k(self) -> int:
        return sum(self.multiples)


def halfline_marker(edge_id: str) -> str:
    return INF_PREFIX + edge_id


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    _incidence: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise InputError("duplicate vertex identifiers")
        if any(v.startswith(INF_PREFIX) for v in self.vertices):
            raise InputError(f"vertex names may not start with {INF_PREFIX!r}")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate edge identifiers")
        incidence = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.tail not in vset:
                raise InputError(f"edge {e.id}: unknown vertex {e.tail!r}")
            if e.halfline:
                if e.head != halfline_marker(e.id):
                    raise InputError(f"half-line {e.id} must end at its own marker")
            else:
                if e.head not in vset:
                    raise InputError(f"edge {e.id}: unknown vertex {e.head!r}")
                if e.length <= 0:
                    raise InputError(f"edge {e.id}: length must be positive, got {e.length}")
            incidence[e.tail].append((e, 0))
            if e.bounded:
                incidence[e.head].append((e, 1))
        object.__setattr__(self, "_incidence", incidence)
        comps = self._components()
        if len(comps) > 1:
            names = "; ".join("{" + ", ".join(sorted(c)) + "}" for c in comps)
            raise DisconnectedGraph(f"graph is disconnected; components: {names}")

    def _components(self) -> list[set[str]]:
        seen: set[str] = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = {v}
            queue = deque([v])
            while queue:
                a = queue.popleft()
                for e, _ in self._incidence[a]:
                    if e.bounded:
                        b = e.other(a)
                        if b not in comp:
                            comp.add(b)
                            queue.append(b)
            seen |= comp
            comps.append(comp)
        return comps

    # -- queries -------------------------------------------------------

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    @property
    def bounded_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.bounded)

    @property
    def halflines(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.halfline)

    def incident(self, v: str) -> list[tuple[Edge, int]]:
        """Edge-ends at ``v`` as ``(edge, end)``; ``end`` is 0 for x=0 and 1 for x=length.

        A self-loop shows up twice.
        """
        return list(self._incidence[v])

    def degree(self, v: str) -> int:
        return len(self._incidence[v])

    @property
    def is_noncompact(self) -> bool:
        return any(e.halfline for e in self.edges)

    def scaled(self, theta) -> MetricGraph:
        """Homothetic copy with every bounded length multiplied by ``theta``."""
        t = to_fraction(theta)
        if t <= 0:
            raise BadParams("scale factor must be positive")
        edges = [
            Edge(e.id, e.tail, e.head, None if e.halfline else e.length * t, e.irrational)
            for e in self.edges
        ]
        return MetricGraph(self.vertices, edges)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out = []
        for e in self.edges:
            if e.halfline:
                out.append({"id": e.id, "from": e.tail, "halfline": True})
            else:
                length = e.irrational if e.irrational else _format_fraction(e.length)
                out.append({"id": e.id, "from": e.tail, "to": e.head, "length": length})
        return {"vertices": list(self.vertices), "edges": out}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> MetricGraph:
        try:
            vertices = [str(v) for v in data["vertices"]]
            raw_edges = data["edges"]
        except (KeyError, TypeError):
            raise InputError("graph JSON needs 'vertices' and 'edges'") from None
        edges = []
        for i, item in enumerate(raw_edges):
            eid = str(item.get("id", f"e{i}"))
            if "from" not in item:
                raise InputError(f"edge {eid}: missing 'from'")
            if item.get("halfline"):
                edges.append(Edge(eid, str(item["from"]), halfline_marker(eid)))
            else:
                if "to" not in item or "length" not in item:
                    raise InputError(f"edge {eid}: bounded edges need 'to' and 'length'")
                length, tag = parse_length(item["length"])
                edges.append(Edge(eid, str(item["from"]), str(item["to"]), length, tag))
        return cls(vertices, edges)

    @classmethod
    def from_json(cls, text: str) -> MetricGraph:
        return cls.from_dict(json.loads(text))


def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def build_graph(vertices: Iterable[str], bounded: Iterable[tuple], halflines: Iterable[str]) -> MetricGraph:
    """Convenience builder: ``bounded`` holds ``(tail, head, length)`` triples,
    ``halflines`` the attachment vertices.  Edge ids are ``e0, e1, ...`` then ``h0, h1, ...``.
    """
    edges = [Edge(f"e{i}", a, b, to_fraction(length)) for i, (a, b, length) in enumerate(bounded)]
    edges += [Edge(f"h{i}", v, halfline_marker(f"h{i}")) for i, v in enumerate(halflines)]
    return MetricGraph(tuple(vertices), edges)


# -- topology ---------------------------------------------------------------


def compact_core(g: MetricGraph) -> MetricGraph:
    edges = g.bounded_edges
    used = {e.tail for e in edges} | {e.head for e in edges}
    return MetricGraph(tuple(v for v in g.vertices if v in used), edges)


def core_length(g: MetricGraph) -> Fraction:
    edges = g.bounded_edges
    if not edges:
        raise EmptyCore("graph has no bounded edges")
    return sum((e.length for e in edges), Fraction(0))


def pendant_count(g: MetricGraph) -> int:
    count = 0
    for e in g.bounded_edges:
        if e.is_loop:
            continue
        if g.degree(e.tail) == 1 or g.degree(e.head) == 1:
            count += 1
    return count


def is_tree(g: MetricGraph) -> bool:
    # connected multigraph: acyclic iff |E| = |V| - 1; half-lines pair with their markers
    return len(g.bounded_edges) == len(g.vertices) - 1


def rational_gcd(values: Iterable[Fraction]) -> Fraction:
    values = list(values)
    den = math.lcm(*(q.denominator for q in values))
    num = math.gcd(*(int(q * den) for q in values))
    return Fraction(num, den)


def _spanning_tree(g: MetricGraph):
    parent: dict[str, tuple[str, Edge] | None] = {}
    depth: dict[str, int] = {}
    tree_ids: set[str] = set()
    for root in g.vertices:
        if root in parent:
            continue
        parent[root] = None
        depth[root] = 0
        queue = deque([root])
        while queue:
            a = queue.popleft()
            for e, _ in g.incident(a):
                if e.halfline:
                    continue
                b = e.other(a)
                if b not in parent:
                    parent[b] = (a, e)
                    depth[b] = depth[a] + 1
                    tree_ids.add(e.id)
                    queue.append(b)
    return parent, depth, tree_ids


def cycle_basis(g: MetricGraph) -> list[frozenset[str]]:
    """Fundamental cycles (edge-id sets) of a spanning tree of the core."""
    parent, depth, tree_ids = _spanning_tree(g)
    basis = []
    for e in g.bounded_edges:
        if e.id in tree_ids:
            continue
        a, b = e.tail, e.head
        path = {e.id}
        while a != b:
            if depth[a] >= depth[b]:
                a, pe = parent[a]
            else:
                b, pe = parent[b]
            path ^= {pe.id}
        basis.append(frozenset(path))
    return basis


def _order_cycle(g: MetricGraph, ids: frozenset[str]):
    """Order an edge set as a closed walk; ``None`` unless it is a simple cycle."""
    edges = [g.edge(i) for i in ids]
    deg: dict[str, int] = {}
    for e in edges:
        deg[e.tail] = deg.get(e.tail, 0) + 1
        deg[e.head] = deg.get(e.head, 0) + 1
    if any(d != 2 for d in deg.values()):
        return None
    start = min(edges, key=lambda e: e.id)
    order, forward = [start.id], [True]
    here = start.head
    used = {start.id}
    while len(used) < len(edges):
        nxt = None
        for e in edges:
            if e.id not in used and here in (e.tail, e.head):
                nxt = e
                break
        if nxt is None:
            return None
        fwd = nxt.tail == here
        order.append(nxt.id)
        forward.append(fwd)
        used.add(nxt.id)
        here = nxt.head if fwd else nxt.tail
    if here != start.tail:
        return None
    return tuple(order), tuple(forward), start.tail


def commensurable_cycle(g: MetricGraph, max_combination: int = 1) -> CycleInfo | None:
    """First cycle with pairwise commensurable lengths, or ``None``.

    Basis cycles are tried first; ``max_combination > 1`` also tries
    symmetric differences of up to that many basis cycles.  Edges tagged
    irrational never qualify.
    """
    basis = cycle_basis(g)
    for r in range(1, max(1, max_combination) + 1):
        for combo in itertools.combinations(basis, r):
            ids = frozenset()
            for c in combo:
                ids = ids ^ c
            if not ids:
                continue
            ordered = _order_cycle(g, ids)
            if ordered is None:
                continue
            order, forward, start = ordered
            edges = [g.edge(i) for i in order]
            if any(e.irrational for e in edges):
                continue
            L = rational_gcd(e.length for e in edges)
            multiples = tuple(int(e.length / L) for e in edges)
            return CycleInfo(order, forward, start, L, multiples)
    return None


# -- gallery ----------------------------------------------------------------

_GALLERY_DEFAULTS = {
    "tadpole": {"loop": "2"},
    "segment_halfline": {"length": "1"},
    "segment_star": {"length": "1", "halflines": "5"},
    "star_with_collars": {"n": "8", "length": "1"},
    "two_pendant": {"pendant": "1"},
    "three_pendant_path": {"pendant": "1/2", "interior": "1", "third": "1"},
    "double_bridge": {"bridge1": "1", "bridge2": "1"},
    "half_double_bridge": {"bridge1": "1", "bridge2": "1"},
}

GALLERY = tuple(_GALLERY_DEFAULTS)


def _count(value, name) -> int:
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise BadParams(f"{name} must be an integer") from None
    if n < 1:
        raise BadParams(f"{name} must be >= 1")
    return n


def named_graph(name: str, **params) -> MetricGraph:
    """Gallery graphs used throughout the test suite and the CLI."""
    if name not in _GALLERY_DEFAULTS:
        raise UnknownName(f"unknown gallery graph {name!r}; choose from {', '.join(GALLERY)}")
    allowed = set(_GALLERY_DEFAULTS[name])
    if name == "two_pendant":
        allowed |= {"pendant1", "pendant2"}
    unknown = set(params) - allowed
    if unknown:
        raise BadParams(f"{name}: unknown parameters {sorted(unknown)}")
    P = dict(_GALLERY_DEFAULTS[name])
    P.update(params)

    def length(key):
        try:
            q = to_fraction(P[key])
        except InputError as exc:
            raise BadParams(f"{name}: {exc}") from None
        if q <= 0:
            raise BadParams(f"{name}: {key} must be positive")
        return q

    if name == "tadpole":
        return build_graph(["v"], [("v", "v", length("loop"))], ["v"])
    if name == "segment_halfline":
        return build_graph(["a", "v"], [("a", "v", length("length"))], ["v"])
    if name == "segment_star":
        n = _count(P["halflines"], "halflines")
        return build_graph(["a", "v"], [("a", "v", length("length"))], ["v"] * n)
    if name == "star_with_collars":
        n = _count(P["n"], "n")
        outer = [f"w{i}" for i in range(n)]
        return build_graph(["c", *outer], [("c", w, length("length")) for w in outer], outer)
    if name == "two_pendant":
        p1 = length("pendant1") if "pendant1" in P else length("pendant")
        p2 = length("pendant2") if "pendant2" in P else length("pendant")
        # both pendants oriented away from the centre
        return build_graph(["c", "t1", "t2"], [("c", "t1", p1), ("c", "t2", p2)], ["c"])
    if name == "three_pendant_path":
        xb, L, third = length("pendant"), length("interior"), length("third")
        verts = ["t0", "a1", "a2", "a3", "a4", "t5", "t3"]
        bounded = [
            ("t0", "a1", xb),
            ("a1", "a2", L),
            ("a2", "a3", L),
            ("a3", "a4", L),
            ("a4", "t5", xb),
            ("a3", "t3", third),
        ]
        return build_graph(verts, bounded, ["a1", "a1", "a2", "a4"])
    if name == "double_bridge":
        b1, b2 = length("bridge1"), length("bridge2")
        return build_graph(["v1", "v2"], [("v1", "v2", b1), ("v1", "v2", b2)], ["v1", "v2"])
    # half_double_bridge: the part of a double bridge left of its symmetry axis
    b1, b2 = length("bridge1"), length("bridge2")
    return build_graph(["v1", "m1", "m2"], [("v1", "m1", b1 / 2), ("v1", "m2", b2 / 2)], ["v1"])


def parse_graph_spec(spec: str) -> MetricGraph:
    """``gallery:name?key=value&...`` or a path to a JSON graph file."""
    if spec.startswith("gallery:"):
        rest = spec[len("gallery:"):]
        name, _, query = rest.partition("?")
        params = dict(parse_qsl(query, keep_blank_values=True)) if query else {}
        return named_graph(name, **params)
    try:
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read graph file {spec!r}: {exc}") from None
    try:
        return MetricGraph.from_json(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{spec}: invalid JSON: {exc}") from None
