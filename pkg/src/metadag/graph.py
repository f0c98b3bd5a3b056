"""Vertex-labeled DAGs with ordered in/out edge sequences.

A :class:`Dag` is an immutable multigraph. Every vertex carries a label and
two edge sequences (``in_order`` and ``out_order``); the order of those
sequences is part of the graph, not an artifact of construction. Edges may
carry an optional nonterminal label, which turns a complete DAG into a
derivation DAG.

The module also holds the small path toolkit (directed/undirected shortest
paths with vertex-or-edge endpoints, cycles with chord paths), the exact
canonical form used for deduplication, and the text file format.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence


class DagError(ValueError):
    """Raised for malformed graphs or bad queries against a graph."""


class DagFormatError(DagError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Edge(NamedTuple):
    src: str
    tar: str
    label: Optional[str] = None


@dataclass(frozen=True, eq=True)
class Dag:
    vertices: Mapping[str, str]
    edges: Mapping[str, Edge]
    in_order: Mapping[str, tuple[str, ...]]
    out_order: Mapping[str, tuple[str, ...]]

    @classmethod
    def build(
        cls,
        vertices: Mapping[str, str] | Iterable[tuple[str, str]],
        edges: Mapping[str, tuple] | Iterable[tuple] = (),
        in_order: Mapping[str, Sequence[str]] | None = None,
        out_order: Mapping[str, Sequence[str]] | None = None,
    ) -> "Dag":
        """Build a graph; missing orders default to edge declaration order.

        ``edges`` maps edge id to ``(src, tar)`` or ``(src, tar, label)``.
        """
        verts = dict(vertices)
        raw = edges.items() if isinstance(edges, Mapping) else edges
        es: dict[str, Edge] = {}
        for item in raw:
            eid, spec = item[0], item[1:]
            if len(spec) == 1:
                spec = tuple(spec[0])
            es[eid] = Edge(*spec)
        ins = {v: [] for v in verts}
        outs = {v: [] for v in verts}
        for eid, e in es.items():
            if e.tar in ins:
                ins[e.tar].append(eid)
            if e.src in outs:
                outs[e.src].append(eid)
        if in_order:
            ins.update({v: list(seq) for v, seq in in_order.items()})
        if out_order:
            outs.update({v: list(seq) for v, seq in out_order.items()})
        return cls(
            verts,
            es,
            {v: tuple(s) for v, s in ins.items()},
            {v: tuple(s) for v, s in outs.items()},
        )

    @classmethod
    def empty(cls) -> "Dag":
        return cls({}, {}, {}, {})

    def __len__(self) -> int:
        return len(self.vertices)

    def label(self, v: str) -> str:
        return self.vertices[v]

    def in_edges(self, v: str) -> tuple[str, ...]:
        return self.in_order[v]

    def out_edges(self, v: str) -> tuple[str, ...]:
        return self.out_order[v]

    def roots(self) -> list[str]:
        return [v for v in self.vertices if not self.in_order[v]]

    def leaves(self) -> list[str]:
        return [v for v in self.vertices if not self.out_order[v]]

    def in_labels(self, v: str) -> tuple[Optional[str], ...]:
        return tuple(self.edges[e].label for e in self.in_order[v])

    def out_labels(self, v: str) -> tuple[Optional[str], ...]:
        return tuple(self.edges[e].label for e in self.out_order[v])

    def successors(self, v: str) -> list[str]:
        return [self.edges[e].tar for e in self.out_order[v]]

    def predecessors(self, v: str) -> list[str]:
        return [self.edges[e].src for e in self.in_order[v]]

    def has_edge_labels(self) -> bool:
        return any(e.label is not None for e in self.edges.values())

    def strip_labels(self) -> "Dag":
        """Drop edge labels (turn a derivation DAG into its underlying DAG)."""
        edges = {eid: Edge(e.src, e.tar, None) for eid, e in self.edges.items()}
        return Dag(dict(self.vertices), edges, dict(self.in_order), dict(self.out_order))

    def with_edge_labels(self, labels: Mapping[str, Optional[str]]) -> "Dag":
        edges = {eid: Edge(e.src, e.tar, labels.get(eid, e.label)) for eid, e in self.edges.items()}
        return Dag(dict(self.vertices), edges, dict(self.in_order), dict(self.out_order))

    def rename(self, vmap: Mapping[str, str], emap: Mapping[str, str]) -> "Dag":
        """Rename vertex and edge ids; ids missing from the maps are kept."""
        vm = lambda v: vmap.get(v, v)  # noqa: E731
        em = lambda e: emap.get(e, e)  # noqa: E731
        return Dag(
            {vm(v): lab for v, lab in self.vertices.items()},
            {em(eid): Edge(vm(e.src), vm(e.tar), e.label) for eid, e in self.edges.items()},
            {vm(v): tuple(map(em, seq)) for v, seq in self.in_order.items()},
            {vm(v): tuple(map(em, seq)) for v, seq in self.out_order.items()},
        )

    def suffixed(self, suffix: str) -> "Dag":
        return self.rename(
            {v: f"{v}{suffix}" for v in self.vertices},
            {e: f"{e}{suffix}" for e in self.edges},
        )

    def subgraph(self, vertex_ids: Iterable[str]) -> "Dag":
        """Induced subgraph; only valid for unions of connected components."""
        keep = set(vertex_ids)
        edges = {eid: e for eid, e in self.edges.items() if e.src in keep and e.tar in keep}
        return Dag(
            {v: lab for v, lab in self.vertices.items() if v in keep},
            edges,
            {v: tuple(e for e in self.in_order[v] if e in edges) for v in self.vertices if v in keep},
            {v: tuple(e for e in self.out_order[v] if e in edges) for v in self.vertices if v in keep},
        )

    def __str__(self) -> str:
        return format_dag(self)


# ---------------------------------------------------------------- validation

def validate_dag(g: Dag, nonterminals: Iterable[str] = ()) -> list[str]:
    """Return a list of invariant violations; an empty list means valid."""
    problems: list[str] = []
    nts = set(nonterminals)
    for eid, e in g.edges.items():
        if e.src not in g.vertices or e.tar not in g.vertices:
            problems.append(f"edge {eid}: unknown endpoint")
            continue
        if e.src == e.tar:
            problems.append(f"edge {eid}: loop at {e.src}")
    seen_in: dict[str, list[str]] = {}
    seen_out: dict[str, list[str]] = {}
    for v in g.vertices:
        for eid in g.in_order.get(v, ()):
            seen_in.setdefault(eid, []).append(v)
        for eid in g.out_order.get(v, ()):
            seen_out.setdefault(eid, []).append(v)
    for v in set(g.in_order) | set(g.out_order):
        if v not in g.vertices:
            problems.append(f"order entry for unknown vertex {v}")
    for eid, e in g.edges.items():
        if seen_in.get(eid) != [e.tar]:
            problems.append(f"edge {eid}: must appear exactly once, in in_order({e.tar})")
        if seen_out.get(eid) != [e.src]:
            problems.append(f"edge {eid}: must appear exactly once, in out_order({e.src})")
    for eid in set(seen_in) | set(seen_out):
        if eid not in g.edges:
            problems.append(f"order lists unknown edge {eid}")
    if not problems and topological_order(g) is None:
        problems.append("directed cycle")
    for v, lab in g.vertices.items():
        if lab in nts and (len(g.in_order.get(v, ())) != 1 or g.out_order.get(v, ())):
            problems.append(f"vertex {v}: nonterminal-labeled vertex needs one in-edge and no out-edges")
    return problems


def topological_order(g: Dag) -> Optional[list[str]]:
    """Kahn's algorithm in vertex declaration order; None if a cycle exists."""
    indeg = {v: 0 for v in g.vertices}
    for e in g.edges.values():
        if e.tar in indeg:
            indeg[e.tar] += 1
    ready = deque(v for v, d in indeg.items() if d == 0)
    order = []
    while ready:
        v = ready.popleft()
        order.append(v)
        for eid in g.out_order.get(v, ()):
            t = g.edges[eid].tar
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
    return order if len(order) == len(g.vertices) else None


def require_valid(g: Dag, nonterminals: Iterable[str] = ()) -> None:
    problems = validate_dag(g, nonterminals)
    if problems:
        raise DagError("; ".join(problems))


# -------------------------------------------------------------- connectivity

def _undirected_adjacency(g: Dag) -> dict[str, list[tuple[str, str]]]:
    adj: dict[str, list[tuple[str, str]]] = {v: [] for v in g.vertices}
    for eid, e in g.edges.items():
        adj[e.src].append((eid, e.tar))
        adj[e.tar].append((eid, e.src))
    return adj


def components(g: Dag) -> list[list[str]]:
    """Connected components (undirected), in vertex declaration order."""
    adj = _undirected_adjacency(g)
    seen: set[str] = set()
    out = []
    for start in g.vertices:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            v = stack.pop()
            for _, w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        out.append(comp)
    return out


def is_connected(g: Dag) -> bool:
    return len(components(g)) <= 1


def is_string_dag(g: Dag) -> bool:
    if not is_connected(g):
        raise DagError("string-DAG test needs a connected graph")
    return all(len(g.in_order[v]) <= 1 and len(g.out_order[v]) <= 1 for v in g.vertices)


def disjoint_union(g1: Dag, g2: Dag) -> Dag:
    """``g1 & g2``; ids of ``g2`` that clash with ``g1`` get a fresh suffix."""
    used_v = set(g1.vertices)
    used_e = set(g1.edges)
    vmap: dict[str, str] = {}
    emap: dict[str, str] = {}
    for ids, used, m in ((g2.vertices, used_v, vmap), (g2.edges, used_e, emap)):
        taken = used | set(ids)
        for x in ids:
            if x in used:
                k = 1
                while f"{x}'{k}" in taken:
                    k += 1
                m[x] = f"{x}'{k}"
                taken.add(m[x])
    h = g2.rename(vmap, emap)
    return Dag(
        {**g1.vertices, **h.vertices},
        {**g1.edges, **h.edges},
        {**g1.in_order, **h.in_order},
        {**g1.out_order, **h.out_order},
    )


def reverse(g: Dag) -> Dag:
    """Flip every edge; in- and out-orders trade places."""
    return Dag(
        dict(g.vertices),
        {eid: Edge(e.tar, e.src, e.label) for eid, e in g.edges.items()},
        dict(g.out_order),
        dict(g.in_order),
    )


# --------------------------------------------------------------------- paths

@dataclass(frozen=True)
class Path:
    edges: tuple[str, ...]
    vertices: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def is_cycle(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    def is_directed(self, g: Dag) -> bool:
        fwd = all(g.edges[e].tar == self.vertices[i + 1] for i, e in enumerate(self.edges))
        bwd = all(g.edges[e].tar == self.vertices[i] for i, e in enumerate(self.edges))
        return fwd or bwd

    def is_well_formed(self, g: Dag) -> bool:
        """Check the alternating vertex/edge condition edge by edge."""
        if not self.edges or len(self.vertices) != len(self.edges) + 1:
            return False
        for i, eid in enumerate(self.edges):
            e = g.edges.get(eid)
            if e is None or {e.src, e.tar} != {self.vertices[i], self.vertices[i + 1]}:
                return False
        return True


def find_path(g: Dag, s: str, t: str, mode: str = "undirected") -> Optional[Path]:
    """Shortest path between ``s`` and ``t``; each may be a vertex or an edge id.

    An edge endpoint must be the first (for ``s``) or last (for ``t``) edge
    of the path. ``mode="directed"`` only follows edges forward, i.e. it
    finds a path *from* ``s`` *to* ``t``.
    """
    if mode not in ("directed", "undirected"):
        raise DagError(f"unknown path mode {mode!r}")
    for x in (s, t):
        if x not in g.vertices and x not in g.edges:
            raise DagError(f"unknown id {x!r}")
    directed = mode == "directed"
    adj = _undirected_adjacency(g)

    def steps(v: str) -> Iterator[tuple[str, str]]:
        for eid, w in adj[v]:
            if not directed or g.edges[eid].src == v:
                yield eid, w

    # queue items: (current vertex, edge list, vertex list)
    starts: list[tuple[str, tuple[str, ...], tuple[str, ...]]] = []
    if s in g.vertices:
        starts.append((s, (), (s,)))
    else:
        e = g.edges[s]
        starts.append((e.tar, (s,), (e.src, e.tar)))
        if not directed:
            starts.append((e.src, (s,), (e.tar, e.src)))

    def hit(edges: tuple[str, ...], v: str) -> bool:
        if not edges:
            return False
        return edges[-1] == t if t in g.edges else v == t

    queue = deque()
    seen: set[str] = set()
    for st in starts:
        if hit(st[1], st[0]):
            return Path(st[1], st[2])
        queue.append(st)
    while queue:
        v, es, vs = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        for eid, w in steps(v):
            if eid in es:
                continue
            nes, nvs = es + (eid,), vs + (w,)
            if hit(nes, w):
                return Path(nes, nvs)
            if w not in seen:
                queue.append((w, nes, nvs))
    return None


@dataclass(frozen=True)
class ChordWitness:
    cycle: Path
    chord: Path

    def verify(self, g: Dag) -> bool:
        c, p = self.cycle, self.chord
        if not (c.is_well_formed(g) and p.is_well_formed(g) and c.is_cycle):
            return False
        if len(set(c.edges)) != len(c.edges) or set(c.edges) & set(p.edges):
            return False
        ends = {p.vertices[0], p.vertices[-1]}
        return p.vertices[0] != p.vertices[-1] and set(c.vertices) & set(p.vertices) == ends


def iter_simple_cycles(g: Dag) -> Iterator[Path]:
    """Undirected simple cycles of the multigraph, each reported once."""
    adj = _undirected_adjacency(g)
    order = {v: i for i, v in enumerate(g.vertices)}
    found: set[frozenset[str]] = set()
    for start in g.vertices:
        rank = order[start]
        stack = [(start, (), (start,))]
        while stack:
            v, es, vs = stack.pop()
            for eid, w in adj[v]:
                if eid in es or order[w] < rank:
                    continue
                if w == start:
                    key = frozenset(es + (eid,))
                    if key not in found:
                        found.add(key)
                        yield Path(es + (eid,), vs + (w,))
                elif w not in vs:
                    stack.append((w, es + (eid,), vs + (w,)))


def find_cycle_with_chord(g: Dag) -> Optional[ChordWitness]:
    """Some undirected cycle together with a chord path of it, or None."""
    adj = _undirected_adjacency(g)
    for cyc in iter_simple_cycles(g):
        on_cycle = set(cyc.vertices)
        cyc_edges = set(cyc.edges)
        for u in cyc.vertices[:-1]:
            # BFS off the cycle; stop at the first return to another cycle vertex
            queue = deque([(u, (), (u,))])
            seen = {u}
            while queue:
                v, es, vs = queue.popleft()
                for eid, w in adj[v]:
                    if eid in cyc_edges or eid in es:
                        continue
                    if w in on_cycle:
                        if w != u:
                            return ChordWitness(cyc, Path(es + (eid,), vs + (w,)))
                        continue
                    if w not in seen:
                        seen.add(w)
                        queue.append((w, es + (eid,), vs + (w,)))
    return None


# ------------------------------------------------------------ canonical form

def _component_code(g: Dag, start: str) -> tuple:
    # ordered in/out sequences make a connected graph rigid once one vertex is fixed
    edges, out_order, in_order, labels = g.edges, g.out_order, g.in_order, g.vertices
    vnum = {start: 0}
    enum: dict[str, int] = {}
    queue = [start]
    rows = []
    for v in queue:
        outs = []
        for eid in out_order[v]:
            k = enum.setdefault(eid, len(enum))
            w = edges[eid][1]
            if w not in vnum:
                vnum[w] = len(vnum)
                queue.append(w)
            outs.append(k)
        ins = []
        for eid in in_order[v]:
            k = enum.setdefault(eid, len(enum))
            w = edges[eid][0]
            if w not in vnum:
                vnum[w] = len(vnum)
                queue.append(w)
            ins.append(k)
        rows.append((labels[v], tuple(ins), tuple(outs)))
    erows = [None] * len(enum)
    for eid, k in enum.items():
        e = edges[eid]
        erows[k] = (vnum[e[0]], vnum[e[1]], e[2] or "")
    return (tuple(rows), tuple(erows))


def canonical_form(g: Dag) -> bytes:
    """Isomorphism-invariant key respecting labels, direction and edge orders.

    Two graphs share a key iff a bijection on vertices and edges preserves
    vertex labels, edge labels, sources, targets and every in/out sequence.
    """
    codes = []
    for comp in components(g):
        # the first row of a code is fixed by the start vertex; only minimal ones can win
        def first_row(v):
            k, m = len(g.out_order[v]), len(g.in_order[v])
            return (g.vertices[v], tuple(range(k, k + m)), tuple(range(k)))

        rows = {v: first_row(v) for v in comp}
        low = min(rows.values())
        best = None
        for v in (v for v in comp if rows[v] == low):
            code = _component_code(g, v)
            if best is None or code < best:
                best = code
        codes.append(best)
    codes.sort()
    return repr(codes).encode("utf-8")


def is_isomorphic(g1: Dag, g2: Dag) -> bool:
    return canonical_form(g1) == canonical_form(g2)


# --------------------------------------------------------------- file format

def parse_dag(text: str) -> Dag:
    """Parse the line-oriented DAG format (see README)."""
    vertices: dict[str, str] = {}
    edges: dict[str, Edge] = {}
    in_o: dict[str, tuple[str, ...]] = {}
    out_o: dict[str, tuple[str, ...]] = {}
    order_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "vertex":
            if len(parts) != 3:
                raise DagFormatError(lineno, "expected 'vertex <id> <label>'")
            _, vid, lab = parts
            if vid in vertices:
                raise DagFormatError(lineno, f"duplicate vertex {vid}")
            vertices[vid] = lab
        elif kind == "edge":
            if len(parts) not in (4, 5):
                raise DagFormatError(lineno, "expected 'edge <id> <src> <tar> [<label>]'")
            eid, src, tar = parts[1:4]
            if eid in edges:
                raise DagFormatError(lineno, f"duplicate edge {eid}")
            for x in (src, tar):
                if x not in vertices:
                    raise DagFormatError(lineno, f"unknown vertex {x}")
            edges[eid] = Edge(src, tar, parts[4] if len(parts) == 5 else None)
        elif kind in ("inorder", "outorder"):
            if len(parts) < 2:
                raise DagFormatError(lineno, f"expected '{kind} <vertex> <edge>...'")
            order_lines.append((lineno, kind, parts[1], tuple(parts[2:])))
        else:
            raise DagFormatError(lineno, f"unknown record {kind!r}")
    g = Dag.build(vertices, edges)
    in_o, out_o = dict(g.in_order), dict(g.out_order)
    seen = set()
    for lineno, kind, vid, seq in order_lines:
        if vid not in vertices:
            raise DagFormatError(lineno, f"unknown vertex {vid}")
        if (kind, vid) in seen:
            raise DagFormatError(lineno, f"duplicate {kind} for {vid}")
        seen.add((kind, vid))
        target = in_o if kind == "inorder" else out_o
        if sorted(seq) != sorted(target[vid]):
            raise DagFormatError(lineno, f"{kind} {vid} must list exactly its incident edges")
        target[vid] = seq
    return Dag(vertices, edges, in_o, out_o)


def format_dag(g: Dag) -> str:
    lines = [f"vertex {v} {lab}" for v, lab in g.vertices.items()]
    for eid, e in g.edges.items():
        lines.append(f"edge {eid} {e.src} {e.tar}" + (f" {e.label}" if e.label else ""))
    default = Dag.build(g.vertices, g.edges)
    for v in g.vertices:
        if g.in_order[v] != default.in_order[v]:
            lines.append(" ".join(["inorder", v, *g.in_order[v]]))
        if g.out_order[v] != default.out_order[v]:
            lines.append(" ".join(["outorder", v, *g.out_order[v]]))
    return "\n".join(lines) + "\n"
