"""Edge swaps, swap pumping and the swap-closure check.

Swapping two independent edges exchanges their targets. Each edge takes over
the other's slot in its new target's in-order; sources, labels and
out-orders stay as they are.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .grammar import Derivation, Grammar, derive
from .graph import Dag, DagError, Edge, canonical_form, disjoint_union, find_path, topological_order


class SwapError(DagError):
    pass


@dataclass(frozen=True)
class SwapSpec:
    e0: str
    e1: str
    defined: bool
    reason: str = ""


def _check_edges(g: Dag, e0: str, e1: str) -> None:
    for e in (e0, e1):
        if e not in g.edges:
            raise SwapError(f"unknown edge {e!r}")
    if e0 == e1:
        raise SwapError("an edge cannot be swapped with itself")


def independent(g: Dag, e0: str, e1: str) -> bool:
    """True iff no directed path leads from one edge to the other."""
    _check_edges(g, e0, e1)
    return find_path(g, e0, e1, "directed") is None and find_path(g, e1, e0, "directed") is None


def swap_spec(g: Dag, e0: str, e1: str) -> SwapSpec:
    _check_edges(g, e0, e1)
    if not independent(g, e0, e1):
        return SwapSpec(e0, e1, False, "a directed path connects the edges")
    try:
        _swap(g, e0, e1)
    except SwapError as exc:
        return SwapSpec(e0, e1, False, str(exc))
    return SwapSpec(e0, e1, True)


def _swap(g: Dag, e0: str, e1: str) -> Dag:
    a, b = g.edges[e0], g.edges[e1]
    edges = dict(g.edges)
    edges[e0] = Edge(a.src, b.tar, a.label)
    edges[e1] = Edge(b.src, a.tar, b.label)
    swap = {e0: e1, e1: e0}
    in_order = {v: tuple(swap.get(e, e) for e in seq) for v, seq in g.in_order.items()}
    h = Dag(dict(g.vertices), edges, in_order, dict(g.out_order))
    if topological_order(h) is None:
        # independence should rule this out; reaching it means a bug
        raise SwapError(f"internal error: swapping {e0} and {e1} created a directed cycle")
    return h


def do_swap(g: Dag, e0: str, e1: str) -> Dag:
    _check_edges(g, e0, e1)
    if not independent(g, e0, e1):
        raise SwapError(f"edges {e0} and {e1} are not independent")
    return _swap(g, e0, e1)


def _copy(g: Dag, i: int) -> Dag:
    return g if i == 0 else g.suffixed(f".{i}")


def _cid(x: str, i: int) -> str:
    return x if i == 0 else f"{x}.{i}"


def pump(g: Dag, e: str, e2: str, k: int) -> Dag:
    """k-fold chained copies: step i joins copy i by swapping e2 of copy i-1 with e of copy i."""
    if k < 0:
        raise SwapError("k must be non-negative")
    for x in (e, e2):
        if x not in g.edges:
            raise SwapError(f"unknown edge {x!r}")
    h = g
    for i in range(1, k + 1):
        nxt = _copy(g, i)
        clash = set(h.vertices) & set(nxt.vertices) or set(h.edges) & set(nxt.edges)
        if clash:
            raise SwapError(f"copy {i} clashes with existing ids: {sorted(clash)[:3]}")
        h = disjoint_union(h, nxt)
        try:
            h = do_swap(h, _cid(e2, i - 1), _cid(e, i))
        except SwapError as exc:
            raise SwapError(f"pump step {i}: {exc}") from None
    return h


# ---------------------------------------------------------- closure checking

@dataclass
class SwapReport:
    tried: int = 0
    defined: int = 0
    undefined: int = 0
    accepted: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "SwapReport") -> "SwapReport":
        return SwapReport(
            self.tried + other.tried,
            self.defined + other.defined,
            self.undefined + other.undefined,
            self.accepted + other.accepted,
            self.violations + other.violations,
        )

    def format(self) -> str:
        lines = [
            f"pairs tried: {self.tried}",
            f"defined swaps: {self.defined}",
            f"undefined (dependent) pairs: {self.undefined}",
            f"accepted: {self.accepted}",
            f"violations: {len(self.violations)}",
        ]
        lines += [f"  violation: swap {a} {b}" for a, b in self.violations]
        return "\n".join(lines)


def same_label_pairs(d: Dag) -> list[tuple[str, str]]:
    ids = sorted(d.edges)
    return [
        (a, b) for i, a in enumerate(ids) for b in ids[i + 1:]
        if d.edges[a].label is not None and d.edges[a].label == d.edges[b].label
    ]


def check_swap_closure(
    grammar: Grammar,
    d: Dag,
    trials: Optional[int] = None,
    rng: Optional[random.Random] = None,
    cache: Optional[dict] = None,
) -> SwapReport:
    """Swap same-label edge pairs of a derivation DAG and test the results.

    With ``trials=None`` every pair is tried; otherwise ``trials`` pairs are
    drawn with replacement from ``rng``. Results are checked with the oracle
    in components mode; a rejected result is recorded as a violation.
    """
    from .membership import member_oracle

    pairs = same_label_pairs(d)
    if trials is not None and pairs:
        rng = rng or random.Random(0)
        pairs = [rng.choice(pairs) for _ in range(trials)]
    cache = {} if cache is None else cache
    rep = SwapReport()
    for a, b in pairs:
        rep.tried += 1
        if not independent(d, a, b):
            rep.undefined += 1
            continue
        rep.defined += 1
        h = _swap(d, a, b).strip_labels()
        key = canonical_form(h)
        if key not in cache:
            cache[key] = member_oracle(grammar, h, mode="components")
        if cache[key]:
            rep.accepted += 1
        else:
            rep.violations.append((a, b))
    return rep


# ------------------------------------------------------------ bow DAG shapes

def garland_derivation(grammar: Grammar, n: int) -> Derivation:
    """Derivation R, (C, O) * (n-1), L of the bow grammar: n bows in a row."""
    if n < 1:
        raise SwapError("a garland needs at least one bow")
    rules = {r.sigma: r for r in grammar.rules}
    script = [(rules["R"], ())]
    g = derive(grammar, script).result
    for sig in ["C", "O"] * (n - 1) + ["L"]:
        script.append((rules[sig], _temps_in_order(g, grammar, rules[sig].head)))
        g = derive(grammar, script).result
    return derive(grammar, script)


def garland(grammar: Grammar, n: int) -> Dag:
    return garland_derivation(grammar, n).result


def rainbow(grammar: Grammar, n: int) -> Dag:
    """Derivation DAG R, O * (n-1), C * (n-1), L: n nested bows."""
    if n < 1:
        raise SwapError("a rainbow needs at least one bow")
    rules = {r.sigma: r for r in grammar.rules}
    script = [(rules["R"], ())]
    g = derive(grammar, script).result
    seq = ["O"] * (n - 1) + ["C"] * (n - 1) + ["L"]
    for sig in seq:
        # the newest q closes first, so nesting follows last in, first out
        script.append((rules[sig], _temps_in_order(g, grammar, rules[sig].head, newest=True)))
        g = derive(grammar, script).result
    return g


def _temps_in_order(g: Dag, grammar: Grammar, head, newest: bool = False) -> tuple:
    temps = [v for v, lab in g.vertices.items() if lab in grammar.nonterminals]
    # edges are never deleted, so in-edge ids record creation order
    temps.sort(key=lambda v: int(g.in_order[v][0][1:]), reverse=newest)
    out = []
    for q in head:
        v = next(t for t in temps if g.vertices[t] == q and t not in out)
        out.append(v)
    return tuple(out)


def rainbow_by_swaps(grammar: Grammar, n: int) -> Dag:
    """Rewire the q-edges of an ``n``-bow rainbow's garland relative into nesting.

    Starts from the derivation DAG R, O * (n-1), C * (n-1), L in which every
    C closes the *oldest* open bow (crossing bows), then swaps q-edges pairwise
    outside-in until the bows are nested.
    """
    rules = {r.sigma: r for r in grammar.rules}
    script = [(rules["R"], ())]
    g = derive(grammar, script).result
    for sig in ["O"] * (n - 1) + ["C"] * (n - 1) + ["L"]:
        script.append((rules[sig], _temps_in_order(g, grammar, rules[sig].head, newest=False)))
        g = derive(grammar, script).result
    return _nest_q_edges(g)


def _nest_q_edges(g: Dag) -> Dag:
    order = topological_order(g)
    pos = {v: i for i, v in enumerate(order)}
    while True:
        qs = sorted((e for e, x in g.edges.items() if x.label == "q"), key=lambda e: pos[g.edges[e].src])
        # bows must close in reverse opening order
        fixed = True
        for i in range(len(qs)):
            for j in range(i + 1, len(qs)):
                a, b = g.edges[qs[i]], g.edges[qs[j]]
                if pos[a.tar] < pos[b.tar] and independent(g, qs[i], qs[j]):
                    g = do_swap(g, qs[i], qs[j])
                    fixed = False
                    break
            if not fixed:
                break
        if fixed:
            return g
