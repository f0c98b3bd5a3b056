"""Marked-rule structure of a grammar: rule cycles, rule paths, classification.

A *port* is one nonterminal occurrence in a rule (head or tail side). Two
ports agree when they carry the same nonterminal on opposite sides. A
marked rule picks an entry port and a distinct exit port of one rule; a rule
cycle is a sequence of marked rules where each exit agrees with the next
entry (cyclically). Searches here are restricted to *simple* sequences in
which no port is used twice.

Text form of a marked rule, used in reports::

    [en]q -> M -> [ex]q q | entry head:1 exit tail:1

Positions are 1-based. A weakly marked rule shows only one of the marks.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

from .grammar import EMPTY, Grammar, GrammarError, Rule, prune_useless
from .graph import Dag, Path


class RuleAnalysisError(GrammarError):
    pass


class Port(NamedTuple):
    rule: int
    side: str  # "head" | "tail"
    pos: int
    nt: str

    def __str__(self) -> str:
        return f"{self.side}:{self.pos + 1}"


def agree(x: Port, y: Port) -> bool:
    return x.nt == y.nt and x.side != y.side


def rule_ports(grammar: Grammar, i: int) -> list[Port]:
    r = grammar.rules[i]
    return [Port(i, "head", k, q) for k, q in enumerate(r.head)] + [
        Port(i, "tail", k, q) for k, q in enumerate(r.tail)
    ]


@dataclass(frozen=True)
class PortGraph:
    ports: tuple[Port, ...]
    agreements: tuple[tuple[Port, Port], ...]  # unordered, stored with the head port first

    def by_rule(self, i: int) -> list[Port]:
        return [p for p in self.ports if p.rule == i]

    def partners(self, p: Port) -> list[Port]:
        return [y for y in self.ports if agree(p, y)]


def build_port_graph(grammar: Grammar) -> PortGraph:
    ports = tuple(p for i in range(len(grammar.rules)) for p in rule_ports(grammar, i))
    agreements = tuple(
        (x, y) for x in ports if x.side == "head" for y in ports if y.side == "tail" and y.nt == x.nt
    )
    return PortGraph(ports, agreements)


@dataclass(frozen=True)
class MarkedRule:
    rule: int
    entry: Optional[Port]
    exit: Optional[Port]

    @property
    def ports(self) -> tuple[Port, ...]:
        return tuple(p for p in (self.entry, self.exit) if p is not None)

    @property
    def weak(self) -> bool:
        return self.entry is None or self.exit is None


def _side_text(syms: Sequence[str], side: str, m: MarkedRule) -> str:
    if not syms:
        return EMPTY
    out = []
    for k, q in enumerate(syms):
        tag = ""
        if m.entry is not None and (m.entry.side, m.entry.pos) == (side, k):
            tag = "[en]"
        elif m.exit is not None and (m.exit.side, m.exit.pos) == (side, k):
            tag = "[ex]"
        out.append(tag + q)
    return " ".join(out)


def format_marked(grammar: Grammar, m: MarkedRule) -> str:
    r = grammar.rules[m.rule]
    text = f"{_side_text(r.head, 'head', m)} -> {r.sigma} -> {_side_text(r.tail, 'tail', m)}"
    marks = []
    if m.entry is not None:
        marks.append(f"entry {m.entry}")
    if m.exit is not None:
        marks.append(f"exit {m.exit}")
    return f"{text} | {' '.join(marks)}"


@dataclass(frozen=True)
class RuleCycleWitness:
    marked: tuple[MarkedRule, ...]
    directed: bool

    def ports(self) -> list[Port]:
        return [p for m in self.marked for p in m.ports]

    def rules(self) -> list[int]:
        return [m.rule for m in self.marked]

    def format(self, grammar: Grammar) -> str:
        kind = "directed" if self.directed else "undirected"
        lines = [f"rule cycle ({kind}, length {len(self.marked)})"]
        lines += ["  " + format_marked(grammar, m) for m in self.marked]
        return "\n".join(lines)


@dataclass(frozen=True)
class RulePathWitness:
    marked: tuple[MarkedRule, ...]
    start: str  # nonterminal at the first weak mark
    end: str  # nonterminal or vertex label reached at the last rule

    def format(self, grammar: Grammar) -> str:
        lines = [f"rule path from {self.start} to {self.end} (length {len(self.marked)})"]
        lines += ["  " + format_marked(grammar, m) for m in self.marked]
        return "\n".join(lines)


@dataclass(frozen=True)
class IdWitness:
    cycle: RuleCycleWitness
    unmarked_port: Port
    marked_p: Port
    chord_path: RulePathWitness
    orientation_ok: bool

    def format(self, grammar: Grammar) -> str:
        q = self.unmarked_port
        return "\n".join([
            self.cycle.format(grammar),
            f"unmarked {q.nt} at rule {q.rule + 1} {q}",
            f"marked {self.marked_p.nt} at rule {self.marked_p.rule + 1} {self.marked_p}",
            self.chord_path.format(grammar),
            f"orientation: {'ok' if self.orientation_ok else 'violated'}",
        ])


@dataclass(frozen=True)
class Classification:
    kind: str  # "Finite" | "FID" | "ID"
    cycle: Optional[RuleCycleWitness] = None
    id_witness: Optional[IdWitness] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def empty(self) -> bool:
        return "empty" in self.notes

    def headline(self) -> str:
        if self.kind == "Finite":
            return "FINITE (empty)" if self.empty else "FINITE"
        return self.kind

    def format(self, grammar: Grammar) -> str:
        lines = [self.headline()]
        if self.id_witness is not None:
            lines.append(self.id_witness.format(grammar))
        elif self.cycle is not None:
            lines.append(self.cycle.format(grammar))
        lines += [f"note: {n}" for n in self.notes if n != "empty"]
        return "\n".join(lines)


# --------------------------------------------------------------- cycle search

def _directed(marked: Sequence[MarkedRule]) -> bool:
    sides = {m.entry.side for m in marked}
    return len(sides) == 1


def iter_rule_cycles(grammar: Grammar, max_length: Optional[int] = None) -> Iterator[RuleCycleWitness]:
    """Simple rule cycles, each reported once (rotation starts at its least entry port)."""
    pg = build_port_graph(grammar)
    if max_length is None:
        max_length = 2 * len(grammar.rules)
    own = {i: pg.by_rule(i) for i in range(len(grammar.rules))}
    for s in sorted(pg.ports):

        def go(entry: Port, used: frozenset, acc: tuple[MarkedRule, ...]) -> Iterator[RuleCycleWitness]:
            for x in own[entry.rule]:
                if x == entry or x in used:
                    continue
                m = acc + (MarkedRule(entry.rule, entry, x),)
                if agree(x, s):
                    yield RuleCycleWitness(m, _directed(m))
                if len(m) >= max_length:
                    continue
                for y in pg.partners(x):
                    if y > s and y not in used and y != x:
                        yield from go(y, used | {x, y}, m)

        yield from go(s, frozenset({s}), ())


def find_rule_cycles(grammar: Grammar, max_length: Optional[int] = None) -> list[RuleCycleWitness]:
    return list(iter_rule_cycles(grammar, max_length))


def _complete_bound(grammar: Grammar) -> int:
    # a simple cycle uses two ports per marked rule
    return max(1, sum(len(r.head) + len(r.tail) for r in grammar.rules) // 2)


def _require_pruned(grammar: Grammar) -> None:
    res = prune_useless(grammar)
    if res.removed:
        names = ", ".join(str(r) for r in res.removed_rules)
        raise RuleAnalysisError(f"grammar has useless rules ({names}); prune it first")


def is_infinite(grammar: Grammar, check: bool = True) -> bool:
    """Infinite language test: a pruned grammar is infinite iff it has a rule cycle."""
    if check:
        _require_pruned(grammar)
    return next(iter_rule_cycles(grammar, _complete_bound(grammar)), None) is not None


# ---------------------------------------------------------------- path search

def _chord_search(grammar: Grammar, start: Port, done) -> Optional[tuple[MarkedRule, ...]]:
    """Shortest simple rule path leaving ``start`` as a weak exit.

    ``done(y)`` decides whether arriving at entry port ``y`` ends the path.
    Breadth-first over simple port paths.
    """
    pg = build_port_graph(grammar)
    first = MarkedRule(start.rule, None, start)
    queue = deque([(start, frozenset({start}), (first,))])
    while queue:
        x, used, acc = queue.popleft()
        for y in pg.partners(x):
            if y in used:
                continue
            if done(y):
                return acc + (MarkedRule(y.rule, y, None),)
            for z in pg.by_rule(y.rule):
                if z == y or z in used:
                    continue
                queue.append((z, used | {y, z}, acc + (MarkedRule(y.rule, y, z),)))
    return None


def _unmarked_ports(grammar: Grammar, c: RuleCycleWitness) -> Iterator[Port]:
    seen = set()
    for m in c.marked:
        for p in rule_ports(grammar, m.rule):
            if p not in m.ports and p not in seen:
                seen.add(p)
                yield p


def find_id_witness(grammar: Grammar, cycles: Sequence[RuleCycleWitness]) -> Optional[IdWitness]:
    for c in cycles:
        marked = c.ports()
        for u in _unmarked_ports(grammar, c):
            hit: dict[Port, Port] = {}

            def done(y: Port) -> bool:
                for p in marked:
                    if agree(y, p):
                        hit[y] = p
                        return True
                return False

            path = _chord_search(grammar, u, done)
            if path is None:
                continue
            last = path[-1].entry
            p = hit[last]
            w = RulePathWitness(path, u.nt, last.nt)
            # the weak start mark sits on u itself, so the head/tail condition holds
            return IdWitness(c, u, p, w, path[0].exit.side == u.side)
    return None


def classify(grammar: Grammar) -> Classification:
    """Finite / FID / ID for a pruned deterministic grammar.

    Minimality of the nonterminal set is assumed, not checked.
    """
    res = prune_useless(grammar)
    if not res.grammar.rules:
        return Classification("Finite", notes=("empty",))
    if res.removed:
        names = ", ".join(str(r) for r in res.removed_rules)
        raise RuleAnalysisError(f"grammar has useless rules ({names}); prune it first")
    if not grammar.deterministic:
        raise RuleAnalysisError(f"grammar is not deterministic: {grammar.clashes()}")
    notes = ("minimality of the nonterminal set is assumed, not verified",)
    cycles = find_rule_cycles(grammar, _complete_bound(grammar))
    if not cycles:
        return Classification("Finite", notes=notes)
    w = find_id_witness(grammar, cycles)
    if w is not None:
        return Classification("ID", w.cycle, w, notes)
    return Classification("FID", cycles[0], None, notes)


def label_unbounded(grammar: Grammar, u: str):
    """Whether occurrences of vertex or edge label ``u`` are unbounded.

    Returns ``(flag, witness)`` where the witness is ``("a", cycle)`` or
    ``("b", cycle, unmarked port, rule path)``.
    """
    if u not in grammar.terminals and u not in grammar.nonterminals:
        raise RuleAnalysisError(f"unknown label {u!r}")
    cycles = find_rule_cycles(grammar, _complete_bound(grammar))
    for c in cycles:
        for m in c.marked:
            r = grammar.rules[m.rule]
            if r.sigma == u or u in r.head + r.tail:
                return True, ("a", c)
    for c in cycles:
        for q in _unmarked_ports(grammar, c):

            def done(y: Port) -> bool:
                return y.nt == u or grammar.rules[y.rule].sigma == u

            path = _chord_search(grammar, q, done)
            if path is not None:
                return True, ("b", c, q, RulePathWitness(path, q.nt, u))
    return False, None


# ------------------------------------------------------ independent checkers

def verify_cycle(grammar: Grammar, w: RuleCycleWitness, simple: bool = True) -> bool:
    ms = w.marked
    if not ms:
        return False
    for m in ms:
        if m.entry is None or m.exit is None or m.entry == m.exit:
            return False
        ports = rule_ports(grammar, m.rule)
        if m.entry not in ports or m.exit not in ports:
            return False
    for i, m in enumerate(ms):
        nxt = ms[(i + 1) % len(ms)]
        if not agree(m.exit, nxt.entry):
            return False
    if simple:
        all_ports = [p for m in ms for p in (m.entry, m.exit)]
        if len(set(all_ports)) != len(all_ports):
            return False
    entries_head = all(m.entry.side == "head" and m.exit.side == "tail" for m in ms)
    entries_tail = all(m.entry.side == "tail" and m.exit.side == "head" for m in ms)
    return w.directed == (entries_head or entries_tail)


def verify_path(grammar: Grammar, w: RulePathWitness) -> bool:
    ms = w.marked
    if len(ms) < 2:
        return False
    if ms[0].entry is not None or ms[0].exit is None or ms[-1].exit is not None or ms[-1].entry is None:
        return False
    for m in ms[1:-1]:
        if m.entry is None or m.exit is None or m.entry == m.exit:
            return False
    for m in ms:
        ports = rule_ports(grammar, m.rule)
        if any(p not in ports for p in (m.entry, m.exit) if p is not None):
            return False
    for a, b in zip(ms, ms[1:]):
        if not agree(a.exit, b.entry):
            return False
    return ms[0].exit.nt == w.start


def verify_id_witness(grammar: Grammar, w: IdWitness) -> bool:
    c, u, p, pi = w.cycle, w.unmarked_port, w.marked_p, w.chord_path
    if not verify_cycle(grammar, c) or not verify_path(grammar, pi):
        return False
    # u unmarked in some occurrence of its rule in c; p marked somewhere in c
    if not any(m.rule == u.rule and u not in m.ports for m in c.marked):
        return False
    if u not in rule_ports(grammar, u.rule) or p not in c.ports() or u == p:
        return False
    start, end = pi.marked[0].exit, pi.marked[-1].entry
    if start.nt != u.nt or not agree(end, p):
        return False
    orientation = start.side == u.side
    return orientation and w.orientation_ok


# ------------------------------------------------ projecting DAG cycles to rules

def project_dag_cycle(grammar: Grammar, d: Dag, cyc: Path) -> RuleCycleWitness:
    """Rule sequence traced by an undirected cycle of a derivation DAG."""
    index = {r: i for i, r in enumerate(grammar.rules)}

    def port(v: str, e: str) -> Port:
        i = index[Rule(d.in_labels(v), d.label(v), d.out_labels(v))]
        if e in d.in_order[v]:
            k = d.in_order[v].index(e)
            return Port(i, "head", k, d.edges[e].label)
        k = d.out_order[v].index(e)
        return Port(i, "tail", k, d.edges[e].label)

    n = len(cyc.edges)
    marked = []
    for k in range(n):
        v = cyc.vertices[k]
        before, after = cyc.edges[k - 1], cyc.edges[k]
        marked.append(MarkedRule(port(v, before).rule, port(v, before), port(v, after)))
    return RuleCycleWitness(tuple(marked), _directed(marked))
