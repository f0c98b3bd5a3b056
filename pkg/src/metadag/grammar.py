"""Regular DAG grammars: rules, derivation steps, derivation DAGs, enumeration.

A rule ``head -> sigma -> tail`` consumes the dangling (temporary) vertices
whose labels spell ``head``, replaces them by one ``sigma``-vertex and hangs
fresh temporary vertices labeled by ``tail`` below it. Derivations start
from the empty graph; complete graphs (no temporary vertices left) are the
generated DAGs.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence

from .graph import Dag, Edge, canonical_form, components, is_connected

EMPTY = "_"
DEFAULT_ENUM_CAP = 12


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DerivationError(GrammarError):
    pass


@dataclass(frozen=True, order=True)
class Rule:
    head: tuple[str, ...]
    sigma: str
    tail: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "tail", tuple(self.tail))

    @classmethod
    def parse(cls, text: str) -> "Rule":
        parts = [p.strip() for p in text.split("->")]
        if len(parts) != 3:
            raise GrammarError(f"rule needs the form 'head -> sigma -> tail': {text!r}")
        head, sigma, tail = parts
        if not sigma or len(sigma.split()) != 1:
            raise GrammarError(f"rule needs exactly one terminal: {text!r}")
        return cls(_side(head), sigma, _side(tail))

    @property
    def is_root(self) -> bool:
        return not self.head

    def __str__(self) -> str:
        return f"{' '.join(self.head) or EMPTY} -> {self.sigma} -> {' '.join(self.tail) or EMPTY}"


def _side(text: str) -> tuple[str, ...]:
    toks = text.split()
    if toks == [EMPTY]:
        return ()
    if not toks or EMPTY in toks:
        raise GrammarError(f"bad rule side {text!r}; use '{EMPTY}' for the empty string")
    return tuple(toks)


@dataclass(frozen=True)
class Grammar:
    terminals: frozenset[str]
    nonterminals: frozenset[str]
    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        object.__setattr__(self, "nonterminals", frozenset(self.nonterminals))
        object.__setattr__(self, "rules", tuple(self.rules))
        overlap = self.terminals & self.nonterminals
        if overlap:
            raise GrammarError(f"terminals and nonterminals overlap: {sorted(overlap)}")
        for sym in self.terminals | self.nonterminals:
            if not sym or EMPTY == sym or "->" in sym or "|" in sym or len(sym.split()) != 1:
                raise GrammarError(f"bad symbol name {sym!r}")
        if len(set(self.rules)) != len(self.rules):
            raise GrammarError("duplicate rule")
        for r in self.rules:
            if r.sigma not in self.terminals:
                raise GrammarError(f"rule {r}: {r.sigma!r} is not a terminal")
            for q in r.head + r.tail:
                if q not in self.nonterminals:
                    raise GrammarError(f"rule {r}: {q!r} is not a nonterminal")

    @classmethod
    def from_rules(cls, rules: Iterable[Rule | str], terminals=None, nonterminals=None) -> "Grammar":
        rs = tuple(r if isinstance(r, Rule) else Rule.parse(r) for r in rules)
        if terminals is None:
            terminals = {r.sigma for r in rs}
        if nonterminals is None:
            nonterminals = {q for r in rs for q in r.head + r.tail}
        return cls(frozenset(terminals), frozenset(nonterminals), rs)

    def index(self, rule: Rule) -> int:
        return self.rules.index(rule)

    def clashes(self) -> list[tuple[tuple[str, ...], str]]:
        """(head, sigma) pairs with more than one tail."""
        seen = Counter((r.head, r.sigma) for r in self.rules)
        return sorted(k for k, n in seen.items() if n > 1)

    @cached_property
    def deterministic(self) -> bool:
        return not self.clashes()

    def rules_for(self, sigma: str) -> list[Rule]:
        return [r for r in self.rules if r.sigma == sigma]

    def restrict(self, rules: Iterable[Rule]) -> "Grammar":
        keep = set(rules)
        return Grammar(self.terminals, self.nonterminals, tuple(r for r in self.rules if r in keep))

    def __str__(self) -> str:
        return format_grammar(self)


def parse_grammar(text: str) -> Grammar:
    terminals = nonterminals = None
    rules: list[Rule] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep or key not in ("terminals", "nonterminals", "rule"):
            raise GrammarSyntaxError(lineno, f"unrecognised line {raw.strip()!r}")
        try:
            if key == "rule":
                rules.append(Rule.parse(rest))
            elif key == "terminals":
                if terminals is not None:
                    raise GrammarError("terminals declared twice")
                terminals = rest.split()
            else:
                if nonterminals is not None:
                    raise GrammarError("nonterminals declared twice")
                nonterminals = rest.split()
        except GrammarError as exc:
            raise GrammarSyntaxError(lineno, str(exc)) from None
    return Grammar.from_rules(rules, terminals, nonterminals)


def format_grammar(g: Grammar) -> str:
    lines = [
        "terminals: " + " ".join(sorted(g.terminals)),
        "nonterminals: " + " ".join(sorted(g.nonterminals)),
    ]
    lines += [f"rule: {r}" for r in g.rules]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- derivations

def temporaries(g: Dag, grammar: Grammar) -> list[str]:
    return [v for v, lab in g.vertices.items() if lab in grammar.nonterminals]


def _fresh(existing, prefix: str, n: int) -> list[str]:
    out, k = [], 0
    while len(out) < n:
        cand = f"{prefix}{k}"
        if cand not in existing:
            out.append(cand)
        k += 1
    return out


def apply_rule(g: Dag, rule: Rule, chosen: Sequence[str] = ()) -> Dag:
    """One derivation step; ``chosen`` lists the consumed temporary vertices."""
    chosen = tuple(chosen)
    if len(set(chosen)) != len(chosen):
        raise DerivationError("chosen vertices must be pairwise distinct")
    if len(chosen) != len(rule.head):
        raise DerivationError(f"rule {rule} consumes {len(rule.head)} vertices, got {len(chosen)}")
    for v, q in zip(chosen, rule.head):
        if v not in g.vertices:
            raise DerivationError(f"unknown vertex {v}")
        if g.vertices[v] != q:
            raise DerivationError(f"vertex {v} is labeled {g.vertices[v]!r}, rule head wants {q!r}")
        if len(g.in_order[v]) != 1 or g.out_order[v]:
            raise DerivationError(f"vertex {v} is not a temporary vertex")
    vertices = {v: lab for v, lab in g.vertices.items() if v not in chosen}
    in_order = {v: s for v, s in g.in_order.items() if v not in chosen}
    out_order = {v: s for v, s in g.out_order.items() if v not in chosen}
    edges = dict(g.edges)
    new_v = _fresh(g.vertices, "n", 1 + len(rule.tail))
    v, temps = new_v[0], new_v[1:]
    new_e = _fresh(g.edges, "e", len(rule.tail))
    incoming = []
    for t in chosen:
        (eid,) = g.in_order[t]
        e = edges[eid]
        edges[eid] = Edge(e.src, v, e.label)
        incoming.append(eid)
    vertices[v] = rule.sigma
    in_order[v] = tuple(incoming)
    out_order[v] = tuple(new_e)
    for w, eid, q in zip(temps, new_e, rule.tail):
        vertices[w] = q
        edges[eid] = Edge(v, w, q)
        in_order[w] = (eid,)
        out_order[w] = ()
    return Dag(vertices, edges, in_order, out_order)


def meta_of(g: Dag, nonterminals) -> tuple[str, ...]:
    return tuple(sorted(lab for lab in g.vertices.values() if lab in nonterminals))


@dataclass(frozen=True)
class Derivation:
    steps: tuple[tuple[int, tuple[str, ...]], ...]
    result: Dag
    metas: tuple[tuple[str, ...], ...] = field(default=((),))

    @property
    def complete(self) -> bool:
        return all(len(m) == 0 for m in self.metas[-1:])


def derive(grammar: Grammar, script: Iterable[tuple[Rule | int, Sequence[str]]]) -> Derivation:
    """Fold :func:`apply_rule` over ``script`` starting from the empty graph."""
    g = Dag.empty()
    steps = []
    metas = [()]
    for i, (r, chosen) in enumerate(script):
        rule = grammar.rules[r] if isinstance(r, int) else r
        if rule not in grammar.rules:
            raise DerivationError(f"step {i}: rule {rule} not in grammar")
        try:
            g = apply_rule(g, rule, chosen)
        except DerivationError as exc:
            raise DerivationError(f"step {i}: {exc}") from None
        steps.append((grammar.index(rule), tuple(chosen)))
        metas.append(meta_of(g, grammar.nonterminals))
    return Derivation(tuple(steps), g, tuple(metas))


def is_complete(g: Dag, grammar: Grammar) -> bool:
    return all(lab in grammar.terminals for lab in g.vertices.values())


def derivation_dag(grammar: Grammar, d: Derivation) -> Dag:
    """The derivation DAG: the complete result with nonterminal edge labels."""
    if not is_complete(d.result, grammar):
        raise DerivationError("derivation is not complete")
    return d.result


def is_rule_consistent(grammar: Grammar, d: Dag) -> bool:
    """Every vertex matches some rule via its in/out edge label strings."""
    rules = set(grammar.rules)
    return all(
        Rule(d.in_labels(v), lab, d.out_labels(v)) in rules for v, lab in d.vertices.items()
    )


# --------------------------------------------------------------- enumeration

def _choices(g: Dag, temps: list[str], head: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
    pools = [[t for t in temps if g.vertices[t] == q] for q in head]
    for combo in itertools.product(*pools):
        if len(set(combo)) == len(combo):
            yield combo


def successors(grammar: Grammar, g: Dag) -> Iterator[tuple[Rule, tuple[str, ...], Dag]]:
    temps = temporaries(g, grammar)
    for rule in grammar.rules:
        for chosen in _choices(g, temps, rule.head):
            yield rule, chosen, apply_rule(g, rule, chosen)


def _dead_end(grammar: Grammar, g: Dag, remaining: int, connected_only: bool) -> bool:
    temps = temporaries(g, grammar)
    max_head = max((len(r.head) for r in grammar.rules), default=0)
    if temps and max_head == 0:
        return True
    if temps and math.ceil(len(temps) / max_head) > remaining:
        return True
    if connected_only:
        comps = components(g)
        if len(comps) > 1:
            if max_head < 2:
                return True
            nts = grammar.nonterminals
            if any(all(g.vertices[v] not in nts for v in comp) for comp in comps):
                return True
    return False


def enumerate_language(
    grammar: Grammar,
    max_vertices: int,
    connected_only: bool = True,
    cap: int = DEFAULT_ENUM_CAP,
) -> dict[bytes, Dag]:
    """All complete DAGs with at most ``max_vertices`` vertices.

    Keys are canonical forms of the unlabeled DAGs; values are one
    derivation DAG (edge-labeled) for each. Every step adds exactly one
    terminal vertex, so derivations of depth ``max_vertices`` are exhaustive.
    """
    if max_vertices > cap:
        raise GrammarError(f"max_vertices {max_vertices} exceeds cap {cap}")
    found: dict[bytes, Dag] = {}
    level: dict[bytes, Dag] = {canonical_form(Dag.empty()): Dag.empty()}
    for depth in range(1, max_vertices + 1):
        nxt: dict[bytes, Dag] = {}
        for g in level.values():
            for _, _, h in successors(grammar, g):
                if _dead_end(grammar, h, max_vertices - depth, connected_only):
                    continue
                nxt.setdefault(canonical_form(h), h)
        level = {}
        for key, h in nxt.items():
            if is_complete(h, grammar):
                if not connected_only or is_connected(h):
                    found.setdefault(canonical_form(h.strip_labels()), h)
                if connected_only:
                    continue
            level[key] = h
    return found


def iter_derivations(grammar: Grammar, max_steps: int, connected_only: bool = True) -> Iterator[Derivation]:
    """Every derivation (not deduplicated) of a complete DAG within ``max_steps``."""

    def go(g: Dag, steps: list, metas: list) -> Iterator[Derivation]:
        if steps and is_complete(g, grammar):
            if not connected_only or is_connected(g):
                yield Derivation(tuple(steps), g, tuple(metas))
            if connected_only:
                return
        if len(steps) == max_steps:
            return
        for rule, chosen, h in successors(grammar, g):
            if _dead_end(grammar, h, max_steps - len(steps) - 1, connected_only):
                continue
            yield from go(
                h,
                steps + [(grammar.index(rule), chosen)],
                metas + [meta_of(h, grammar.nonterminals)],
            )

    yield from go(Dag.empty(), [], [()])


# ------------------------------------------------------------------- pruning

@dataclass(frozen=True)
class PruneResult:
    grammar: Grammar
    removed: tuple[tuple[Rule, str], ...]

    @property
    def removed_rules(self) -> list[Rule]:
        return [r for r, _ in self.removed]


def _fixpoint_useful(rules: Sequence[Rule]) -> set[Rule]:
    live = set(rules)
    while True:
        producible: set[str] = set()
        changed = True
        while changed:
            changed = False
            for r in live:
                if set(r.head) <= producible and not set(r.tail) <= producible:
                    producible |= set(r.tail)
                    changed = True
        consumable: set[str] = set()
        changed = True
        while changed:
            changed = False
            for r in live:
                if set(r.tail) <= consumable and not set(r.head) <= consumable:
                    consumable |= set(r.head)
                    changed = True
        keep = {r for r in live if set(r.head) <= producible and set(r.tail) <= consumable}
        if keep == live:
            return live
        live = keep


def rules_used(grammar: Grammar, d: Dag) -> set[Rule]:
    return {Rule(d.in_labels(v), lab, d.out_labels(v)) for v, lab in d.vertices.items()}


def prune_useless(grammar: Grammar, bound: int = 8) -> PruneResult:
    """Drop rules that occur in no derivation of a connected member.

    Two fixpoints (producible nonterminals top-down, consumable ones
    bottom-up) remove the clearly dead rules; a bounded enumeration of the
    language then removes rules unused by any member with at most ``bound``
    vertices. The second phase is exact only up to that bound.
    """
    live = _fixpoint_useful(grammar.rules)
    removed = [(r, "fixpoint") for r in grammar.rules if r not in live]
    g1 = grammar.restrict(live)
    used: set[Rule] = set()
    if g1.rules:
        for d in enumerate_language(g1, bound, connected_only=True, cap=max(bound, DEFAULT_ENUM_CAP)).values():
            used |= rules_used(g1, d)
    removed += [(r, f"unused up to {bound} vertices") for r in g1.rules if r not in used]
    return PruneResult(grammar.restrict(used), tuple(removed))


def is_pruned(grammar: Grammar, bound: int = 8) -> bool:
    return not prune_useless(grammar, bound).removed


# ------------------------------------------------------- derivation DAG count

def derivation_labelings(grammar: Grammar, g: Dag, limit: Optional[int] = None) -> list[Dag]:
    """All locally rule-consistent edge labelings of a complete DAG.

    In a DAG any such labeling is realised by deriving the vertices in
    topological order, so these are exactly the derivation DAGs of ``g``.
    """
    from .graph import topological_order

    order = topological_order(g)
    if order is None:
        raise DerivationError("graph has a directed cycle")
    out: list[Dag] = []

    def go(i: int, labels: dict[str, str]) -> None:
        if limit is not None and len(out) >= limit:
            return
        if i == len(order):
            out.append(g.with_edge_labels(labels))
            return
        v = order[i]
        head = tuple(labels[e] for e in g.in_order[v])
        for r in grammar.rules:
            if r.sigma == g.vertices[v] and r.head == head and len(r.tail) == len(g.out_order[v]):
                nxt = dict(labels)
                nxt.update(zip(g.out_order[v], r.tail))
                go(i + 1, nxt)

    go(0, {})
    return out


def has_unique_derivation_dag(grammar: Grammar, g: Dag) -> bool:
    from .membership import member_oracle

    if not member_oracle(grammar, g.strip_labels()):
        raise GrammarError("graph is not in the language")
    return len(derivation_labelings(grammar, g.strip_labels(), limit=2)) == 1
