"""Membership of unlabeled DAGs.

:func:`read_dag` reads a DAG top-down against a DFA over rules: a vertex can
be read once all its in-edges carry labels; reading it applies a rule whose
head equals those labels (in in-order) and labels the out-edges with the
tail. The search is a memoized depth-first backtracking over reading orders.

:func:`member_oracle` is the reference decision procedure. It replays
derivation steps with :func:`grammar.apply_rule`, keeps a correspondence
between target vertices and the prefix DAG, and compares canonical forms at
the end. It shares no code with the reader.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Optional

from .dfa import Dfa, build_dfa, state_name
from .grammar import Grammar, GrammarError, Rule, apply_rule, meta_of
from .graph import Dag, canonical_form, components, is_connected, topological_order, validate_dag
from .metastate import EMPTY_META, MetaState, step


class MembershipError(ValueError):
    pass


class OracleCapError(MembershipError):
    pass


DEFAULT_ORACLE_CAP = 24


@dataclass(frozen=True)
class ReadStep:
    vertex: str
    rule: Rule
    state: object


@dataclass(frozen=True)
class ReadingTrace:
    steps: tuple[ReadStep, ...]
    accepted: bool

    def format(self) -> str:
        lines = [f"read {s.vertex} via {s.rule} ; meta = {state_name(s.state)}" for s in self.steps]
        lines.append("ACCEPT" if self.accepted else "REJECT")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReadResult:
    accepted: bool
    trace: ReadingTrace
    explored: int

    def __bool__(self) -> bool:
        return self.accepted


def _check_input(grammar: Grammar, g: Dag) -> None:
    if g.has_edge_labels():
        raise MembershipError("input DAG must not carry edge labels")
    problems = validate_dag(g)
    if problems:
        raise MembershipError("invalid DAG: " + "; ".join(problems))
    bad = sorted({lab for lab in g.vertices.values() if lab not in grammar.terminals})
    if bad:
        raise MembershipError(f"vertex labels not in the terminal alphabet: {bad}")


def _descendants(g: Dag) -> dict[str, frozenset[str]]:
    order = topological_order(g) or []
    below: dict[str, frozenset[str]] = {}
    for v in reversed(order):
        acc = set()
        for w in g.successors(v):
            acc.add(w)
            acc |= below[w]
        below[v] = frozenset(acc)
    return below


def read_dag(dfa: Dfa, grammar: Grammar, g: Dag, unordered_heads: bool = False) -> ReadResult:
    """Search for a top-down reading of ``g`` accepted by ``dfa``.

    Reading order priority: non-root vertices first, then roots that lead
    to a vertex whose in-edges are partly labeled, then the other roots.
    This is only an ordering; every order stays reachable on backtracking.
    With ``unordered_heads`` the in-edge labels are matched as a multiset
    (non-standard, for comparison only).
    """
    _check_input(grammar, g)
    if not g.vertices:
        return ReadResult(False, ReadingTrace((), False), 0)
    if not is_connected(g):
        raise MembershipError("input DAG is not connected")
    by_sigma: dict[str, list[Rule]] = {}
    for r in dfa.alphabet:
        by_sigma.setdefault(r.sigma, []).append(r)
    below = _descendants(g)
    everything = frozenset(g.vertices)
    exact_key = grammar.deterministic and not unordered_heads
    failed: set = set()
    seen_labeling: dict = {}
    explored = 0
    path: list[ReadStep] = []

    def readable(done: frozenset, labels: dict) -> list[str]:
        ready = [v for v in g.vertices if v not in done and all(e in labels for e in g.in_order[v])]
        partial = {
            v for v in g.vertices
            if v not in done and any(e in labels for e in g.in_order[v])
            and not all(e in labels for e in g.in_order[v])
        }
        inner = [v for v in ready if g.in_order[v]]
        needed = [v for v in ready if not g.in_order[v] and below[v] & partial]
        rest = [v for v in ready if not g.in_order[v] and not below[v] & partial]
        return inner + needed + rest

    def rules_for(v: str, labels: dict) -> Iterator[Rule]:
        got = tuple(labels[e] for e in g.in_order[v])
        for r in by_sigma.get(g.vertices[v], ()):
            if len(r.tail) != len(g.out_order[v]):
                continue
            if r.head == got or (unordered_heads and Counter(r.head) == Counter(got)):
                yield r

    def go(done: frozenset, labels: dict, state) -> bool:
        nonlocal explored
        explored += 1
        if done == everything:
            return state in dfa.accepting
        if exact_key:
            key = (done, state)
            lab_now = tuple(sorted(labels.items()))
            prev = seen_labeling.setdefault(done, lab_now)
            assert prev == lab_now, "deterministic grammar gave two labelings of one read set"
        else:
            key = (done, tuple(sorted(labels.items())), state)
        if key in failed:
            return False
        for v in readable(done, labels):
            for r in rules_for(v, labels):
                nxt = dfa.delta.get((state, r))
                if nxt is None:
                    continue
                new_labels = {e: q for e, q in labels.items() if e not in g.in_order[v]}
                new_labels.update(zip(g.out_order[v], r.tail))
                path.append(ReadStep(v, r, nxt))
                if go(done | {v}, new_labels, nxt):
                    return True
                path.pop()
        failed.add(key)
        return False

    ok = go(frozenset(), {}, dfa.start)
    return ReadResult(ok, ReadingTrace(tuple(path) if ok else (), ok), explored)


class _StepMap:
    def __init__(self, rules):
        self._rules = set(rules)

    def get(self, key, default=None):
        state, rule = key
        if rule not in self._rules:
            return default
        t = step(state, rule)
        return default if t is None else t


@dataclass(frozen=True)
class UnboundedMetaDfa:
    """The meta-state automaton without a restriction, with transitions computed on demand.

    It has infinitely many states in general but any single reading of a
    DAG visits finitely many, so :func:`read_dag` can run on it directly.
    """

    alphabet: tuple[Rule, ...]

    @property
    def start(self) -> MetaState:
        return EMPTY_META

    @property
    def accepting(self) -> frozenset:
        return frozenset({EMPTY_META})

    @cached_property
    def delta(self) -> _StepMap:
        return _StepMap(self.alphabet)


def member(grammar: Grammar, g: Dag, unordered_heads: bool = False) -> ReadResult:
    """Unrestricted membership by reading."""
    return read_dag(UnboundedMetaDfa(tuple(grammar.rules)), grammar, g, unordered_heads)


def member_fd(grammar: Grammar, q_set: Iterable[MetaState], g: Dag) -> bool:
    """Membership in the language restricted to meta-states in ``q_set``."""
    return read_dag(build_dfa(grammar, q_set), grammar, g).accepted


# --------------------------------------------------------------------- oracle

def _oracle_connected(grammar: Grammar, g: Dag, q_set: Optional[frozenset]) -> bool:
    order = topological_order(g)
    if order is None:
        return False
    nts = grammar.nonterminals
    target = canonical_form(g)
    failed: set = set()

    def fits(h: Dag) -> bool:
        return q_set is None or MetaState.of(meta_of(h, nts)) in q_set

    def go(h: Dag, placed: dict[str, str], temp_of: dict[str, str]) -> bool:
        # placed: target vertex -> prefix vertex; temp_of: target edge -> prefix temporary
        if len(placed) == len(g.vertices):
            return not temp_of and canonical_form(h.strip_labels()) == target
        key = (frozenset(placed), tuple(sorted((e, h.vertices[t]) for e, t in temp_of.items())))
        if key in failed:
            return False
        pending = [v for v in order if v not in placed and all(e in temp_of for e in g.in_order[v])]
        if q_set is None:
            pending = pending[:1]  # without a restriction the order does not matter
        for v in pending:
            chosen = tuple(temp_of[e] for e in g.in_order[v])
            for r in grammar.rules:
                if r.sigma != g.vertices[v] or len(r.tail) != len(g.out_order[v]):
                    continue
                try:
                    h2 = apply_rule(h, r, chosen)
                except GrammarError:
                    continue
                if not fits(h2):
                    continue
                fresh = [w for w in h2.vertices if w not in h.vertices]
                new_vertex = next(w for w in h2.vertices if w not in h.vertices and h2.vertices[w] == r.sigma)
                t2 = {e: t for e, t in temp_of.items() if e not in g.in_order[v]}
                for e, new_e in zip(g.out_order[v], h2.out_order[new_vertex]):
                    t2[e] = h2.edges[new_e].tar
                if go(h2, {**placed, v: new_vertex}, t2):
                    return True
        failed.add(key)
        return False

    return go(Dag.empty(), {}, {})


def member_oracle(
    grammar: Grammar,
    g: Dag,
    mode: str = "connected",
    q_set: Optional[Iterable[MetaState]] = None,
    cap: int = DEFAULT_ORACLE_CAP,
) -> bool:
    """Exhaustive derivation search for exactly ``g``.

    ``mode="components"`` answers membership of a possibly disconnected DAG
    in the union-closure language by testing each connected component.
    With ``q_set`` every intermediate meta-state must lie in that set.
    """
    if mode not in ("connected", "components"):
        raise MembershipError(f"unknown mode {mode!r}")
    if len(g.vertices) > cap:
        raise OracleCapError(f"{len(g.vertices)} vertices exceed the oracle cap {cap}")
    _check_input(grammar, g)
    if not g.vertices:
        return False
    qs = frozenset(q_set) if q_set is not None else None
    if mode == "connected":
        return is_connected(g) and _oracle_connected(grammar, g, qs)
    return all(_oracle_connected(grammar, g.subgraph(c), qs) for c in components(g))
