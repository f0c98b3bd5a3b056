"""Meta-states (multisets of pending nonterminals) and their exploration.

The exploration in :func:`reachable` works on an abstraction of prefix DAGs
that keeps, per connected component, the multiset of dangling nonterminals.
Rules only look at labels, so this abstraction is exact for the question
"can this prefix DAG still be completed to a *connected* DAG", and its
meta-states (the per-component multisets summed up) are exactly those seen
along derivations of members of the language.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from .grammar import EMPTY, Grammar, Rule


class MetaStateError(ValueError):
    pass


@dataclass(frozen=True)
class MetaState:
    """A finite multiset of nonterminals, stored as sorted (symbol, count) pairs."""

    items: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, symbols: Iterable[str] | Mapping[str, int] = ()) -> "MetaState":
        c = Counter(symbols) if not isinstance(symbols, Mapping) else Counter(dict(symbols))
        return cls(tuple(sorted((k, n) for k, n in c.items() if n > 0)))

    @classmethod
    def parse(cls, text: str) -> "MetaState":
        toks = text.split()
        if toks == [EMPTY] or not toks:
            return cls()
        if EMPTY in toks:
            raise MetaStateError(f"bad meta-state {text!r}")
        return cls.of(toks)

    def counts(self) -> Counter:
        return Counter(dict(self.items))

    def __len__(self) -> int:
        return sum(n for _, n in self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __iter__(self) -> Iterator[str]:
        for k, n in self.items:
            yield from [k] * n

    def __add__(self, other: "MetaState") -> "MetaState":
        return msum(self, other)

    def __sub__(self, other: "MetaState") -> "MetaState":
        return mdiff(self, other)

    def __lt__(self, other: "MetaState") -> bool:  # sort order only; inclusion is mleq
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (len(self), self.items)

    def __str__(self) -> str:
        return " ".join(self) or EMPTY

    def __repr__(self) -> str:
        return f"MetaState({str(self)!r})"


EMPTY_META = MetaState()


def msum(a: MetaState, b: MetaState) -> MetaState:
    return MetaState.of(a.counts() + b.counts())


def mleq(a: MetaState, b: MetaState) -> bool:
    cb = b.counts()
    return all(cb[k] >= n for k, n in a.items)


def mdiff(a: MetaState, b: MetaState) -> MetaState:
    if not mleq(b, a):
        raise MetaStateError(f"cannot remove {b} from {a}")
    return MetaState.of(a.counts() - b.counts())


def meta(g, nonterminals) -> MetaState:
    """Multiset of nonterminal vertex labels of a prefix DAG."""
    nts = set(nonterminals)
    return MetaState.of(lab for lab in g.vertices.values() if lab in nts)


def step(state: MetaState, rule: Rule) -> Optional[MetaState]:
    """``(state - head) + tail`` or None when the head is not contained."""
    head = MetaState.of(rule.head)
    if not mleq(head, state):
        return None
    return msum(mdiff(state, head), MetaState.of(rule.tail))


# ---------------------------------------------------------------- exploration

# abstract state: (started, sorted tuple of per-component meta-states)
Abstract = tuple[bool, tuple[MetaState, ...]]
START: Abstract = (False, ())
DONE: Abstract = (True, ())

POLICIES = ("all", "lazy")


def _splits(need: Counter, comps: tuple[MetaState, ...], i: int = 0) -> Iterator[tuple[Counter, ...]]:
    """Ways to take the multiset ``need`` out of the components ``comps[i:]``."""
    if i == len(comps):
        if not +need:
            yield ()
        return
    have = comps[i].counts()
    keys = sorted(k for k in need if need[k] > 0 and have[k] > 0)

    def take(j: int, acc: Counter) -> Iterator[Counter]:
        if j == len(keys):
            yield acc
            return
        k = keys[j]
        for n in range(min(need[k], have[k]) + 1):
            nxt = Counter(acc)
            if n:
                nxt[k] = n
            yield from take(j + 1, nxt)

    for part in take(0, Counter()):
        rest = need - part
        for tail in _splits(rest, comps, i + 1):
            yield (part,) + tail


def abstract_successors(grammar: Grammar, state: Abstract, rules: Iterable[Rule]) -> set[Abstract]:
    started, comps = state
    if state == DONE:
        return set()
    can_merge = any(len(r.head) > 1 for r in grammar.rules)
    out: set[Abstract] = set()
    for rule in rules:
        tail = MetaState.of(rule.tail)
        if rule.is_root:
            if not tail:
                if not comps:
                    out.add(DONE)
                continue
            new = comps + (tail,)
        else:
            for parts in _splits(Counter(rule.head), comps):
                involved = [i for i, p in enumerate(parts) if +p]
                merged = Counter()
                for i in involved:
                    merged += comps[i].counts() - parts[i]
                merged += tail.counts()
                others = tuple(c for i, c in enumerate(comps) if i not in involved)
                if not +merged:
                    if not others:
                        out.add(DONE)
                    continue
                new_state = others + (MetaState.of(merged),)
                if len(new_state) > 1 and not can_merge:
                    continue
                out.add((True, tuple(sorted(new_state))))
            continue
        if len(new) > 1 and not can_merge:
            continue
        out.add((True, tuple(sorted(new))))
    return out


def _policy_successors(grammar: Grammar, state: Abstract, policy: str) -> set[Abstract]:
    if policy == "all":
        return abstract_successors(grammar, state, grammar.rules)
    # roots only when no other rule's head fits the pending nonterminals
    total = flatten(state)
    non_root = [r for r in grammar.rules if not r.is_root]
    if any(mleq(MetaState.of(r.head), total) for r in non_root):
        return abstract_successors(grammar, state, non_root)
    return abstract_successors(grammar, state, [r for r in grammar.rules if r.is_root])


def flatten(state: Abstract) -> MetaState:
    total = Counter()
    for c in state[1]:
        total += c.counts()
    return MetaState.of(total)


@dataclass(frozen=True)
class MetaStateSet:
    states: frozenset[MetaState]
    saturated: bool = False
    size_cap: Optional[int] = None
    step_cap: Optional[int] = None
    policy: Optional[str] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def max_size(self) -> int:
        return max((len(s) for s in self.states), default=0)

    def sorted(self) -> list[MetaState]:
        return sorted(self.states, key=MetaState.sort_key)

    def __contains__(self, item) -> bool:
        return item in self.states

    def __len__(self) -> int:
        return len(self.states)


def reachable(
    grammar: Grammar,
    size_cap: Optional[int] = None,
    step_cap: Optional[int] = None,
    policy: str = "all",
) -> MetaStateSet:
    """Meta-states on derivations of connected members within the caps.

    ``policy="all"`` follows every interleaving; ``policy="lazy"`` applies a
    root rule only when no other rule is applicable. A state counts only if
    it lies on a complete derivation whose every meta-state has size at most
    ``size_cap`` and whose length is at most ``step_cap``. ``saturated`` is
    true when raising every given cap by one adds no meta-state (a probe,
    not a proof of closure).
    """
    if policy not in POLICIES:
        raise MetaStateError(f"unknown policy {policy!r}")
    if size_cap is None and step_cap is None:
        raise MetaStateError("need a size cap or a step cap")
    keep, cut = _explore(grammar, size_cap, step_cap, policy)
    saturated = not cut
    if cut:
        bigger, _ = _explore(grammar, size_cap and size_cap + 1, step_cap and step_cap + 1, policy)
        saturated = bigger == keep
    return MetaStateSet(frozenset(keep), saturated, size_cap, step_cap, policy)


def _explore(grammar: Grammar, size_cap: Optional[int], step_cap: Optional[int], policy: str):
    dist = {START: 0}
    succ: dict[Abstract, set[Abstract]] = {}
    cut = False
    queue = deque([START])
    while queue:
        s = queue.popleft()
        if step_cap is not None and dist[s] >= step_cap:
            if _policy_successors(grammar, s, policy):
                cut = True
            continue
        nxt = set()
        for t in _policy_successors(grammar, s, policy):
            if size_cap is not None and len(flatten(t)) > size_cap:
                cut = True
                continue
            nxt.add(t)
            if t not in dist:
                dist[t] = dist[s] + 1
                queue.append(t)
        succ[s] = nxt
    # backward distances to completion
    pred: dict[Abstract, list[Abstract]] = {}
    for s, ts in succ.items():
        for t in ts:
            pred.setdefault(t, []).append(s)
    back = {}
    if DONE in dist:
        back[DONE] = 0
        queue = deque([DONE])
        while queue:
            t = queue.popleft()
            for s in pred.get(t, ()):
                if s not in back:
                    back[s] = back[t] + 1
                    queue.append(s)
    keep = set()
    for s, d in dist.items():
        if s in back and (step_cap is None or d + back[s] <= step_cap):
            keep.add(flatten(s))
    return keep, cut


# ------------------------------------------- sufficient meta-state set estimate

class QminRefused(MetaStateError):
    def __init__(self, classification):
        super().__init__(f"language is {classification.kind}; no finite meta-state set exists")
        self.classification = classification


class QminNotFound(MetaStateError):
    pass


@dataclass(frozen=True)
class QminReport:
    size_cap: Optional[int]
    members_checked: int
    oracle_vertex_bound: int
    mode: str
    lines: tuple[str, ...]

    def __str__(self) -> str:
        return "\n".join(self.lines)


def estimate_qmin(
    grammar: Grammar,
    oracle_vertex_bound: int = 8,
    max_size: int = 6,
    given: Optional[Iterable[MetaState]] = None,
) -> tuple[MetaStateSet, QminReport]:
    """Smallest size cap K whose meta-state DFA reads every small member.

    Iterative deepening over K = 1, 2, ...: the candidate set is every
    meta-state on a derivation with all sizes at most K, trimmed to the part
    of the DFA that is reachable and co-reachable. K is accepted once the
    DFA accepts every member with at most ``oracle_vertex_bound`` vertices.
    The result is validated against that oracle only; it is not a proof of
    minimality, and minimal sets need not be unique.
    """
    from .dfa import build_dfa, trim
    from .grammar import enumerate_language
    from .membership import read_dag
    from .rules import classify

    if given is not None:
        qs = frozenset(given) | {EMPTY_META}
        lines = ("mode: given (restricted language, set supplied externally)",)
        return MetaStateSet(qs, True, None, None, "given"), QminReport(None, 0, oracle_vertex_bound, "given", lines)
    cls = classify(grammar)
    if cls.kind == "ID":
        raise QminRefused(cls)
    members = [d.strip_labels() for d in enumerate_language(grammar, oracle_vertex_bound).values()]
    for k in range(1, max_size + 1):
        cand = reachable(grammar, size_cap=k, policy="all").states | {EMPTY_META}
        dfa = trim(build_dfa(grammar, cand))
        if all(read_dag(dfa, grammar, g).accepted for g in members):
            states = frozenset(dfa.states)
            lines = (
                f"class: {cls.kind}",
                f"size cap: {k}",
                f"states: {len(states)}",
                f"validated against {len(members)} members with <= {oracle_vertex_bound} vertices",
                "oracle-validated estimate; not proven minimal (minimal sets need not be unique)",
            )
            qset = MetaStateSet(states, True, k, None, "estimate", lines)
            return qset, QminReport(k, len(members), oracle_vertex_bound, "estimate", lines)
    raise QminNotFound(f"no size cap <= {max_size} reads all members up to {oracle_vertex_bound} vertices")


# ------------------------------------------------------------------- file I/O

def parse_qset(text: str) -> frozenset[MetaState]:
    out = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.add(MetaState.parse(line))
    return frozenset(out)


def format_qset(states: Iterable[MetaState]) -> str:
    return "".join(f"{s}\n" for s in sorted(set(states), key=MetaState.sort_key))
