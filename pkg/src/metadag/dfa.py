"""Partial DFAs over rule alphabets, built from a grammar and a meta-state set.

States are :class:`MetaState` values, pairs of states (products) or the
sink marker used when totalizing. File format::

    alphabet: _ -> R -> p q | p -> O -> p q | ...
    state _ | start accept
    state p q
    trans _ | _ -> R -> p q | p q

Pair states print as ``( a , b )``; the sink prints as ``#sink``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .grammar import Grammar, Rule
from .metastate import EMPTY_META, MetaState, MetaStateError, step

SINK = "#sink"
State = Union[MetaState, tuple, str]


class DfaError(ValueError):
    pass


@dataclass(frozen=True)
class Dfa:
    alphabet: tuple[Rule, ...]
    states: tuple
    delta: Mapping[tuple, object]
    start: object
    accepting: frozenset

    def __post_init__(self):
        sset = set(self.states)
        if len(sset) != len(self.states):
            raise DfaError("duplicate state")
        if self.start not in sset or not self.accepting <= sset:
            raise DfaError("start and accepting states must be states")
        letters = set(self.alphabet)
        for (s, a), t in self.delta.items():
            if s not in sset or t not in sset or a not in letters:
                raise DfaError(f"bad transition {state_name(s)} --{a}--> {state_name(t)}")

    def step(self, s, a: Rule):
        return self.delta.get((s, a))

    def run(self, word: Iterable[Rule]):
        s = self.start
        for a in word:
            s = self.delta.get((s, a))
            if s is None:
                return None
        return s

    def transitions(self) -> list[tuple[object, Rule, object]]:
        return [(s, a, self.delta[(s, a)]) for s in self.states for a in self.alphabet if (s, a) in self.delta]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dfa):
            return NotImplemented
        return (self.alphabet, self.states, dict(self.delta), self.start, self.accepting) == (
            other.alphabet, other.states, dict(other.delta), other.start, other.accepting)

    def __hash__(self) -> int:
        return hash((self.alphabet, self.states, self.start))


def build_dfa(grammar: Grammar, q_set: Iterable[MetaState]) -> Dfa:
    """delta(q, a -> s -> b) = (q - a) + b wherever that lands inside ``q_set``."""
    qs = frozenset(q_set)
    if EMPTY_META not in qs:
        raise DfaError("the meta-state set must contain the empty meta-state")
    states = tuple(sorted(qs, key=MetaState.sort_key))
    delta = {}
    for q in states:
        for r in grammar.rules:
            t = step(q, r)
            if t is not None and t in qs:
                delta[(q, r)] = t
    return Dfa(tuple(grammar.rules), states, delta, EMPTY_META, frozenset({EMPTY_META}))


def accepts_rule_word(dfa: Dfa, word: Sequence[Rule]) -> bool:
    s = dfa.run(word)
    return s is not None and s in dfa.accepting


def _reach(dfa: Dfa) -> set:
    seen = {dfa.start}
    queue = deque([dfa.start])
    while queue:
        s = queue.popleft()
        for a in dfa.alphabet:
            t = dfa.delta.get((s, a))
            if t is not None and t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def _coreach(dfa: Dfa) -> set:
    back: dict = {}
    for (s, _), t in dfa.delta.items():
        back.setdefault(t, set()).add(s)
    seen = set(dfa.accepting)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in back.get(t, ()):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def trim(dfa: Dfa) -> Dfa:
    """Drop states that are unreachable or cannot reach acceptance (the start always stays)."""
    keep = (_reach(dfa) & _coreach(dfa)) | {dfa.start}
    states = tuple(s for s in dfa.states if s in keep)
    delta = {(s, a): t for (s, a), t in dfa.delta.items() if s in keep and t in keep}
    return Dfa(dfa.alphabet, states, delta, dfa.start, frozenset(dfa.accepting & keep))


def totalize(dfa: Dfa) -> Dfa:
    if all((s, a) in dfa.delta for s in dfa.states for a in dfa.alphabet):
        return dfa
    if SINK in dfa.states:
        raise DfaError("state name clashes with the sink")
    states = dfa.states + (SINK,)
    delta = dict(dfa.delta)
    for s in states:
        for a in dfa.alphabet:
            delta.setdefault((s, a), SINK)
    return Dfa(dfa.alphabet, states, delta, dfa.start, dfa.accepting)


def product(a: Dfa, b: Dfa, mode: str = "intersect") -> Dfa:
    """Pair construction; ``mode`` is ``"intersect"`` or ``"union"``."""
    if mode not in ("intersect", "union"):
        raise DfaError(f"unknown product mode {mode!r}")
    if set(a.alphabet) != set(b.alphabet):
        raise DfaError("alphabets differ")
    if mode == "union":
        a, b = totalize(a), totalize(b)
    alphabet = a.alphabet
    start = (a.start, b.start)
    order = [start]
    seen = {start}
    delta = {}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for x in alphabet:
            ta, tb = a.delta.get((s[0], x)), b.delta.get((s[1], x))
            if ta is None or tb is None:
                continue
            t = (ta, tb)
            delta[(s, x)] = t
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    if mode == "intersect":
        acc = {s for s in order if s[0] in a.accepting and s[1] in b.accepting}
    else:
        acc = {s for s in order if s[0] in a.accepting or s[1] in b.accepting}
    return Dfa(alphabet, tuple(order), delta, start, frozenset(acc))


def _sort_key(s) -> tuple:
    return (0, s.sort_key()) if isinstance(s, MetaState) else (1, state_name(s))


def minimize(dfa: Dfa) -> Dfa:
    """Trim, then merge equivalent states by partition refinement.

    Each block is represented by its least state, so results stay readable.
    """
    d = totalize(trim(dfa))
    letters = d.alphabet
    part = {s: int(s in d.accepting) for s in d.states}
    while True:
        sig = {s: (part[s],) + tuple(part[d.delta[(s, a)]] for a in letters) for s in d.states}
        ids: dict = {}
        new = {s: ids.setdefault(sig[s], len(ids)) for s in d.states}
        if len(ids) == len(set(part.values())):
            break
        part = new
    part = new
    blocks: dict[int, list] = {}
    for s in d.states:
        blocks.setdefault(part[s], []).append(s)
    rep = {s: min(blocks[part[s]], key=_sort_key) for s in d.states}
    # the dead block (the sink's, if any) is dropped to keep the automaton partial
    live = _coreach(d)
    start = rep[d.start]
    states = tuple(s for s in d.states if rep[s] == s and (s in live or s == start))
    kept = set(states)
    delta = {}
    for s in states:
        for a in letters:
            t = rep[d.delta[(s, a)]]
            if t in kept and t in live:
                delta[(s, a)] = t
    return Dfa(letters, states, delta, start, frozenset(rep[s] for s in d.accepting))


# ------------------------------------------------------------------ file I/O

def state_name(s) -> str:
    if isinstance(s, MetaState):
        return str(s)
    if isinstance(s, tuple):
        return f"( {state_name(s[0])} , {state_name(s[1])} )"
    if s == SINK:
        return SINK
    raise DfaError(f"unprintable state {s!r}")


def parse_state(text: str):
    toks = text.split()

    def go(i: int):
        if toks[i] == "(":
            a, i = go(i + 1)
            if toks[i] != ",":
                raise DfaError(f"bad pair state {text!r}")
            b, i = go(i + 1)
            if toks[i] != ")":
                raise DfaError(f"bad pair state {text!r}")
            return (a, b), i + 1
        j = i
        while j < len(toks) and toks[j] not in ("(", ",", ")"):
            j += 1
        chunk = " ".join(toks[i:j])
        if chunk == SINK:
            return SINK, j
        try:
            return MetaState.parse(chunk), j
        except MetaStateError as exc:
            raise DfaError(str(exc)) from None

    if not toks:
        raise DfaError("empty state name")
    try:
        s, i = go(0)
    except IndexError:
        raise DfaError(f"bad state {text!r}") from None
    if i != len(toks):
        raise DfaError(f"bad state {text!r}")
    return s


def format_dfa(dfa: Dfa) -> str:
    lines = ["alphabet: " + " | ".join(str(r) for r in dfa.alphabet)]
    for s in dfa.states:
        flags = [f for f, on in (("start", s == dfa.start), ("accept", s in dfa.accepting)) if on]
        lines.append(f"state {state_name(s)}" + (f" | {' '.join(flags)}" if flags else ""))
    for s, a, t in dfa.transitions():
        lines.append(f"trans {state_name(s)} | {a} | {state_name(t)}")
    return "\n".join(lines) + "\n"


def parse_dfa(text: str) -> Dfa:
    alphabet = None
    states, start, acc, delta = [], None, set(), {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("alphabet:"):
                body = line[len("alphabet:"):].strip()
                alphabet = tuple(Rule.parse(x) for x in body.split("|")) if body else ()
            elif line.startswith("state "):
                name, _, flags = line[len("state "):].partition("|")
                s = parse_state(name)
                states.append(s)
                for f in flags.split():
                    if f == "start":
                        start = s
                    elif f == "accept":
                        acc.add(s)
                    else:
                        raise DfaError(f"unknown flag {f!r}")
            elif line.startswith("trans "):
                parts = line[len("trans "):].split("|")
                if len(parts) != 3:
                    raise DfaError("expected 'trans <state> | <rule> | <state>'")
                s, r, t = parse_state(parts[0]), Rule.parse(parts[1]), parse_state(parts[2])
                if (s, r) in delta:
                    raise DfaError("nondeterministic transition")
                delta[(s, r)] = t
            else:
                raise DfaError(f"unknown record {line.split()[0]!r}")
        except (DfaError, ValueError) as exc:
            raise DfaError(f"line {lineno}: {exc}") from None
    if alphabet is None or start is None:
        raise DfaError("missing alphabet or start state")
    return Dfa(alphabet, tuple(states), delta, start, frozenset(acc))
