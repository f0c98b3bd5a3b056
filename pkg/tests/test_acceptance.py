"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected into an "acceptance criteria" section at the end of the run.
"""
from __future__ import annotations

import random
from functools import cache

from metadag import corpus
from metadag.dfa import accepts_rule_word, build_dfa, minimize, product
from metadag.grammar import derivation_labelings, enumerate_language, iter_derivations
from metadag.graph import Dag, Edge, canonical_form, is_connected, topological_order, validate_dag
from metadag.membership import member_fd, member_oracle, read_dag
from metadag.metastate import MetaState, estimate_qmin, reachable
from metadag.rules import classify, is_infinite, label_unbounded, verify_id_witness
from metadag.swap import garland_derivation, independent, pump, rainbow, rainbow_by_swaps, same_label_pairs, do_swap

M = MetaState.parse
NESTED3_Q = [M("_"), M("p q"), M("p q q"), M("p q q q")]
GARLAND_Q = [M("_"), M("p"), M("p q")]
FID_NAMES = ("star", "chain", "caterpillar", "ring", "diamond")
GROWTH_NAMES = ("tree", "bow", "chain", "pair", "caterpillar", "ring", "fork")
SWAP_NAMES = ("tree", "bow", "star", "chain", "pair", "caterpillar", "ring", "diamond", "fork")


@cache
def estimated(name: str):
    qset, _ = estimate_qmin(corpus.load(name))
    return qset.states


@cache
def members(name: str, bound: int = 8):
    return tuple(enumerate_language(corpus.load(name), bound).values())


# ----------------------------------------------------------------- criterion 1

def test_c01_bow_dfa_transitions(verdict):
    g = corpus.load("bow")
    dfa = build_dfa(g, NESTED3_Q)
    got = {(str(s), a.sigma, str(t)) for s, a, t in dfa.transitions()}
    want = {
        ("_", "R", "p q"),
        ("p q", "O", "p q q"),
        ("p q q", "O", "p q q q"),
        ("p q q q", "C", "p q q"),
        ("p q q", "C", "p q"),
        ("p q", "L", "_"),
    }
    verdict(1, "meta-state DFA transition set for the bow grammar", got == want and len(dfa.transitions()) == 6,
            f"{len(got)} transitions")


# ----------------------------------------------------------------- criterion 2

def test_c02_classification(verdict):
    tree = classify(corpus.load("tree"))
    bow = classify(corpus.load("bow"))
    chain = classify(corpus.load("chain"))
    rootless = classify(corpus.load("rootless"))
    ok = (
        tree.kind == "ID"
        and tree.id_witness is not None
        and verify_id_witness(corpus.load("tree"), tree.id_witness)
        and bow.kind == "ID"
        and verify_id_witness(corpus.load("bow"), bow.id_witness)
        and chain.kind == "FID"
        and rootless.kind == "Finite"
    )
    verdict(2, "tree=ID (witness verified), bow=ID, chain=FID, rootless=Finite", ok,
            f"{tree.kind} {bow.kind} {chain.kind} {rootless.headline()}")


# ----------------------------------------------------------------- criterion 3

def test_c03_infinite_iff_growth(verdict):
    bad = []
    for name in GROWTH_NAMES:
        g = corpus.load(name)
        small = set(enumerate_language(g, 8))
        large = set(enumerate_language(g, 10))
        grows = small < large
        if is_infinite(g) != grows or (not is_infinite(g) and small != large):
            bad.append(name)
    verdict(3, f"is_infinite agrees with growth 8->10 on {len(GROWTH_NAMES)} grammars", not bad,
            f"disagreements: {bad}" if bad else "")


# ----------------------------------------------------------------- criterion 4

def test_c04_swap_closure(verdict):
    rng = random.Random(4)
    summary, bad = [], []
    for name in SWAP_NAMES:
        g = corpus.load(name)
        dags = [d for d in enumerate_language(g, 8, connected_only=False).values() if same_label_pairs(d)]
        cache_: dict = {}
        defined = accepted = attempts = 0
        while defined < 200 and attempts < 20000:
            attempts += 1
            d = rng.choice(dags)
            a, b = rng.choice(same_label_pairs(d))
            if not independent(d, a, b):
                continue
            defined += 1
            h = do_swap(d, a, b).strip_labels()
            key = canonical_form(h)
            if key not in cache_:
                cache_[key] = member_oracle(g, h, mode="components")
            accepted += cache_[key]
        summary.append(f"{name} {accepted}/{defined}")
        if defined < 200 or accepted != defined:
            bad.append(name)
    verdict(4, "200 defined same-label swaps per grammar stay in the language", not bad, "; ".join(summary))


# ----------------------------------------------------------------- criterion 5

def _without_edge(g: Dag, e: str) -> Dag:
    edges = {x: y for x, y in g.edges.items() if x != e}
    return Dag(dict(g.vertices), edges,
               {v: tuple(x for x in s if x != e) for v, s in g.in_order.items()},
               {v: tuple(x for x in s if x != e) for v, s in g.out_order.items()})


def _mutate(g: Dag, rng: random.Random, terminals: list[str]) -> Dag | None:
    kind = rng.choice(["relabel", "drop_edge", "add_edge", "drop_leaf", "rotate_in", "rotate_out"])
    vs = sorted(g.vertices)
    if kind == "relabel":
        v = rng.choice(vs)
        others = [t for t in terminals if t != g.vertices[v]]
        if not others:
            return None
        return Dag({**g.vertices, v: rng.choice(others)}, dict(g.edges), dict(g.in_order), dict(g.out_order))
    if kind == "drop_edge":
        if not g.edges:
            return None
        return _without_edge(g, rng.choice(sorted(g.edges)))
    if kind == "add_edge":
        u, v = rng.choice(vs), rng.choice(vs)
        e = f"x{len(g.edges)}"
        while e in g.edges:
            e += "'"
        ins, outs = list(g.in_order[v]), list(g.out_order[u])
        ins.insert(rng.randint(0, len(ins)), e)
        outs.insert(rng.randint(0, len(outs)), e)
        h = Dag(dict(g.vertices), {**g.edges, e: Edge(u, v)}, {**g.in_order, v: tuple(ins)},
                {**g.out_order, u: tuple(outs)})
        return h if topological_order(h) is not None else None
    if kind == "drop_leaf":
        leaves = g.leaves()
        if len(g.vertices) < 2 or not leaves:
            return None
        v = rng.choice(sorted(leaves))
        h = g
        for e in g.in_order[v]:
            h = _without_edge(h, e)
        return h.subgraph(x for x in h.vertices if x != v)
    order = g.in_order if kind == "rotate_in" else g.out_order
    many = [v for v in vs if len(order[v]) >= 2]
    if not many:
        return None
    v = rng.choice(many)
    seq = order[v][1:] + order[v][:1]
    if kind == "rotate_in":
        return Dag(dict(g.vertices), dict(g.edges), {**g.in_order, v: seq}, dict(g.out_order))
    return Dag(dict(g.vertices), dict(g.edges), dict(g.in_order), {**g.out_order, v: seq})


def perturbed_non_members(name: str, want: int = 100, seed: int = 5) -> list[Dag]:
    g = corpus.load(name)
    rng = random.Random(seed)
    base = [d.strip_labels() for d in members(name)]
    terminals = sorted(g.terminals)
    seen, out = {canonical_form(d) for d in base}, []
    for _ in range(50000):
        if len(out) >= want:
            break
        h = rng.choice(base)
        for _ in range(rng.randint(1, 3)):
            h = _mutate(h, rng, terminals) if h is not None else None
        if h is None or not h.vertices or validate_dag(h) or not is_connected(h):
            continue
        key = canonical_form(h)
        if key in seen:
            continue
        seen.add(key)
        if not member_oracle(g, h):
            out.append(h)
    return out


def test_c05_reader_matches_oracle(verdict):
    summary, bad = [], []
    for name in FID_NAMES:
        g = corpus.load(name)
        dfa = build_dfa(g, estimated(name))
        mem = [d.strip_labels() for d in members(name)]
        non = perturbed_non_members(name)
        disagree = sum(read_dag(dfa, g, d).accepted != member_oracle(g, d) for d in mem + non)
        summary.append(f"{name}: {len(mem)}+{len(non)}, {disagree} off")
        if disagree or len(non) < 100:
            bad.append(name)
    verdict(5, "reader with estimated sets agrees with the oracle", not bad, "; ".join(summary))


# ----------------------------------------------------------------- criterion 6

def test_c06_rainbow_bound(verdict):
    g = corpus.load("bow")
    r3, r4 = rainbow_by_swaps(g, 3).strip_labels(), rainbow_by_swaps(g, 4).strip_labels()
    same = all(canonical_form(rainbow_by_swaps(g, n).strip_labels()) == canonical_form(rainbow(g, n).strip_labels())
               for n in (3, 4))
    ok = (
        same
        and member_oracle(g, r3) and member_oracle(g, r4)
        and member_fd(g, NESTED3_Q, r3)
        and not member_fd(g, NESTED3_Q, r4)
    )
    verdict(6, "sets up to p q^3 accept 3 nested bows and reject 4", ok)


# ----------------------------------------------------------------- criterion 7

def test_c07_string_law(verdict):
    g = corpus.load("chain")
    want = {M("_"), M("s")}
    sets = [reachable(g, size_cap=c, step_cap=12, policy=p).states for p in ("all", "lazy") for c in (1, 4)]
    traces = list(iter_derivations(g, 10))
    sizes_ok = all(len(m) <= 1 for d in traces for m in d.metas)
    ok = all(s == want for s in sets) and sizes_ok and len(traces) == 9
    verdict(7, "chain grammar meta-states are exactly {_, s}", ok, f"{len(traces)} traces")


# ----------------------------------------------------------------- criterion 8

def test_c08_q0_vs_qmin(verdict):
    g = corpus.load("bow")
    every = reachable(g, size_cap=8, step_cap=20, policy="all")
    lazy = reachable(g, size_cap=2, policy="lazy")
    garland_metas = {MetaState.of(m) for n in range(1, 7) for m in garland_derivation(g, n).metas}
    ok = (
        every.max_size >= 6
        and lazy.states == {M("_"), M("p"), M("p q")}
        and garland_metas <= lazy.states
        and max(len(m) for m in garland_metas) <= 2
    )
    verdict(8, "all interleavings reach size >= 6; lazy garlands stay at size <= 2", ok,
            f"all: max {every.max_size}; lazy: {sorted(map(str, lazy.states))}")


# ----------------------------------------------------------------- criterion 9

def test_c09_unbounded_label(verdict):
    g = corpus.load("star")
    flag, witness = label_unbounded(g, "L")
    d = min(members("star"), key=len)
    r = next(v for v, lab in d.vertices.items() if lab == "R")
    e = d.out_order[r][0]
    sizes_ok = True
    for k in range(6):
        h = pump(d, e, e, k).strip_labels()
        count = sum(lab == "L" for lab in h.vertices.values())
        sizes_ok &= count == k + 1 and len(h) == 4 * (k + 1) and member_oracle(g, h)
    ok = flag and witness[0] == "b" and sizes_ok
    verdict(9, "L unbounded via a rule path; pumped stars k <= 5 are members", ok, f"witness kind {witness[0]}")


# ---------------------------------------------------------------- criterion 10

def _equal_up_to(a, b, n: int) -> bool:
    """Exhaustive over all words of length <= n, memoized on the state pair."""
    memo: dict = {}

    def go(s, t, left: int) -> bool:
        if s is None and t is None:
            return True
        key = (s, t, left)
        if key in memo:
            return memo[key]
        ok = (s in a.accepting if s is not None else False) == (t in b.accepting if t is not None else False)
        if ok and left:
            for x in a.alphabet:
                s2 = a.delta.get((s, x)) if s is not None else None
                t2 = b.delta.get((t, x)) if t is not None else None
                if not go(s2, t2, left - 1):
                    ok = False
                    break
        memo[key] = ok
        return ok

    return go(a.start, b.start, n)


def corpus_dfas():
    out = [("bow nested", build_dfa(corpus.load("bow"), NESTED3_Q)),
           ("bow garland", build_dfa(corpus.load("bow"), GARLAND_Q))]
    out += [(n, build_dfa(corpus.load(n), estimated(n))) for n in FID_NAMES]
    return out


def _random_word(rng: random.Random, dfas, alphabet):
    word, state = [], None
    walk = rng.choice(dfas + [None])
    state = walk.start if walk else None
    for _ in range(rng.randint(0, 12)):
        opts = [x for x in alphabet if walk and (state, x) in walk.delta]
        if walk and opts and rng.random() < 0.9:
            x = rng.choice(opts)
            state = walk.delta[(state, x)]
        else:
            x = rng.choice(alphabet)
            state = walk.delta.get((state, x)) if walk else None
        word.append(x)
    return word


def test_c10_automata_algebra(verdict):
    bad = []
    for name, d in corpus_dfas():
        m = minimize(d)
        if minimize(m) != m or not _equal_up_to(d, m, 12):
            bad.append(f"minimize {name}")
    bow = corpus.load("bow")
    lazy3 = reachable(bow, size_cap=3, policy="lazy").states
    star = corpus.load("star")
    pairs = [
        ("bow nested/garland", build_dfa(bow, NESTED3_Q), build_dfa(bow, GARLAND_Q)),
        ("bow nested/lazy3", build_dfa(bow, NESTED3_Q), build_dfa(bow, lazy3)),
        ("star est/cap2", build_dfa(star, estimated("star")),
         build_dfa(star, reachable(star, size_cap=2).states | {M("_")})),
    ]
    rng = random.Random(10)
    for name, a, b in pairs:
        union, inter = product(a, b, "union"), product(a, b, "intersect")
        for _ in range(1000):
            w = _random_word(rng, [a, b], list(a.alphabet))
            x, y = accepts_rule_word(a, w), accepts_rule_word(b, w)
            if accepts_rule_word(union, w) != (x or y) or accepts_rule_word(inter, w) != (x and y):
                bad.append(f"product {name}")
                break
    verdict(10, "minimize idempotent and exact on words <= 12; products match on 1000 words", not bad,
            ", ".join(bad))


# ---------------------------------------------------------------- criterion 11

def test_c11_unique_derivation_dag(verdict):
    counts, bad = [], []
    for name in corpus.NAMES:
        g = corpus.load(name)
        if not g.deterministic or not members(name):
            continue
        for d in members(name):
            if len(derivation_labelings(g, d.strip_labels(), limit=2)) != 1:
                bad.append(name)
                break
        counts.append(f"{name} {len(members(name))}")
    verdict(11, "every member <= 8 vertices has one derivation DAG", not bad, "; ".join(counts))
