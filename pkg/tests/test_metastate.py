import pytest
from hypothesis import given, strategies as st

from metadag import corpus
from metadag.grammar import apply_rule, iter_derivations
from metadag.graph import Dag
from metadag.metastate import (
    EMPTY_META,
    MetaState,
    MetaStateError,
    QminRefused,
    estimate_qmin,
    format_qset,
    mdiff,
    meta,
    mleq,
    msum,
    parse_qset,
    reachable,
    step,
)

M = MetaState.parse
metas = st.lists(st.sampled_from("pqr"), max_size=6).map(MetaState.of)


def test_text_form():
    assert str(MetaState.of("qpq")) == "p q q"
    assert str(EMPTY_META) == "_" and M("_") == EMPTY_META
    assert len(M("p q q")) == 3


def test_meta_of_prefix_dags():
    tree = corpus.load("tree")
    assert meta(Dag.build({"a": "R"}), tree.nonterminals) == EMPTY_META
    assert meta(apply_rule(Dag.empty(), tree.rules[0]), tree.nonterminals) == M("q q")


def test_multiset_ops():
    assert msum(mdiff(M("p q"), M("p")), M("p q")) == M("p q q")
    assert mleq(M("p"), M("p q")) and not mleq(M("p p"), M("p q"))
    with pytest.raises(MetaStateError):
        mdiff(M("p"), M("q"))


@given(metas, metas)
def test_sum_then_diff(a, b):
    assert mdiff(msum(a, b), b) == a
    assert mleq(a, msum(a, b))
    assert len(msum(a, b)) == len(a) + len(b)


def test_step_cardinality():
    bow = corpus.load("bow")
    for q in [EMPTY_META, M("p"), M("p q"), M("p q q")]:
        for r in bow.rules:
            t = step(q, r)
            if t is not None:
                assert len(t) == len(q) - len(r.head) + len(r.tail)
            else:
                assert not mleq(MetaState.of(r.head), q)


@pytest.mark.parametrize("name", ["tree", "bow", "chain", "ring", "star"])
def test_trace_cardinality_and_endpoints(name):
    g = corpus.load(name)
    for d in iter_derivations(g, 7):
        assert d.metas[0] == () and d.metas[-1] == ()
        for (i, _), before, after in zip(d.steps, d.metas, d.metas[1:]):
            r = g.rules[i]
            assert len(after) == len(before) - len(r.head) + len(r.tail)


def test_reachable_examples():
    chain = corpus.load("chain")
    for policy in ("all", "lazy"):
        for caps in [(1, None), (None, 4), (2, 9)]:
            res = reachable(chain, *caps, policy=policy)
            assert res.states == {EMPTY_META, M("s")} and res.saturated
    tree = reachable(corpus.load("tree"), size_cap=5)
    assert all(MetaState.of("q" * i) in tree for i in range(1, 6))
    assert not tree.saturated


def test_reachable_bow_policies():
    bow = corpus.load("bow")
    assert reachable(bow, size_cap=2).states == {M("_"), M("p"), M("p q")}
    assert reachable(bow, size_cap=3, policy="lazy").states == {M("_"), M("p"), M("q"), M("p q"), M("p q q")}
    assert reachable(bow, size_cap=3).states == {
        M("_"), M("p"), M("q"), M("p q"), M("p p"), M("p q q"), M("p p q")}


def _brute_force_metas(grammar, max_steps, size_cap):
    """Meta-states on concrete derivation traces of connected members."""
    out = set()
    for d in iter_derivations(grammar, max_steps):
        if all(len(m) <= size_cap for m in d.metas):
            out |= {MetaState.of(m) for m in d.metas}
    return out


@pytest.mark.parametrize("name,steps,cap", [("bow", 8, 3), ("tree", 7, 3), ("ring", 6, 4), ("caterpillar", 8, 3)])
def test_reachable_matches_concrete_traces(name, steps, cap):
    g = corpus.load(name)
    assert reachable(g, size_cap=cap, step_cap=steps).states == _brute_force_metas(g, steps, cap)


def test_reachable_needs_a_cap():
    with pytest.raises(MetaStateError):
        reachable(corpus.load("chain"))
    with pytest.raises(MetaStateError):
        reachable(corpus.load("chain"), 3, policy="eager")


def test_string_law():
    chain = corpus.load("chain")
    for d in iter_derivations(chain, 9):
        assert all(len(m) <= 1 for m in d.metas)


@pytest.mark.parametrize("name", ["star", "chain", "ring", "diamond", "pair", "fork"])
def test_fid_lazy_saturates(name):
    assert reachable(corpus.load(name), size_cap=5, policy="lazy").saturated


@pytest.mark.parametrize("name", ["tree", "bow"])
def test_id_grows_with_step_cap(name):
    g = corpus.load(name)
    sizes = [reachable(g, step_cap=s, policy="lazy").max_size for s in (6, 9, 12)]
    assert sizes[0] < sizes[1] < sizes[2]


def test_estimate_examples():
    qset, report = estimate_qmin(corpus.load("chain"))
    assert qset.states == {EMPTY_META, M("s")} and report.size_cap == 1
    given_q = [M("p"), M("p q")]
    qs, rep = estimate_qmin(corpus.load("bow"), given=given_q)
    assert qs.states == {EMPTY_META, M("p"), M("p q")} and rep.mode == "given"
    with pytest.raises(QminRefused) as info:
        estimate_qmin(corpus.load("tree"))
    assert info.value.classification.id_witness is not None


def test_qset_file_round_trip():
    qs = frozenset({EMPTY_META, M("p q q"), M("p")})
    text = format_qset(qs)
    assert text == "_\np\np q q\n"
    assert parse_qset(text) == qs
    assert parse_qset("# comment\n\np q  # trailing\n") == {M("p q")}
