import pytest

from metadag import corpus
from metadag.cli import main
from metadag.dfa import parse_dfa
from metadag.grammar import enumerate_language
from metadag.graph import format_dag, parse_dag
from metadag.swap import rainbow


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    bow = corpus.load("bow")
    paths = {}

    def put(name, text):
        p = tmp_path / name
        p.write_text(text)
        paths[name] = str(p)
        return str(p)

    put("nested.qset", "_\np q\np q q\np q q q\n")
    put("k2.qset", "_\np q\np q q\n")
    put("small.dag", "vertex r R\nvertex l L\nedge e0 r l\nedge e1 r l\n")
    put("r3.dag", format_dag(rainbow(bow, 3).strip_labels()))
    put("r4.dag", format_dag(rainbow(bow, 4).strip_labels()))
    put("chain.dag", "vertex x A\nvertex y A\nvertex z B\nedge e0 x y\nedge e1 y z\n")
    star = min(enumerate_language(corpus.load("star"), 4).values(), key=len)
    put("star.dag", format_dag(star.strip_labels()))
    put("overlap.grammar", "terminals: a q\nnonterminals: q\nrule: _ -> a -> q\n")
    put("nondet.grammar", "terminals: a b\nnonterminals: p q\nrule: _ -> a -> p\nrule: _ -> a -> q\n"
        "rule: p -> b -> _\nrule: q -> b -> _\n")
    return paths


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "grammar format 1" in out and "dfa format 1" in out


def test_validate(capsys, files):
    code, out, _ = run(capsys, "validate", "corpus:tree")
    assert code == 0 and out.splitlines()[0] == "deterministic; 0 useless rules"
    code, _, err = run(capsys, "validate", files["overlap.grammar"])
    assert code == 2 and "overlap" in err
    code, out, _ = run(capsys, "validate", files["nondet.grammar"])
    assert code == 0 and "nondeterministic" in out and "clash: _ with a" in out


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "corpus:tree")
    assert code == 0 and out.splitlines()[0] == "ID" and "rule cycle" in out
    assert run(capsys, "classify", "corpus:chain")[1].splitlines()[0] == "FID"
    assert run(capsys, "classify", "corpus:rootless")[1].splitlines()[0] == "FINITE (empty)"


def test_dfa(capsys, files, tmp_path):
    code, out, _ = run(capsys, "dfa", "corpus:bow", "--qset", files["nested.qset"])
    assert code == 0
    trans = [line for line in out.splitlines() if line.startswith("trans")]
    assert len(trans) == 6 and "trans p q q q | p q -> C -> p | p q q" in trans
    code, out, err = run(capsys, "dfa", "corpus:chain", "--estimate")
    assert code == 0 and len(parse_dfa(out).states) == 2 and "size cap: 1" in err
    code, out, err = run(capsys, "dfa", "corpus:tree", "--estimate")
    assert code == 2 and out == "" and "ID" in err and "rule cycle" in err
    target = tmp_path / "bow.dfa"
    assert run(capsys, "dfa", "corpus:bow", "--qset", files["nested.qset"], "--minimize", "-o", str(target))[0] == 0
    assert len(parse_dfa(target.read_text()).states) == 4


def test_member(capsys, files, tmp_path):
    code, out, _ = run(capsys, "member", "corpus:bow", files["small.dag"], "--trace")
    assert code == 0 and out.splitlines()[-1] == "ACCEPT" and out.startswith("read r via")
    assert run(capsys, "member", "corpus:bow", files["r3.dag"], "--fd-qset", files["nested.qset"])[0] == 0
    assert run(capsys, "member", "corpus:bow", files["r4.dag"], "--fd-qset", files["nested.qset"])[0] == 1
    assert run(capsys, "member", "corpus:bow", files["r4.dag"])[0] == 0
    assert run(capsys, "member", "corpus:bow", files["r4.dag"], "--oracle")[0] == 0
    dfa = tmp_path / "k2.dfa"
    run(capsys, "dfa", "corpus:bow", "--qset", files["k2.qset"], "-o", str(dfa))
    assert run(capsys, "member", "corpus:bow", files["r3.dag"], "--dfa", str(dfa))[1] == "REJECT\n"
    code, _, err = run(capsys, "member", "corpus:chain", files["small.dag"])
    assert code == 2 and "terminal alphabet" in err


def test_enumerate(capsys, tmp_path):
    assert run(capsys, "enumerate", "corpus:tree", "--max-vertices", "5", "--count")[1] == "3\n"
    assert run(capsys, "enumerate", "corpus:bow", "--max-vertices", "2", "--count")[1] == "1\n"
    assert run(capsys, "enumerate", "corpus:rootless", "--max-vertices", "6", "--count")[1] == "0\n"
    out_dir = tmp_path / "dags"
    run(capsys, "enumerate", "corpus:tree", "--max-vertices", "5", "--out-dir", str(out_dir))
    written = sorted(out_dir.iterdir())
    assert len(written) == 3 and all(not parse_dag(p.read_text()).has_edge_labels() for p in written)
    code, out, _ = run(capsys, "enumerate", "corpus:tree", "--max-vertices", "3", "--labels")
    assert code == 0 and "edge" in out and out.rstrip().endswith("1")


def test_swap_and_pump(capsys, files):
    code, _, err = run(capsys, "swap", files["chain.dag"], "e0", "e1")
    assert code == 2 and "not independent" in err
    code, out, _ = run(capsys, "swap", files["small.dag"], "e0", "e1")
    assert code == 0 and parse_dag(out).in_order["l"] == ("e1", "e0")
    code, out, _ = run(capsys, "pump", files["star.dag"], "e0", "e0", "2")
    g = parse_dag(out)
    assert code == 0 and len(g) == 12 and sum(lab == "L" for lab in g.vertices.values()) == 3


def test_product(capsys, files, tmp_path):
    a, b = tmp_path / "a.dfa", tmp_path / "b.dfa"
    run(capsys, "dfa", "corpus:bow", "--qset", files["nested.qset"], "-o", str(a))
    run(capsys, "dfa", "corpus:bow", "--qset", files["k2.qset"], "-o", str(b))
    code, out, _ = run(capsys, "product", str(a), str(b), "--intersect", "--minimize")
    assert code == 0 and len(parse_dfa(out).states) == 3
    code, out, _ = run(capsys, "product", str(a), str(b), "--union")
    assert code == 0 and "#sink" in out


def test_estimate_and_reachable(capsys):
    assert run(capsys, "estimate", "corpus:chain")[1] == "_\ns\n"
    assert run(capsys, "estimate", "corpus:bow")[0] == 2
    code, out, _ = run(capsys, "reachable", "corpus:bow", "--size-cap", "2", "--policy", "lazy")
    assert code == 0 and out.splitlines()[1:] == ["_", "p", "p q"]
    assert run(capsys, "reachable", "corpus:bow")[0] == 2


def test_swap_check(capsys):
    code, out, _ = run(capsys, "--seed", "3", "swap-check", "corpus:ring", "--max-vertices", "6", "--trials", "50")
    assert code == 0 and "violations: 0" in out


def test_missing_file(capsys):
    code, _, err = run(capsys, "classify", "/nonexistent/x.grammar")
    assert code == 2 and "cannot read" in err
    assert run(capsys, "classify", "corpus:nope")[0] == 2
