"""Command-line interface: ``metadag <verb> ...``.

Exit codes: 0 success or accept, 1 reject or negative answer, 2 error.
Grammar arguments accept a file path or ``corpus:NAME`` for a bundled grammar.
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import __version__, corpus
from .dfa import build_dfa, format_dfa, minimize, parse_dfa, product
from .grammar import enumerate_language, parse_grammar, prune_useless
from .graph import format_dag, parse_dag
from .membership import member, member_oracle, read_dag
from .metastate import QminRefused, estimate_qmin, format_qset, parse_qset, reachable
from .rules import classify
from .swap import check_swap_closure, do_swap, pump

FORMAT_VERSIONS = {"grammar": 1, "dag": 1, "dfa": 1, "qset": 1}


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _grammar(arg: str):
    if arg.startswith("corpus:"):
        try:
            return corpus.load(arg.split(":", 1)[1])
        except KeyError as exc:
            raise CliError(exc.args[0]) from None
    return parse_grammar(_read(arg))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    g = _grammar(args.grammar)
    res = prune_useless(g, bound=args.bound)
    det = "deterministic" if g.deterministic else "nondeterministic"
    print(f"{det}; {len(res.removed)} useless rules")
    print("terminals: " + " ".join(sorted(g.terminals)))
    print("nonterminals: " + " ".join(sorted(g.nonterminals)))
    for head, sigma in g.clashes():
        print(f"clash: {' '.join(head) or '_'} with {sigma} has several tails")
    for r, why in res.removed:
        print(f"useless: {r} ({why})")
    return 0


def cmd_classify(args) -> int:
    g = _grammar(args.grammar)
    print(classify(g).format(g))
    return 0


def cmd_dfa(args) -> int:
    g = _grammar(args.grammar)
    if args.qset:
        qs = parse_qset(_read(args.qset))
    else:
        try:
            qset, report = estimate_qmin(g, args.oracle_bound, args.max_size)
        except QminRefused as exc:
            print(f"error: {exc}", file=sys.stderr)
            print(exc.classification.format(g), file=sys.stderr)
            return 2
        print(str(report), file=sys.stderr)
        qs = qset.states
    d = build_dfa(g, qs)
    if args.minimize:
        d = minimize(d)
    _emit(format_dfa(d), args.output)
    return 0


def cmd_member(args) -> int:
    g = _grammar(args.grammar)
    dag = parse_dag(_read(args.dag))
    if args.oracle:
        mode = "components" if args.components else "connected"
        ok = member_oracle(g, dag, mode=mode)
        print("ACCEPT" if ok else "REJECT")
        return 0 if ok else 1
    if args.dfa:
        res = read_dag(parse_dfa(_read(args.dfa)), g, dag, args.unordered_heads)
    elif args.fd_qset:
        res = read_dag(build_dfa(g, parse_qset(_read(args.fd_qset))), g, dag, args.unordered_heads)
    else:
        res = member(g, dag, args.unordered_heads)
    if args.trace:
        sys.stdout.write(res.trace.format())
    else:
        print("ACCEPT" if res.accepted else "REJECT")
    return 0 if res.accepted else 1


def cmd_enumerate(args) -> int:
    g = _grammar(args.grammar)
    found = enumerate_language(g, args.max_vertices, connected_only=not args.components,
                               cap=max(args.max_vertices, 12))
    dags = sorted(found.items())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, (_, d) in enumerate(dags, 1):
            (out / f"dag_{i:04d}.dag").write_text(format_dag(d if args.labels else d.strip_labels()))
    elif not args.count:
        for i, (_, d) in enumerate(dags, 1):
            print(f"# dag {i}")
            sys.stdout.write(format_dag(d if args.labels else d.strip_labels()))
    print(len(dags))
    return 0


def cmd_swap(args) -> int:
    g = parse_dag(_read(args.dag))
    _emit(format_dag(do_swap(g, args.e0, args.e1)), args.output)
    return 0


def cmd_pump(args) -> int:
    g = parse_dag(_read(args.dag))
    _emit(format_dag(pump(g, args.e, args.e2, args.k)), args.output)
    return 0


def cmd_product(args) -> int:
    a, b = parse_dfa(_read(args.a)), parse_dfa(_read(args.b))
    d = product(a, b, "union" if args.union else "intersect")
    if args.minimize:
        d = minimize(d)
    _emit(format_dfa(d), args.output)
    return 0


def cmd_estimate(args) -> int:
    g = _grammar(args.grammar)
    try:
        qset, report = estimate_qmin(g, args.oracle_bound, args.max_size)
    except QminRefused as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.classification.format(g), file=sys.stderr)
        return 2
    print(str(report), file=sys.stderr)
    _emit(format_qset(qset.states), args.output)
    return 0


def cmd_reachable(args) -> int:
    g = _grammar(args.grammar)
    res = reachable(g, args.size_cap, args.step_cap, args.policy)
    print(f"# saturated: {'yes' if res.saturated else 'no'}; max size {res.max_size}")
    sys.stdout.write(format_qset(res.states))
    return 0


def cmd_swap_check(args) -> int:
    g = _grammar(args.grammar)
    rng = random.Random(args.seed)
    dags = list(enumerate_language(g, args.max_vertices, connected_only=False).values())
    report = None
    cache: dict = {}
    per = max(1, args.trials // max(1, len(dags)))
    for d in dags:
        r = check_swap_closure(g, d, per, rng, cache)
        report = r if report is None else report.merge(r)
    if report is None:
        print("no DAGs to check")
        return 0
    print(report.format())
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    versions = ", ".join(f"{k} format {v}" for k, v in FORMAT_VERSIONS.items())
    p = argparse.ArgumentParser(prog="metadag", description="Regular DAG grammars and meta-state automata.")
    p.add_argument("--version", action="version", version=f"metadag {__version__} ({versions})")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized procedures")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("validate", help="check a grammar file")
    s.add_argument("grammar")
    s.add_argument("--bound", type=int, default=8, help="vertex bound for the usefulness check")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("classify", help="Finite / FID / ID with a witness")
    s.add_argument("grammar")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("dfa", help="build the meta-state DFA")
    s.add_argument("grammar")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--qset", help="meta-state set file")
    src.add_argument("--estimate", action="store_true", help="estimate the set (FID grammars only)")
    s.add_argument("--minimize", action="store_true")
    s.add_argument("--oracle-bound", type=int, default=8)
    s.add_argument("--max-size", type=int, default=6)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_dfa)

    s = sub.add_parser("member", help="decide membership of a DAG")
    s.add_argument("grammar")
    s.add_argument("dag")
    how = s.add_mutually_exclusive_group()
    how.add_argument("--dfa", help="read with this DFA file")
    how.add_argument("--fd-qset", help="restrict to the meta-states in this file")
    how.add_argument("--oracle", action="store_true", help="use the derivation oracle")
    s.add_argument("--components", action="store_true", help="with --oracle: test each component")
    s.add_argument("--trace", action="store_true")
    s.add_argument("--unordered-heads", action="store_true",
                   help="non-standard: match in-edge labels as a multiset")
    s.set_defaults(func=cmd_member)

    s = sub.add_parser("enumerate", help="list the language up to a vertex bound")
    s.add_argument("grammar")
    s.add_argument("--max-vertices", type=int, required=True)
    s.add_argument("--components", action="store_true", help="allow disconnected DAGs")
    s.add_argument("--labels", action="store_true", help="print derivation DAGs (with edge labels)")
    s.add_argument("--count", action="store_true", help="only print the count")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("swap", help="swap two independent edges")
    s.add_argument("dag")
    s.add_argument("e0")
    s.add_argument("e1")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_swap)

    s = sub.add_parser("pump", help="chain k+1 copies by iterated swaps")
    s.add_argument("dag")
    s.add_argument("e")
    s.add_argument("e2")
    s.add_argument("k", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_pump)

    s = sub.add_parser("product", help="union or intersection of two DFA files")
    s.add_argument("a")
    s.add_argument("b")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--intersect", action="store_true")
    mode.add_argument("--union", action="store_true")
    s.add_argument("--minimize", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_product)

    s = sub.add_parser("estimate", help="estimate a sufficient meta-state set")
    s.add_argument("grammar")
    s.add_argument("--oracle-bound", type=int, default=8)
    s.add_argument("--max-size", type=int, default=6)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("reachable", help="meta-states on derivations within caps")
    s.add_argument("grammar")
    s.add_argument("--size-cap", type=int)
    s.add_argument("--step-cap", type=int)
    s.add_argument("--policy", choices=["all", "lazy"], default="all")
    s.set_defaults(func=cmd_reachable)

    s = sub.add_parser("swap-check", help="sample same-label swaps and test closure")
    s.add_argument("grammar")
    s.add_argument("--max-vertices", type=int, default=8)
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_swap_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
