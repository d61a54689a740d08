"""Command-line interface: ``surfgen {train,generate,fill,evaluate,synth}``.

Exit status is 0 on success (including a search that finds no output), 2 on
usage errors and 1 on runtime failures.  The resolved configuration of every
run is echoed to stderr so stdout stays pipeable, e.g.::

    surfgen generate --model m.nlg2 --attrs '$city-fr,$city-to' | surfgen fill --bindings b.tsv
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import corpus as C
from .errors import SurfgenError
from .evalkit import dedupe_attribute_sets, exact_match_judgments, read_judgments, score_report
from .evalkit import write_judgments
from .maxent import MaxentModel
from .nlg1 import FrequencyTable, nlg1_generate, nlg1_ranked, train_nlg1
from .nlg2 import Nlg2Config, nlg2_search, train_nlg2
from .nlg3 import Nlg3Config, nlg3_search, train_nlg3
from .synth import SynthGrammar, synth_corpus

NO_OUTPUT = "NO-OUTPUT"

# search defaults: beam width N, maximum length M, feature cutoff K
DEFAULTS = {
    "nlg1": {},
    "nlg2": {"beam": 10, "max_len": 30, "cutoff": 3},
    "nlg3": {"beam": 5, "max_len": 30, "cutoff": 10},
}
# tree models need more IIS passes before rare stop decisions settle
TRAIN_ITERS = {"nlg2": 100, "nlg3": 300}


class UsageError(Exception):
    pass


def _resolve(args, system):
    for key, value in DEFAULTS.get(system, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key in ("beam", "max_len", "cutoff", "max_children", "iters", "workers"):
        v = getattr(args, key, None)
        if v is not None and v < (0 if key == "iters" else 1):
            raise UsageError(f"--{key.replace('_', '-')} out of range: {v}")


def _iters(args, system) -> int:
    return args.iters if args.iters is not None else TRAIN_ITERS[system]


def _echo_config(args):
    items = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    print("# config: " + " ".join(f"{k}={items[k]}" for k in sorted(items)), file=sys.stderr)


def _model_kind(path) -> str:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return "maxent" if first.startswith("surfgen-maxent") else "nlg1"


# -- subcommands ---------------------------------------------------------------

def cmd_train(args):
    system = args.system
    _resolve(args, system)
    if system == "nlg3" and not args.treebank:
        raise UsageError("nlg3 training needs --treebank")
    if system in ("nlg1", "nlg2") and not args.corpus:
        raise UsageError(f"{system} training needs --corpus")
    if system != "nlg1":
        args.iters = _iters(args, system)
    _echo_config(args)

    def progress(it, loglik, gap):
        print(f"iter {it}\tloglik {loglik:.6f}\tgap {gap:.6g}")

    if system == "nlg1":
        table = train_nlg1(C.read_templates(args.corpus))
        table.save(args.model)
        print(f"nlg1: {len(table)} attribute sets, {table.total} templates -> {args.model}")
        return 0
    if system == "nlg2":
        model = train_nlg2(C.read_templates(args.corpus), cutoff=args.cutoff, max_iters=args.iters,
                           tol=args.tol, workers=args.workers, callback=progress)
    else:
        model = train_nlg3(C.read_treebank(args.treebank), cutoff=args.cutoff, max_iters=args.iters,
                           tol=args.tol, workers=args.workers, callback=progress)
    model.save(args.model)
    d = model.diagnostics
    print(f"{system}: {len(model)} features, {len(model.vocabulary)} words, "
          f"{d.iterations} iterations, converged={d.converged}, gap={d.gap:.6g} -> {args.model}")
    return 0


def cmd_generate(args):
    attrs = C.parse_attribute_set(args.attrs)
    kind = _model_kind(args.model)
    if kind == "nlg1":
        system = "nlg1"
    else:
        model = MaxentModel.load(args.model)
        system = model.meta.get("system", "")
    if args.system and args.system != system:
        raise UsageError(f"--system {args.system} but {args.model} holds a {system or 'unknown'} model")
    _resolve(args, system)
    _echo_config(args)

    if system == "nlg1":
        table = FrequencyTable.load(args.model)
        ranked = nlg1_ranked(table, attrs)
        total = sum(n for _, n in ranked)
        limit = args.beam or len(ranked)
        lines = [(n / total, t) for t, n in ranked[:limit]]
    elif system == "nlg2":
        cfg = Nlg2Config(args.beam, args.max_len, args.cutoff)
        lines = [(p, t) for t, p in nlg2_search(model, attrs, cfg)]
    elif system == "nlg3":
        cfg = Nlg3Config(args.beam, args.max_len, args.cutoff, args.max_children or 10)
        lines = [(p, tree.linearize()) for tree, p in nlg3_search(model, attrs, cfg)]
    else:
        raise SurfgenError(f"{args.model}: unknown system {system!r}")

    if not lines:
        print(f"no output for {{{C.canonical(attrs)}}}", file=sys.stderr)
        print(NO_OUTPUT)
        return 0
    for p, t in lines:
        print(f"{p:.6g}\t{t.text}")
    return 0


def cmd_fill(args):
    bindings = C.read_bindings(args.bindings)
    _echo_config(args)
    sources = args.template if args.template else (line for line in sys.stdin)
    for line in sources:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        text = line.rsplit("\t", 1)[-1]
        if text.strip() == NO_OUTPUT:
            print(NO_OUTPUT)
            continue
        print(C.fill_slots(C.parse_template_line(text), bindings))
    return 0


def cmd_evaluate(args):
    _echo_config(args)
    if args.judgments:
        if not args.corpus:
            raise UsageError("--judgments needs --corpus (the test templates) for the set counts")
        counts = dedupe_attribute_sets(C.read_templates(args.corpus))
        report = score_report(read_judgments(args.judgments), counts, baseline=args.baseline)
        sys.stdout.write(report.format())
        return 0

    grammar = SynthGrammar.default()
    data = synth_corpus(grammar, args.seed, args.size, args.test_size)
    counts = dedupe_attribute_sets(data.test)
    cfg2 = Nlg2Config(**DEFAULTS["nlg2"])
    cfg3 = Nlg3Config(**DEFAULTS["nlg3"])
    table = train_nlg1(data.train)
    m2 = train_nlg2(data.train, cutoff=cfg2.cutoff, max_iters=_iters(args, "nlg2"), tol=args.tol,
                    workers=args.workers)
    m3 = train_nlg3(data.treebank, cutoff=cfg3.cutoff, max_iters=_iters(args, "nlg3"), tol=args.tol,
                    workers=args.workers)
    sets = [a for a, _ in counts]
    outputs = {
        "nlg1": {a: nlg1_generate(table, a) for a in sets},
        "nlg2": {a: _first(nlg2_search(m2, a, cfg2)) for a in sets},
        "nlg3": {a: _first_tree(nlg3_search(m3, a, cfg3)) for a in sets},
    }
    judgments = [j for s in ("nlg1", "nlg2", "nlg3")
                 for j in exact_match_judgments(s, outputs[s], grammar.accepts)]
    if args.out:
        write_judgments(args.out, judgments)
    report = score_report(judgments, counts, baseline="nlg1")
    print(f"synthetic corpus: seed={args.seed} train={len(data.train)} test={len(data.test)} "
          f"unique test sets={len(counts)}")
    sys.stdout.write(report.format())
    return 0


def _first(ranked):
    return ranked[0][0] if ranked else None


def _first_tree(ranked):
    return ranked[0][0].linearize() if ranked else None


def cmd_synth(args):
    _echo_config(args)
    data = synth_corpus(SynthGrammar.default(), args.seed, args.size, args.test_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    C.write_templates(out / "train.txt", data.train)
    C.write_treebank(out / "treebank.jsonl", data.treebank)
    C.write_templates(out / "test.txt", data.test)
    print(f"wrote {len(data.train)} training templates, {len(data.treebank)} trees and "
          f"{len(data.test)} test templates to {out}")
    return 0


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surfgen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def search_flags(p):
        p.add_argument("--beam", type=int, help="beam width N")
        p.add_argument("--max-len", type=int, help="maximum length M")
        p.add_argument("--cutoff", type=int, help="feature count cutoff K")

    def train_flags(p):
        p.add_argument("--iters", type=int, help="maximum IIS iterations (nlg2 100, nlg3 300)")
        p.add_argument("--tol", type=float, default=1e-4)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--system", choices=["nlg1", "nlg2", "nlg3"], required=True)
    p.add_argument("--corpus", help="template corpus (one template per line)")
    p.add_argument("--treebank", help="treebank (one JSON tree per line); required for nlg3")
    p.add_argument("--model", "--out", dest="model", required=True, help="model file to write")
    search_flags(p)
    train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate ranked templates for an attribute set")
    p.add_argument("--system", choices=["nlg1", "nlg2", "nlg3"])
    p.add_argument("--model", required=True)
    p.add_argument("--attrs", required=True, help="comma-separated attributes, e.g. '$city-fr,$city-to'")
    p.add_argument("--max-children", type=int, default=10, help="nlg3: children per side (M')")
    search_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fill", help="replace attributes with values")
    p.add_argument("--bindings", required=True, help="lines of $attr<TAB>value")
    p.add_argument("template", nargs="*", help="templates (default: read lines from stdin)")
    p.set_defaults(func=cmd_fill)

    p = sub.add_parser("evaluate", help="score judgments, or run the synthetic benchmark")
    p.add_argument("--judgments", help="lines of system<TAB>attribute-set<TAB>rank")
    p.add_argument("--corpus", help="test templates giving attribute-set multiplicities")
    p.add_argument("--baseline", default="nlg1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=6000, help="synthetic training templates")
    p.add_argument("--test-size", type=int, default=1500)
    p.add_argument("--out", help="write the automatic judgments here")
    train_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=6000)
    p.add_argument("--test-size", type=int, default=1500)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"surfgen: error: {exc}", file=sys.stderr)
        return 2
    except (SurfgenError, OSError, ValueError) as exc:
        print(f"surfgen: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
