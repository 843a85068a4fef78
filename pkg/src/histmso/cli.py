"""Command line front end.

Exit codes: 0 success (model holds, formula satisfiable, no counterexample,
trace valid, bound respected), 1 negative answer, 2 usage or input error,
3 automaton state cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import logic as L
from .encoding import EncodingError, WordModel, decode, encode, encode_exec
from .history import AbstractExecution, HistoryError, MetaParams, history_of, k_transience_violations, validate_execution, validate_history
from .models import ModelError, SearchBounds, catalog, check_trace, get_model, implication_search, load_model_file
from .syntax import ParseError, parse_formula
from .traceio import GeneratorConfig, TraceSyntaxError, gen_exec, gen_history, load_trace, save_trace, serialize_trace, to_json
from .translate import TranslationContext, TranslationError, is_encoding, make_engine, translate
from .ws1s import EngineCapError
from .ws1s import formula as W
from .ws1s.automaton import DEFAULT_STATE_CAP

OK, NEGATIVE, ERROR, CAP = 0, 1, 2, 3


class _Out:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, data: dict, text: str) -> None:
        if self.as_json:
            print(json.dumps(data, indent=2, sort_keys=True, default=str))
        else:
            print(text.rstrip("\n"))


def _meta_from_args(args) -> MetaParams:
    return MetaParams(
        tuple(f"p{i}" for i in range(1, args.procs + 1)),
        ("x",) if args.objects == 1 else tuple(f"o{i}" for i in range(1, args.objects + 1)),
        tuple(f"v{i}" for i in range(1, args.values + 1)),
    )


def _models(args) -> dict:
    extra = {}
    if getattr(args, "models", None):
        with open(args.models) as fh:
            extra = load_model_file(fh.read())
    return catalog(extra)


def _formula(args, models: dict) -> L.Formula:
    text = args.formula
    if text.startswith("@") and text[1:] in models and " " not in text:
        return models[text[1:]].formula
    if text.startswith("file:"):
        with open(text[5:]) as fh:
            text = fh.read()
    return parse_formula(text, {n: m.formula for n, m in models.items()})


# commands ---------------------------------------------------------------------


def cmd_check(args, out: _Out) -> int:
    model = load_trace(args.trace)
    m = get_model(args.model, _models(args))
    v = check_trace(model, m, args.engine, args.k, state_cap=args.max_explode)
    text = f"{m.name}: {'holds' if v.holds else 'violated'} ({v.engine}"
    text += f", k={v.k})" if v.k is not None else ")"
    if v.witness:
        text += "\nwitness: " + ", ".join(f"{a}={b}" for a, b in v.witness.items())
    out.emit(v.as_dict(), text)
    return OK if v.holds else NEGATIVE


def cmd_sat(args, out: _Out) -> int:
    models = _models(args)
    phi = _formula(args, models)
    L.check_closed(phi)
    meta = _meta_from_args(args)
    mode = "exec" if args.exec_mode else "history"
    ctx = TranslationContext.for_meta(meta, mode, args.k)
    eng = make_engine(ctx, args.max_explode)
    res = eng.is_satisfiable(W.and_(is_encoding(ctx), translate(phi, ctx)), ctx.lanes)
    data = {"satisfiable": res.satisfiable, "states": res.states}
    text = "sat" if res.satisfiable else "unsat"
    if res.satisfiable:
        witness = decode(WordModel(ctx.layout, [tuple(x) for x in res.witness]))
        trace = serialize_trace(witness)
        data["witness"] = to_json(witness)
        text += "\n" + trace
        if args.out:
            save_trace(witness, args.out)
    out.emit(data, text)
    return OK if res.satisfiable else NEGATIVE


def cmd_implies(args, out: _Out) -> int:
    models = _models(args)
    m1, m2 = get_model(args.m1, models), get_model(args.m2, models)
    bounds = SearchBounds(args.max_ops, args.procs, args.objects, args.values, args.k, args.method, args.max_explode)
    r = implication_search(m1, m2, bounds)
    data = {"m1": r.m1, "m2": r.m2, "method": r.method, "counterexample": None, "detail": r.detail}
    if r.found:
        data["counterexample"] = to_json(r.counterexample)
        text = f"{r.m1} does not imply {r.m2}; counterexample:\n" + serialize_trace(r.counterexample)
        if args.out:
            save_trace(r.counterexample, args.out)
    else:
        text = f"no counterexample to {r.m1} => {r.m2} ({r.detail})"
    out.emit(data, text)
    return NEGATIVE if r.found else OK


def cmd_graph(args, out: _Out) -> int:
    from . import rbgraph

    h = history_of(load_trace(args.trace))
    g = rbgraph.build_generator(h, literal=args.literal)
    report = rbgraph.analyze(h, exact=args.exact, literal=args.literal)
    if args.cut_profile:
        with open(args.cut_profile, "w") as fh:
            fh.write(rbgraph.cut_profile_csv(g))
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(rbgraph.to_dot(g))
    if args.plot or args.timeline:
        from . import plotting

        if args.plot:
            plotting.plot_cut_profile(rbgraph.cut_profile(g), g.m, args.plot)
        if args.timeline:
            plotting.plot_timeline(h, args.timeline, report.edges)
    lines = ["edges: " + " ".join(f"{a}->{b}" for a, b in report.edges)]
    lines.append(f"ord cutwidth: {report.ord_cutwidth} (bound 2m^2 = {report.bound}, "
                 f"{'ok' if report.within_bound else 'EXCEEDED'})")
    if report.exact_cutwidth is not None:
        lines.append(f"exact cutwidth: {report.exact_cutwidth}")
    lines.append(f"max degree: out {report.max_out_degree}, in {report.max_in_degree}")
    lines.append(f"closure equals returns-before: {report.closure_is_rb}")
    if report.lemma_violations:
        lines.append(f"cut lemma violations: {report.lemma_violations}")
    out.emit(report.as_dict(), "\n".join(lines))
    good = report.within_bound and not report.lemma_violations and (args.literal or report.closure_is_rb)
    return OK if good else NEGATIVE


def cmd_encode(args, out: _Out) -> int:
    model = load_trace(args.trace)
    if args.exec_mode:
        if not isinstance(model, AbstractExecution):
            raise ModelError("--exec needs a trace with visibility and arbitration")
        w = encode_exec(model, args.k)
    else:
        w = encode(history_of(model))
    text = w.serialize()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    out.emit({"layout": w.layout.header(), "letters": ["".join(map(str, x)) for x in w.letters]}, text)
    return OK


def cmd_emit_mona(args, out: _Out) -> int:
    from .mona import write_mona

    models = _models(args)
    meta = _meta_from_args(args)
    ctx = TranslationContext.for_meta(meta, "exec" if args.exec_mode else "history", args.k)
    parts = []
    if args.formula:
        parts.append(translate(_formula(args, models), ctx))
    if args.encoding or not parts:
        parts.insert(0, is_encoding(ctx))
    text = write_mona(args.out, W.and_(*parts), ctx.lanes)
    out.emit({"path": args.out, "bytes": len(text)}, f"wrote {args.out} ({len(text)} bytes)")
    return OK


def cmd_gen(args, out: _Out) -> int:
    cfg = GeneratorConfig(
        seed=args.seed, num_procs=args.procs, num_ops=args.ops, num_objects=args.objects,
        num_values=args.values, exec_mode=args.exec_mode, k=args.k, overlap=args.overlap,
        vis_density=args.vis_density, consistent_reads=args.consistent_reads,
    )
    model = gen_exec(cfg) if args.exec_mode else gen_history(cfg)
    if args.out:
        save_trace(model, args.out)
    out.emit(to_json(model), serialize_trace(model))
    return OK


def cmd_validate(args, out: _Out) -> int:
    model = load_trace(args.trace, validate=False)
    problems = [str(v) for v in validate_history(history_of(model))]
    if isinstance(model, AbstractExecution) and not problems:
        problems += [str(v) for v in validate_execution(model, real_time=args.real_time)]
        if args.k is not None:
            problems += [str(v) for v in k_transience_violations(model, args.k)]
    text = "valid" if not problems else "\n".join(problems)
    out.emit({"valid": not problems, "violations": problems}, text)
    return NEGATIVE if problems else OK


# parser -----------------------------------------------------------------------


def _meta_flags(p, values: int = 2) -> None:
    p.add_argument("--procs", type=int, default=2)
    p.add_argument("--objects", type=int, default=1)
    p.add_argument("--values", type=int, default=values)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="histmso", description=__doc__.splitlines()[0])
    top.add_argument("--json", action="store_true", help="structured output")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide a model on a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--engine", choices=("direct", "automata"), default="direct")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--models", help="file of extra model definitions")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sat", help="satisfiability of a closed formula over encodings")
    p.add_argument("--formula", required=True, help="formula text, @Model, or file:PATH")
    _meta_flags(p)
    p.add_argument("--exec", dest="exec_mode", action="store_true")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--models")
    p.add_argument("--out", help="write the witness trace here")
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("implies", help="search for an execution separating two models")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    _meta_flags(p, values=1)
    p.add_argument("--max-ops", type=int, default=5)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--method", choices=("automata", "enumerate"), default="automata")
    p.add_argument("--models")
    p.add_argument("--out", help="write the counterexample trace here")
    p.set_defaults(func=cmd_implies)

    p = sub.add_parser("graph", help="generator graph and cutwidth")
    p.add_argument("--trace", required=True)
    p.add_argument("--cut-profile", help="CSV output path")
    p.add_argument("--plot", help="PNG of the cut profile")
    p.add_argument("--timeline", help="PNG of the operations and generator edges")
    p.add_argument("--dot", help="DOT output path")
    p.add_argument("--exact", action="store_true", help="also compute the exact cutwidth")
    p.add_argument("--literal", action="store_true", help="link only the last direct successor")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("encode", help="print the word encoding of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--exec", dest="exec_mode", action="store_true")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("emit-mona", help="write a MONA input file")
    p.add_argument("--formula", help="formula text, @Model, or file:PATH")
    p.add_argument("--encoding", action="store_true", help="conjoin the well-formedness formula")
    _meta_flags(p)
    p.add_argument("--exec", dest="exec_mode", action="store_true")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--models")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emit_mona)

    p = sub.add_parser("gen", help="random history or execution")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--procs", type=int, default=2)
    p.add_argument("--ops", type=int, default=4)
    p.add_argument("--objects", type=int, default=1)
    p.add_argument("--values", type=int, default=2)
    p.add_argument("--exec", dest="exec_mode", action="store_true")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--vis-density", type=float, default=0.5)
    p.add_argument("--consistent-reads", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="report invariant violations of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--real-time", action="store_true", help="also require returns-before within arbitration")
    p.add_argument("--k", type=int, default=None, help="also require k-transient visibility")
    p.set_defaults(func=cmd_validate)

    for action in sub.choices.values():
        action.add_argument("--max-explode", type=int, default=DEFAULT_STATE_CAP,
                            help="automaton state cap (default from $HISTMSO_STATE_CAP)")
    return top


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ERROR if e.code else OK
    out = _Out(args.json)
    try:
        return args.func(args, out)
    except EngineCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return CAP
    except (OSError, ValueError, HistoryError, EncodingError, TraceSyntaxError, ParseError,
            ModelError, TranslationError, L.FormulaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
