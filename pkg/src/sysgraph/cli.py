"""Command-line entry point: ``sysgraph <verb> ...``.

Exit codes: 0 success / holds / sat, 1 usage error, 2 input or diagnostic
error, 3 negative verdict.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import SCHEMA_VERSION, __version__
from .errors import ModelError, StorageError, SysgraphError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NEGATIVE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Out:
    """Collects the human text and the JSON envelope of one command."""

    def __init__(self, verb: str, as_json: bool):
        self.verb = verb
        self.as_json = as_json
        self.result: dict = {}

    def say(self, text: str = "") -> None:
        if not self.as_json:
            print(text)

    def finish(self, code: int, error: str | None = None, diagnostics=()) -> int:
        if self.as_json:
            env = {"tool": "sysgraph", "version": __version__, "verb": self.verb, "exit": code,
                   "ok": code == EXIT_OK, "result": self.result}
            if error is not None:
                env["error"] = {"message": error, "diagnostics": [d.to_dict() for d in diagnostics]}
            print(json.dumps(env, sort_keys=True, default=str))
        elif error is not None:
            for d in diagnostics:
                print(d.format(), file=sys.stderr)
            if not diagnostics:
                print(f"error: {error}", file=sys.stderr)
        return code


def _load(path: str):
    from .dsl import load_model

    return load_model(path)


def _max_states(args):
    from .elaboration import ExplorationConfig

    return ExplorationConfig(max_states=args.max_states)


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def _store(args):
    from .versioning import VersionStore

    return VersionStore(args.store)


# -- verbs ---------------------------------------------------------------------------------

def cmd_check(args, out: _Out) -> int:
    from .core.ts import dump_ts
    from .elaboration import explore

    model = _load(args.model)
    system = model.channel_system()
    ts = explore(system, _max_states(args))
    dead = ts.deadlocks()
    out.result = {
        "system": model.main,
        "components": [g.name for g in system.components],
        "states": ts.n_states,
        "transitions": len(ts.transitions),
        "deadlocks": len(dead),
        "warnings": [d.to_dict() for d in model.diagnostics],
    }
    for d in model.diagnostics:
        out.say(d.format())
    out.say(f"{model.main}: {ts.n_states} states, {len(ts.transitions)} transitions, {len(dead)} deadlock states")
    if args.dump:
        _write(args.dump, dump_ts(ts))
    return EXIT_OK


def cmd_verify(args, out: _Out) -> int:
    from .elaboration import explore
    from .verification import check, compile_property, counterexample_text

    model = _load(args.model)
    system = model.channel_system()
    ts = explore(system, _max_states(args))
    verdicts = []
    for text in args.prop:
        f = compile_property(text, system)
        verdicts.append(check(ts, f, no_stutter=args.no_stutter))
    out.result = {"system": model.main, "properties": [v.to_dict() for v in verdicts]}
    failing = [v for v in verdicts if not v.satisfied]
    for v in verdicts:
        out.say(f"{'holds' if v.satisfied else 'FAILS'}: {v.formula.canonical}")
        if v.counterexample is not None:
            lasso = v.counterexample
            labels = [ts.info[s].render() for s in lasso.states]
            out.say(f"  counterexample lasso (cycle at {lasso.cycle_at}):")
            for i, (s, lab) in enumerate(zip(lasso.states, labels)):
                action = f" --{lasso.actions[i]}-->" if i < len(lasso.actions) else ""
                out.say(f"    {i}: {lab}{action}")
        elif v.failing_state is not None:
            out.say(f"  fails at state {ts.info[v.failing_state].render()} on {v.failing_subformula}")
    if args.trace and failing and failing[0].counterexample is not None:
        _write(args.trace, counterexample_text(ts, failing[0]))
    if args.archive:
        if model.is_composite():
            raise ModelError("only single system graphs can be archived")
        rec = _store(args).archive(model.graph(), labels=verdicts)
        out.result["record"] = rec.id
        out.say(f"archived {rec.id}")
    return EXIT_NEGATIVE if failing else EXIT_OK


def cmd_refine(args, out: _Out) -> int:
    from .elaboration import explore
    from .equivalence import bisim_equiv, simulates

    old_model, new_model = _load(args.old), _load(args.new)
    cfg = _max_states(args)
    old_ts = explore(old_model.channel_system(), cfg)
    new_ts = explore(new_model.channel_system(), cfg)
    if args.mode == "bisim":
        report = bisim_equiv(old_ts, new_ts, args.match_actions)
        left, right = old_ts, new_ts
    else:
        report = simulates(new_ts, old_ts, args.match_actions)
        left, right = new_ts, old_ts
    out.result = {"old": old_model.main, "new": new_model.main, **report.to_dict()}
    out.say(report.describe(left, right))
    return EXIT_OK if report.holds else EXIT_NEGATIVE


def _parse_feed(arg: str):
    from .runtime import ChannelEndpoint, ValueFeed

    if "=" not in arg:
        raise UsageError(f"--feed expects CHANNEL=@FILE or CHANNEL=v1,v2,..., got {arg!r}")
    chan, _, source = arg.partition("=")
    if source.startswith("@"):
        feed = ValueFeed.from_file(source[1:])
    else:
        from .core.ts import parse_value_token

        feed = ValueFeed([parse_value_token(x) for x in source.split(",") if x])
    return ChannelEndpoint(chan, "receive", feed)


def cmd_sim(args, out: _Out) -> int:
    from .runtime import DivergenceResolver, run, run_parallel

    model = _load(args.model)
    system = model.channel_system()
    resolver = DivergenceResolver.parse(args.resolve) if args.resolve else None
    endpoints = [_parse_feed(s) for s in args.feed]
    known = {c.name for c in system.channels}
    for ep in endpoints:
        if ep.channel not in known:
            raise ModelError(f"--feed names unknown channel {ep.channel!r}")
    if len(system.components) == 1:
        trace = run(system, resolver=resolver, endpoints=endpoints, step_limit=args.steps)
    else:
        trace = run_parallel(system, resolver=resolver, endpoints=endpoints, step_limit=args.steps, seed=args.seed)
    status = "terminal" if trace.terminal else "deadlock" if trace.deadlock else "limit"
    out.result = {"system": model.main, "status": status, "steps": len(trace) - 1, "actions": trace.actions,
                  "final": trace.final.render()}
    for i, st in enumerate(trace.steps):
        out.say(f"{i:4d} {st.action or '':>14}  {st.state.render()}")
    out.say(f"end: {status} after {len(trace) - 1} steps")
    if args.trace:
        _write(args.trace, trace.to_text())
    return EXIT_OK


def _is_verified(store, g) -> bool:
    from .versioning import graph_digest

    rid = graph_digest(g)
    if not store.exists(rid):
        return False
    labels = store.load(rid).labels
    return bool(labels) and all(lab.verdict == "holds" for lab in labels)


def cmd_gen(args, out: _Out) -> int:
    from .skeleton import generate_skeleton

    model = _load(args.model)
    g = model.graph()
    backend = "reference-text" if args.backend == "text" else "bundle-json"
    verified = _is_verified(_store(args), g)
    bundle, text = generate_skeleton(g, backend, verified=verified, force=args.force)
    _write(args.output, text)
    out.result = {"system": g.name, "backend": backend, "verified": verified, "output": args.output,
                  "hooks": len(bundle.effect_hooks), "divergences": len(bundle.divergence_interfaces)}
    if args.output != "-":
        out.say(f"wrote {backend} skeleton for {g.name} to {args.output}")
    return EXIT_OK


def cmd_promela(args, out: _Out) -> int:
    from .verification.promela import emit_promela

    model = _load(args.model)
    text = emit_promela(model.channel_system(), args.prop)
    _write(args.output, text)
    out.result = {"system": model.main, "output": args.output, "properties": len(args.prop)}
    if args.output != "-":
        out.say(f"wrote Promela for {model.main} to {args.output}")
    return EXIT_OK


def cmd_embed(args, out: _Out) -> int:
    from .dsl import print_graph, validate_graph
    from .increment import embed_with_renames

    outer = _load(args.outer).graph()
    inner = _load(args.inner).graph()
    res = embed_with_renames(inner, outer, args.at, args.name)
    problems = [d for d in validate_graph(res.graph) if d.is_error]
    if problems:
        raise ModelError("embedding produced an invalid graph", problems)
    _write(args.output, print_graph(res.graph))
    out.result = {"system": res.graph.name, "renames": res.renames, "output": args.output}
    if args.archive:
        store = _store(args)
        parents = [store.archive(outer).id, store.archive(inner).id]
        rec = store.archive(res.graph, kind="horizontal-increment", parents=parents,
                            metadata={"at": args.at, "renames": res.renames})
        out.result["record"] = rec.id
        out.say(f"archived {rec.id}")
    for kind, table in res.renames.items():
        for old, new in table.items():
            out.say(f"renamed {kind} {old} -> {new}")
    if args.output != "-":
        out.say(f"wrote {res.graph.name} to {args.output}")
    return EXIT_OK


def _record_dict(rec) -> dict:
    return {"id": rec.id, "name": rec.name, "kind": rec.kind, "parents": rec.parents,
            "labels": [vars(lab) for lab in rec.labels], "timestamp": rec.timestamp,
            "refinement": rec.refinement, "metadata": rec.metadata}


def _record_line(rec) -> str:
    line = f"{rec.id[:12]} {rec.kind:<20} {rec.name}"
    if rec.refinement:
        line += f"  [{rec.refinement['mode']}: {rec.refinement['verdict']}]"
    for lab in rec.labels:
        line += f"\n    {lab.verdict}: {lab.formula}"
    return line


def cmd_version(args, out: _Out) -> int:
    from .increment import classify_next_move

    store = _store(args)
    if args.action == "show":
        rec = store.show(args.target)
        out.result = _record_dict(rec)
        out.say(_record_line(rec))
        out.say(f"parents: {', '.join(p[:12] for p in rec.parents) or '-'}")
        out.say(rec.source.rstrip())
        return EXIT_OK
    if args.action == "find":
        recs = store.find_by_formula(args.target)
        out.result = {"records": [_record_dict(r) for r in recs]}
        for r in recs:
            out.say(_record_line(r))
        return EXIT_OK
    g = _load(args.target).graph()
    if args.action == "log":
        recs = store.log(g.name)
        out.result = {"name": g.name, "records": [_record_dict(r) for r in recs]}
        for r in recs:
            out.say(_record_line(r))
        if not recs:
            out.say(f"no archived versions of {g.name}")
        return EXIT_OK
    if args.action == "archive":
        rec = store.archive(g, kind=args.kind)
        out.result = _record_dict(rec)
        out.say(_record_line(rec))
        return EXIT_OK
    # next
    refinable = True if args.refinable else None
    decision = classify_next_move(g, store, refinable)
    out.result = {"name": g.name, "decision": decision}
    out.say(decision)
    return EXIT_OK


# -- wiring --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .elaboration import ExplorationConfig
    from .runtime import DEFAULT_STEP_LIMIT

    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a machine-readable envelope")
    common.add_argument("--store", default=".sgv", help="version store directory (default .sgv)")
    limits = _Parser(add_help=False)
    limits.add_argument("--max-states", type=int, default=ExplorationConfig().max_states)

    p = _Parser(prog="sysgraph", description="System-graph modeling toolchain.")
    p.add_argument("--version", action="version",
                   version=f"sysgraph {__version__} (skeleton schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="verb", metavar="VERB")
    sub.required = True

    s = sub.add_parser("check", parents=[common, limits], help="parse, validate and explore a model")
    s.add_argument("model")
    s.add_argument("--dump", metavar="FILE", help="write the explored system in the ts v1 format ('-' for stdout)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("verify", parents=[common, limits], help="check LTL or CTL properties")
    s.add_argument("model")
    s.add_argument("--prop", action="append", required=True, help="formula; repeatable")
    s.add_argument("--no-stutter", action="store_true", help="do not extend deadlocks with a self-loop")
    s.add_argument("--archive", action="store_true", help="record the verdicts in the version store")
    s.add_argument("--trace", metavar="FILE", help="write the first counterexample lasso")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("refine", parents=[common, limits], help="compare two models")
    s.add_argument("old")
    s.add_argument("new")
    s.add_argument("--mode", choices=["bisim", "sim"], default="bisim")
    s.add_argument("--match-actions", action="store_true", help="also require equal action names")
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("sim", parents=[common], help="execute a model")
    s.add_argument("model")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolve", help="scripted:a,b | policy:first | random:N | prompt")
    s.add_argument("--feed", action="append", default=[], help="CHANNEL=@FILE or CHANNEL=v1,v2")
    s.add_argument("--steps", type=int, default=DEFAULT_STEP_LIMIT)
    s.add_argument("--trace", metavar="FILE")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("gen", parents=[common], help="emit a skeleton bundle")
    s.add_argument("model")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--backend", choices=["json", "text"], default="json")
    s.add_argument("--force", action="store_true", help="accept a model without verified properties")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("promela", parents=[common], help="emit Promela")
    s.add_argument("model")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--prop", action="append", default=[])
    s.set_defaults(func=cmd_promela)

    s = sub.add_parser("embed", parents=[common], help="embed one graph into a declarator of another")
    s.add_argument("outer")
    s.add_argument("inner")
    s.add_argument("--at", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--name")
    s.add_argument("--archive", action="store_true")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("version", parents=[common], help="inspect or extend the version store")
    s.add_argument("action", choices=["log", "show", "archive", "find", "next"])
    s.add_argument("target", help="model file, record id (show) or formula (find)")
    s.add_argument("--kind", choices=["origin", "refinement", "horizontal-increment", "vertical-increment"])
    s.add_argument("--refinable", action="store_true", help="treat the model as refinable (next)")
    s.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json" in argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        out = _Out(next((a for a in argv if not a.startswith("-")), ""), as_json)
        if not as_json:
            parser.print_usage(sys.stderr)
        return out.finish(EXIT_USAGE, str(exc))
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    out = _Out(args.verb, args.json)
    try:
        code = args.func(args, out)
    except UsageError as exc:
        return out.finish(EXIT_USAGE, str(exc))
    except ModelError as exc:
        return out.finish(EXIT_INPUT, str(exc), exc.diagnostics or ())
    except (SysgraphError, StorageError) as exc:
        return out.finish(EXIT_INPUT, str(exc))
    except OSError as exc:
        return out.finish(EXIT_INPUT, f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": "))
    except (ValueError, KeyError) as exc:
        return out.finish(EXIT_INPUT, str(exc))
    return out.finish(code)


if __name__ == "__main__":
    sys.exit(main())
