"""Command-line front end.

Exit codes: 0 success, 1 theory or pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, model
from .corpus import CORPORA, UnknownCorpus, corpus_rules
from .dsl import ParseError, serialize
from .grid import EnumerationError, enumerate_all, enumerate_grid, render_table
from .instantiate import check_archetype, consistent_cells, select_for_archetype
from .loader import TheoryLoadError, read_theory
from .protocol import emit_protocol
from .refine import RefinementError, parse_rules, refine
from .trace import TraceError, build_graph, graph_dot, trace, trace_dot

_COLORS = {"error": "\033[31m", "warning": "\033[33m"}


class CliError(Exception):
    """Domain failure reported on stderr with exit code 1."""

    def __init__(self, message: str = "", diagnostics=()):
        self.diagnostics = list(diagnostics)
        super().__init__(message)


def _color_enabled(stream) -> bool:
    return not os.environ.get("THEORYFORGE_NO_COLOR") and hasattr(stream, "isatty") and stream.isatty()


def _print_diagnostics(diagnostics, stream=None) -> None:
    stream = stream or sys.stderr
    color = _color_enabled(stream)
    for d in diagnostics:
        line = str(d)
        if color:
            line = f"{_COLORS[d.severity.value]}{line}\033[0m"
        print(line, file=stream)


def _emit(args, text: str) -> None:
    if getattr(args, "stamp", False):
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        if text.lstrip().startswith("{"):
            data = json.loads(text)
            data = {"generated_at": stamp, **data}
            text = json.dumps(data, indent=2, ensure_ascii=False) + "\n"
        else:
            text = f"# generated {stamp}\n{text}"
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _dumps(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _load(args):
    if args.corpus is None and args.file is None:
        raise CliError("no theory given: pass a file or --corpus NAME")
    try:
        theory, _ = read_theory(args.file, corpus=args.corpus, input_format=args.input_format)
    except TheoryLoadError as exc:
        raise CliError("theory has errors", exc.diagnostics) from None
    except UnknownCorpus as exc:
        raise CliError(str(exc.args[0])) from None
    return theory


def _rules(args):
    spec = getattr(args, "rules", None)
    if not spec:
        return []
    if spec.startswith("corpus:"):
        try:
            text, name = corpus_rules(spec.split(":", 1)[1]), spec
        except UnknownCorpus as exc:
            raise CliError(str(exc.args[0])) from None
    else:
        try:
            text, name = Path(spec).read_text(encoding="utf-8"), spec
        except OSError as exc:
            raise CliError(f"cannot read rules file: {exc}") from None
    return parse_rules(text, name)


def _refine(args, theory):
    return refine(theory, _rules(args))


def _archetype(theory, name):
    try:
        return theory.archetype(name)
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None


# -- subcommands ------------------------------------------------------------


def cmd_validate(args) -> int:
    if args.corpus is None and args.file is None:
        raise CliError("no theory given: pass a file or --corpus NAME")
    try:
        theory, diagnostics = read_theory(args.file, corpus=args.corpus, input_format=args.input_format)
    except TheoryLoadError as exc:
        diagnostics = exc.diagnostics
    except UnknownCorpus as exc:
        raise CliError(str(exc.args[0])) from None
    errors = model.errors(diagnostics)
    if args.format == "json":
        _emit(args, _dumps({
            "ok": not errors,
            "diagnostics": [
                {"severity": d.severity.value, "location": d.location, "message": d.message}
                for d in diagnostics
            ],
        }))
    else:
        _print_diagnostics(diagnostics, sys.stdout if not errors else sys.stderr)
        warnings = len(diagnostics) - len(errors)
        if errors:
            print(f"{len(errors)} error(s), {warnings} warning(s)", file=sys.stderr)
        else:
            _emit(args, f"ok: 0 errors, {warnings} warning(s)\n")
    return 1 if errors else 0


def cmd_stats(args) -> int:
    theory = _load(args)
    with_vars = [c for c in theory.constructs if c.variables]
    variables = sum(len(c.variables) for c in theory.constructs)
    values = sum(len(v.domain) for _, v in theory.variables())
    strategic = sum(1 for p in theory.propositions if p.strategic)
    stats = {
        "constructs": len(with_vars),
        "taxonomy_only_constructs": len(theory.constructs) - len(with_vars),
        "variables": variables,
        "indicator_values": values,
        "propositions": len(theory.propositions),
        "strategic": strategic,
        "taxonomic": len(theory.propositions) - strategic,
    }
    if args.refined:
        result = _refine(args, theory)
        retained = result.retained()
        stats["cells"] = result.cell_count
        stats["retained"] = len(retained)
        stats.update(result.status_counts())
        if args.archetype:
            arch = _archetype(theory, args.archetype)
            stats["selected"] = len(select_for_archetype(result.hypotheses, arch))
    if args.format == "json":
        _emit(args, _dumps(stats))
        return 0
    lines = [
        f"constructs: {stats['constructs']}, variables: {stats['variables']}, "
        f"indicator values: {stats['indicator_values']}, propositions: {stats['propositions']} "
        f"(strategic {stats['strategic']}, taxonomic {stats['taxonomic']})",
        f"taxonomy-only constructs: {stats['taxonomy_only_constructs']}",
    ]
    if args.refined:
        lines.append(f"cells: {stats['cells']}")
        lines.append(", ".join(f"{k}: {stats[k]}" for k in result.status_counts()))
        if args.archetype:
            lines.append(f"selected for {args.archetype}: {stats['selected']}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_enumerate(args) -> int:
    theory = _load(args)
    try:
        if args.proposition:
            grids = [enumerate_grid(theory, args.proposition)]
            skipped = []
        else:
            summary = enumerate_all(theory)
            if summary.failed:
                raise CliError("; ".join(f"{p}: {m}" for p, m in summary.failed))
            grids, skipped = summary.grids, summary.skipped
    except EnumerationError as exc:
        raise CliError(str(exc)) from None
    if args.format == "json":
        _emit(args, _dumps({
            "grids": [g.to_dict() for g in grids],
            "skipped": [{"proposition": p, "reason": r} for p, r in skipped],
            "cells": sum(len(g) for g in grids),
        }))
        return 0
    highlight = set()
    if args.archetype:
        arch = _archetype(theory, args.archetype)
        highlight = {c.id for g in grids for c in consistent_cells(g.cells, arch)}
    parts = [render_table(g, theory, highlight) for g in grids]
    for pid, reason in skipped:
        parts.append(f"skipped {pid}: {reason}\n")
    _emit(args, "\n".join(parts))
    return 0


def cmd_refine(args) -> int:
    theory = _load(args)
    result = _refine(args, theory)
    if args.format == "json":
        _emit(args, _dumps({
            "hypotheses": [h.to_dict() for h in result.hypotheses],
            "excluded": [{"proposition": p.id, "reason": r} for p, r in result.excluded],
            "audit": [{"rule": str(rule), "line": rule.line, "matched": hits} for rule, hits in result.audit],
            "counts": result.status_counts(),
        }))
        return 0
    lines = []
    for h in result.hypotheses:
        flag = " [refuted]" if h.refuted else ""
        lines.append(f"{h.id:<8} {h.status.value:<17} {'+'.join(h.constituent_cells):<14} {h.statement}{flag}")
        if h.rationale and not h.retained:
            lines.append(f"{'':<8} {'':<17} {'':<14} reason: {h.rationale}")
    for p, reason in result.excluded:
        lines.append(f"excluded {p.id}: {reason}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_instantiate(args) -> int:
    theory = _load(args)
    try:
        diagnostics = check_archetype(theory, args.archetype)
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    if model.errors(diagnostics):
        raise CliError("archetype has errors", diagnostics)
    _print_diagnostics(diagnostics)
    result = _refine(args, theory)
    selected = select_for_archetype(result.hypotheses, theory.archetype(args.archetype))
    if args.format == "json":
        _emit(args, _dumps({
            "archetype": args.archetype,
            "selected": [
                {"id": h.id, "statement": h.statement, "matched_cells": cells} for h, cells in selected
            ],
        }))
        return 0
    lines = [f"{h.id:<8} [{', '.join(cells)}] {h.statement}" for h, cells in selected]
    lines.append(f"{len(selected)} hypothesis(es) selected for {args.archetype}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_trace(args) -> int:
    theory = _load(args)
    result = _refine(args, theory)
    graph = build_graph(theory, result.grids, result.hypotheses)
    if args.full:
        _emit(args, graph_dot(graph) if args.format == "dot" else graph.to_json())
        return 0
    if not args.hypothesis:
        raise CliError("--hypothesis is required unless --full is given")
    t = trace(graph, args.hypothesis)
    for w in t.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "dot":
        _emit(args, trace_dot(t))
    elif args.format == "json":
        _emit(args, _dumps(t.to_dict()))
    else:
        _emit(args, t.summary() + "\n")
    return 0


def cmd_protocol(args) -> int:
    theory = _load(args)
    result = _refine(args, theory)
    archetype = None
    if args.archetype:
        archetype = _archetype(theory, args.archetype)
        diagnostics = check_archetype(theory, args.archetype)
        if model.errors(diagnostics):
            raise CliError("archetype has errors", diagnostics)
    graph = build_graph(theory, result.grids, result.hypotheses)
    doc = emit_protocol(theory, result.hypotheses, graph, archetype)
    _emit(args, doc.to_json() if args.format == "json" else doc.to_markdown())
    return 0


def cmd_convert(args) -> int:
    theory = _load(args)
    _emit(args, model.dumps(theory) if args.to == "json" else serialize(theory))
    return 0


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theoryforge", description="Operationalize a theory into testable hypotheses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("file", nargs="?", help="theory file (.theory, or .json)")
    source.add_argument("--corpus", choices=CORPORA, help="use a bundled theory instead of a file")
    source.add_argument("--input-format", choices=("theory", "json"), help="override input format detection")
    source.add_argument("--stamp", action="store_true", help="add a generation timestamp to the output")

    rules = argparse.ArgumentParser(add_help=False)
    rules.add_argument("--rules", metavar="FILE", help="review rules file, or corpus:NAME for bundled rules")

    p = sub.add_parser("validate", parents=[source], help="report diagnostics")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", parents=[source, rules], help="count theory elements")
    p.add_argument("--refined", action="store_true", help="also run refinement and count statuses")
    p.add_argument("--archetype", metavar="NAME", help="with --refined, count hypotheses selected for NAME")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("enumerate", parents=[source], help="print hypothesis grids")
    p.add_argument("--proposition", metavar="ID")
    p.add_argument("--archetype", metavar="NAME", help="mark archetype-consistent cells with *")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("refine", parents=[source, rules], help="prune, merge and review hypotheses")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("instantiate", parents=[source, rules], help="select hypotheses for an archetype")
    p.add_argument("--archetype", metavar="NAME", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_instantiate)

    p = sub.add_parser("trace", parents=[source, rules], help="chain of evidence for a hypothesis")
    p.add_argument("--hypothesis", metavar="ID")
    p.add_argument("--full", action="store_true", help="emit the whole graph instead of one trace")
    p.add_argument("--format", choices=("text", "dot", "json"), default="text")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("protocol", parents=[source, rules], help="write the testing protocol")
    p.add_argument("--archetype", metavar="NAME")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("md", "json"), default="md")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("convert", parents=[source], help="rewrite a theory as .theory text or JSON")
    p.add_argument("--to", choices=("theory", "json"), default="json")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.file is not None and args.corpus is not None:
        print("theoryforge: error: give either a file or --corpus, not both", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        _print_diagnostics(exc.diagnostics)
        if str(exc):
            print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RefinementError, TraceError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
