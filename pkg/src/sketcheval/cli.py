"""Command-line interface.

Subcommands: validate, score, feedback, loop, eval, calibrate, gen, serve.
Exit codes: 0 success, 1 data error (machine-readable JSON on stderr),
2 usage error (argparse).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures
from .errors import SketchEvalError
from .feedback import (
    HINT_LIMIT_DEFAULT,
    T_MAX_DEFAULT,
    NullStudent,
    SimulatedStudent,
    deficiencies,
    feedback_report,
    hints,
    loop_run,
    overlay_script_json,
    render_overlay,
)
from .harness import evaluate, generate_pack, make_calibration_records, render_table, write_pack
from .items import ItemSpec, load_dataset, load_item_dir
from .scoring import CalibrationRecord, ScoringParams, calibrate, similarity
from .srg import parse_srg, serialize_srg, validate_against_ontology


def _fail(kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return 1


def _load_items(pack: str | None, config: str | None = None) -> list[ItemSpec]:
    if pack is None:
        items = fixtures.load_fixture_items()
    else:
        items, _ = load_dataset(Path(pack))
    return _apply_config(items, config)


def _apply_config(items: list[ItemSpec], config: str | None) -> list[ItemSpec]:
    """A config file's "scoring" object overrides every item's parameters."""
    if not config:
        return items
    from dataclasses import replace as dc_replace

    overrides = json.loads(Path(config).read_text())
    if "scoring" in overrides:
        merged = []
        for item in items:
            base = item.scoring.to_obj()
            base_align, base_costs = base.pop("alignment"), base.pop("costs")
            incoming = dict(overrides["scoring"])
            if "tau" in incoming and "band_thresholds" not in incoming:
                base.pop("band_thresholds")  # let t2 re-derive from the new tau
            base_align.update(incoming.pop("alignment", {}))
            base_costs.update(incoming.pop("costs", {}))
            base.update(incoming)
            params = ScoringParams.from_obj({**base, "alignment": base_align, "costs": base_costs})
            merged.append(dc_replace(item, scoring=params))
        return merged
    return items


def _find_item(items: list[ItemSpec], item_id: str) -> ItemSpec:
    for item in items:
        if item.item_id == item_id:
            return item
    raise SketchEvalError(f"unknown item {item_id!r}; available: {[i.item_id for i in items]}")


def _read_student(path: str):
    return parse_srg(Path(path).read_text())


def _cmd_validate(args) -> int:
    items, samples = load_dataset(Path(args.pack))
    total = sum(len(v) for v in samples.values())
    print(f"pack ok: {len(items)} items, {total} samples")
    return 0


def _cmd_score(args) -> int:
    item = _find_item(_load_items(args.pack, args.config), args.item)
    student = _read_student(args.student)
    report = validate_against_ontology(student, item.ontology)
    b = similarity(student, item.gold, item.ontology, item.scoring)
    out = b.to_obj()
    if not report.ok:
        out["vocabulary_issues"] = [
            {"kind": i.kind, "ref": i.ref, "value": i.value} for i in report.issues
        ]
    print(json.dumps(out, indent=2))
    return 0


def _cmd_feedback(args) -> int:
    item = _find_item(_load_items(args.pack, args.config), args.item)
    student = _read_student(args.student)
    b = similarity(student, item.gold, item.ontology, item.scoring)
    defs = deficiencies(student, item.gold, b.alignment, item.ontology)
    hs = hints(defs, item.phi, limit=args.hints)
    report = feedback_report(b, defs, hs, gs=student, go=item.gold)
    w, h = (int(v) for v in args.canvas.split("x"))
    overlay = render_overlay(hs, (w, h))
    if args.text:
        print(report.to_text())
    else:
        print(json.dumps({"report": report.to_obj(), "overlay": [op.to_obj() for op in overlay]}, indent=2))
    return 0


def _cmd_loop(args) -> int:
    item = _find_item(_load_items(args.pack, args.config), args.item)
    student_graph = _read_student(args.student)
    if args.interactive:
        trace = _interactive_loop(item, student_graph, args.t_max)
    else:
        model = NullStudent() if args.p == 0 else SimulatedStudent(item.gold, p=args.p, seed=args.seed)
        trace = loop_run(item.gold, student_graph, model, item, t_max=args.t_max, hint_limit=args.hints)
    print(trace.to_json())
    return 0


def _interactive_loop(item, gs, t_max):
    """Prompt for a revised SRG file after each round of hints."""
    from .feedback import LoopIteration, LoopTermination, LoopTrace

    iterations = []
    terminated = LoopTermination.MAX_ITERATIONS
    for t in range(t_max + 1):
        b = similarity(gs, item.gold, item.ontology, item.scoring)
        if b.s >= item.scoring.tau:
            iterations.append(LoopIteration(t, gs, b, ()))
            terminated = LoopTermination.THRESHOLD_MET
            break
        defs = deficiencies(gs, item.gold, b.alignment, item.ontology)
        hs = hints(defs, item.phi, limit=HINT_LIMIT_DEFAULT)
        iterations.append(LoopIteration(t, gs, b, tuple(hs)))
        print(f"[t={t}] s={b.s:.3f} band={b.band.value}", file=sys.stderr)
        for hint in hs:
            print(f"  hint: {hint.text}", file=sys.stderr)
        if t == t_max:
            break
        print("path to revised SRG (blank to stop): ", file=sys.stderr, end="", flush=True)
        line = sys.stdin.readline().strip()
        if not line:
            break
        gs = _read_student(line)
    return LoopTrace(iterations=tuple(iterations), terminated_by=terminated, t_max=t_max)


def _cmd_eval(args) -> int:
    items, samples = load_dataset(Path(args.pack))
    items = _apply_config(items, args.config)
    result = evaluate(items, samples, parallelism=args.parallelism)
    print(render_table(result, args.format))
    if args.out:
        Path(args.out).write_text(result.to_json())
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_calibrate(args) -> int:
    if args.pack:
        items, samples = load_dataset(Path(args.pack))
        by_id = {i.item_id: i for i in items}
        records = [
            CalibrationRecord(student=s.student, gold=by_id[iid].gold, ontology=by_id[iid].ontology, label=s.human_band)
            for iid, rows in samples.items()
            for s in rows
        ]
    else:
        records = make_calibration_records(seed=args.seed)
    alphas = [0.25, 0.5, 0.75] if args.sweep_alpha else None
    best = calibrate(records, alpha_grid=alphas)
    print(json.dumps(best.to_obj(), indent=2))
    return 0


def _cmd_gen(args) -> int:
    items, samples = generate_pack(seed=args.seed, samples_per_band=args.samples_per_band)
    write_pack(Path(args.out), items, samples)
    total = sum(len(v) for v in samples.values())
    print(f"wrote {len(items)} items / {total} samples to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    items = _load_items(args.pack, args.config)
    serve(
        items,
        host=args.host,
        port=args.port,
        token_env=args.token_env,
        static_dir=Path(args.static) if args.static else None,
        journal=Path(args.journal) if args.journal else None,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketcheval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a pack directory")
    p.add_argument("--pack", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("score", help="score one student SRG against an item")
    p.add_argument("--item", required=True)
    p.add_argument("--student", required=True)
    p.add_argument("--pack", help="pack directory (default: shipped fixtures)")
    p.add_argument("--config", help="JSON file overriding scoring parameters")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("feedback", help="emit a feedback report and overlay script")
    p.add_argument("--item", required=True)
    p.add_argument("--student", required=True)
    p.add_argument("--pack")
    p.add_argument("--canvas", default="1000x800")
    p.add_argument("--hints", type=int, default=HINT_LIMIT_DEFAULT)
    p.add_argument("--text", action="store_true", help="print the text report instead of JSON")
    p.add_argument("--config", help="JSON file overriding scoring parameters")
    p.set_defaults(func=_cmd_feedback)

    p = sub.add_parser("loop", help="run the revision loop")
    p.add_argument("--item", required=True)
    p.add_argument("--student", required=True)
    p.add_argument("--pack")
    p.add_argument("--p", type=float, default=1.0, help="simulated-student repair probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=int, default=T_MAX_DEFAULT)
    p.add_argument("--hints", type=int, default=HINT_LIMIT_DEFAULT)
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--config", help="JSON file overriding scoring parameters")
    p.set_defaults(func=_cmd_loop)

    p = sub.add_parser("eval", help="batch-evaluate a pack and print the accuracy table")
    p.add_argument("--pack", required=True)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--format", choices=["text", "markdown", "csv"], default="text")
    p.add_argument("--out", help="write EvalResult JSON here")
    p.add_argument("--config", help="JSON file overriding scoring parameters")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("calibrate", help="grid-search scoring weights")
    p.add_argument("--pack", help="labeled pack (default: synthetic study data)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sweep-alpha", action="store_true")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("gen", help="generate a synthetic labeled pack")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples-per-band", type=int, default=10)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--pack")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--token-env", default="SKETCHEVAL_SERVICE_TOKEN")
    p.add_argument("--static", help="directory with the workbench bundle")
    p.add_argument("--journal", help="append-only session journal file")
    p.add_argument("--config", help="JSON file overriding scoring parameters")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SketchEvalError as exc:
        return _fail(type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc))
    except ValueError as exc:
        return _fail("ValueError", str(exc))


if __name__ == "__main__":
    sys.exit(main())
