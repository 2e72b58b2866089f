"""Command-line interface.

Subcommands: ``ask`` (natural-language query, with session continuation for
clarifications), ``plan`` (write plan.json without executing), ``run``
(execute a plan file), ``index build``/``index search``, ``screen``,
``bench``, and ``serve``. The fixture root comes from ``--fixtures`` or the
``MOF_FORGE_FIXTURES`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import retrieval, screening
from .errors import MofForgeError
from .intent import Query, parse_query
from .planner import dump_plan, load_plan
from .reporting import BenchmarkRow, compare_to_reference, render_benchmark_table
from .service import make_service


def _service(args, mode=None, sync_wait=None):
    return make_service(
        fixtures_root=args.fixtures,
        runs_root=args.runs,
        pool_cores=args.cores,
        mode=mode or args.mode,
        seed=args.seed,
        **({"sync_wait": sync_wait} if sync_wait is not None else {}),
    )


def _print_payload(payload: dict) -> int:
    kind = payload.get("kind")
    if kind == "clarification":
        print("clarification needed:")
        print(f"  {payload['prompt']}")
        print(f"  missing: {', '.join(payload['missing'])}")
        return 2
    if kind == "run":
        print(f"run {payload['run_id']}: {payload['status']}")
        report = payload.get("report")
        if report:
            print(report["narrative"])
        if payload["status"] == "aborted":
            return 3
        return 0
    print(json.dumps(payload, indent=2))
    return 0


def cmd_ask(args) -> int:
    svc = _service(args)
    session_file = Path(args.runs) / "sessions.json"
    sessions = {}
    if session_file.exists():
        sessions = json.loads(session_file.read_text(encoding="utf-8"))

    attachments = {}
    for path in args.attach or []:
        attachments[Path(path).name] = Path(path).read_text(encoding="utf-8")

    if args.session in sessions and sessions[args.session].get("pending"):
        # restore the pending clarification so this text answers it
        pend = sessions[args.session]
        svc.sessions[args.session] = _restore_session(args.session, pend)
        payload = svc.respond_clarification(args.session, args.text)
    else:
        payload = svc.submit_query(args.session, args.text,
                                   attachments=attachments)

    if payload.get("kind") == "run" and payload["status"] == "awaiting_confirmation":
        pending = payload["snapshot"]["awaiting_confirmation"]
        rule_ids = sorted({r for rules in pending.values() for r in rules})
        print(f"corrections pending confirmation: {', '.join(rule_ids)}")
        if args.confirm in ("accept", "reject"):
            print(f"--confirm {args.confirm}: resolving")
            payload = svc.confirm_correction(payload["run_id"], rule_ids,
                                             args.confirm == "accept")

    _persist_session(svc, args.session, session_file, sessions)
    return _print_payload(payload)


def _persist_session(svc, session_id: str, session_file: Path,
                     sessions: dict) -> None:
    from .intent import intent_to_dict
    record = svc.sessions.get(session_id)
    if record and record.pending is not None:
        sessions[session_id] = {
            "pending": {
                "missing": record.pending.missing,
                "prompt": record.pending.prompt_text,
                "partial": intent_to_dict(record.pending.partial),
            },
        }
    else:
        sessions.pop(session_id, None)
    session_file.parent.mkdir(parents=True, exist_ok=True)
    session_file.write_text(json.dumps(sessions, indent=2), encoding="utf-8")


def _restore_session(session_id: str, stored: dict):
    from .intent import ClarificationRequest, intent_from_dict
    from .service import SessionRecord
    pending = stored["pending"]
    clar = ClarificationRequest(
        missing=pending["missing"],
        prompt_text=pending["prompt"],
        blocking=True,
        partial=intent_from_dict(pending["partial"]),
        session_id=session_id,
    )
    return SessionRecord(session_id=session_id, pending=clar)


def cmd_plan(args) -> int:
    svc = _service(args)
    result = parse_query(Query(text=args.text, session_id="plan"),
                         svc._resolver)
    from .intent import ClarificationRequest
    if isinstance(result, ClarificationRequest):
        print(f"clarification needed: {result.prompt_text}")
        return 2
    plan = svc._build_plan(result)
    Path(args.out).write_text(dump_plan(plan), encoding="utf-8")
    print(f"wrote {args.out} ({len(plan.all_jobs())} jobs)")
    return 0


def cmd_run(args) -> int:
    svc = _service(args)
    plan = load_plan(Path(args.plan).read_text(encoding="utf-8"))
    from .errors import RunAborted
    try:
        record = svc.executor.run_plan(plan, mode=args.mode)
    except RunAborted as exc:
        record = exc.record
        print(f"run {record.run_id} aborted", file=sys.stderr)
        return 3
    payload = svc.run_payload(record.run_id)
    return _print_payload(payload)


def cmd_index_build(args) -> int:
    chunks = retrieval.ingest_corpus(args.corpus, max_chars=args.max_chars,
                                     min_chars=args.min_chars,
                                     overlap_sents=args.overlap)
    index = retrieval.build_index(chunks)
    retrieval.save_index(index, args.out)
    print(f"indexed {index.rows} chunks into {args.out}")
    return 0


def cmd_index_search(args) -> int:
    index = retrieval.load_index(args.index)
    for hit in retrieval.search(index, args.query, args.k):
        print(f"{hit.score:.4f}\t{hit.chunk_id}\t{hit.text[:80]}")
    return 0


def cmd_screen(args) -> int:
    table = screening.load_descriptor_table(args.db)
    config = screening.configure_funnel(args.objective, args.downstream,
                                        evidence=[], top_n=args.top)
    report = screening.run_funnel(table, config)
    for stage_id, n_in, n_out in report.stages:
        print(f"{stage_id}: {n_in} -> {n_out}")
    if args.report:
        Path(args.report).write_text(
            json.dumps(screening.report_to_dict(report), indent=2),
            encoding="utf-8")
        print(f"wrote {args.report}")
    return 0


def cmd_bench(args) -> int:
    table_path = Path(args.table)
    fixtures = Path(args.fixtures) if args.fixtures else table_path.parent
    reference = Path(args.reference) if args.reference else fixtures / "bench.tsv"
    svc = make_service(fixtures_root=fixtures, runs_root=args.runs,
                       pool_cores=args.cores, mode="replay", seed=args.seed)
    rows: list[BenchmarkRow] = []
    failures = 0
    lines = reference.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines[1:]):
        if not line.strip():
            continue
        tool, sid, prop, metric, unit, ref_value, query, source = line.split("\t")
        payload = svc.submit_query(f"bench-{i}", query)
        produced = None
        report = payload.get("report") or {}
        for entry in report.get("answer", []):
            if entry["metric"] == metric and entry["material"] == sid:
                produced = entry["value"]
                break
        if produced is None:
            print(f"MISS\t{tool}\t{sid}\t{prop}: no {metric} in report",
                  file=sys.stderr)
            failures += 1
            continue
        rows.append(BenchmarkRow(
            tool=tool, structure_id=sid, property=prop, unit=unit,
            reference_value=float(ref_value), produced_value=float(produced),
            source=source))
    compare_to_reference(rows)
    table = render_benchmark_table(rows)
    print(table, end="")
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    return 1 if failures else 0


def cmd_serve(args) -> int:
    import uvicorn

    from .webapp import create_app

    svc = _service(args)
    static = Path(args.ui) if args.ui else None
    app = create_app(svc, static_dir=static)
    host, _, port = args.addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8040),
                log_level="warning")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fixtures", default=None,
                        help="fixture root (default: MOF_FORGE_FIXTURES or ./fixtures)")
    parser.add_argument("--runs", default="runs", help="run store directory")
    parser.add_argument("--cores", type=int, default=8, help="core pool size")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--mode", choices=["replay", "model"], default="replay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mof-forge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ask", help="submit a natural-language query")
    p.add_argument("text")
    p.add_argument("--session", default="cli")
    p.add_argument("--attach", action="append",
                   help="file with reference settings; repeatable")
    p.add_argument("--confirm", choices=["accept", "reject", "none"],
                   default="accept",
                   help="how to resolve physics-change confirmations")
    _add_common(p)
    p.set_defaults(fn=cmd_ask)

    p = sub.add_parser("plan", help="write plan.json for a query")
    p.add_argument("text")
    p.add_argument("--out", default="plan.json")
    _add_common(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("run", help="execute a plan file")
    p.add_argument("--plan", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_run)

    p_index = sub.add_parser("index", help="retrieval index operations")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p = index_sub.add_parser("build")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-chars", type=int, default=1500, dest="max_chars")
    p.add_argument("--min-chars", type=int, default=400, dest="min_chars")
    p.add_argument("--overlap", type=int, default=1)
    p.set_defaults(fn=cmd_index_build)
    p = index_sub.add_parser("search")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("-k", type=int, default=5)
    p.set_defaults(fn=cmd_index_search)

    p = sub.add_parser("screen", help="run the screening funnel over a table")
    p.add_argument("--db", required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--downstream", default="gcmc")
    p.add_argument("--top", type=int, default=1000)
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_screen)

    p = sub.add_parser("bench", help="replay the benchmark table end to end")
    p.add_argument("--table", required=True, help="replay fixture TSV")
    p.add_argument("--reference", default=None,
                   help="benchmark reference TSV (default: bench.tsv next to --table)")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP API and dashboard")
    p.add_argument("--addr", default="127.0.0.1:8040")
    p.add_argument("--ui", default="frontend/dist",
                   help="static dashboard directory (mounted at /)")
    _add_common(p)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MofForgeError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
