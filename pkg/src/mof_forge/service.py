"""Session management, run persistence, and the programmatic API that backs
both the CLI and the web dashboard.

One executor drives each run in a background thread; trivial plans usually
finish within the synchronous wait window so ``submit_query`` can return the
final report directly, otherwise callers poll or stream events by run id.
Completed runs are persisted under ``runs/<run_id>/`` and reload to identical
reports.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import retrieval, screening
from .errors import (MofForgeError, NoPendingClarification, NotAwaiting,
                     NotFound, UnknownRun)
from .executor import (Executor, QueueConfirmations, RunRecord,
                       record_from_dict)
from .guard import load_rules
from .intent import (ClarificationRequest, Intent, Query, TaskKind,
                     merge_clarification, parse_query)
from .planner import Plan, build_plan
from .reporting import Report, summarize_run
from .structdb import StructDB
from .toolkit import ReplayStore, build_adapter

SYNC_WAIT_SECONDS = 5.0
PACKAGED_FUNNEL_ID = "packaged-ch4"

FIXTURES_ENV = "MOF_FORGE_FIXTURES"


def default_fixtures_root() -> Path:
    env = os.environ.get(FIXTURES_ENV)
    if env:
        return Path(env)
    here = Path(__file__).resolve()
    for parent in (Path.cwd(), *here.parents):
        candidate = parent / "fixtures"
        if (candidate / "structures").is_dir():
            return candidate
    raise NotFound("no fixtures directory found; set MOF_FORGE_FIXTURES")


@dataclass
class ServiceConfig:
    fixtures_root: Path
    runs_root: Path
    pool_cores: int = 8
    mode: str = "replay"
    seed: int = 42
    sync_wait: float = SYNC_WAIT_SECONDS


@dataclass
class SessionRecord:
    session_id: str
    turns: list[dict] = field(default_factory=list)
    pending: ClarificationRequest | None = None


class RunStore:
    """Append-only registry of runs on disk; records reload to identical
    reports."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir()
                      if (p / "record.json").exists())

    def load(self, run_id: str) -> RunRecord:
        path = self.root / run_id / "record.json"
        if not path.exists():
            raise UnknownRun(run_id)
        return record_from_dict(json.loads(path.read_text(encoding="utf-8")))


class Service:
    def __init__(self, config: ServiceConfig):
        self.config = config
        fixtures = Path(config.fixtures_root)
        self.db = StructDB(fixtures)
        self.rules = load_rules(fixtures / "rules.toml")
        self.replay = (ReplayStore.load(fixtures / "replay.tsv")
                       if (fixtures / "replay.tsv").exists() else None)
        adapter = build_adapter(config.mode,
                                self.replay if config.mode == "replay" else None,
                                self.db)
        self.adapters = {tool: adapter
                         for tool in ("geometry", "gcmc", "md", "dft", "mlip")}
        self.databases = {}
        descriptors = fixtures / "screening" / "descriptors.tsv"
        if descriptors.exists():
            self.databases["fixture-db"] = descriptors
            self.databases["coremof-fixture"] = descriptors
        self.executor = Executor(
            db=self.db, rules=self.rules, adapters=self.adapters,
            pool_cores=config.pool_cores, runs_root=config.runs_root,
            databases=self.databases,
        )
        self.store = RunStore(Path(config.runs_root))
        self.sessions: dict[str, SessionRecord] = {}
        self.confirmations = QueueConfirmations()
        self.funnels: dict[str, dict] = {}
        self._index = None
        corpus = fixtures / "corpus"
        if corpus.is_dir():
            chunks = retrieval.ingest_corpus(corpus)
            if chunks:
                self._index = retrieval.build_index(chunks)
        self._register_packaged_funnel(descriptors)

    # -- helpers -------------------------------------------------------------

    def _register_packaged_funnel(self, descriptors: Path) -> None:
        if not descriptors.exists():
            return
        table = screening.load_descriptor_table(descriptors)
        config = screening.configure_funnel("ch4-uptake", "gcmc", evidence=[])
        report = screening.run_funnel(table, config)
        self.funnels[PACKAGED_FUNNEL_ID] = screening.report_to_dict(report)

    def _resolver(self, raw: str) -> str | None:
        rec = self.db.try_resolve(raw)
        return rec.structure_id if rec else None

    def _evidence(self, text: str, k: int = 4):
        if self._index is None:
            return []
        return retrieval.search(self._index, text, k)

    def _session(self, session_id: str) -> SessionRecord:
        return self.sessions.setdefault(session_id, SessionRecord(session_id))

    # -- public API ------------------------------------------------------------

    def submit_query(self, session_id: str, text: str,
                     attachments: dict[str, str] | None = None) -> dict:
        session = self._session(session_id)
        session.pending = None  # a fresh query supersedes any open clarification
        query = Query(text=text, session_id=session_id,
                      attachments=attachments or {})
        result = parse_query(query, self._resolver)
        session.turns.append({"query": text, "at": time.time(),
                              "kind": type(result).__name__})
        if isinstance(result, ClarificationRequest):
            session.pending = result
            return self._clarification_payload(result)
        return self._start(session, result, text)

    def respond_clarification(self, session_id: str, text: str) -> dict:
        session = self._session(session_id)
        if session.pending is None:
            raise NoPendingClarification(f"session {session_id!r} has no "
                                         f"open clarification")
        answer = Query(text=text, session_id=session_id)
        result = merge_clarification(session.pending.partial, answer,
                                     self._resolver)
        session.turns.append({"query": text, "at": time.time(),
                              "kind": type(result).__name__})
        if isinstance(result, ClarificationRequest):
            session.pending = result
            return self._clarification_payload(result)
        session.pending = None
        return self._start(session, result, text)

    def _clarification_payload(self, clar: ClarificationRequest) -> dict:
        return {
            "version": 1,
            "kind": "clarification",
            "session_id": clar.session_id,
            "missing": list(clar.missing),
            "prompt": clar.prompt_text,
            "blocking": clar.blocking,
        }

    def _build_plan(self, intent: Intent) -> Plan:
        shortlist = None
        if intent.task_kind == TaskKind.SCREENING:
            scope = intent.database_scope or "fixture-db"
            table_path = self.databases.get(scope)
            if table_path is None:
                raise NotFound(f"no registered descriptor database {scope!r}")
            table = screening.load_descriptor_table(table_path)
            guest = intent.guests[0] if intent.guests else "CH4"
            config = screening.configure_funnel(
                f"{guest.lower()}-uptake", "gcmc",
                evidence=self._evidence(f"{guest} screening heuristics"))
            shortlist = screening.run_funnel(table, config).shortlist
            intent.database_scope = scope
        return build_plan(intent, screening_shortlist=shortlist)

    def _start(self, session: SessionRecord, intent: Intent, text: str) -> dict:
        plan = self._build_plan(intent)
        record = self.executor.start_run(
            plan, mode=self.config.mode,
            refs=intent.reference_settings,
            evidence=self._evidence(text),
            confirmations=self.confirmations,
        )
        record.intent = intent  # type: ignore[attr-defined]
        self._wait_brief(record)
        if record.funnel_report is not None:
            self.funnels[record.run_id] = screening.report_to_dict(
                record.funnel_report)  # type: ignore[arg-type]
        return self.run_payload(record.run_id)

    def _wait_brief(self, record: RunRecord) -> None:
        deadline = time.monotonic() + self.config.sync_wait
        while time.monotonic() < deadline:
            if record.finished:
                return
            snap = record.snapshot()
            if snap["awaiting_confirmation"]:
                return
            time.sleep(0.01)

    def _live_or_stored(self, run_id: str) -> RunRecord:
        record = self.executor.runs.get(run_id)
        if record is not None:
            return record
        return self.store.load(run_id)

    def run_payload(self, run_id: str) -> dict:
        record = self._live_or_stored(run_id)
        snap = record.snapshot()
        payload = {
            "version": 1,
            "kind": "run",
            "run_id": run_id,
            "status": ("aborted" if record.aborted else
                       "completed" if record.finished else
                       "awaiting_confirmation" if snap["awaiting_confirmation"]
                       else "running"),
            "snapshot": snap,
            "plan": _plan_view(record.plan),
        }
        if record.finished:
            try:
                report = summarize_run(record)
                payload["report"] = report.to_dict()
            except MofForgeError as exc:
                partial = getattr(exc, "partial", None)
                payload["report"] = partial.to_dict() if partial else None
                payload["error"] = exc.code
        return payload

    def report(self, run_id: str) -> Report:
        return summarize_run(self._live_or_stored(run_id))

    def confirm_correction(self, run_id: str, rule_ids: list[str],
                           accept: bool) -> dict:
        record = self.executor.runs.get(run_id)
        if record is None:
            raise UnknownRun(run_id)
        snap = record.snapshot()
        awaiting = {rid for rules in snap["awaiting_confirmation"].values()
                    for rid in rules}
        if not awaiting.intersection(rule_ids):
            raise NotAwaiting(f"run {run_id} is not awaiting {rule_ids}")
        self.confirmations.post(run_id, rule_ids, accept)
        deadline = time.monotonic() + self.config.sync_wait
        while time.monotonic() < deadline:
            if record.finished:
                break
            snap = record.snapshot()
            still = {rid for rules in snap["awaiting_confirmation"].values()
                     for rid in rules}
            if not still.intersection(rule_ids) and snap["awaiting_confirmation"]:
                break  # resolved ours; a different confirmation is pending
            time.sleep(0.01)
        return self.run_payload(run_id)

    def stream_events(self, run_id: str, since: int = 0) -> list[dict]:
        record = self.executor.runs.get(run_id)
        if record is not None:
            return [e.to_dict() for e in record.events_since(since)]
        stored = self.store.load(run_id)
        return [e.to_dict() for e in stored.events if e.seq > since]

    def funnel(self, screening_id: str) -> dict:
        report = self.funnels.get(screening_id)
        if report is None:
            # a screening run may settle after the synchronous wait window
            record = self.executor.runs.get(screening_id)
            if record is not None and record.funnel_report is not None:
                report = screening.report_to_dict(
                    record.funnel_report)  # type: ignore[arg-type]
                self.funnels[screening_id] = report
        if report is None:
            raise UnknownRun(f"no funnel report for {screening_id!r}")
        return {"version": 1, "kind": "funnel", "screening_id": screening_id,
                **report}

    def run_ids(self) -> list[str]:
        live = set(self.executor.runs)
        return sorted(live | set(self.store.run_ids()))


def _plan_view(plan: Plan) -> dict:
    """Compact DAG view for clients: nodes plus job-level edges."""
    from .planner import job_predecessors

    preds = job_predecessors(plan)
    return {
        "plan_id": plan.plan_id,
        "jobs": [
            {"job_id": j.job_id, "tool": j.tool, "task": j.task,
             "materials": j.materials}
            for j in plan.all_jobs()
        ],
        "edges": sorted(
            [[p, jid] for jid, ps in preds.items() for p in ps]),
        "applied_defaults": [list(d) for d in plan.applied_defaults],
    }


def make_service(fixtures_root: Path | str | None = None,
                 runs_root: Path | str | None = None,
                 pool_cores: int = 8, mode: str = "replay",
                 seed: int = 42, sync_wait: float = SYNC_WAIT_SECONDS) -> Service:
    fixtures = Path(fixtures_root) if fixtures_root else default_fixtures_root()
    runs = Path(runs_root) if runs_root else Path("runs")
    return Service(ServiceConfig(
        fixtures_root=fixtures, runs_root=runs, pool_cores=pool_cores,
        mode=mode, seed=seed, sync_wait=sync_wait))
