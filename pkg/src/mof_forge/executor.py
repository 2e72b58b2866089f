"""Concurrent plan execution with core allocation and an ordered event log.

One scheduler thread owns the run record and is the only event writer; job
workers run adapters in a thread pool sized to the core pool and report back
through a serialized queue. Dependency order is enforced by construction: a
job is promoted to Ready only after every predecessor succeeded, so its
Started event always follows their Finished events.

Parked confirmations do not block unrelated branches. The set of executed
jobs, their final statuses, and their outputs are deterministic for a fixed
(plan, fixtures, seed, confirmation script); event interleaving is not
guaranteed beyond the dependency ordering.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import guard as guard_mod
from . import screening as screening_mod
from .errors import RunAborted, UnknownRun
from .inputgen import InputDeck, fmt_value, generate_deck, render_deck
from .intent import ReferenceSettings
from .planner import (ALLOWED_TRANSITIONS, Job, JobStatus, Plan,
                      job_predecessors, plan_to_dict)
from .structdb import StructDB
from .toolkit import SUCCESS_MARKERS


class EventKind(str, Enum):
    ENQUEUED = "Enqueued"
    STARTED = "Started"
    FINISHED = "Finished"
    VALIDATION_FINDING = "ValidationFinding"
    CORRECTION_APPLIED = "CorrectionApplied"
    CONFIRMATION_REQUESTED = "ConfirmationRequested"
    RECOVERY_SCHEDULED = "RecoveryScheduled"
    ABORTED = "Aborted"


@dataclass
class ExecutionEvent:
    seq: int
    time: float
    job_id: str
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "time": self.time, "job_id": self.job_id,
                "kind": self.kind.value, "payload": self.payload}


@dataclass
class ResourcePool:
    total_cores: int
    allocations: dict[str, int] = field(default_factory=dict)

    def free(self) -> int:
        return self.total_cores - sum(self.allocations.values())


class Deferred:
    """Returned when zero cores are free."""


DEFERRED = Deferred()


def allocate_cores(job: Job, pool: ResourcePool, contenders: int = 1) -> int | Deferred:
    """Fair-share grant: free cores are split across the jobs currently
    contending (floor, at least 1 each), capped by the request. Zero free
    cores defers the job."""
    free = pool.free()
    if free <= 0:
        return DEFERRED
    share = max(1, free // max(1, contenders))
    grant = min(job.cores_requested, share)
    pool.allocations[job.job_id] = grant
    return grant


@dataclass
class JobState:
    job: Job
    status: JobStatus = JobStatus.PENDING
    history: list[JobStatus] = field(default_factory=lambda: [JobStatus.PENDING])
    deck: InputDeck | None = None
    deck_versions: list[str] = field(default_factory=list)
    corrections: list[guard_mod.Correction] = field(default_factory=list)
    recoveries: list[dict] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    attempts: int = 0                 # recovery attempts consumed
    pending_rules: tuple[str, ...] = ()
    confirmed_rules: set[str] = field(default_factory=set)
    validated: bool = False
    findings_emitted: bool = False
    ready_seq: int = 0
    abort_reason: str | None = None

    def transition(self, new: JobStatus) -> None:
        allowed = ALLOWED_TRANSITIONS[self.status] | (
            # upstream abandonment: a never-started job terminates directly
            {JobStatus.FAILED} if self.status == JobStatus.PENDING else set())
        if new not in allowed:
            raise ValueError(f"{self.job.job_id}: illegal transition "
                             f"{self.status.value} -> {new.value}")
        self.status = new
        self.history.append(new)


@dataclass
class RunRecord:
    run_id: str
    plan: Plan
    mode: str
    jobs: dict[str, JobState]
    events: list[ExecutionEvent] = field(default_factory=list)
    aborted: bool = False
    finished: bool = False
    started_at: float = 0.0
    finished_at: float = 0.0
    funnel_report: object = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    changed: threading.Condition = None  # type: ignore[assignment]

    def __post_init__(self):
        self.changed = threading.Condition(self.lock)

    def snapshot(self) -> dict:
        """Consistent point-in-time view of statuses and progress."""
        with self.lock:
            statuses = {jid: s.status.value for jid, s in self.jobs.items()}
            terminal = sum(1 for s in self.jobs.values()
                           if s.status in (JobStatus.SUCCEEDED, JobStatus.FAILED))
            outputs = {jid: dict(s.outputs) for jid, s in self.jobs.items()
                       if s.status == JobStatus.SUCCEEDED}
            pending_conf = {jid: list(s.pending_rules) for jid, s in self.jobs.items()
                            if s.pending_rules}
            return {
                "run_id": self.run_id,
                "statuses": statuses,
                "progress": terminal / max(1, len(self.jobs)),
                "outputs": outputs,
                "awaiting_confirmation": pending_conf,
                "aborted": self.aborted,
                "finished": self.finished,
            }

    def events_since(self, seq: int) -> list[ExecutionEvent]:
        with self.lock:
            return [e for e in self.events if e.seq > seq]


class ConfirmationChannel:
    """Decision source for physics-change corrections.

    ``decide`` returns True (accept), False (reject), or None (no decision
    yet; the job stays parked)."""

    def decide(self, run_id: str, job_id: str,
               rule_ids: tuple[str, ...]) -> bool | None:
        raise NotImplementedError


class ScriptedConfirmations(ConfirmationChannel):
    def __init__(self, decisions: dict[str, bool] | None = None,
                 default: bool | None = None):
        self.decisions = decisions or {}
        self.default = default

    def decide(self, run_id, job_id, rule_ids):
        votes = [self.decisions.get(r, self.default) for r in rule_ids]
        if any(v is None for v in votes):
            return None
        return all(votes)


class QueueConfirmations(ConfirmationChannel):
    """Service-facing channel: decisions arrive asynchronously per rule_id."""

    def __init__(self):
        self._decisions: dict[tuple[str, str], bool] = {}
        self._lock = threading.Lock()
        self._listeners: list[queue.Queue] = []

    def attach(self, wake: queue.Queue) -> None:
        with self._lock:
            self._listeners.append(wake)

    def post(self, run_id: str, rule_ids: list[str], accept: bool) -> None:
        with self._lock:
            for rid in rule_ids:
                self._decisions[(run_id, rid)] = accept
            listeners = list(self._listeners)
        for wake in listeners:
            wake.put(("confirmation", None))

    def decide(self, run_id, job_id, rule_ids):
        with self._lock:
            votes = [self._decisions.get((run_id, r)) for r in rule_ids]
        if any(v is None for v in votes):
            return None
        return all(votes)


def _new_run_id() -> str:
    return f"r{time.strftime('%Y%m%d%H%M%S')}-{uuid.uuid4().hex[:6]}"


class Executor:
    """Owns run execution. One Executor may serve many runs; each run gets its
    own scheduler invocation and record."""

    def __init__(self, db: StructDB, rules: list[guard_mod.ValidationRule],
                 adapters: dict | None = None,
                 pool_cores: int = 8,
                 runs_root: Path | str | None = None,
                 databases: dict[str, Path] | None = None,
                 retry_policy: guard_mod.RetryPolicy | None = None,
                 deck_builder=None):
        self.db = db
        self.rules = rules
        self.adapters = adapters or {}
        self.pool_cores = pool_cores
        self.runs_root = Path(runs_root) if runs_root else None
        self.databases = databases or {}
        self.retry_policy = retry_policy or guard_mod.RetryPolicy()
        self.deck_builder = deck_builder
        self.runs: dict[str, RunRecord] = {}

    # -- public API --------------------------------------------------------

    def run_plan(self, plan: Plan, mode: str = "model",
                 refs: ReferenceSettings | None = None,
                 evidence=None,
                 confirmations: ConfirmationChannel | None = None,
                 run_id: str | None = None) -> RunRecord:
        record = self.start_run(plan, mode, refs, evidence, confirmations, run_id)
        return self.wait(record)

    def start_run(self, plan: Plan, mode: str = "model",
                  refs: ReferenceSettings | None = None,
                  evidence=None,
                  confirmations: ConfirmationChannel | None = None,
                  run_id: str | None = None) -> RunRecord:
        record = RunRecord(
            run_id=run_id or _new_run_id(),
            plan=plan,
            mode=mode,
            jobs={j.job_id: JobState(job=j) for j in plan.all_jobs()},
        )
        self.runs[record.run_id] = record
        worker = threading.Thread(
            target=self._drive, name=f"run-{record.run_id}",
            args=(record, refs or ReferenceSettings(), evidence or [],
                  confirmations or ScriptedConfirmations(default=True)),
            daemon=True)
        record._thread = worker  # type: ignore[attr-defined]
        worker.start()
        return record

    def wait(self, record: RunRecord, timeout: float | None = None) -> RunRecord:
        record._thread.join(timeout)  # type: ignore[attr-defined]
        if record.aborted:
            raise RunAborted(f"run {record.run_id} aborted", record=record)
        return record

    def status_snapshot(self, run_id: str) -> dict:
        record = self.runs.get(run_id)
        if record is None:
            raise UnknownRun(run_id)
        return record.snapshot()

    # -- internals -----------------------------------------------------------

    def _emit(self, record: RunRecord, job_id: str, kind: EventKind,
              payload: dict) -> None:
        with record.lock:
            event = ExecutionEvent(
                seq=len(record.events) + 1,
                time=time.time(),
                job_id=job_id,
                kind=kind,
                payload=payload,
            )
            record.events.append(event)
            record.changed.notify_all()
        if self.runs_root is not None:
            path = self.runs_root / record.run_id / "events.log"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict()) + "\n")

    def _system_for(self, job: Job) -> tuple[dict, guard_mod.SystemContext]:
        structures: dict = {}
        sys_structs = []
        for sid in job.materials:
            rec = self.db.structures.get(sid) or self.db.molecules.get(sid)
            if rec is not None:
                structures[sid] = rec
                if sid in self.db.structures:
                    sys_structs.append(rec)
        guests = []
        guest = job.spec.get("guest")
        if guest:
            mol = self.db.molecules.get(guest)
            if mol is not None:
                structures[guest] = mol
                guests.append(mol)
        return structures, guard_mod.SystemContext(tuple(sys_structs), tuple(guests))

    def _build_deck(self, job: Job, refs: ReferenceSettings, evidence) -> InputDeck:
        if self.deck_builder is not None:
            return self.deck_builder(job)
        structures, _system = self._system_for(job)
        return generate_deck(job, structures, self.db.forcefields,
                             refs=refs, evidence=evidence)

    def _consistency_gate(self, job: Job) -> str | None:
        """No adapter runs against a structure that fails the chemical
        consistency check."""
        from .structdb import consistency_check

        guest = job.spec.get("guest")
        guest_rec = self.db.molecules.get(guest) if guest else None
        needs_charges = bool(guest_rec and guest_rec.requires_electrostatics
                             and job.tool in ("gcmc", "md"))
        for sid in job.materials:
            rec = self.db.structures.get(sid)
            if rec is None:
                continue  # molecules and synthetic test ids are not gated
            violations = consistency_check(rec, requires_electrostatics=needs_charges)
            if violations:
                return f"structure {sid} failed consistency check: {violations[0]}"
        return None

    def _drive(self, record: RunRecord, refs: ReferenceSettings, evidence,
               confirmations: ConfirmationChannel) -> None:
        try:
            self._drive_inner(record, refs, evidence, confirmations)
        except Exception as exc:  # scheduler must always leave a terminal record
            with record.lock:
                for state in record.jobs.values():
                    if state.status not in (JobStatus.SUCCEEDED, JobStatus.FAILED):
                        state.status = JobStatus.FAILED
                        state.history.append(JobStatus.FAILED)
                        state.abort_reason = f"scheduler error: {exc}"
                record.aborted = True
                record.finished = True
                record.finished_at = time.time()
                record.changed.notify_all()
            self._persist(record)

    def _drive_inner(self, record: RunRecord, refs: ReferenceSettings, evidence,
                     confirmations: ConfirmationChannel) -> None:
        record.started_at = time.time()
        wake: queue.Queue = queue.Queue()
        if isinstance(confirmations, QueueConfirmations):
            confirmations.attach(wake)
        pool = ResourcePool(total_cores=self.pool_cores)
        preds = job_predecessors(record.plan)
        ready_counter = 0

        for jid in sorted(record.jobs):
            self._emit(record, jid, EventKind.ENQUEUED,
                       {"tool": record.jobs[jid].job.tool})

        with ThreadPoolExecutor(max_workers=self.pool_cores) as tp:
            while True:
                progressed = True
                while progressed:
                    progressed = False
                    # promote Pending jobs whose predecessors all succeeded
                    for jid in sorted(record.jobs):
                        state = record.jobs[jid]
                        if state.status != JobStatus.PENDING:
                            continue
                        pred_states = [record.jobs[p].status for p in preds[jid]]
                        if all(s == JobStatus.SUCCEEDED for s in pred_states):
                            ready_counter += 1
                            with record.lock:
                                state.transition(JobStatus.READY)
                                state.ready_seq = ready_counter
                            progressed = True

                    # abandon jobs below a terminally failed predecessor
                    for jid in sorted(record.jobs):
                        state = record.jobs[jid]
                        if state.status != JobStatus.PENDING:
                            continue
                        if any(record.jobs[p].status == JobStatus.FAILED
                               for p in preds[jid]):
                            with record.lock:
                                state.transition(JobStatus.FAILED)
                                state.abort_reason = "upstream failure"
                            self._emit(record, jid, EventKind.ABORTED,
                                       {"reason": "upstream failure"})
                            record.aborted = True
                            progressed = True

                    # resolve parked confirmations
                    for jid in sorted(record.jobs):
                        state = record.jobs[jid]
                        if state.status != JobStatus.RECOVERING or not state.pending_rules:
                            continue
                        decision = confirmations.decide(record.run_id, jid,
                                                        state.pending_rules)
                        if decision is None:
                            continue
                        progressed = True
                        if decision:
                            state.confirmed_rules.update(state.pending_rules)
                            state.pending_rules = ()
                            with record.lock:
                                state.transition(JobStatus.READY)
                                ready_counter += 1
                                state.ready_seq = ready_counter
                        else:
                            state.pending_rules = ()
                            with record.lock:
                                state.transition(JobStatus.FAILED)
                                state.abort_reason = "user declined correction"
                            self._emit(record, jid, EventKind.ABORTED,
                                       {"reason": "user declined correction"})
                            record.aborted = True

                    # dispatch ready jobs in ready-order, id tie-break
                    ready = sorted(
                        (s for s in record.jobs.values()
                         if s.status == JobStatus.READY),
                        key=lambda s: (s.ready_seq, s.job.job_id))
                    for state in ready:
                        if not self._launch(record, state, pool, len(ready),
                                            refs, evidence, tp, wake):
                            break
                        progressed = True

                statuses = [s.status for s in record.jobs.values()]
                if all(s in (JobStatus.SUCCEEDED, JobStatus.FAILED)
                       for s in statuses):
                    break

                try:
                    kind, item = wake.get(timeout=0.05)
                except queue.Empty:
                    continue
                if kind == "done":
                    self._handle_completion(record, pool, *item)
                # confirmation wake-ups just re-enter the scheduling pass

        record.finished = True
        record.finished_at = time.time()
        with record.lock:
            record.changed.notify_all()
        self._persist(record)

    def _launch(self, record: RunRecord, state: JobState, pool: ResourcePool,
                contenders: int, refs, evidence, tp, wake) -> bool:
        job = state.job

        if job.tool == "report":
            return self._run_report(record, state, pool)

        # prepare (or reuse) the deck and pass it through the guard
        if state.deck is None:
            violation = self._consistency_gate(job)
            if violation:
                self._fail_unlaunched(record, state, violation)
                return True
            try:
                state.deck = self._build_deck(job, refs, evidence)
            except Exception as exc:
                self._fail_unlaunched(record, state, f"deck generation failed: {exc}")
                return True
            state.validated = False
            state.findings_emitted = False
        if not state.validated:
            system = self._system_for(job)[1]
            findings = guard_mod.validate_deck(state.deck, system, self.rules)
            if not state.findings_emitted:
                for finding, _correction in findings:
                    self._emit(record, job.job_id, EventKind.VALIDATION_FINDING,
                               {"rule_id": finding.rule_id,
                                "severity": finding.severity.value,
                                "finding": finding.text})
                state.findings_emitted = True
            outcome = guard_mod.apply_corrections(
                state.deck, [c for _, c in findings if c], state.confirmed_rules,
                system, self.rules)
            if isinstance(outcome, guard_mod.AwaitingConfirmation):
                state.deck = outcome.deck
                self._note_corrections(record, state, outcome.applied)
                state.pending_rules = outcome.rule_ids
                with record.lock:
                    state.transition(JobStatus.RECOVERING)
                self._emit(record, job.job_id, EventKind.CONFIRMATION_REQUESTED,
                           {"rule_ids": list(outcome.rule_ids)})
                return True
            state.deck = outcome.deck
            self._note_corrections(record, state, outcome.applied)
            state.validated = True
            fatal = [f for f in outcome.residual
                     if f.severity == guard_mod.Severity.FATAL]
            if fatal:
                self._fail_unlaunched(
                    record, state,
                    f"unfixable validation finding: {fatal[0].rule_id}")
                return True

        grant = allocate_cores(job, pool, contenders)
        if isinstance(grant, Deferred):
            return False
        with record.lock:
            state.transition(JobStatus.RUNNING)
        state.deck_versions.append(render_deck(state.deck))
        self._emit(record, job.job_id, EventKind.STARTED,
                   {"cores": grant, "attempt": state.attempts + 1})

        deck = state.deck
        workdir = (self.runs_root / record.run_id / job.job_id
                   if self.runs_root else None)

        def work():
            try:
                if job.tool == "screening":
                    result = self._run_screening(record, job, deck, workdir)
                else:
                    adapter = self.adapters.get(job.tool)
                    if adapter is None:
                        raise RuntimeError(f"no adapter for tool {job.tool!r}")
                    result = adapter(deck, job_id=job.job_id, workdir=workdir)
                wake.put(("done", (state, result, None)))
            except Exception as exc:  # reported through the completion path
                wake.put(("done", (state, None, exc)))

        tp.submit(work)
        return True

    def _run_report(self, record: RunRecord, state: JobState,
                    pool: ResourcePool) -> bool:
        job = state.job
        grant = allocate_cores(job, pool, 1)
        if isinstance(grant, Deferred):
            return False
        with record.lock:
            state.transition(JobStatus.RUNNING)
        self._emit(record, job.job_id, EventKind.STARTED,
                   {"cores": grant, "attempt": 1})
        succeeded = [s for s in record.jobs.values()
                     if s.status == JobStatus.SUCCEEDED]
        outputs = {"sources": (",".join(sorted(s.job.job_id for s in succeeded)), "")}
        log = (f"== mof-forge report adapter ==\ncollected {len(succeeded)} job "
               f"outputs\n{SUCCESS_MARKERS['report']}\n")
        if self.runs_root is not None:
            wd = self.runs_root / record.run_id / job.job_id
            wd.mkdir(parents=True, exist_ok=True)
            (wd / "log").write_text(log, encoding="utf-8")
        with record.lock:
            state.outputs = outputs
            state.transition(JobStatus.SUCCEEDED)
        pool.allocations.pop(job.job_id, None)
        self._emit(record, job.job_id, EventKind.FINISHED,
                   {"status": JobStatus.SUCCEEDED.value, "ok": True})
        return True

    def _run_screening(self, record: RunRecord, job: Job, deck: InputDeck,
                       workdir: Path | None):
        db_name = str(deck.get("database"))
        table_path = self.databases.get(db_name)
        if table_path is None:
            raise RuntimeError(f"no registered descriptor database {db_name!r}")
        table = screening_mod.load_descriptor_table(table_path)
        config = screening_mod.configure_funnel(
            str(deck.get("objective")), str(deck.get("downstream")),
            evidence=[], top_n=int(deck.get("top_n")))
        report = screening_mod.run_funnel(table, config)
        outputs = {
            "initial": (float(report.stages[0][1]), ""),
            "survivors": (float(len(report.survivors)), ""),
            "shortlist_size": (float(len(report.shortlist)), ""),
        }
        log_lines = [f"== mof-forge screening adapter ==",
                     f"database {db_name}"]
        for stage_id, n_in, n_out in report.stages:
            log_lines.append(f"stage {stage_id} {n_in} -> {n_out}")
        log_lines.append(SUCCESS_MARKERS["screening"])
        log = "\n".join(log_lines) + "\n"
        if workdir is not None:
            workdir.mkdir(parents=True, exist_ok=True)
            (workdir / "log").write_text(log, encoding="utf-8")
            (workdir / "funnel.json").write_text(
                json.dumps(screening_mod.report_to_dict(report), indent=2),
                encoding="utf-8")
        record.funnel_report = report  # type: ignore[attr-defined]
        from .toolkit import ToolRun
        return ToolRun(job_id=job.job_id, deck=deck, workdir=workdir, log=log,
                       outputs=outputs, exit="ok", duration=0.0)

    def _fail_unlaunched(self, record: RunRecord, state: JobState,
                         reason: str) -> None:
        with record.lock:
            if state.status == JobStatus.READY:
                state.transition(JobStatus.RECOVERING)
            state.transition(JobStatus.FAILED)
            state.abort_reason = reason
        self._emit(record, state.job.job_id, EventKind.ABORTED, {"reason": reason})
        record.aborted = True

    def _note_corrections(self, record: RunRecord, state: JobState,
                          applied) -> None:
        for corr in applied:
            state.corrections.append(corr)
            self._emit(record, state.job.job_id, EventKind.CORRECTION_APPLIED,
                       {"rule_id": corr.rule_id,
                        "key": corr.after[0],
                        "before": fmt_value(corr.before[1]) if corr.before[1] is not None else None,
                        "after": fmt_value(corr.after[1]),
                        "confirmed": corr.confirmed})

    def _handle_completion(self, record: RunRecord, pool: ResourcePool,
                           state: JobState, result, exc) -> None:
        job = state.job
        pool.allocations.pop(job.job_id, None)
        if exc is not None:
            log = f"FATAL ADAPTER ERROR: {exc}\n"
            outputs = {}
            ok = False
        else:
            log = result.log
            outputs = result.outputs
            verdict = guard_mod.inspect_log(log, job.tool)
            ok = isinstance(verdict, guard_mod.Success) and result.exit == "ok"

        if ok:
            with record.lock:
                state.outputs = outputs
                state.transition(JobStatus.SUCCEEDED)
            self._emit(record, job.job_id, EventKind.FINISHED,
                       {"status": JobStatus.SUCCEEDED.value, "ok": True})
            return

        with record.lock:
            state.transition(JobStatus.FAILED)
        self._emit(record, job.job_id, EventKind.FINISHED,
                   {"status": JobStatus.FAILED.value, "ok": False})

        diag = guard_mod.inspect_log(log, job.tool)
        if isinstance(diag, guard_mod.Success):
            diag = guard_mod.FailureDiagnosis(
                guard_mod.FailureCategory.UNKNOWN, "adapter reported failure",
                guard_mod.ProposedAction.RETRY)
        state.attempts += 1
        action = guard_mod.plan_recovery(diag, job, self.retry_policy,
                                         state.attempts, state.deck)
        if isinstance(action, guard_mod.Abort):
            state.abort_reason = action.reason
            record.aborted = True
            self._emit(record, job.job_id, EventKind.ABORTED,
                       {"reason": action.reason})
            return

        state.recoveries.append({
            "attempt": state.attempts,
            "category": diag.category.value,
            "action": action.kind.value,
            "updates": [[k, fmt_value(v)] for k, v in action.deck_updates],
        })
        self._emit(record, job.job_id, EventKind.RECOVERY_SCHEDULED,
                   {"attempt": state.attempts,
                    "category": diag.category.value,
                    "action": action.kind.value})
        if action.kind == guard_mod.ProposedAction.FIX_INPUT:
            state.deck = None  # regenerate from the job spec next launch
            state.validated = False
            state.findings_emitted = False
        elif action.deck_updates and state.deck is not None:
            deck = state.deck
            for key, value in action.deck_updates:
                deck = deck.set(key, value, "correction")
            state.deck = deck
        with record.lock:
            state.transition(JobStatus.RECOVERING)
            state.transition(JobStatus.READY)
            state.ready_seq = max(s.ready_seq for s in record.jobs.values()) + 1

    def _persist(self, record: RunRecord) -> None:
        if self.runs_root is None:
            return
        path = self.runs_root / record.run_id / "record.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record_to_dict(record), indent=2),
                        encoding="utf-8")


def record_from_dict(data: dict) -> RunRecord:
    """Rebuild a persisted run record; reports generated from the result are
    identical to those of the live record."""
    from .planner import plan_from_dict

    plan = plan_from_dict(data["plan"])
    jobs: dict[str, JobState] = {}
    for job in plan.all_jobs():
        raw = data["jobs"][job.job_id]
        state = JobState(job=job)
        state.status = JobStatus(raw["status"])
        state.history = [JobStatus(h) for h in raw["history"]]
        state.outputs = {m: (v, u) for m, (v, u) in raw["outputs"].items()}
        state.attempts = raw.get("attempts", 0)
        state.abort_reason = raw.get("abort_reason")
        state.deck_versions = raw.get("deck_versions", [])
        state.corrections = [
            guard_mod.Correction(
                rule_id=c["rule_id"],
                before=(c["key"], c["before"]),
                after=(c["key"], c["after"]),
                confirmed=c["confirmed"],
                applied_at=c.get("applied_at"),
            )
            for c in raw.get("corrections", [])
        ]
        state.recoveries = [
            {k: v for k, v in r.items() if k != "job_id"}
            for r in raw.get("recoveries", [])
        ]
        jobs[job.job_id] = state
    record = RunRecord(
        run_id=data["run_id"], plan=plan, mode=data["mode"], jobs=jobs,
        aborted=data["aborted"], finished=data["finished"],
        started_at=data.get("started_at", 0.0),
        finished_at=data.get("finished_at", 0.0),
    )
    record.events = [
        ExecutionEvent(seq=e["seq"], time=e["time"], job_id=e["job_id"],
                       kind=EventKind(e["kind"]), payload=e["payload"])
        for e in data.get("events", [])
    ]
    return record


def record_to_dict(record: RunRecord) -> dict:
    return {
        "run_id": record.run_id,
        "mode": record.mode,
        "aborted": record.aborted,
        "finished": record.finished,
        "started_at": record.started_at,
        "finished_at": record.finished_at,
        "plan": plan_to_dict(record.plan),
        "jobs": {
            jid: {
                "status": s.status.value,
                "history": [h.value for h in s.history],
                "outputs": {m: [v, u] for m, (v, u) in s.outputs.items()},
                "attempts": s.attempts,
                "abort_reason": s.abort_reason,
                "deck_versions": s.deck_versions,
                "corrections": [
                    {"rule_id": c.rule_id,
                     "key": c.after[0],
                     "before": fmt_value(c.before[1]) if c.before[1] is not None else None,
                     "after": fmt_value(c.after[1]),
                     "confirmed": c.confirmed,
                     "applied_at": c.applied_at}
                    for c in s.corrections
                ],
                "recoveries": s.recoveries,
            }
            for jid, s in record.jobs.items()
        },
        "events": [e.to_dict() for e in record.events],
    }
