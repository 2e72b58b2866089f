import random
import time

import pytest

from mof_forge.errors import RunAborted
from mof_forge.executor import (Deferred, EventKind, Executor,
                                QueueConfirmations, ResourcePool,
                                ScriptedConfirmations, allocate_cores,
                                record_from_dict, record_to_dict)
from mof_forge.inputgen import InputDeck
from mof_forge.planner import (ALLOWED_TRANSITIONS, Job, JobStatus, Plan,
                               PlanUnit, job_predecessors)
from mof_forge.toolkit import SUCCESS_MARKERS, ToolRun, build_adapter


# --- scaffolding: synthetic plans driven by stub adapters -------------------------------

def stub_deck(job):
    # keyword-file rendering; the job's tool still routes adapter and marker
    return InputDeck(tool="stub", task=job.task,
                     sections=[("task", job.task)],
                     provenance={"task": "default"})


def ok_adapter(deck, job_id="", workdir=None):
    log = f"stub run\n{SUCCESS_MARKERS['geometry']}\n"
    return ToolRun(job_id=job_id, deck=deck, workdir=workdir, log=log,
                   outputs={"value": (1.0, "")}, exit="ok", duration=0.0)


def failing_adapter(deck, job_id="", workdir=None):
    return ToolRun(job_id=job_id, deck=deck, workdir=workdir,
                   log="boom\nSEGMENTATION FAULT\n", outputs={},
                   exit="failed", duration=0.0)


def synthetic_plan(nodes, edges, cores=None):
    jobs = [Job(job_id=n, tool="geometry", task="stub",
                cores_requested=(cores or {}).get(n, 1)) for n in nodes]
    return Plan(plan_id="p", units=[PlanUnit("u01", jobs, list(edges))])


def stub_executor(db, adapter=ok_adapter, pool=8, runs_root=None):
    return Executor(db=db, rules=[], adapters={"geometry": adapter},
                    pool_cores=pool, runs_root=runs_root,
                    deck_builder=stub_deck)


# --- allocate_cores ----------------------------------------------------------------------

def job_requesting(n):
    return Job(job_id="j", tool="dft", task="t", cores_requested=n)


def test_allocation_grants_request_when_free():
    pool = ResourcePool(total_cores=8)
    assert allocate_cores(job_requesting(4), pool) == 4


def test_allocation_defers_when_full():
    pool = ResourcePool(total_cores=8, allocations={"x": 8})
    assert isinstance(allocate_cores(job_requesting(1), pool), Deferred)


def test_allocation_caps_to_free_cores():
    pool = ResourcePool(total_cores=8, allocations={"x": 6})
    assert allocate_cores(job_requesting(4), pool) == 2


def test_fair_share_trace_of_mixed_requests():
    # hand-simulated: five ready jobs, requests [1, 1, 8, 8, 2] on 8 cores
    pool = ResourcePool(total_cores=8)
    requests = {"a": 1, "b": 1, "c": 8, "d": 8, "e": 2}
    grants = {}
    ready = sorted(requests)
    for i, name in enumerate(ready):
        job = Job(job_id=name, tool="dft", task="t",
                  cores_requested=requests[name])
        grant = allocate_cores(job, pool, contenders=len(ready) - i)
        grants[name] = grant
    assert grants == {"a": 1, "b": 1, "c": 2, "d": 2, "e": 2}
    assert sum(pool.allocations.values()) <= 8


# --- basic runs -------------------------------------------------------------------------------

def test_linear_plan_runs_in_dependency_order(db):
    plan = synthetic_plan(["a", "b", "c"], [("a", "b"), ("b", "c")])
    record = stub_executor(db).run_plan(plan)
    assert all(s.status == JobStatus.SUCCEEDED for s in record.jobs.values())
    started = {e.job_id: e.seq for e in record.events
               if e.kind == EventKind.STARTED}
    finished = {e.job_id: e.seq for e in record.events
                if e.kind == EventKind.FINISHED}
    assert started["b"] > finished["a"]
    assert started["c"] > finished["b"]


def test_event_sequence_is_gapless(db):
    plan = synthetic_plan(["a", "b"], [("a", "b")])
    record = stub_executor(db).run_plan(plan)
    seqs = [e.seq for e in record.events]
    assert seqs == list(range(1, len(seqs) + 1))


def test_outputs_and_statuses_deterministic(db):
    plan = synthetic_plan([f"j{i}" for i in range(10)],
                          [(f"j{i}", f"j{i+2}") for i in range(8)])
    runs = [stub_executor(db).run_plan(plan) for _ in range(2)]
    summaries = [
        {jid: (s.status.value, tuple(sorted(s.outputs)))
         for jid, s in r.jobs.items()}
        for r in runs
    ]
    assert summaries[0] == summaries[1]


def test_always_failing_job_exhausts_recovery_then_aborts(db):
    plan = synthetic_plan(["a"], [])
    executor = stub_executor(db, adapter=failing_adapter)
    with pytest.raises(RunAborted) as excinfo:
        executor.run_plan(plan)
    record = excinfo.value.record
    recoveries = [e for e in record.events
                  if e.kind == EventKind.RECOVERY_SCHEDULED]
    assert len(recoveries) == 3
    aborted = [e for e in record.events if e.kind == EventKind.ABORTED]
    assert len(aborted) == 1
    assert record.jobs["a"].status == JobStatus.FAILED
    assert record.jobs["a"].attempts == 4


def test_downstream_jobs_abandoned_after_abort(db):
    plan = synthetic_plan(["a", "b"], [("a", "b")])
    executor = stub_executor(db, adapter=failing_adapter)
    with pytest.raises(RunAborted) as excinfo:
        executor.run_plan(plan)
    record = excinfo.value.record
    assert record.jobs["b"].status == JobStatus.FAILED
    assert record.jobs["b"].abort_reason == "upstream failure"
    started = [e for e in record.events
               if e.kind == EventKind.STARTED and e.job_id == "b"]
    assert started == []


def test_status_histories_follow_transition_diagram(db):
    plan = synthetic_plan(["a", "b", "c"], [("a", "c"), ("b", "c")])
    record = stub_executor(db).run_plan(plan)
    allowed = {k: v | ({JobStatus.FAILED} if k == JobStatus.PENDING else set())
               for k, v in ALLOWED_TRANSITIONS.items()}
    for state in record.jobs.values():
        for prev, nxt in zip(state.history, state.history[1:]):
            assert nxt in allowed[prev], state.history


# --- pool invariant & randomized DAG suite ---------------------------------------------------

def replay_pool_usage(record, total_cores):
    """Replay the event log; the sum of granted cores never exceeds the pool
    at any prefix."""
    in_flight = {}
    for event in record.events:
        if event.kind == EventKind.STARTED:
            in_flight[event.job_id] = event.payload["cores"]
            assert sum(in_flight.values()) <= total_cores, event.seq
        elif event.kind == EventKind.FINISHED:
            in_flight.pop(event.job_id, None)


def check_dependency_safety(record):
    preds = job_predecessors(record.plan)
    finished_ok = {}
    for event in record.events:
        if event.kind == EventKind.FINISHED and event.payload.get("ok"):
            finished_ok.setdefault(event.job_id, event.seq)
    for event in record.events:
        if event.kind != EventKind.STARTED:
            continue
        for pred in preds[event.job_id]:
            assert pred in finished_ok
            assert finished_ok[pred] < event.seq


def random_dag(rng, max_jobs=50):
    n = rng.randint(2, max_jobs)
    nodes = [f"j{i:02d}" for i in range(n)]
    edges = [(nodes[i], nodes[j])
             for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.08]
    cores = {node: rng.randint(1, 8) for node in nodes}
    return synthetic_plan(nodes, edges, cores)


def test_randomized_dag_suite_small(db):
    rng = random.Random(1234)
    executor = stub_executor(db, pool=8)
    for _ in range(15):
        plan = random_dag(rng, max_jobs=25)
        record = executor.run_plan(plan)
        assert all(s.status == JobStatus.SUCCEEDED
                   for s in record.jobs.values())
        replay_pool_usage(record, 8)
        check_dependency_safety(record)


# --- confirmations ----------------------------------------------------------------------------

@pytest.fixture()
def real_executor(db, rules, replay, tmp_path):
    adapter = build_adapter("replay", replay, db)
    return Executor(db=db, rules=rules,
                    adapters={t: adapter for t in
                              ("geometry", "gcmc", "md", "dft", "mlip")},
                    pool_cores=8, runs_root=tmp_path / "runs")


def md_plan(db):
    from mof_forge.intent import (Intent, MaterialKind, MaterialRef,
                                  ReferenceSettings, TaskKind)
    from mof_forge.planner import build_plan
    intent = Intent(
        task_kind=TaskKind.DIFFUSION_COEFFICIENT,
        materials=[MaterialRef("UiO-66", MaterialKind.COMMON_NAME, "RUBTAK")],
        guests=["CO2"],
        reference_settings=ReferenceSettings(
            entries={"pair_style": "lj/cut", "cutoff": 12.0}),
    )
    return intent, build_plan(intent)


def test_confirmation_parks_until_accepted(real_executor, db):
    intent, plan = md_plan(db)
    channel = QueueConfirmations()
    record = real_executor.start_run(plan, mode="replay",
                                     refs=intent.reference_settings,
                                     confirmations=channel)
    deadline = time.monotonic() + 5
    while time.monotonic() < deadline:
        snap = record.snapshot()
        if snap["awaiting_confirmation"]:
            break
        time.sleep(0.01)
    snap = record.snapshot()
    assert snap["awaiting_confirmation"] == {"u01.md": ["md-electrostatics"]}
    assert not record.finished
    channel.post(record.run_id, ["md-electrostatics"], True)
    real_executor.wait(record, timeout=5)
    assert record.finished and not record.aborted
    md_state = record.jobs["u01.md"]
    assert md_state.status == JobStatus.SUCCEEDED
    assert md_state.deck.get("pair_style") == "lj/cut/coul/long 12.0"
    confirmed = [c for c in md_state.corrections if c.confirmed]
    assert [c.rule_id for c in confirmed] == ["md-electrostatics"]
    kinds = [e.kind for e in record.events if e.job_id == "u01.md"]
    assert EventKind.CONFIRMATION_REQUESTED in kinds


def test_declined_confirmation_aborts_job(real_executor, db):
    intent, plan = md_plan(db)
    channel = ScriptedConfirmations({"md-electrostatics": False})
    with pytest.raises(RunAborted) as excinfo:
        real_executor.run_plan(plan, mode="replay",
                               refs=intent.reference_settings,
                               confirmations=channel)
    record = excinfo.value.record
    assert record.jobs["u01.md"].status == JobStatus.FAILED
    assert record.jobs["u01.md"].abort_reason == "user declined correction"


def test_two_material_optimizations_overlap_on_shared_pool(real_executor, db):
    # both materials' host/guest optimizations must run concurrently even
    # though each dft job requests the whole 8-core pool
    from mof_forge.intent import Intent, MaterialKind, MaterialRef, TaskKind
    from mof_forge.planner import build_plan
    intent = Intent(
        task_kind=TaskKind.BINDING_ENERGY,
        materials=[MaterialRef("HKUST-1", MaterialKind.COMMON_NAME, "FIQCEN"),
                   MaterialRef("ZIF-8", MaterialKind.COMMON_NAME, "VELVOY")],
        guests=["CO2"],
    )
    record = real_executor.run_plan(build_plan(intent), mode="replay")
    intervals = {}
    for event in record.events:
        if event.kind == EventKind.STARTED:
            intervals.setdefault(event.job_id, [event.seq, None])
        elif event.kind == EventKind.FINISHED:
            if event.job_id in intervals:
                intervals[event.job_id][1] = event.seq
    opts = {jid: span for jid, span in intervals.items() if "-opt-" in jid
            or "host-opt" in jid or "guest-opt" in jid}
    fiq = [span for jid, span in opts.items()
           if "FIQCEN" in jid and "opt" in jid]
    vel = [span for jid, span in opts.items()
           if "VELVOY" in jid and "opt" in jid]
    overlapping = any(
        a[0] < b[1] and b[0] < a[1] for a in fiq for b in vel)
    assert overlapping, (fiq, vel)


def test_confirmation_does_not_block_independent_branch(db, rules, replay,
                                                        tmp_path):
    # one md job that parks + one independent geometry job that must finish
    adapter = build_adapter("replay", replay, db)
    executor = Executor(db=db, rules=rules,
                        adapters={t: adapter for t in ("geometry", "md")},
                        pool_cores=8, runs_root=tmp_path / "runs")
    from mof_forge.intent import ReferenceSettings
    md = Job(job_id="u01.md", tool="md", task="diffusion_coefficient",
             spec={"guest": "CO2", "temperature_K": 298.0, "timestep_fs": 1.0,
                   "steps": 100000, "ensemble": "nvt", "cutoff_A": 12.0},
             spec_sources={}, materials=["RUBTAK"], cores_requested=4)
    geo = Job(job_id="u01.geometry", tool="geometry", task="surface_area",
              spec={"probe_radius_A": 1.2, "samples": 2000},
              spec_sources={}, materials=["RUBTAK"], cores_requested=1)
    plan = Plan(plan_id="p", units=[PlanUnit("u01", [md, geo], [])])
    channel = QueueConfirmations()
    refs = ReferenceSettings(entries={"pair_style": "lj/cut", "cutoff": 12.0})
    record = executor.start_run(plan, mode="replay", refs=refs,
                                confirmations=channel)
    deadline = time.monotonic() + 5
    while time.monotonic() < deadline:
        snap = record.snapshot()
        if snap["statuses"]["u01.geometry"] == "Succeeded" and \
                snap["awaiting_confirmation"]:
            break
        time.sleep(0.01)
    snap = record.snapshot()
    assert snap["statuses"]["u01.geometry"] == "Succeeded"
    assert snap["statuses"]["u01.md"] == "Recovering"
    channel.post(record.run_id, ["md-electrostatics"], True)
    executor.wait(record, timeout=5)


# --- snapshots & persistence --------------------------------------------------------------------

def test_snapshot_never_shows_succeeded_without_outputs(db):
    plan = random_dag(random.Random(7), max_jobs=20)
    executor = stub_executor(db)
    record = executor.start_run(plan)
    for _ in range(200):
        snap = record.snapshot()
        for jid, status in snap["statuses"].items():
            if status == "Succeeded":
                assert jid in snap["outputs"]
        if record.finished:
            break
        time.sleep(0.001)
    executor.wait(record, timeout=10)


def test_inconsistent_structure_never_reaches_an_adapter(db, rules, replay,
                                                         tmp_path):
    # corrupt a copied fixture db: two overlapping atoms in RUBTAK
    import copy
    bad_db = copy.deepcopy(db)
    rec = bad_db.structures["RUBTAK"]
    rec.atoms[1] = type(rec.atoms[0])(
        element=rec.atoms[0].element, x=rec.atoms[0].x, y=rec.atoms[0].y,
        z=rec.atoms[0].z, charge=0.0)
    calls = []

    def tracking_adapter(deck, job_id="", workdir=None):
        calls.append(job_id)
        return ok_adapter(deck, job_id, workdir)

    executor = Executor(db=bad_db, rules=rules,
                        adapters={"geometry": tracking_adapter},
                        pool_cores=4, runs_root=tmp_path / "runs")
    geo = Job(job_id="u01.geometry", tool="geometry", task="surface_area",
              spec={"probe_radius_A": 1.2, "samples": 2000},
              spec_sources={}, materials=["RUBTAK"])
    plan = Plan(plan_id="p", units=[PlanUnit("u01", [geo], [])])
    with pytest.raises(RunAborted) as excinfo:
        executor.run_plan(plan, mode="replay")
    record = excinfo.value.record
    assert calls == []  # the adapter never ran
    assert "consistency check" in record.jobs["u01.geometry"].abort_reason


def test_executed_jobs_structures_always_pass_consistency(service):
    from mof_forge.structdb import consistency_check
    payload = service.submit_query("cons-1", "surface area of UiO-66")
    record = service.executor.runs[payload["run_id"]]
    for state in record.jobs.values():
        if state.status != JobStatus.SUCCEEDED:
            continue
        for sid in state.job.materials:
            rec = service.db.structures.get(sid)
            if rec is not None:
                assert consistency_check(rec) == []


def test_external_process_adapter_round_trip(db, tmp_path):
    from mof_forge.toolkit import external_process_adapter
    script = tmp_path / "fake-engine.sh"
    script.write_text("#!/bin/sh\nprintf 'surface_area\\t1234.5\\tm2/g\\n'\n")
    script.chmod(0o755)
    adapter = external_process_adapter([str(script)])
    from mof_forge.inputgen import generate_deck
    job = Job(job_id="u01.geometry", tool="geometry", task="surface_area",
              spec={"probe_radius_A": 1.2, "samples": 2000},
              spec_sources={}, materials=["RUBTAK"])
    deck = generate_deck(job, {"RUBTAK": db.structures["RUBTAK"]},
                         db.forcefields)
    run = adapter(deck, job_id="u01.geometry", workdir=tmp_path / "wd")
    assert run.exit == "ok"
    assert run.outputs == {"surface_area": (1234.5, "m2/g")}
    assert (tmp_path / "wd" / "deck").read_text().startswith("network -ha -sa")
    from mof_forge.guard import Success, inspect_log
    assert isinstance(inspect_log(run.log, "geometry"), Success)


def test_external_process_adapter_failure_is_visible(db, tmp_path):
    from mof_forge.toolkit import external_process_adapter
    script = tmp_path / "broken-engine.sh"
    script.write_text("#!/bin/sh\nexit 3\n")
    script.chmod(0o755)
    adapter = external_process_adapter([str(script)])
    run = adapter(stub_deck(Job(job_id="j", tool="gcmc", task="t")))
    assert run.exit == "failed"
    assert "exit 3" in run.log


def test_record_round_trips_through_persistence(db, tmp_path):
    plan = synthetic_plan(["a", "b"], [("a", "b")])
    executor = stub_executor(db, runs_root=tmp_path)
    record = executor.run_plan(plan)
    data = record_to_dict(record)
    again = record_from_dict(data)
    assert record_to_dict(again) == data
    # the incremental event log matches the persisted record
    lines = (tmp_path / record.run_id / "events.log").read_text().splitlines()
    assert len(lines) == len(record.events)
