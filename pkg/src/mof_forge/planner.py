"""Expand intents into executable plans: plan units, jobs, dependency edges.

A plan is a two-level DAG. Units group jobs; an edge between units means
all-to-all dependencies between their member jobs, and ``intra_edges`` order
jobs inside a unit. Jobs with no path between them may run in parallel.
Plans are immutable after construction; all tie-breaking is lexicographic on
job_id so results are reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import CycleDetected, NoTemplate, UnresolvedMaterial
from .intent import Intent, TaskKind
from .templates import CORE_DEFAULTS, DEFAULTS, TEMPLATES, DefaultTable


class JobStatus(str, Enum):
    PENDING = "Pending"
    READY = "Ready"
    RUNNING = "Running"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"
    RECOVERING = "Recovering"


# Pending->Ready->Running->{Succeeded,Failed}; Failed->Recovering->Ready is the
# bounded recovery loop; Ready->Recovering parks a job awaiting confirmation,
# and a declined confirmation moves Recovering->Failed.
ALLOWED_TRANSITIONS: dict[JobStatus, set[JobStatus]] = {
    JobStatus.PENDING: {JobStatus.READY},
    JobStatus.READY: {JobStatus.RUNNING, JobStatus.RECOVERING},
    JobStatus.RUNNING: {JobStatus.SUCCEEDED, JobStatus.FAILED},
    JobStatus.FAILED: {JobStatus.RECOVERING},
    JobStatus.RECOVERING: {JobStatus.READY, JobStatus.FAILED},
    JobStatus.SUCCEEDED: set(),
}

TERMINAL = {JobStatus.SUCCEEDED, JobStatus.FAILED}


@dataclass
class Job:
    job_id: str
    tool: str
    task: str
    spec: dict = field(default_factory=dict)
    spec_sources: dict = field(default_factory=dict)  # param -> intent|default
    materials: list[str] = field(default_factory=list)
    target: str = "material"
    cores_requested: int = 1
    status: JobStatus = JobStatus.PENDING
    outputs: dict = field(default_factory=dict)


@dataclass
class PlanUnit:
    unit_id: str
    jobs: list[Job]
    intra_edges: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class Plan:
    plan_id: str
    units: list[PlanUnit]
    edges: list[tuple[str, str]] = field(default_factory=list)
    applied_defaults: list[tuple[str, object, str]] = field(default_factory=list)

    def all_jobs(self) -> list[Job]:
        return [j for u in self.units for j in u.jobs]

    def job(self, job_id: str) -> Job:
        for j in self.all_jobs():
            if j.job_id == job_id:
                return j
        raise KeyError(job_id)

    def unit(self, unit_id: str) -> PlanUnit:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(unit_id)


def job_predecessors(plan: Plan) -> dict[str, set[str]]:
    """Expand unit edges (all-to-all) plus intra edges into a job-level
    predecessor map covering every job."""
    preds: dict[str, set[str]] = {j.job_id: set() for j in plan.all_jobs()}
    for unit in plan.units:
        for a, b in unit.intra_edges:
            preds[b].add(a)
    unit_jobs = {u.unit_id: [j.job_id for j in u.jobs] for u in plan.units}
    for from_unit, to_unit in plan.edges:
        for b in unit_jobs[to_unit]:
            preds[b].update(unit_jobs[from_unit])
    return preds


def ready_jobs(plan: Plan, statuses: dict[str, JobStatus]) -> list[Job]:
    """Pending jobs whose every predecessor is Succeeded, ordered by job_id."""
    preds = job_predecessors(plan)
    out = []
    for job in plan.all_jobs():
        if statuses[job.job_id] != JobStatus.PENDING:
            continue
        if all(statuses[p] == JobStatus.SUCCEEDED for p in preds[job.job_id]):
            out.append(job)
    return sorted(out, key=lambda j: j.job_id)


def topological_order(plan: Plan) -> list[Job]:
    """Kahn's algorithm with ties broken by job_id; raises CycleDetected with
    the offending cycle."""
    import heapq

    preds = job_predecessors(plan)
    succs: dict[str, set[str]] = {jid: set() for jid in preds}
    indegree: dict[str, int] = {}
    for jid, ps in preds.items():
        indegree[jid] = len(ps)
        for p in ps:
            succs[p].add(jid)
    heap = [jid for jid, deg in indegree.items() if deg == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        jid = heapq.heappop(heap)
        order.append(jid)
        for nxt in succs[jid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(heap, nxt)
    if len(order) != len(preds):
        raise CycleDetected(_find_cycle(preds))
    jobs = {j.job_id: j for j in plan.all_jobs()}
    return [jobs[jid] for jid in order]


def _find_cycle(preds: dict[str, set[str]]) -> list[str]:
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        state[node] = 1
        stack.append(node)
        for p in sorted(preds.get(node, ())):
            if state.get(p) == 1:
                return stack[stack.index(p):] + [p]
            if state.get(p, 0) == 0:
                found = visit(p)
                if found:
                    return found
        state[node] = 2
        stack.pop()
        return None

    for node in sorted(preds):
        if state.get(node, 0) == 0:
            found = visit(node)
            if found:
                return found
    return []


def validate_plan(plan: Plan) -> None:
    """Enforce plan invariants: acyclic, every job reachable, exactly one
    terminal report unit depending (transitively) on all compute jobs."""
    order = topological_order(plan)  # raises on cycles
    assert len(order) == len(plan.all_jobs())
    report_units = [u for u in plan.units if any(j.tool == "report" for j in u.jobs)]
    if len(report_units) != 1:
        raise ValueError(f"expected exactly one report unit, found {len(report_units)}")
    report_unit = report_units[0]
    ancestors = _transitive_predecessors(plan, report_unit)
    compute = {j.job_id for j in plan.all_jobs() if j.tool != "report"}
    missing = compute - ancestors
    if missing:
        raise ValueError(f"report unit does not depend on: {sorted(missing)}")


def _transitive_predecessors(plan: Plan, unit: PlanUnit) -> set[str]:
    preds = job_predecessors(plan)
    seen: set[str] = set()
    frontier = [jid for j in unit.jobs for jid in preds[j.job_id]]
    while frontier:
        jid = frontier.pop()
        if jid in seen:
            continue
        seen.add(jid)
        frontier.extend(preds[jid])
    return seen


def _plan_id(intent: Intent) -> str:
    basis = json.dumps({
        "task": intent.task_kind.value,
        "materials": sorted(m.resolved_id or m.raw_text for m in intent.materials),
        "guests": intent.guests,
        "conditions": {k: v.value for k, v in sorted(intent.conditions.items())},
        "scope": intent.database_scope,
        "analysis": intent.analysis_requested,
    }, sort_keys=True)
    return "plan-" + hashlib.sha256(basis.encode()).hexdigest()[:8]


class _PlanBuilder:
    def __init__(self, intent: Intent, defaults: DefaultTable):
        self.intent = intent
        self.defaults = defaults
        self.units: list[PlanUnit] = []
        self.edges: list[tuple[str, str]] = []
        self.applied: dict[str, tuple[object, str]] = {}

    def next_unit_id(self) -> str:
        return f"u{len(self.units) + 1:02d}"

    def resolve_param(self, task: str, param: str) -> tuple[object, str] | None:
        """Value plus provenance source for one job parameter."""
        intent = self.intent
        if param == "guest":
            if intent.guests:
                return intent.guests[0], "intent"
            return None
        if param in intent.conditions:
            return intent.conditions[param].value, "intent"
        refs = intent.reference_settings
        if refs:
            ref_map = {"temperature_K": "temperature", "pressure_Pa": "pressure",
                       "timestep_fs": "timestep", "ensemble": "ensemble",
                       "cutoff_A": "cutoff"}
            ref_key = ref_map.get(param)
            if ref_key and ref_key in refs.entries:
                return refs.entries[ref_key], "reference_settings"
        if param == "objective" and intent.guests:
            return f"{intent.guests[0].lower()}-uptake", "intent"
        entry = self.defaults.get(task, param)
        if entry is not None:
            value, _unit = entry
            self.applied.setdefault(param, (value, "default-table"))
            return value, "default"
        return None

    def make_job(self, unit_id: str, tmpl, material_id: str | None,
                 suffix: str = "") -> Job:
        role = tmpl.role + (f"-{suffix}" if suffix else "")
        spec: dict = {}
        sources: dict = {}
        for param in tmpl.params:
            resolved = self.resolve_param(tmpl.task, param)
            if resolved is not None:
                spec[param], sources[param] = resolved
        if tmpl.target == "guest":
            materials = [self.intent.guests[0]] if self.intent.guests else []
        else:
            materials = [material_id] if material_id else []
        return Job(
            job_id=f"{unit_id}.{role}",
            tool=tmpl.tool,
            task=tmpl.task,
            spec=spec,
            spec_sources=sources,
            materials=materials,
            target=tmpl.target,
            cores_requested=CORE_DEFAULTS.get(tmpl.tool, 1),
        )

    def add_unit(self, templates, edges, material_id: str | None,
                 suffix: str = "") -> PlanUnit:
        unit_id = self.next_unit_id()
        jobs = [self.make_job(unit_id, t, material_id, suffix) for t in templates]
        sfx = f"-{suffix}" if suffix else ""
        intra = [(f"{unit_id}.{a}{sfx}", f"{unit_id}.{b}{sfx}") for a, b in edges]
        unit = PlanUnit(unit_id=unit_id, jobs=jobs, intra_edges=intra)
        self.units.append(unit)
        return unit


def build_plan(intent: Intent, defaults: DefaultTable = DEFAULTS,
               templates: dict[TaskKind, object] = TEMPLATES,
               screening_shortlist: list[str] | None = None) -> Plan:
    """Expand a fully specified intent into a plan.

    For screening intents, ``screening_shortlist`` enumerates the structures
    to fan detailed gcmc jobs over (the service computes it from the funnel;
    see ``screening.run_funnel``).
    """
    template = templates.get(intent.task_kind)
    if template is None:
        raise NoTemplate(f"no plan template for task {intent.task_kind.value!r}")

    material_ids: list[str] = []
    if intent.task_kind != TaskKind.SCREENING:
        for ref in intent.materials:
            if ref.resolved_id is None:
                raise UnresolvedMaterial(f"material {ref.raw_text!r} is not resolved")
            material_ids.append(ref.resolved_id)
        if not material_ids:
            raise UnresolvedMaterial("intent names no resolvable material")

    builder = _PlanBuilder(intent, defaults)

    if intent.task_kind == TaskKind.SCREENING:
        screen_unit = builder.add_unit(template.jobs, template.edges, None)
        screen_job = screen_unit.jobs[0]
        screen_job.spec["database"] = intent.database_scope
        screen_job.spec_sources["database"] = "intent"
        fan_unit_id = builder.next_unit_id()
        fan_jobs = []
        eval_top = int(screen_job.spec.get("eval_top", 10))
        guest = intent.guests[0] if intent.guests else "CH4"
        for sid in (screening_shortlist or [])[:eval_top]:
            job = Job(
                job_id=f"{fan_unit_id}.gcmc-{sid}",
                tool="gcmc",
                task="gcmc_uptake",
                spec={"guest": guest},
                spec_sources={"guest": "intent"},
                materials=[sid],
                cores_requested=CORE_DEFAULTS["gcmc"],
            )
            for param in ("temperature_K", "pressure_Pa", "cycles_init",
                          "cycles_prod", "cutoff_A"):
                resolved = builder.resolve_param("gcmc_uptake", param)
                if resolved is not None:
                    job.spec[param], job.spec_sources[param] = resolved
            fan_jobs.append(job)
        if fan_jobs:
            builder.units.append(PlanUnit(unit_id=fan_unit_id, jobs=fan_jobs))
            builder.edges.append((screen_unit.unit_id, fan_unit_id))
        material_units = [builder.units[-1]]
    else:
        material_units = []
        multi = len(material_ids) > 1
        for sid in material_ids:
            unit = builder.add_unit(template.jobs, template.edges, sid,
                                    suffix=sid if multi else "")
            material_units.append(unit)
            if intent.analysis_requested and template.analysis_jobs:
                analysis = builder.add_unit(template.analysis_jobs,
                                            template.analysis_edges, sid,
                                            suffix=sid if multi else "")
                builder.edges.append((unit.unit_id, analysis.unit_id))
                material_units.append(analysis)

    report_unit_id = builder.next_unit_id()
    report_job = Job(
        job_id=f"{report_unit_id}.report",
        tool="report",
        task="report",
        materials=list(material_ids),
        cores_requested=CORE_DEFAULTS["report"],
    )
    builder.units.append(PlanUnit(unit_id=report_unit_id, jobs=[report_job]))
    for unit in builder.units[:-1]:
        builder.edges.append((unit.unit_id, report_unit_id))

    plan = Plan(
        plan_id=_plan_id(intent),
        units=builder.units,
        edges=builder.edges,
        applied_defaults=sorted(
            (param, value, source)
            for param, (value, source) in builder.applied.items()
        ),
    )
    validate_plan(plan)
    return plan


# --- serialization (plan.json; stable field order) ---------------------------

def plan_to_dict(plan: Plan) -> dict:
    return {
        "plan_id": plan.plan_id,
        "units": [
            {
                "unit_id": u.unit_id,
                "jobs": [
                    {
                        "job_id": j.job_id,
                        "tool": j.tool,
                        "task": j.task,
                        "spec": j.spec,
                        "spec_sources": j.spec_sources,
                        "materials": j.materials,
                        "target": j.target,
                        "cores_requested": j.cores_requested,
                    }
                    for j in u.jobs
                ],
                "intra_edges": [list(e) for e in u.intra_edges],
            }
            for u in plan.units
        ],
        "edges": [list(e) for e in plan.edges],
        "applied_defaults": [list(d) for d in plan.applied_defaults],
    }


def plan_from_dict(data: dict) -> Plan:
    units = [
        PlanUnit(
            unit_id=u["unit_id"],
            jobs=[
                Job(
                    job_id=j["job_id"], tool=j["tool"], task=j["task"],
                    spec=j["spec"], spec_sources=j.get("spec_sources", {}),
                    materials=j["materials"], target=j.get("target", "material"),
                    cores_requested=j["cores_requested"],
                )
                for j in u["jobs"]
            ],
            intra_edges=[tuple(e) for e in u["intra_edges"]],
        )
        for u in data["units"]
    ]
    return Plan(
        plan_id=data["plan_id"],
        units=units,
        edges=[tuple(e) for e in data["edges"]],
        applied_defaults=[tuple(d) for d in data.get("applied_defaults", [])],
    )


def dump_plan(plan: Plan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2) + "\n"


def load_plan(text: str) -> Plan:
    return plan_from_dict(json.loads(text))
