"""Final report assembly, follow-up analysis planning, and the benchmark
comparison harness.

Narratives are template-rendered with slot filling; no free-form generation.
Every number in a report is copied verbatim from a job output, and the
defaults/corrections/recoveries sections are complete with respect to the
run's event log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnsupportedAnalysis, ZeroReference
from .executor import RunRecord
from .inputgen import fmt_value
from .intent import Intent, TaskKind
from .planner import Job, JobStatus, Plan, PlanUnit
from .templates import CORE_DEFAULTS

# Metrics that answer each task kind; everything else in job outputs is
# supporting detail.
ANSWER_METRICS: dict[str, tuple[str, ...]] = {
    "surface_area": ("surface_area",),
    "pore_diameter": ("pld", "lcd"),
    "pore_volume": ("pore_volume",),
    "pore_size_distribution": ("psd_peak",),
    "gcmc_uptake": ("uptake",),
    "henry_coefficient": ("henry_coefficient",),
    "diffusion_coefficient": ("diffusion_coefficient",),
    "interaction_energy": ("interaction_energy",),
    "rdf": ("rdf_peak",),
    "binding_energy": ("binding_energy",),
    "band_gap": ("band_gap",),
    "geometry_optimization": ("energy",),
    "complex_optimization": (),
    "charge_density": (),
    "bader_charge": ("charge_transfer",),
    "prescreen": (),
    "screening": ("survivors", "shortlist_size"),
    "report": (),
}

METRIC_LABELS = {
    "surface_area": "surface area",
    "pld": "pore-limiting diameter",
    "lcd": "largest cavity diameter",
    "pore_volume": "pore volume",
    "psd_peak": "pore-size-distribution peak",
    "uptake": "uptake",
    "henry_coefficient": "Henry coefficient",
    "diffusion_coefficient": "diffusion coefficient",
    "interaction_energy": "interaction energy",
    "rdf_peak": "first RDF peak",
    "binding_energy": "binding energy",
    "band_gap": "band gap",
    "energy": "total energy",
    "charge_transfer": "guest charge transfer",
    "survivors": "funnel survivors",
    "shortlist_size": "shortlist size",
}

UNIT_DISPLAY = {
    "m2/g": "m²/g",
    "cm3/g": "cm³/g",
    "cm2/s": "cm²/s",
    "A": "Å",
    "mol/kg/Pa": "mol/kg/Pa",
}


@dataclass
class AnswerEntry:
    material: str
    metric: str
    value: object
    unit: str


@dataclass
class Report:
    run_id: str
    answer: list[AnswerEntry]
    applied_defaults: list[tuple[str, object, str]]
    corrections: list[dict]
    recoveries: list[dict]
    narrative: str

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "answer": [
                {"material": a.material, "metric": a.metric,
                 "value": a.value, "unit": a.unit}
                for a in self.answer
            ],
            "applied_defaults": [list(d) for d in self.applied_defaults],
            "corrections": self.corrections,
            "recoveries": self.recoveries,
            "narrative": self.narrative,
        }


_COUNT_TEMPLATES = {
    "survivors": "The screening funnel retained {value} candidates.",
    "shortlist_size": "The shortlist holds the top {value} candidates.",
}


def _display_value(value: object) -> str:
    if isinstance(value, float):
        return format(value, "g")
    return str(value)


def _article(label: str) -> str:
    return "an" if label[:1].lower() in "aeiou" else "a"


def _display_unit(unit: str) -> str:
    return UNIT_DISPLAY.get(unit, unit)


def _collect_answer(record: RunRecord,
                    intent: Intent | None) -> list[AnswerEntry]:
    allowed_tasks: set[str] | None = None
    if intent is not None:
        allowed_tasks = {intent.task_kind.value, "bader_charge"}
        if intent.task_kind == TaskKind.SCREENING:
            allowed_tasks |= {"screening", "gcmc_uptake"}
    entries: list[AnswerEntry] = []
    for jid in sorted(record.jobs):
        state = record.jobs[jid]
        if state.status != JobStatus.SUCCEEDED:
            continue
        if allowed_tasks is not None and state.job.task not in allowed_tasks:
            continue
        wanted = ANSWER_METRICS.get(state.job.task, ())
        material = state.job.materials[0] if state.job.materials else state.job.task
        for metric in wanted:
            if metric in state.outputs:
                value, unit = state.outputs[metric]
                entries.append(AnswerEntry(material, metric, value, unit))
    if intent is not None and intent.task_kind == TaskKind.SCREENING:
        # ranked list first, counts up front
        counts = [e for e in entries if e.metric in ("survivors", "shortlist_size")]
        ranked = sorted((e for e in entries if e.metric == "uptake"),
                        key=lambda e: (-float(e.value), e.material))
        entries = counts + ranked
    return entries


def _narrative(record: RunRecord, answer: list[AnswerEntry],
               defaults, corrections, recoveries,
               display_names: dict[str, str]) -> str:
    lines: list[str] = []
    for entry in answer:
        value = _display_value(entry.value)
        if entry.metric in _COUNT_TEMPLATES:
            lines.append(_COUNT_TEMPLATES[entry.metric].format(
                value=format(int(float(entry.value)), "d")))
            continue
        label = METRIC_LABELS.get(entry.metric, entry.metric)
        unit = _display_unit(entry.unit)
        suffix = f" {unit}" if unit else ""
        shown = display_names.get(entry.material, entry.material)
        lines.append(f"{shown} has {_article(label)} {label} of {value}{suffix}.")
    for param, value, _source in defaults:
        shown = _display_value(value)
        unit = {"probe_radius_A": " Å", "temperature_K": " K",
                "pressure_Pa": " Pa", "timestep_fs": " fs",
                "cutoff_A": " Å"}.get(param, "")
        lines.append(f"Parameter {param} was not specified in the request; "
                     f"the default value of {shown}{unit} was applied.")
    for corr in corrections:
        gate = "confirmed" if corr["confirmed"] else "applied automatically"
        change = (f"{corr['key']} {corr['before']} -> {corr['after']}"
                  if corr["before"] is not None
                  else f"{corr['key']} set to {corr['after']}")
        lines.append(f"Correction {corr['rule_id']} ({gate}): {change}.")
    for rec in recoveries:
        lines.append(f"Recovery attempt {rec['attempt']} on {rec['job_id']}: "
                     f"{rec['category']} -> {rec['action']}.")
    if record.aborted:
        lines.append("The run did not complete; partial results are shown.")
    return "\n".join(lines)


def summarize_run(record: RunRecord, intent: Intent | None = None) -> Report:
    """Assemble the structured report for a finished run. Aborted or
    unfinished runs raise IncompleteRun with the partial report attached."""
    from .errors import IncompleteRun

    intent = intent or getattr(record, "intent", None)
    display_names: dict[str, str] = {}
    if intent is not None:
        for ref in intent.materials:
            if ref.resolved_id:
                display_names[ref.resolved_id] = ref.raw_text
    answer = _collect_answer(record, intent)
    corrections = []
    recoveries = []
    for jid in sorted(record.jobs):
        state = record.jobs[jid]
        for corr in state.corrections:
            corrections.append({
                "job_id": jid,
                "rule_id": corr.rule_id,
                "key": corr.after[0],
                "before": fmt_value(corr.before[1]) if corr.before[1] is not None else None,
                "after": fmt_value(corr.after[1]),
                "confirmed": corr.confirmed,
            })
        for rec in state.recoveries:
            recoveries.append({**rec, "job_id": jid})

    report = Report(
        run_id=record.run_id,
        answer=answer,
        applied_defaults=list(record.plan.applied_defaults),
        corrections=corrections,
        recoveries=recoveries,
        narrative="",
    )
    report.narrative = _narrative(record, answer, report.applied_defaults,
                                  corrections, recoveries, display_names)
    if not record.finished or record.aborted:
        raise IncompleteRun(f"run {record.run_id} did not complete", partial=report)
    return report


# --- follow-up analysis ----------------------------------------------------------

@dataclass
class AnalysisRequest:
    targets: list[str]                 # resolved structure ids
    quantities: list[str]              # e.g. binding_energy, charge_transfer
    evidence: list = field(default_factory=list)
    kind: str = "comparison"

    def __post_init__(self):
        if self.kind == "comparison" and len(self.targets) < 2:
            raise UnsupportedAnalysis(
                "comparison analysis needs at least two targets")


@dataclass
class AnalysisExtension:
    units: list[PlanUnit]
    edges: list[tuple[str, str]]


def plan_analysis(request: AnalysisRequest, plan: Plan) -> AnalysisExtension:
    """Append charge-density and charge-partitioning jobs per target, chained
    after that target's binding job (and hence, transitively, after its
    complex optimization)."""
    if any(q not in ("binding_energy", "charge_transfer") for q in request.quantities):
        unknown = [q for q in request.quantities
                   if q not in ("binding_energy", "charge_transfer")]
        raise UnsupportedAnalysis(f"no analysis template for {unknown}")

    units: list[PlanUnit] = []
    edges: list[tuple[str, str]] = []
    next_index = len(plan.units) + 1
    evidence_ids = [getattr(h, "chunk_id", str(h)) for h in request.evidence]

    for target in request.targets:
        binding_jobs = [j for j in plan.all_jobs()
                        if j.task == "binding_energy" and target in j.materials]
        if not binding_jobs:
            raise UnsupportedAnalysis(
                f"no binding-energy job planned for target {target!r}")
        anchor = binding_jobs[0]
        guest = anchor.spec.get("guest", "CO2")
        unit_id = f"u{next_index:02d}"
        next_index += 1
        suffix = f"-{target}" if len(request.targets) > 1 else ""
        spec = {"guest": guest}
        sources = {"guest": "intent"}
        if evidence_ids:
            spec["evidence"] = list(evidence_ids)
            sources["evidence"] = "retrieved_evidence"
        chg = Job(
            job_id=f"{unit_id}.charge-density{suffix}",
            tool="dft", task="charge_density",
            spec=dict(spec), spec_sources=dict(sources),
            materials=[target], cores_requested=CORE_DEFAULTS["dft"],
        )
        bader = Job(
            job_id=f"{unit_id}.bader{suffix}",
            tool="dft", task="bader_charge",
            spec=dict(spec), spec_sources=dict(sources),
            materials=[target], cores_requested=CORE_DEFAULTS["dft"],
        )
        unit = PlanUnit(unit_id=unit_id, jobs=[chg, bader],
                        intra_edges=[(chg.job_id, bader.job_id)])
        units.append(unit)
        anchor_unit = next(u for u in plan.units
                           if any(j.job_id == anchor.job_id for j in u.jobs))
        edges.append((anchor_unit.unit_id, unit_id))
    return AnalysisExtension(units=units, edges=edges)


def extend_plan(plan: Plan, extension: AnalysisExtension) -> Plan:
    """New plan with the analysis units inserted before the report unit and
    wired into it."""
    report_unit = next(u for u in plan.units
                       if any(j.tool == "report" for j in u.jobs))
    others = [u for u in plan.units if u.unit_id != report_unit.unit_id]
    edges = list(plan.edges) + list(extension.edges)
    edges += [(u.unit_id, report_unit.unit_id) for u in extension.units]
    return Plan(
        plan_id=plan.plan_id,
        units=others + extension.units + [report_unit],
        edges=edges,
        applied_defaults=list(plan.applied_defaults),
    )


# --- benchmark harness -------------------------------------------------------------

@dataclass
class BenchmarkRow:
    tool: str
    structure_id: str
    property: str
    unit: str
    reference_value: float
    produced_value: float
    source: str = ""

    @property
    def relative_error_pct(self) -> float:
        if self.reference_value == 0:
            raise ZeroReference(
                f"{self.structure_id}/{self.property}: reference value is zero")
        return 100.0 * abs(self.produced_value - self.reference_value) / abs(
            self.reference_value)


def compare_to_reference(rows: list[BenchmarkRow]) -> list[BenchmarkRow]:
    """Validate every row's relative error is computable; rows keep the
    fixture's order."""
    for row in rows:
        _ = row.relative_error_pct  # raises ZeroReference on bad input
    return rows


def render_benchmark_table(rows: list[BenchmarkRow]) -> str:
    header = ("tool\tstructure_id\tproperty\tunit\treference_value\t"
              "produced_value\trelative_error_pct\tsource")
    lines = [header]
    for row in rows:
        lines.append("\t".join([
            row.tool, row.structure_id, row.property, row.unit,
            fmt_value(row.reference_value), fmt_value(row.produced_value),
            f"{row.relative_error_pct:.2f}", row.source,
        ]))
    return "\n".join(lines) + "\n"
