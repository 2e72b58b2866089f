import pytest

from mof_forge.errors import IncompleteRun, UnsupportedAnalysis, ZeroReference
from mof_forge.executor import EventKind
from mof_forge.intent import (Intent, MaterialKind, MaterialRef, TaskKind)
from mof_forge.planner import build_plan, job_predecessors, validate_plan
from mof_forge.reporting import (AnalysisRequest, BenchmarkRow,
                                 compare_to_reference, extend_plan,
                                 plan_analysis, render_benchmark_table,
                                 summarize_run)


def run_query(service, text, **kwargs):
    payload = service.submit_query("rep-test", text, **kwargs)
    assert payload["kind"] == "run"
    return payload


def test_surface_area_report_contents(service):
    payload = run_query(service, "What is the surface area of UiO-66?")
    record = service.executor.runs[payload["run_id"]]
    report = summarize_run(record)
    values = {(a.material, a.metric): (a.value, a.unit) for a in report.answer}
    assert values[("RUBTAK", "surface_area")] == (1946.02, "m2/g")
    assert "1946.02 m²/g" in report.narrative
    assert "default value of 1.2 Å" in report.narrative
    assert ("probe_radius_A", 1.2, "default-table") in report.applied_defaults


def test_report_values_equal_job_outputs_exactly(service):
    payload = run_query(service, "What is the band gap of GIFKEL?")
    record = service.executor.runs[payload["run_id"]]
    report = summarize_run(record)
    for entry in report.answer:
        job_state = next(
            s for s in record.jobs.values()
            if entry.metric in s.outputs
            and (s.job.materials or [None])[0] == entry.material)
        assert job_state.outputs[entry.metric] == (entry.value, entry.unit)


def test_report_corrections_match_event_log(service):
    payload = run_query(
        service, "Calculate the diffusion coefficient of CO2 in UiO-66",
        attachments={"ref.txt": "pair_style lj/cut 12.0"})
    assert payload["status"] == "awaiting_confirmation"
    payload = service.confirm_correction(payload["run_id"],
                                         ["md-electrostatics"], True)
    record = service.executor.runs[payload["run_id"]]
    report = summarize_run(record)
    event_corrections = [
        (e.job_id, e.payload["rule_id"])
        for e in record.events if e.kind == EventKind.CORRECTION_APPLIED
    ]
    report_corrections = [(c["job_id"], c["rule_id"])
                          for c in report.corrections]
    assert sorted(event_corrections) == sorted(report_corrections)
    assert any(c["rule_id"] == "md-electrostatics" and c["confirmed"]
               for c in report.corrections)


def test_aborted_run_raises_incomplete_with_partial(service):
    payload = run_query(
        service, "Calculate the diffusion coefficient of CO2 in UiO-66",
        attachments={"ref.txt": "pair_style lj/cut 12.0"})
    payload = service.confirm_correction(payload["run_id"],
                                         ["md-electrostatics"], False)
    record = service.executor.runs[payload["run_id"]]
    with pytest.raises(IncompleteRun) as excinfo:
        summarize_run(record)
    partial = excinfo.value.partial
    assert partial is not None
    assert "did not complete" in partial.narrative


# --- analysis planning ---------------------------------------------------------------------

def binding_intent(materials, analysis=False):
    return Intent(
        task_kind=TaskKind.BINDING_ENERGY,
        materials=[MaterialRef(m, MaterialKind.REFCODE, m) for m in materials],
        guests=["CO2"],
        analysis_requested=analysis,
    )


def test_plan_analysis_appends_chained_jobs_per_target():
    plan = build_plan(binding_intent(["FIQCEN", "VELVOY"]))
    request = AnalysisRequest(targets=["FIQCEN", "VELVOY"],
                              quantities=["binding_energy", "charge_transfer"])
    extension = plan_analysis(request, plan)
    assert len(extension.units) == 2
    extended = extend_plan(plan, extension)
    validate_plan(extended)
    preds = job_predecessors(extended)
    for target in ("FIQCEN", "VELVOY"):
        chg = next(j.job_id for j in extended.all_jobs()
                   if j.task == "charge_density" and target in j.materials)
        bader = next(j.job_id for j in extended.all_jobs()
                     if j.task == "bader_charge" and target in j.materials)
        binding = next(j.job_id for j in extended.all_jobs()
                       if j.task == "binding_energy" and target in j.materials)
        assert binding in preds[chg]
        assert chg in preds[bader]


def test_single_target_comparison_is_unsupported():
    with pytest.raises(UnsupportedAnalysis):
        AnalysisRequest(targets=["FIQCEN"], quantities=["binding_energy"])


def test_unknown_quantity_is_unsupported():
    plan = build_plan(binding_intent(["FIQCEN", "VELVOY"]))
    request = AnalysisRequest(targets=["FIQCEN", "VELVOY"],
                              quantities=["phonon_spectrum"])
    with pytest.raises(UnsupportedAnalysis):
        plan_analysis(request, plan)


def test_evidence_recorded_in_generated_jobs():
    class Hit:
        chunk_id = "notes.txt#0001"

    plan = build_plan(binding_intent(["FIQCEN", "VELVOY"]))
    request = AnalysisRequest(targets=["FIQCEN", "VELVOY"],
                              quantities=["charge_transfer"],
                              evidence=[Hit()])
    extension = plan_analysis(request, plan)
    for unit in extension.units:
        for job in unit.jobs:
            assert job.spec["evidence"] == ["notes.txt#0001"]
            assert job.spec_sources["evidence"] == "retrieved_evidence"


# --- benchmark arithmetic ---------------------------------------------------------------------

def test_relative_error_formula():
    row = BenchmarkRow(tool="gcmc", structure_id="CICYIX", property="uptake",
                       unit="cm3/g", reference_value=75.38,
                       produced_value=75.57)
    assert row.relative_error_pct == pytest.approx(100 * 0.19 / 75.38)
    assert round(row.relative_error_pct, 2) == 0.25


def test_zero_error_for_equal_values():
    row = BenchmarkRow(tool="dft", structure_id="NUYQUU", property="band_gap",
                       unit="eV", reference_value=2.90, produced_value=2.90)
    assert row.relative_error_pct == 0.0


def test_zero_reference_rejected():
    row = BenchmarkRow(tool="dft", structure_id="X", property="p", unit="eV",
                       reference_value=0.0, produced_value=1.0)
    with pytest.raises(ZeroReference):
        compare_to_reference([row])


def test_benchmark_table_renders_in_fixture_order():
    rows = [
        BenchmarkRow("geometry", "PUPJER", "LCD", "A", 11.35, 11.35, "src"),
        BenchmarkRow("dft", "NUYQUU", "bandgap", "eV", 2.90, 2.90, "src"),
    ]
    table = render_benchmark_table(compare_to_reference(rows))
    lines = table.strip().splitlines()
    assert lines[0].startswith("tool\tstructure_id")
    assert lines[1].split("\t")[1] == "PUPJER"
    assert lines[2].split("\t")[1] == "NUYQUU"
