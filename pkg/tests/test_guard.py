import pytest

from conftest import FIXTURES
from mof_forge.errors import NonConvergence
from mof_forge.guard import (Abort, ApplyOutcome, AwaitingConfirmation,
                             FailureCategory, FailureDiagnosis, ProposedAction,
                             RecoveryAction, RetryPolicy, Severity, Success,
                             SystemContext, ValidationRule, apply_corrections,
                             inspect_log, plan_recovery, validate_deck)
from mof_forge.inputgen import generate_deck
from mof_forge.planner import Job
from mof_forge.intent import ReferenceSettings


def md_deck(db, guest="CO2"):
    spec = {"guest": guest, "temperature_K": 298.0, "timestep_fs": 1.0,
            "steps": 100000, "ensemble": "nvt", "cutoff_A": 12.0}
    job = Job(job_id="u01.md", tool="md", task="diffusion_coefficient",
              spec=spec, spec_sources={k: "default" for k in spec},
              materials=["RUBTAK"])
    structures = {"RUBTAK": db.structures["RUBTAK"], guest: db.molecule(guest)}
    refs = ReferenceSettings(entries={"pair_style": "lj/cut", "cutoff": 12.0})
    deck = generate_deck(job, structures, db.forcefields, refs=refs)
    system = SystemContext((db.structures["RUBTAK"],), (db.molecule(guest),))
    return deck, system


def test_lj_only_style_with_co2_yields_one_physics_finding(db, rules):
    deck, system = md_deck(db, "CO2")
    findings = validate_deck(deck, system, rules)
    physics = [(f, c) for f, c in findings
               if f.severity == Severity.PHYSICS_CHANGE]
    assert len(physics) == 1
    finding, correction = physics[0]
    assert finding.rule_id == "md-electrostatics"
    assert correction.after == ("pair_style", "lj/cut/coul/long 12.0")


def test_same_style_with_ch4_is_clean(db, rules):
    deck, system = md_deck(db, "CH4")
    assert validate_deck(deck, system, rules) == []


def test_no_applicable_rules(db, rules):
    geometry_rules = [r for r in rules if r.tool == "never-matches"]
    deck, system = md_deck(db, "CO2")
    assert validate_deck(deck, system, geometry_rules) == []


def test_findings_sorted_by_severity_then_rule_id(db, rules):
    deck, system = md_deck(db, "CO2")
    deck = deck.set("timestep_fs", 5.0, "default")
    findings = validate_deck(deck, system, rules)
    ids = [f.rule_id for f, _ in findings]
    assert ids == sorted(ids)  # both findings are physics_change here
    severities = [f.severity for f, _ in findings]
    assert severities == sorted(severities,
                                key=lambda s: ["fatal", "physics_change",
                                               "cosmetic"].index(s.value))


def test_unconfirmed_physics_change_awaits(db, rules):
    deck, system = md_deck(db, "CO2")
    findings = validate_deck(deck, system, rules)
    outcome = apply_corrections(deck, [c for _, c in findings if c],
                                set(), system, rules)
    assert isinstance(outcome, AwaitingConfirmation)
    assert outcome.rule_ids == ("md-electrostatics",)
    assert outcome.deck.get("pair_style") == "lj/cut 12.0"  # untouched


def test_confirmed_correction_applies_and_reconverges(db, rules):
    deck, system = md_deck(db, "CO2")
    findings = validate_deck(deck, system, rules)
    outcome = apply_corrections(deck, [c for _, c in findings if c],
                                {"md-electrostatics"}, system, rules)
    assert isinstance(outcome, ApplyOutcome)
    assert outcome.deck.get("pair_style") == "lj/cut/coul/long 12.0"
    assert outcome.deck.provenance["pair_style"] == "correction"
    # the fatal companion added the long-range solver on re-validation
    assert outcome.deck.get("kspace_style") == "pppm 0.0001"
    applied = {c.rule_id: c for c in outcome.applied}
    assert applied["md-electrostatics"].confirmed
    assert not applied["md-kspace-companion"].confirmed
    assert validate_deck(outcome.deck, system, rules) == []


def test_empty_corrections_is_identity(db, rules):
    deck, system = md_deck(db, "CH4")
    outcome = apply_corrections(deck, [], set(), system, rules)
    assert isinstance(outcome, ApplyOutcome)
    assert outcome.deck == deck
    assert outcome.applied == ()


def test_no_physics_correction_applied_without_confirmation(db, rules):
    deck, system = md_deck(db, "CO2")
    deck = deck.set("timestep_fs", 5.0, "default")
    findings = validate_deck(deck, system, rules)
    outcome = apply_corrections(deck, [c for _, c in findings if c],
                                {"md-electrostatics"}, system, rules)
    assert isinstance(outcome, AwaitingConfirmation)
    assert outcome.rule_ids == ("md-timestep-large",)
    # the confirmed one was applied while the other stays gated
    assert outcome.deck.get("pair_style") == "lj/cut/coul/long 12.0"
    assert outcome.deck.get("timestep_fs") == 5.0
    for corr in outcome.applied:
        if corr.rule_id == "md-electrostatics":
            assert corr.confirmed


def test_oscillating_rules_raise_nonconvergence(db):
    flip = ValidationRule(
        rule_id="flip", tool="md", severity=Severity.COSMETIC,
        finding_text="x", when=({"key": "ensemble", "equals": "nvt"},),
        fix={"key": "ensemble", "set": "npt"})
    flop = ValidationRule(
        rule_id="flop", tool="md", severity=Severity.COSMETIC,
        finding_text="x", when=({"key": "ensemble", "equals": "npt"},),
        fix={"key": "ensemble", "set": "nvt"})
    deck, system = md_deck(db, "CH4")
    with pytest.raises(NonConvergence):
        apply_corrections(deck, [], set(), system, [flip, flop])


# --- log inspection ----------------------------------------------------------------------

def test_success_marker_recognized():
    log = "deck:\nsomething\n== MD RUN COMPLETE ==\n"
    assert isinstance(inspect_log(log, "md"), Success)


@pytest.mark.parametrize("fault,category,action", [
    ("md_missing_key.log", FailureCategory.INPUT_ERROR,
     ProposedAction.FIX_INPUT),
    ("dft_not_converged.log", FailureCategory.CONVERGENCE,
     ProposedAction.ADJUST_PARAMS),
    ("gcmc_truncated.log", FailureCategory.UNKNOWN, ProposedAction.RETRY),
    ("md_segfault.log", FailureCategory.TOOL_CRASH, ProposedAction.RETRY),
])
def test_fault_fixture_classification(fault, category, action):
    log = (FIXTURES / "faults" / fault).read_text()
    diag = inspect_log(log, fault.split("_")[0])
    assert isinstance(diag, FailureDiagnosis)
    assert diag.category == category
    assert diag.proposed_action == action


def test_empty_log_is_unknown():
    diag = inspect_log("", "gcmc")
    assert diag.category == FailureCategory.UNKNOWN
    assert diag.proposed_action == ProposedAction.RETRY


# --- recovery -----------------------------------------------------------------------------

def _job(tool="dft"):
    return Job(job_id="u01.j", tool=tool, task="t")


def test_fix_input_first_attempt():
    diag = FailureDiagnosis(FailureCategory.INPUT_ERROR, "ERROR: missing key",
                            ProposedAction.FIX_INPUT)
    action = plan_recovery(diag, _job(), RetryPolicy(), attempt=1)
    assert isinstance(action, RecoveryAction)
    assert action.kind == ProposedAction.FIX_INPUT


def test_budget_exhaustion_aborts():
    diag = FailureDiagnosis(FailureCategory.UNKNOWN, "tail",
                            ProposedAction.RETRY)
    action = plan_recovery(diag, _job(), RetryPolicy(max_attempts=3), attempt=4)
    assert isinstance(action, Abort)


def test_convergence_adjustment_loosens_dft_threshold(db, rules):
    job = Job(job_id="u01.dft", tool="dft", task="band_gap",
              materials=["GUXQAR"])
    deck = generate_deck(job, {"GUXQAR": db.structures["GUXQAR"]},
                         db.forcefields)
    diag = FailureDiagnosis(FailureCategory.CONVERGENCE, "DID NOT CONVERGE",
                            ProposedAction.ADJUST_PARAMS)
    action = plan_recovery(diag, job, RetryPolicy(), attempt=1, deck=deck)
    assert isinstance(action, RecoveryAction)
    assert action.deck_updates == (("convergence_eV", 1e-05),)
