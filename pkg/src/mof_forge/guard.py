"""Closed-loop input validation and failure recovery.

Pre-execution: a data-driven rule registry (``fixtures/rules.toml``, format in
``docs/rules.md``) is evaluated against each deck plus its chemical system;
corrections that change physics are gated on explicit confirmation, everything
else is applied automatically, iterating with re-validation until a fixpoint.

Post-execution: a per-tool pattern table classifies run logs, and bounded
recovery either rewrites the deck, adjusts parameters, or retries as-is.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import NonConvergence
from .inputgen import InputDeck, fmt_value

MAX_VALIDATION_ITERATIONS = 5


class Severity(str, Enum):
    FATAL = "fatal"
    PHYSICS_CHANGE = "physics_change"
    COSMETIC = "cosmetic"


_SEVERITY_RANK = {Severity.FATAL: 0, Severity.PHYSICS_CHANGE: 1, Severity.COSMETIC: 2}


@dataclass(frozen=True)
class ValidationRule:
    rule_id: str
    tool: str
    severity: Severity
    finding_text: str
    when: tuple[dict, ...]  # clauses, all must hold
    fix: dict | None = None


@dataclass(frozen=True)
class Finding:
    rule_id: str
    severity: Severity
    text: str


@dataclass
class Correction:
    rule_id: str
    before: tuple[str, object]
    after: tuple[str, object]
    confirmed: bool = False
    applied_at: float | None = None


@dataclass(frozen=True)
class AwaitingConfirmation:
    rule_ids: tuple[str, ...]
    deck: InputDeck              # auto-applicable corrections already applied
    applied: tuple[Correction, ...] = ()


@dataclass(frozen=True)
class ApplyOutcome:
    deck: InputDeck
    applied: tuple[Correction, ...] = ()
    residual: tuple[Finding, ...] = ()


@dataclass(frozen=True)
class SystemContext:
    """Chemical context a rule may inspect."""
    structures: tuple = ()
    guests: tuple = ()

    def guest_requires_electrostatics(self) -> bool:
        return any(getattr(g, "requires_electrostatics", False) for g in self.guests)

    def structure_has_charges(self) -> bool:
        return all(
            any(a.charge != 0.0 for a in s.atoms) for s in self.structures if s.atoms
        ) if self.structures else False


def load_rules(path: Path | str) -> list[ValidationRule]:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    rules = []
    for raw in data.get("rules", []):
        when = raw.get("when", {})
        clauses = tuple(when) if isinstance(when, list) else (when,)
        rules.append(ValidationRule(
            rule_id=raw["rule_id"],
            tool=raw["tool"],
            severity=Severity(raw["severity"]),
            finding_text=raw["finding"],
            when=clauses,
            fix=raw.get("fix"),
        ))
    return rules


def _pair_cutoff(deck: InputDeck) -> float:
    """Trailing cutoff of the pair_style value, falling back to 12.0."""
    style = str(deck.get("pair_style", ""))
    m = re.search(r"(\d+(?:\.\d+)?)\s*$", style)
    return float(m.group(1)) if m else 12.0


def _clause_holds(when: dict, deck: InputDeck, system: SystemContext) -> bool:
    if "guest_requires_electrostatics" in when:
        if system.guest_requires_electrostatics() != when["guest_requires_electrostatics"]:
            return False
    key = when.get("key")
    if key is not None:
        value = deck.get(key)
        if "missing" in when:
            if (value is None) != when["missing"]:
                return False
        elif value is None:
            return False
        text = fmt_value(value) if value is not None else ""
        if "lacks" in when and when["lacks"] in text:
            return False
        if "contains" in when and when["contains"] not in text:
            return False
        if "equals" in when and text != str(when["equals"]):
            return False
        if "gt" in when and not (_as_float(value) is not None
                                 and _as_float(value) > when["gt"]):
            return False
        if "lt" in when and not (_as_float(value) is not None
                                 and _as_float(value) < when["lt"]):
            return False
    return True


def _rule_fires(rule: ValidationRule, deck: InputDeck,
                system: SystemContext) -> bool:
    return all(_clause_holds(clause, deck, system) for clause in rule.when)


def _as_float(value) -> float | None:
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def _build_correction(rule: ValidationRule, deck: InputDeck) -> Correction | None:
    if not rule.fix:
        return None
    key = rule.fix["key"]
    before = (key, deck.get(key))
    if "set" in rule.fix:
        after_value: object = rule.fix["set"]
    else:
        context = {k: fmt_value(v) for k, v in deck.sections}
        context["pair_cutoff"] = fmt_value(_pair_cutoff(deck))
        after_value = rule.fix["set_template"].format(**context)
    return Correction(rule_id=rule.rule_id, before=before, after=(key, after_value))


def validate_deck(deck: InputDeck, system: SystemContext,
                  rules: list[ValidationRule]) -> list[tuple[Finding, Correction | None]]:
    """Evaluate every registered rule; findings sorted by severity (most
    severe first) then rule_id. The deck is not mutated."""
    out = []
    for rule in rules:
        if rule.tool not in ("*", deck.tool):
            continue
        if _rule_fires(rule, deck, system):
            finding = Finding(rule.rule_id, rule.severity, rule.finding_text)
            out.append((finding, _build_correction(rule, deck)))
    out.sort(key=lambda fc: (_SEVERITY_RANK[fc[0].severity], fc[0].rule_id))
    return out


def apply_corrections(deck: InputDeck, corrections: list[Correction],
                      confirmations: set[str], system: SystemContext,
                      rules: list[ValidationRule]) -> ApplyOutcome | AwaitingConfirmation:
    """Apply corrections, re-validating until fixpoint (max 5 iterations).

    Fatal and cosmetic fixes apply immediately; physics_change fixes apply
    only when their rule_id is confirmed, otherwise the pending rule_ids are
    reported. NonConvergence means actionable corrections still change the
    deck after the iteration bound.
    """
    del corrections  # re-derived each iteration; kept for call-shape parity
    current = deck
    applied: list[Correction] = []
    for _ in range(MAX_VALIDATION_ITERATIONS):
        findings = validate_deck(current, system, rules)
        if not findings:
            return ApplyOutcome(current, tuple(applied), ())
        pending = [
            f.rule_id for f, c in findings
            if c is not None and f.severity == Severity.PHYSICS_CHANGE
            and f.rule_id not in confirmations
        ]
        actionable = [
            (f, c) for f, c in findings
            if c is not None and (f.severity != Severity.PHYSICS_CHANGE
                                  or f.rule_id in confirmations)
        ]
        if not actionable:
            if pending:
                return AwaitingConfirmation(tuple(sorted(pending)), current,
                                            tuple(applied))
            residual = tuple(f for f, _ in findings)
            return ApplyOutcome(current, tuple(applied), residual)
        for finding, correction in actionable:
            key, after_value = correction.after
            current = current.set(key, after_value, "correction")
            applied.append(replace(
                correction,
                confirmed=finding.rule_id in confirmations,
                applied_at=time.time(),
            ))
    raise NonConvergence(
        f"deck corrections did not converge in {MAX_VALIDATION_ITERATIONS} iterations")


# --- log inspection -------------------------------------------------------------

class FailureCategory(str, Enum):
    INPUT_ERROR = "input_error"
    CONVERGENCE = "convergence"
    RESOURCE = "resource"
    TOOL_CRASH = "tool_crash"
    UNKNOWN = "unknown"


class ProposedAction(str, Enum):
    FIX_INPUT = "fix_input"
    ADJUST_PARAMS = "adjust_params"
    RETRY = "retry"
    ABORT = "abort"


@dataclass(frozen=True)
class Success:
    pass


SUCCESS = Success()


@dataclass(frozen=True)
class FailureDiagnosis:
    category: FailureCategory
    evidence: str
    proposed_action: ProposedAction

    def __post_init__(self):
        if self.category == FailureCategory.UNKNOWN:
            assert self.proposed_action in (ProposedAction.RETRY, ProposedAction.ABORT)


_FAILURE_PATTERNS: list[tuple[str, FailureCategory, ProposedAction]] = [
    (r"ERROR: missing key", FailureCategory.INPUT_ERROR, ProposedAction.FIX_INPUT),
    (r"ERROR: (unknown|invalid)", FailureCategory.INPUT_ERROR, ProposedAction.FIX_INPUT),
    (r"(NOT CONVERGED|DID NOT CONVERGE)", FailureCategory.CONVERGENCE,
     ProposedAction.ADJUST_PARAMS),
    (r"(OUT OF MEMORY|RESOURCES EXHAUSTED)", FailureCategory.RESOURCE,
     ProposedAction.RETRY),
    (r"(SEGMENTATION FAULT|FATAL)", FailureCategory.TOOL_CRASH, ProposedAction.RETRY),
]


def inspect_log(log: str, tool: str) -> Success | FailureDiagnosis:
    """Classify a finished run's log. Logs ending with the adapter's
    documented success marker are successes; recognizable failure patterns map
    to categories; anything else (including truncation) is unknown/retry."""
    from .toolkit import SUCCESS_MARKERS

    marker = SUCCESS_MARKERS.get(tool)
    if marker and log.rstrip().endswith(marker):
        return SUCCESS
    for pattern, category, action in _FAILURE_PATTERNS:
        m = re.search(pattern, log)
        if m:
            start = max(0, m.start() - 40)
            return FailureDiagnosis(category, log[start:m.end() + 40].strip(), action)
    tail = log.rstrip().splitlines()[-1] if log.strip() else "<empty log>"
    return FailureDiagnosis(FailureCategory.UNKNOWN, tail, ProposedAction.RETRY)


# --- recovery --------------------------------------------------------------------

@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3   # recovery attempts per job
    backoff: str = "none"   # immediate re-enqueue


@dataclass(frozen=True)
class RecoveryAction:
    kind: ProposedAction
    deck_updates: tuple[tuple[str, object], ...] = ()
    note: str = ""


@dataclass(frozen=True)
class Abort:
    reason: str


# Documented parameter adjustments per (tool, failure category).
_ADJUSTMENTS: dict[tuple[str, FailureCategory], list[tuple[str, str]]] = {
    ("dft", FailureCategory.CONVERGENCE): [("convergence_eV", "scale:10")],
    ("gcmc", FailureCategory.CONVERGENCE): [("cycles_prod", "scale:2")],
    ("md", FailureCategory.CONVERGENCE): [("timestep_fs", "scale:0.5")],
}


def _apply_adjustment(value, spec: str):
    op, _, arg = spec.partition(":")
    if op == "scale":
        scaled = float(value) * float(arg)
        if isinstance(value, int):
            return int(scaled)
        return float(f"{scaled:.12g}")  # keep deck values tidy
    raise ValueError(f"unknown adjustment {spec!r}")


def plan_recovery(diag: FailureDiagnosis, job, policy: RetryPolicy,
                  attempt: int, deck: InputDeck | None = None) -> RecoveryAction | Abort:
    """Decide the next step for a failed job. ``attempt`` counts this
    prospective recovery (1-based); beyond ``policy.max_attempts`` the job is
    abandoned."""
    if attempt > policy.max_attempts:
        return Abort(f"recovery budget exhausted after {policy.max_attempts} attempts")
    if diag.proposed_action == ProposedAction.ABORT:
        return Abort(f"unrecoverable failure: {diag.category.value}")
    if diag.proposed_action == ProposedAction.FIX_INPUT:
        return RecoveryAction(ProposedAction.FIX_INPUT, (),
                              note="regenerate deck from job spec")
    if diag.proposed_action == ProposedAction.ADJUST_PARAMS:
        updates: list[tuple[str, object]] = []
        for key, spec in _ADJUSTMENTS.get((job.tool, diag.category), []):
            if deck is not None and deck.get(key) is not None:
                updates.append((key, _apply_adjustment(deck.get(key), spec)))
        return RecoveryAction(ProposedAction.ADJUST_PARAMS, tuple(updates),
                              note=f"adjusted {', '.join(k for k, _ in updates) or 'nothing'}")
    return RecoveryAction(ProposedAction.RETRY, (), note="plain re-enqueue")
