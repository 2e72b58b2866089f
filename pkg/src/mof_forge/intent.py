"""Rule-based parsing of natural-language simulation requests.

The grammar (task verbs, species names, condition sub-grammar, the generic-term
stop-list, and the reference-settings key grammar) is documented in
``docs/grammar.md``. Parsing is deterministic: identical text against an
identical resolver state always yields the same result. A structured-output
language-model client may replace this engine behind the same contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import EmptyQuery, SessionMismatch, UnrecognizedTask


class TaskKind(str, Enum):
    SURFACE_AREA = "surface_area"
    PORE_DIAMETER = "pore_diameter"
    PORE_VOLUME = "pore_volume"
    PORE_SIZE_DISTRIBUTION = "pore_size_distribution"
    GCMC_UPTAKE = "gcmc_uptake"
    HENRY_COEFFICIENT = "henry_coefficient"
    DIFFUSION_COEFFICIENT = "diffusion_coefficient"
    INTERACTION_ENERGY = "interaction_energy"
    RDF = "rdf"
    BINDING_ENERGY = "binding_energy"
    BAND_GAP = "band_gap"
    GEOMETRY_OPTIMIZATION = "geometry_optimization"
    BADER_CHARGE = "bader_charge"
    SCREENING = "screening"
    ANALYSIS_COMPARISON = "analysis_comparison"


class MaterialKind(str, Enum):
    COMMON_NAME = "common_name"
    SYNONYM = "synonym"
    FORMULA = "formula"
    REFCODE = "refcode"
    FILE_REFERENCE = "file_reference"
    GENERIC = "generic"


@dataclass(frozen=True)
class Query:
    text: str
    session_id: str = "default"
    attachments: dict[str, str] = field(default_factory=dict)


@dataclass
class MaterialRef:
    raw_text: str
    kind: MaterialKind
    resolved_id: str | None = None


@dataclass
class ConditionValue:
    value: float
    unit: str

    def render(self) -> str:
        # repr is the shortest exact round-trip form
        return f"{self.value!r} {self.unit}"


@dataclass
class ReferenceSettings:
    """User-pasted settings parsed against the published key grammar.
    Unrecognized lines are kept verbatim; nothing is silently dropped."""

    entries: dict[str, object] = field(default_factory=dict)
    unparsed: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.entries and not self.unparsed


@dataclass
class Intent:
    task_kind: TaskKind
    materials: list[MaterialRef] = field(default_factory=list)
    guests: list[str] = field(default_factory=list)
    conditions: dict[str, ConditionValue] = field(default_factory=dict)
    reference_settings: ReferenceSettings | None = None
    analysis_requested: bool = False
    database_scope: str | None = None
    session_id: str = "default"


@dataclass
class ClarificationRequest:
    missing: list[str]
    prompt_text: str
    blocking: bool
    # carried so a follow-up answer can be merged without re-deriving state
    partial: Intent | None = None
    session_id: str = "default"


Resolver = Callable[[str], str | None]

# --- grammar tables -----------------------------------------------------------

# Matched in order; screening verbs outrank property verbs so that
# "screen ... by CH4 uptake" routes to the funnel, not a single gcmc job.
_TASK_PATTERNS: list[tuple[str, TaskKind]] = [
    (r"screen\w*|top[- ](performing|candidates?)|best (mofs?|candidates?|materials?)",
     TaskKind.SCREENING),
    (r"pore size distribution|\bpsd\b", TaskKind.PORE_SIZE_DISTRIBUTION),
    (r"surface areas?", TaskKind.SURFACE_AREA),
    (r"pore[- ]limiting diameter|largest cavity diameter|pore diameter|\bpld\b|\blcd\b",
     TaskKind.PORE_DIAMETER),
    (r"(accessible|probe[- ]occupiable|pore) volume", TaskKind.PORE_VOLUME),
    (r"henry (constant|coefficient)", TaskKind.HENRY_COEFFICIENT),
    (r"binding energ(y|ies)", TaskKind.BINDING_ENERGY),
    (r"interaction energ(y|ies)", TaskKind.INTERACTION_ENERGY),
    (r"uptake|adsorption|\bgcmc\b", TaskKind.GCMC_UPTAKE),
    (r"diffusion coefficients?|diffusivit(y|ies)", TaskKind.DIFFUSION_COEFFICIENT),
    (r"radial distribution|\brdf\b", TaskKind.RDF),
    (r"band ?gaps?|band edge", TaskKind.BAND_GAP),
    (r"bader", TaskKind.BADER_CHARGE),
    (r"geometry optimi[sz]ation|optimi[sz]e the (geometry|structure)|relax the structure",
     TaskKind.GEOMETRY_OPTIMIZATION),
]

# Generic placeholders that must trigger clarification instead of resolution.
GENERIC_TERMS = ("a mof", "some mof", "any mof", "a material", "some material",
                 "any material", "the mof", "a framework")

_GUEST_ALIASES = {
    "co2": "CO2", "carbon dioxide": "CO2",
    "ch4": "CH4", "methane": "CH4",
    "n2": "N2", "nitrogen": "N2",
    "h2": "H2", "hydrogen": "H2",
    "o2": "O2", "oxygen": "O2",
    "h2o": "H2O", "water": "H2O",
}

_ANALYSIS_TRIGGERS = ("why", "compare", "comparison", "explain", "difference")

# pressure/temperature/length units with converters to Pa / K / Angstrom
_PRESSURE_TO_PA = {"pa": 1.0, "kpa": 1e3, "mpa": 1e6, "bar": 1e5, "atm": 101325.0}
_LENGTH_TO_A = {"a": 1.0, "angstrom": 1.0, "angstroms": 1.0, "å": 1.0, "nm": 10.0}

_NUM = r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"

_COND_TEMPERATURE = re.compile(rf"({_NUM})\s*(K)\b")
_COND_PRESSURE = re.compile(rf"({_NUM})\s*(Pa|kPa|MPa|bar|atm)\b", re.IGNORECASE)
_COND_PROBE = re.compile(
    rf"probe(?:\s+radius)?\s+(?:of\s+)?({_NUM})\s*(A|Å|angstroms?|nm)\b", re.IGNORECASE)

# candidate material tokens: hyphenated names (UiO-66), refcode-style ids
# (GIFKEL, BUKRUW01), tobmof-style ids, and *.cif file references
_MATERIAL_TOKEN = re.compile(
    r"\b([A-Za-z]{2,}mof-\d+|[A-Za-z][A-Za-z0-9]*-\d+[A-Za-z0-9]*|[A-Z]{6}\d{0,2}|\S+\.cif)\b")

_DB_SCOPE = re.compile(r"\b(?:database|db)\s+([A-Za-z0-9_-]+)|\b([A-Za-z0-9_-]+)\s+database\b",
                       re.IGNORECASE)


def _match_task(text: str) -> TaskKind | None:
    low = text.lower()
    for pattern, kind in _TASK_PATTERNS:
        if re.search(pattern, low):
            return kind
    return None


def _extract_conditions(text: str) -> dict[str, ConditionValue]:
    conditions: dict[str, ConditionValue] = {}
    m = _COND_PROBE.search(text)
    probe_span = None
    if m:
        value = float(m.group(1)) * _LENGTH_TO_A[m.group(2).lower()]
        conditions["probe_radius_A"] = ConditionValue(value, "A")
        probe_span = m.span(1)
    m = _COND_TEMPERATURE.search(text)
    if m and m.span(1) != probe_span:
        conditions["temperature_K"] = ConditionValue(float(m.group(1)), "K")
    m = _COND_PRESSURE.search(text)
    if m:
        value = float(m.group(1)) * _PRESSURE_TO_PA[m.group(2).lower()]
        conditions["pressure_Pa"] = ConditionValue(value, "Pa")
    return conditions


def _extract_guests(text: str) -> list[str]:
    low = text.lower()
    found: list[str] = []
    for alias, canonical in _GUEST_ALIASES.items():
        if re.search(rf"\b{re.escape(alias)}\b", low) and canonical not in found:
            found.append(canonical)
    return found


def _classify_material(token: str, resolver: Resolver) -> MaterialRef | None:
    resolved = resolver(token)
    if resolved is None:
        return None
    if token.lower().endswith(".cif"):
        kind = MaterialKind.FILE_REFERENCE
    elif re.fullmatch(r"[A-Z]{6}\d{0,2}", token):
        kind = MaterialKind.REFCODE
    elif token == resolved:
        kind = MaterialKind.REFCODE
    else:
        kind = MaterialKind.COMMON_NAME
    return MaterialRef(raw_text=token, kind=kind, resolved_id=resolved)


def _extract_materials(text: str, resolver: Resolver,
                       guests: list[str]) -> tuple[list[MaterialRef], bool]:
    """Returns (materials, generic_detected)."""
    low = text.lower()
    generic = any(term in low for term in GENERIC_TERMS)
    materials: list[MaterialRef] = []
    seen: set[str] = set()
    for m in _MATERIAL_TOKEN.finditer(text):
        token = m.group(1)
        if token.upper() in {g.upper() for g in guests}:
            continue
        ref = _classify_material(token, resolver)
        if ref and ref.resolved_id not in seen:
            materials.append(ref)
            seen.add(ref.resolved_id)
    # fall back to resolver on remaining capitalized words (synonym table hits)
    if not materials:
        for word in re.findall(r"\b[A-Za-z][A-Za-z0-9-]{2,}\b", text):
            if word.lower() in _GUEST_ALIASES:
                continue
            ref = _classify_material(word, resolver)
            if ref and ref.resolved_id not in seen:
                materials.append(ref)
                seen.add(ref.resolved_id)
    return materials, generic


def extract_reference_settings(text: str) -> ReferenceSettings:
    """Parse pasted settings, one ``key value...`` pair per line.

    Recognized keys: pair_style, cutoff, timestep, ensemble, temperature,
    pressure. A trailing number on a pair_style line is its cutoff. Lines
    that match nothing land in ``unparsed`` verbatim.
    """
    settings = ReferenceSettings()
    for raw_line in (text or "").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0].lower()
        rest = parts[1:]
        if key == "pair_style" and rest:
            settings.entries["pair_style"] = rest[0]
            if len(rest) > 1 and re.fullmatch(_NUM, rest[1]):
                settings.entries["cutoff"] = float(rest[1])
        elif key == "cutoff" and rest and re.fullmatch(_NUM, rest[0]):
            settings.entries["cutoff"] = float(rest[0])
        elif key == "timestep" and rest and re.fullmatch(_NUM, rest[0]):
            settings.entries["timestep"] = float(rest[0])
        elif key == "ensemble" and rest:
            settings.entries["ensemble"] = rest[0].lower()
        elif key == "temperature" and rest and re.fullmatch(_NUM, rest[0]):
            settings.entries["temperature"] = float(rest[0])
        elif key == "pressure" and rest and re.fullmatch(_NUM, rest[0]):
            settings.entries["pressure"] = float(rest[0])
        else:
            settings.unparsed.append(line)
    return settings


def _clarification(missing: list[str], partial: Intent, session_id: str) -> ClarificationRequest:
    prompts = {
        "material_identifier":
            "No specific material was identified. Provide a common name, a "
            "refcode, or a structure file reference.",
        "guest_species": "Name the guest species for this calculation.",
        "condition": "The request needs explicit conditions (e.g., temperature, pressure).",
    }
    return ClarificationRequest(
        missing=missing,
        prompt_text=" ".join(prompts[m] for m in missing),
        blocking="material_identifier" in missing,
        partial=partial,
        session_id=session_id,
    )


_GUEST_REQUIRED = {
    TaskKind.GCMC_UPTAKE, TaskKind.HENRY_COEFFICIENT, TaskKind.DIFFUSION_COEFFICIENT,
    TaskKind.INTERACTION_ENERGY, TaskKind.RDF, TaskKind.BINDING_ENERGY,
}


def parse_query(q: Query, resolver: Resolver) -> Intent | ClarificationRequest:
    """Parse a query into a fully specified Intent, or a ClarificationRequest
    naming exactly what is missing."""
    text = q.text.strip()
    if not text:
        raise EmptyQuery("query text is blank")

    guests = _extract_guests(text)
    task = _match_task(text)
    analysis = any(re.search(rf"\b{t}\b", text.lower()) for t in _ANALYSIS_TRIGGERS)
    materials, generic = _extract_materials(text, resolver, guests)
    conditions = _extract_conditions(text)

    scope = None
    m = _DB_SCOPE.search(text)
    if m:
        scope = (m.group(1) or m.group(2)).lower()
        if scope in ("the", "a"):
            scope = None

    if task is None:
        if analysis and (materials or scope):
            task = TaskKind.ANALYSIS_COMPARISON
        elif materials:
            partial = Intent(task_kind=TaskKind.ANALYSIS_COMPARISON, materials=materials,
                             guests=guests, conditions=conditions, session_id=q.session_id)
            return _clarification(["condition"], partial, q.session_id)
        else:
            raise UnrecognizedTask(f"no task pattern matched: {text!r}")

    refs = None
    if q.attachments:
        merged = "\n".join(q.attachments.values())
        refs = extract_reference_settings(merged)
        if refs.is_empty():
            refs = None

    intent = Intent(
        task_kind=task,
        materials=materials,
        guests=guests,
        conditions=conditions,
        reference_settings=refs,
        analysis_requested=analysis,
        database_scope=scope,
        session_id=q.session_id,
    )

    missing: list[str] = []
    if task == TaskKind.SCREENING:
        if not scope:
            missing.append("material_identifier")
    elif generic and not materials:
        missing.append("material_identifier")
    elif not materials and not scope:
        missing.append("material_identifier")
    if task in _GUEST_REQUIRED and not guests:
        missing.append("guest_species")

    if missing:
        return _clarification(missing, intent, q.session_id)
    return intent


def merge_clarification(intent_partial: Intent, answer: Query,
                        resolver: Resolver) -> Intent | ClarificationRequest:
    """Fill the gaps of a partial intent from a follow-up answer and
    re-validate exactly as parse_query does."""
    if answer.session_id != intent_partial.session_id:
        raise SessionMismatch(
            f"answer for session {answer.session_id!r}, "
            f"clarification belongs to {intent_partial.session_id!r}")
    text = answer.text.strip()
    if not text:
        return _clarification(
            _missing_fields(intent_partial), intent_partial, intent_partial.session_id)

    guests = _extract_guests(text)
    materials, _ = _extract_materials(text, resolver, guests)
    conditions = _extract_conditions(text)
    task = _match_task(text)

    merged = Intent(
        task_kind=task or intent_partial.task_kind,
        materials=materials or intent_partial.materials,
        guests=guests or intent_partial.guests,
        conditions={**intent_partial.conditions, **conditions},
        reference_settings=intent_partial.reference_settings,
        analysis_requested=intent_partial.analysis_requested,
        database_scope=intent_partial.database_scope,
        session_id=intent_partial.session_id,
    )
    missing = _missing_fields(merged)
    if missing:
        return _clarification(missing, merged, merged.session_id)
    return merged


def _missing_fields(intent: Intent) -> list[str]:
    missing: list[str] = []
    if not intent.materials and not intent.database_scope:
        missing.append("material_identifier")
    if intent.task_kind in _GUEST_REQUIRED and not intent.guests:
        missing.append("guest_species")
    return missing


def render_conditions(conditions: dict[str, ConditionValue]) -> dict[str, str]:
    """Canonical text rendering; parsing the rendered values reproduces the
    stored floats exactly."""
    return {k: v.render() for k, v in conditions.items()}


def intent_to_dict(intent: Intent) -> dict:
    refs = intent.reference_settings
    return {
        "task_kind": intent.task_kind.value,
        "materials": [
            {"raw_text": m.raw_text, "kind": m.kind.value,
             "resolved_id": m.resolved_id}
            for m in intent.materials
        ],
        "guests": list(intent.guests),
        "conditions": {k: [v.value, v.unit] for k, v in intent.conditions.items()},
        "reference_settings": (
            {"entries": refs.entries, "unparsed": refs.unparsed} if refs else None),
        "analysis_requested": intent.analysis_requested,
        "database_scope": intent.database_scope,
        "session_id": intent.session_id,
    }


def intent_from_dict(data: dict) -> Intent:
    refs = None
    if data.get("reference_settings"):
        refs = ReferenceSettings(
            entries=dict(data["reference_settings"]["entries"]),
            unparsed=list(data["reference_settings"]["unparsed"]))
    return Intent(
        task_kind=TaskKind(data["task_kind"]),
        materials=[
            MaterialRef(raw_text=m["raw_text"], kind=MaterialKind(m["kind"]),
                        resolved_id=m.get("resolved_id"))
            for m in data.get("materials", [])
        ],
        guests=list(data.get("guests", [])),
        conditions={k: ConditionValue(v[0], v[1])
                    for k, v in data.get("conditions", {}).items()},
        reference_settings=refs,
        analysis_requested=data.get("analysis_requested", False),
        database_scope=data.get("database_scope"),
        session_id=data.get("session_id", "default"),
    )
