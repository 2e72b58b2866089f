"""Tool input-deck generation and rendering.

One documented grammar per tool (see ``docs/decks.md``): geometry decks render
as a single argv-style command line; gcmc/md/dft/mlip/screening decks render
as ``KEY value`` files in fixed key order. Rendering is byte-stable and
``render(parse(render(deck)))`` is an identity.

Key precedence when a deck is generated:
``correction > reference_settings > intent > retrieved_evidence > default``.
Corrections enter later through the guard; everything else is resolved here
and every key carries exactly one provenance tag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import SchemaViolation, UnknownTool
from .intent import ReferenceSettings

PROBE_TASKS = frozenset({"surface_area", "pore_volume", "pore_size_distribution"})
GUEST_DFT_TASKS = frozenset({"complex_optimization", "binding_energy",
                             "charge_density", "bader_charge"})
SAMPLED_DFT_TASKS = frozenset({"complex_optimization", "binding_energy"})

# Sources a deck key may carry; order encodes precedence, strongest first.
PROVENANCE_ORDER = ("correction", "reference_settings", "intent",
                    "retrieved_evidence", "default")


@dataclass(frozen=True)
class DeckKey:
    name: str
    required: bool = True
    only_tasks: frozenset[str] | None = None

    def applies(self, task: str) -> bool:
        return self.only_tasks is None or task in self.only_tasks


SCHEMAS: dict[str, tuple[DeckKey, ...]] = {
    "geometry": (
        DeckKey("task"),
        DeckKey("structure"),
        DeckKey("probe_radius_A", only_tasks=PROBE_TASKS),
        DeckKey("samples", only_tasks=PROBE_TASKS),
    ),
    "gcmc": (
        DeckKey("task"),
        DeckKey("structure"),
        DeckKey("guest"),
        DeckKey("temperature_K"),
        DeckKey("pressure_Pa", only_tasks=frozenset({"gcmc_uptake"})),
        DeckKey("cycles_init", required=False),
        DeckKey("cycles_prod"),
        DeckKey("forcefield"),
        DeckKey("cutoff_A"),
        DeckKey("charges"),
    ),
    "md": (
        DeckKey("task"),
        DeckKey("structure"),
        DeckKey("guest"),
        DeckKey("ensemble"),
        DeckKey("temperature_K"),
        DeckKey("timestep_fs"),
        DeckKey("steps"),
        DeckKey("pair_style"),
        DeckKey("kspace_style", required=False),
        DeckKey("forcefield"),
    ),
    "dft": (
        DeckKey("task"),
        DeckKey("structure"),
        DeckKey("guest", only_tasks=GUEST_DFT_TASKS),
        DeckKey("functional"),
        DeckKey("encut_eV"),
        DeckKey("kpoints"),
        DeckKey("convergence_eV"),
        DeckKey("n_configs", only_tasks=SAMPLED_DFT_TASKS),
        DeckKey("seed", only_tasks=SAMPLED_DFT_TASKS),
    ),
    "mlip": (
        DeckKey("task"),
        DeckKey("structure"),
        DeckKey("guest"),
        DeckKey("n_configs"),
        DeckKey("seed"),
    ),
    "screening": (
        DeckKey("task"),
        DeckKey("objective"),
        DeckKey("database"),
        DeckKey("downstream"),
        DeckKey("top_n"),
        DeckKey("eval_top"),
    ),
}

# Deck-only keys with system-consistent fallbacks (planner defaults cover the
# physical parameters; these cover tool plumbing).
_DECK_DEFAULTS: dict[tuple[str, str], object] = {
    ("gcmc", "forcefield"): "uff",
    ("md", "forcefield"): "uff",
    ("dft", "functional"): "pbe-d3",
    ("dft", "encut_eV"): 520.0,
    ("dft", "kpoints"): "gamma",
    ("dft", "convergence_eV"): 1e-06,
    ("screening", "downstream"): "gcmc",
}


@dataclass
class InputDeck:
    tool: str
    task: str
    sections: list[tuple[str, object]] = field(default_factory=list)
    structure_refs: list[str] = field(default_factory=list)
    forcefield_refs: list[str] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default=None):
        for k, v in self.sections:
            if k == key:
                return v
        return default

    def set(self, key: str, value: object, provenance: str) -> "InputDeck":
        """Copy with one key replaced (or appended in schema order)."""
        sections = [(k, v) for k, v in self.sections if k != key]
        schema_order = [k.name for k in SCHEMAS.get(self.tool, ())]
        sections.append((key, value))
        if schema_order:
            sections.sort(key=lambda kv: schema_order.index(kv[0])
                          if kv[0] in schema_order else len(schema_order))
        prov = dict(self.provenance)
        prov[key] = provenance
        return replace(self, sections=sections, provenance=prov)


def fmt_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(text: str) -> object:
    if re.fullmatch(r"[-+]?\d+", text):
        return int(text)
    if re.fullmatch(r"[-+]?\d*\.\d+(?:[eE][-+]?\d+)?|[-+]?\d+(?:\.\d*)?[eE][-+]?\d+",
                    text):
        return float(text)
    return text


def _evidence_suggestions(evidence) -> dict[str, object]:
    """Extract whitelisted deck keys from retrieval hits. Only the force-field
    family and the cutoff may flow in from retrieved text."""
    out: dict[str, object] = {}
    for hit in evidence or ():
        text = getattr(hit, "text", None) or str(hit)
        m = re.search(r"force[- ]?field[:= ]+([A-Za-z0-9_/-]+)", text, re.IGNORECASE)
        if m and "forcefield" not in out:
            out["forcefield"] = m.group(1).lower()
        m = re.search(r"cutoff[:= ]+(\d+(?:\.\d+)?)", text, re.IGNORECASE)
        if m and "cutoff_A" not in out:
            out["cutoff_A"] = float(m.group(1))
    return out


def _compose_pair_style(style: str, cutoff: float | None) -> str:
    if re.search(r"\s\d", style):
        return style  # cutoff already embedded
    return f"{style} {fmt_value(float(cutoff if cutoff is not None else 12.0))}"


def generate_deck(job, structures: dict, forcefields: dict,
                  refs: ReferenceSettings | None = None,
                  evidence=None) -> InputDeck:
    """Build a schema-valid deck for one job.

    ``structures`` maps ids to structure or molecule records (used for the
    electrostatics flag and reference checks); ``forcefields`` maps species to
    site parameter lists.
    """
    schema = SCHEMAS.get(job.tool)
    if schema is None:
        raise UnknownTool(f"no deck schema for tool {job.tool!r}")

    refs = refs or ReferenceSettings()
    suggestions = _evidence_suggestions(evidence)

    structure_id = job.materials[0] if job.materials else None
    guest = job.spec.get("guest")
    guest_rec = structures.get(guest) if guest else None
    polar = bool(guest_rec and getattr(guest_rec, "requires_electrostatics", False))

    sections: list[tuple[str, object]] = []
    provenance: dict[str, str] = {}

    def put(key: str, value: object, source: str) -> None:
        sections.append((key, value))
        provenance[key] = source

    for dk in schema:
        if not dk.applies(job.task):
            continue
        key = dk.name
        if key == "task":
            put(key, job.task, "intent")
        elif key == "structure":
            if structure_id is None:
                raise SchemaViolation(f"{job.job_id}: job has no structure")
            put(key, structure_id, "intent")
        elif key == "pair_style":
            if "pair_style" in refs.entries:
                put(key, _compose_pair_style(str(refs.entries["pair_style"]),
                                             refs.entries.get("cutoff")),
                    "reference_settings")
            else:
                style = "lj/cut/coul/long" if polar else "lj/cut"
                cutoff = job.spec.get("cutoff_A", suggestions.get("cutoff_A", 12.0))
                put(key, _compose_pair_style(style, float(cutoff)), "default")
        elif key == "kspace_style":
            style = str(dict(sections).get("pair_style", ""))
            if "coul/long" in style:
                put(key, "pppm 0.0001", "default")
        elif key == "charges":
            put(key, "on" if polar else "off", "default")
        elif key in job.spec:
            source = job.spec_sources.get(key, "intent")
            put(key, job.spec[key], source)
        elif key in suggestions:
            put(key, suggestions[key], "retrieved_evidence")
        elif (job.tool, key) in _DECK_DEFAULTS:
            put(key, _DECK_DEFAULTS[(job.tool, key)], "default")
        elif dk.required:
            raise SchemaViolation(
                f"{job.job_id}: mandatory key {key!r} has no value for "
                f"tool {job.tool!r}, task {job.task!r}")

    deck = InputDeck(
        tool=job.tool,
        task=job.task,
        sections=sections,
        structure_refs=[structure_id] if structure_id else [],
        forcefield_refs=[guest] if guest else [],
        provenance=provenance,
    )
    check_schema(deck)
    if structure_id is not None and structure_id not in structures:
        raise SchemaViolation(f"deck references unknown structure {structure_id!r}")
    return deck


def check_schema(deck: InputDeck) -> None:
    schema = SCHEMAS.get(deck.tool)
    if schema is None:
        raise UnknownTool(f"no deck schema for tool {deck.tool!r}")
    present = {k for k, _ in deck.sections}
    for dk in schema:
        if dk.required and dk.applies(deck.task) and dk.name not in present:
            raise SchemaViolation(f"deck missing mandatory key {dk.name!r}")
    allowed = {dk.name for dk in schema}
    unknown = present - allowed
    if unknown:
        raise SchemaViolation(f"deck has keys outside schema: {sorted(unknown)}")
    missing_prov = present - set(deck.provenance)
    if missing_prov:
        raise SchemaViolation(f"keys without provenance: {sorted(missing_prov)}")


# --- rendering ----------------------------------------------------------------

_GEOMETRY_FLAGS = {
    "surface_area": ("-sa", "sa"),
    "pore_diameter": ("-res", "res"),
    "pore_volume": ("-vol", "vol"),
    "pore_size_distribution": ("-psd", "psd"),
}


def render_deck(deck: InputDeck) -> str:
    """Byte-stable text form. Geometry decks are one command line; all other
    tools are keyword files, one ``KEY value`` per line in schema order."""
    if deck.tool == "geometry":
        flag, ext = _GEOMETRY_FLAGS[deck.task]
        structure = deck.get("structure")
        parts = ["network", "-ha", flag]
        if deck.task in PROBE_TASKS:
            probe = fmt_value(float(deck.get("probe_radius_A")))
            parts += [probe, probe, fmt_value(deck.get("samples"))]
        parts += [f"{structure}.cif", f"{structure}.{ext}"]
        return " ".join(parts) + "\n"
    lines = [f"{key} {fmt_value(value)}" for key, value in deck.sections]
    return "\n".join(lines) + "\n"


def parse_deck(text: str, tool: str) -> InputDeck:
    """Inverse of render_deck. Provenance cannot be recovered from text; all
    keys are tagged ``default``."""
    if tool == "geometry":
        return _parse_geometry_line(text)
    sections: list[tuple[str, object]] = []
    task = ""
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        value: object = _coerce(rest) if " " not in rest else rest
        if key == "task":
            task = str(value)
        sections.append((key, value))
    deck = InputDeck(tool=tool, task=task, sections=sections,
                     provenance={k: "default" for k, _ in sections})
    return deck


def _parse_geometry_line(text: str) -> InputDeck:
    parts = text.split()
    if not parts or parts[0] != "network":
        raise SchemaViolation(f"not a geometry command line: {text!r}")
    flag = parts[2]
    task = next(t for t, (f, _) in _GEOMETRY_FLAGS.items() if f == flag)
    sections: list[tuple[str, object]] = [("task", task)]
    if task in PROBE_TASKS:
        probe, _probe2, samples = parts[3], parts[4], parts[5]
        structure = parts[6].rsplit(".", 1)[0]
        sections += [("structure", structure),
                     ("probe_radius_A", float(probe)),
                     ("samples", int(samples))]
    else:
        structure = parts[3].rsplit(".", 1)[0]
        sections.append(("structure", structure))
    order = [k.name for k in SCHEMAS["geometry"]]
    sections.sort(key=lambda kv: order.index(kv[0]))
    return InputDeck(tool="geometry", task=task, sections=sections,
                     provenance={k: "default" for k, _ in sections})
