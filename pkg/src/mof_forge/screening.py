"""Hierarchical candidate screening over descriptor tables.

A funnel is an ordered sequence of filters, cheapest first: validity flag,
atom-count limit (stricter for dft downstreams than for gcmc), geometric
accessibility (pore-limiting diameter against the guest's kinetic probe
diameter), and a final ranking by a low-cost descriptor correlated with the
objective. Counts are recorded per stage; the shortlist feeds detailed
simulation. All evaluation is pure over immutable row dicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingDescriptor, NoSurrogate

# Kinetic probe diameters (Angstrom); shipped as data, provenance in
# fixtures/PROVENANCE.md.
PROBE_DIAMETERS = {
    "CH4": 3.8,
    "CO2": 3.3,
    "N2": 3.64,
    "H2": 2.89,
    "O2": 3.46,
    "H2O": 2.65,
}

# Atom-count ceilings by downstream workflow.
ATOM_LIMITS = {
    "dft": 300,
    "gcmc": 1000,
    "md": 2000,
}

# objective -> (ranking descriptor column, guest species)
OBJECTIVES = {
    "ch4-uptake": ("henry_CH4", "CH4"),
    "co2-uptake": ("henry_CO2", "CO2"),
    "n2-uptake": ("henry_N2", "N2"),
    "h2-uptake": ("henry_H2", "H2"),
    "co2-binding-energy": ("henry_CO2", "CO2"),
}


@dataclass(frozen=True)
class FilterStage:
    stage_id: str
    kind: str  # validity | atom_count | accessibility | descriptor_rank
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScreeningConfig:
    objective: str
    downstream_workflow: str
    stages: tuple[FilterStage, ...]

    def __post_init__(self):
        ranks = [i for i, s in enumerate(self.stages) if s.kind == "descriptor_rank"]
        if len(ranks) > 1 or (ranks and ranks[0] != len(self.stages) - 1):
            raise ValueError("descriptor_rank must appear at most once, as the final stage")
        if self.downstream_workflow == "dft":
            atom_stages = [s for s in self.stages if s.kind == "atom_count"]
            if not atom_stages or atom_stages[0].params["max_atoms"] > 300:
                raise ValueError("dft downstream requires an atom_count stage <= 300")


@dataclass
class FunnelReport:
    stages: list[tuple[str, int, int]]  # (stage_id, input_count, output_count)
    survivors: list[str]                # ids passing every non-rank stage
    shortlist: list[str]                # ordered top-n by the rank descriptor


def configure_funnel(objective: str, downstream: str, evidence,
                     top_n: int = 1000) -> ScreeningConfig:
    """Stages ordered cheapest-first, parameterized from the objective (probe
    = guest kinetic diameter) and the downstream workflow (atom limit).
    Retrieval evidence is recorded but never overrides the registry."""
    del evidence  # heuristics come from the registry; hits are advisory
    entry = OBJECTIVES.get(objective.lower())
    if entry is None:
        raise NoSurrogate(f"objective {objective!r} has no registered "
                          f"low-cost ranking descriptor")
    rank_descriptor, guest = entry
    max_atoms = ATOM_LIMITS.get(downstream, ATOM_LIMITS["gcmc"])
    stages = (
        FilterStage("validity", "validity"),
        FilterStage("atom-count", "atom_count", {"max_atoms": max_atoms}),
        FilterStage("accessibility", "accessibility",
                    {"probe_diameter_A": PROBE_DIAMETERS[guest], "guest": guest}),
        FilterStage("henry-rank", "descriptor_rank",
                    {"rank_descriptor": rank_descriptor, "top_n": top_n}),
    )
    return ScreeningConfig(objective=objective.lower(),
                           downstream_workflow=downstream, stages=stages)


def _require(row: dict, fieldname: str):
    value = row.get(fieldname)
    if value is None:
        raise MissingDescriptor(row.get("structure_id", "?"), fieldname)
    return value


def _stage_predicate(stage: FilterStage, row: dict) -> bool:
    if stage.kind == "validity":
        return bool(_require(row, "valid"))
    if stage.kind == "atom_count":
        return int(_require(row, "atom_count")) <= stage.params["max_atoms"]
    if stage.kind == "accessibility":
        return float(_require(row, "pld")) >= stage.params["probe_diameter_A"]
    raise ValueError(f"unknown stage kind {stage.kind!r}")


def run_funnel(db: list[dict], config: ScreeningConfig) -> FunnelReport:
    """Apply stages in order, recording exact input/output counts. The
    shortlist is sorted by the rank descriptor descending with structure_id
    tie-break, so row permutations cannot change it."""
    current = list(db)
    stages: list[tuple[str, int, int]] = []
    shortlist: list[str] = []
    survivors: list[str] = [r["structure_id"] for r in current]

    for stage in config.stages:
        n_in = len(current)
        if stage.kind == "descriptor_rank":
            descriptor = stage.params["rank_descriptor"]
            keyed = [(-float(_require(row, descriptor)), row["structure_id"])
                     for row in current]
            keyed.sort()
            shortlist = [sid for _neg, sid in keyed[:stage.params["top_n"]]]
            stages.append((stage.stage_id, n_in, len(shortlist)))
        else:
            current = [row for row in current if _stage_predicate(stage, row)]
            survivors = [r["structure_id"] for r in current]
            stages.append((stage.stage_id, n_in, len(current)))
    return FunnelReport(stages=stages, survivors=survivors, shortlist=shortlist)


@dataclass
class OverlapReport:
    overlap: int
    funnel_top: list[str]
    exhaustive_top: list[str]


def shortlist_vs_exhaustive(db: list[dict], config: ScreeningConfig,
                            evaluator, top: int = 10) -> OverlapReport:
    """Compare top candidates from funnel-then-evaluate against evaluating
    every valid row with the expensive metric."""
    report = run_funnel(db, config)
    by_id = {row["structure_id"]: row for row in db}

    def top_ids(ids):
        scored = sorted(((-float(evaluator(by_id[sid])), sid) for sid in ids))
        return [sid for _neg, sid in scored[:top]]

    funnel_top = top_ids(report.shortlist)
    valid_ids = [row["structure_id"] for row in db if row.get("valid")]
    exhaustive_top = top_ids(valid_ids)
    return OverlapReport(
        overlap=len(set(funnel_top) & set(exhaustive_top)),
        funnel_top=funnel_top,
        exhaustive_top=exhaustive_top,
    )


# --- descriptor table I/O ---------------------------------------------------------

def load_descriptor_table(path: Path | str) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    rows: list[dict] = []
    for line in lines[1:]:
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        row: dict = {}
        for key, raw in zip(header, parts):
            if key == "structure_id":
                row[key] = raw
            elif key == "valid":
                row[key] = raw.lower() == "true"
            elif key == "atom_count":
                row[key] = int(raw)
            else:
                row[key] = float(raw) if raw != "" else None
        rows.append(row)
    return rows


def report_to_dict(report: FunnelReport) -> dict:
    return {
        "stages": [
            {"stage_id": sid, "input_count": n_in, "output_count": n_out}
            for sid, n_in, n_out in report.stages
        ],
        "survivor_count": len(report.survivors),
        "shortlist_size": len(report.shortlist),
        "shortlist": report.shortlist,
    }
