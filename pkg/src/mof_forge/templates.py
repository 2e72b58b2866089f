"""Plan templates and the parameter default table.

Templates are data, not code: each entry lists the jobs of one per-material
unit, the intra-unit dependency edges (by role), the parameters each job
needs, and optional analysis-only jobs. New task kinds are added here without
touching the planner.

Young's-modulus-style deformed-structure generation and reaction-pathway image
construction are deliberately unsupported: both need structure preparation
beyond input generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .intent import TaskKind


@dataclass(frozen=True)
class JobTemplate:
    role: str
    tool: str
    task: str
    params: tuple[str, ...] = ()
    target: str = "material"  # "material" | "guest" — what the job's structure is


@dataclass(frozen=True)
class PlanTemplate:
    jobs: tuple[JobTemplate, ...]
    edges: tuple[tuple[str, str], ...] = ()
    analysis_jobs: tuple[JobTemplate, ...] = ()
    analysis_edges: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class DefaultTable:
    """Immutable map (task_kind, parameter) -> (value, unit). Every applied
    default is echoed into Plan.applied_defaults."""

    entries: dict = field(default_factory=dict)

    def get(self, task: str, parameter: str):
        return self.entries.get((task, parameter))


_GEOMETRY_COMMON = ("probe_radius_A", "samples")

TEMPLATES: dict[TaskKind, PlanTemplate] = {
    TaskKind.SURFACE_AREA: PlanTemplate(
        jobs=(JobTemplate("geometry", "geometry", "surface_area", _GEOMETRY_COMMON),),
    ),
    TaskKind.PORE_DIAMETER: PlanTemplate(
        jobs=(JobTemplate("geometry", "geometry", "pore_diameter"),),
    ),
    TaskKind.PORE_VOLUME: PlanTemplate(
        jobs=(JobTemplate("geometry", "geometry", "pore_volume", _GEOMETRY_COMMON),),
    ),
    TaskKind.PORE_SIZE_DISTRIBUTION: PlanTemplate(
        jobs=(JobTemplate("geometry", "geometry", "pore_size_distribution", _GEOMETRY_COMMON),),
    ),
    TaskKind.GCMC_UPTAKE: PlanTemplate(
        jobs=(JobTemplate("gcmc", "gcmc", "gcmc_uptake",
                          ("guest", "temperature_K", "pressure_Pa",
                           "cycles_init", "cycles_prod", "cutoff_A")),),
    ),
    TaskKind.HENRY_COEFFICIENT: PlanTemplate(
        jobs=(JobTemplate("gcmc", "gcmc", "henry_coefficient",
                          ("guest", "temperature_K", "cycles_prod", "cutoff_A")),),
    ),
    TaskKind.DIFFUSION_COEFFICIENT: PlanTemplate(
        jobs=(JobTemplate("md", "md", "diffusion_coefficient",
                          ("guest", "temperature_K", "timestep_fs", "steps",
                           "ensemble", "cutoff_A")),),
    ),
    TaskKind.INTERACTION_ENERGY: PlanTemplate(
        jobs=(JobTemplate("md", "md", "interaction_energy",
                          ("guest", "temperature_K", "timestep_fs", "steps",
                           "ensemble", "cutoff_A")),),
    ),
    TaskKind.RDF: PlanTemplate(
        jobs=(JobTemplate("md", "md", "rdf",
                          ("guest", "temperature_K", "timestep_fs", "steps",
                           "ensemble", "cutoff_A")),),
    ),
    TaskKind.BINDING_ENERGY: PlanTemplate(
        jobs=(
            JobTemplate("host-opt", "dft", "geometry_optimization"),
            JobTemplate("guest-opt", "dft", "geometry_optimization", (), target="guest"),
            JobTemplate("prescreen", "mlip", "prescreen", ("guest", "n_configs", "seed")),
            JobTemplate("complex-opt", "dft", "complex_optimization",
                        ("guest", "n_configs", "seed")),
            JobTemplate("binding", "dft", "binding_energy", ("guest", "n_configs", "seed")),
        ),
        edges=(
            ("host-opt", "prescreen"),
            ("guest-opt", "prescreen"),
            ("prescreen", "complex-opt"),
            ("complex-opt", "binding"),
        ),
        analysis_jobs=(
            JobTemplate("charge-density", "dft", "charge_density", ("guest",)),
            JobTemplate("bader", "dft", "bader_charge", ("guest",)),
        ),
        analysis_edges=(("charge-density", "bader"),),
    ),
    TaskKind.BAND_GAP: PlanTemplate(
        jobs=(JobTemplate("dft", "dft", "band_gap"),),
    ),
    TaskKind.GEOMETRY_OPTIMIZATION: PlanTemplate(
        jobs=(JobTemplate("dft", "dft", "geometry_optimization"),),
    ),
    TaskKind.BADER_CHARGE: PlanTemplate(
        jobs=(
            JobTemplate("charge-density", "dft", "charge_density", ("guest",)),
            JobTemplate("bader", "dft", "bader_charge", ("guest",)),
        ),
        edges=(("charge-density", "bader"),),
    ),
    TaskKind.SCREENING: PlanTemplate(
        jobs=(JobTemplate("screen", "screening", "screening",
                          ("objective", "downstream", "top_n", "eval_top")),),
    ),
}

# Conventional values; only the geometry probe radius is an upstream-published
# default. All are overridable from the query and echoed in applied_defaults.
DEFAULTS = DefaultTable({
    ("surface_area", "probe_radius_A"): (1.2, "A"),
    ("surface_area", "samples"): (2000, ""),
    ("pore_volume", "probe_radius_A"): (1.2, "A"),
    ("pore_volume", "samples"): (2000, ""),
    ("pore_size_distribution", "probe_radius_A"): (1.2, "A"),
    ("pore_size_distribution", "samples"): (2000, ""),
    ("gcmc_uptake", "temperature_K"): (298.0, "K"),
    ("gcmc_uptake", "pressure_Pa"): (100000.0, "Pa"),
    ("gcmc_uptake", "cycles_init"): (10000, ""),
    ("gcmc_uptake", "cycles_prod"): (10000, ""),
    ("gcmc_uptake", "cutoff_A"): (12.0, "A"),
    ("henry_coefficient", "temperature_K"): (298.0, "K"),
    ("henry_coefficient", "cycles_prod"): (10000, ""),
    ("henry_coefficient", "cutoff_A"): (12.0, "A"),
    ("diffusion_coefficient", "temperature_K"): (298.0, "K"),
    ("diffusion_coefficient", "timestep_fs"): (1.0, "fs"),
    ("diffusion_coefficient", "steps"): (100000, ""),
    ("diffusion_coefficient", "ensemble"): ("nvt", ""),
    ("diffusion_coefficient", "cutoff_A"): (12.0, "A"),
    ("interaction_energy", "temperature_K"): (298.0, "K"),
    ("interaction_energy", "timestep_fs"): (1.0, "fs"),
    ("interaction_energy", "steps"): (100000, ""),
    ("interaction_energy", "ensemble"): ("nvt", ""),
    ("interaction_energy", "cutoff_A"): (12.0, "A"),
    ("rdf", "temperature_K"): (298.0, "K"),
    ("rdf", "timestep_fs"): (1.0, "fs"),
    ("rdf", "steps"): (100000, ""),
    ("rdf", "ensemble"): ("nvt", ""),
    ("rdf", "cutoff_A"): (12.0, "A"),
    ("prescreen", "n_configs"): (10, ""),
    ("prescreen", "seed"): (42, ""),
    ("complex_optimization", "n_configs"): (10, ""),
    ("complex_optimization", "seed"): (42, ""),
    ("binding_energy", "n_configs"): (10, ""),
    ("binding_energy", "seed"): (42, ""),
    ("screening", "top_n"): (1000, ""),
    ("screening", "eval_top"): (10, ""),
    ("screening", "downstream"): ("gcmc", ""),
})

# Per-tool core requests; the pool caps actual grants.
CORE_DEFAULTS = {
    "geometry": 1,
    "gcmc": 2,
    "md": 4,
    "dft": 8,
    "mlip": 2,
    "screening": 1,
    "report": 1,
}

# Parameters a query can express directly; everything else is plumbing whose
# defaults are still echoed.
INTENT_PARAMS = {"guest", "temperature_K", "pressure_Pa", "probe_radius_A"}
