#!/usr/bin/env python3
"""Regenerate the fixture tree under fixtures/.

Everything is deterministic: synthetic structure cells come from per-id RNG
seeds, the screening table is constructed to reproduce the documented funnel
counts (3786 -> 3776 -> 3771 -> 1878 -> 1000), and replay rows for sampled
tasks are computed with the package's own surrogates so replay and model
modes agree where both are defined. Reference values and their citations are
listed in fixtures/PROVENANCE.md.

Usage: python scripts/build_fixtures.py [--root fixtures]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mof_forge.structdb import Atom, Lattice, StructureRecord, dump_structure  # noqa: E402
from mof_forge.toolkit import canonical_conditions, conditions_hash  # noqa: E402

MOLAR_VOLUME = 22.4136  # cm3(STP)/g per mol/kg


# --- molecules -----------------------------------------------------------------

MOLECULES = {
    "CO2": {
        "atoms": [("O", 0.0, 0.0, -1.16, -0.35),
                  ("C", 0.0, 0.0, 0.0, 0.70),
                  ("O", 0.0, 0.0, 1.16, -0.35)],
        "electrostatics": True,
    },
    "CH4": {
        "atoms": [("C", 0.0, 0.0, 0.0, 0.0)],
        "electrostatics": False,
    },
    "N2": {
        "atoms": [("N", 0.0, 0.0, -0.55, 0.0), ("N", 0.0, 0.0, 0.55, 0.0)],
        "electrostatics": False,
    },
    "H2": {
        "atoms": [("H", 0.0, 0.0, -0.37, 0.0), ("H", 0.0, 0.0, 0.37, 0.0)],
        "electrostatics": False,
    },
    "O2": {
        "atoms": [("O", 0.0, 0.0, -0.6, 0.0), ("O", 0.0, 0.0, 0.6, 0.0)],
        "electrostatics": False,
    },
    "H2O": {
        "atoms": [("O", 0.0, 0.0, 0.0655, -0.8476),
                  ("H", 0.7572, 0.0, -0.5219, 0.4238),
                  ("H", -0.7572, 0.0, -0.5219, 0.4238)],
        "electrostatics": True,
    },
}

# species, site, epsilon/kB (K), sigma (A), charge (e), source tag
FORCEFIELD_ROWS = [
    ("CH4", "C", 148.0, 3.73, 0.0, "trappe-ua"),
    ("CO2", "C", 27.0, 2.80, 0.70, "trappe"),
    ("CO2", "O", 79.0, 3.05, -0.35, "trappe"),
    ("N2", "N", 36.0, 3.31, 0.0, "trappe-simplified"),
    ("H2", "H", 12.0, 2.72, 0.0, "fixture"),
    ("O2", "O", 49.0, 3.02, 0.0, "trappe-simplified"),
    ("H2O", "O", 78.2, 3.17, -0.8476, "spc-e"),
    ("H2O", "H", 0.0, 1.0, 0.4238, "spc-e"),
    ("C", "C", 52.8, 3.43, 0.0, "uff"),
    ("H", "H", 22.1, 2.57, 0.0, "uff"),
    ("O", "O", 30.2, 3.12, 0.0, "uff"),
    ("N", "N", 34.7, 3.26, 0.0, "uff"),
    ("Zn", "Zn", 62.4, 2.46, 0.0, "uff"),
    ("Cu", "Cu", 2.5, 3.11, 0.0, "uff"),
    ("Zr", "Zr", 34.7, 2.78, 0.0, "uff"),
    ("Mg", "Mg", 55.9, 2.69, 0.0, "uff"),
    ("Al", "Al", 254.1, 4.01, 0.0, "uff"),
]

_ELEMENT_CHARGES = {"Zr": 1.2, "Cu": 1.0, "Zn": 1.0, "Mg": 1.1, "Al": 1.3,
                    "O": -0.6, "N": -0.4, "C": 0.1, "H": 0.05}


# --- structures ------------------------------------------------------------------

# id -> (names, formula, palette, cell edge, atom count, descriptors)
STRUCTURES = {
    "RUBTAK": (["UiO-66", "UiO66", "Zr-BDC"], "Zr6O32C48H28",
               ["Zr", "O", "C", "H"], 14.7, 16, {
        "surface_area": (1946.02, "m2/g"),
        "pld": (6.0, "A"), "lcd": (8.6, "A"),
        "pore_volume": (0.45, "cm3/g"),
        "henry_CO2": (2.1e-06, "mol/kg/Pa"), "qsat_CO2": (8.0, "mol/kg"),
        "henry_CH4": (8.0e-07, "mol/kg/Pa"), "qsat_CH4": (6.5, "mol/kg"),
        "diff_CO2": (5.9e-06, "cm2/s"), "diff_ea_CO2": (900.0, "K"),
        "band_gap": (4.0, "eV"), "energy_total": (-180.0, "eV"),
        "binding_CO2": (-0.38, "eV"), "bader_CO2": (-0.04, "e"),
        "accessible_CH4": (1.0, ""), "accessible_CO2": (1.0, ""),
    }),
    "FIQCEN": (["HKUST-1", "HKUST1", "Cu-BTC"], "Cu3C18H6O12",
               ["Cu", "O", "C", "H"], 15.2, 14, {
        "surface_area": (1850.0, "m2/g"),
        "pld": (6.9, "A"), "lcd": (13.2, "A"),
        "henry_CO2": (3.5e-06, "mol/kg/Pa"), "qsat_CO2": (10.0, "mol/kg"),
        "energy_total": (-150.0, "eV"),
        "binding_CO2": (-0.45, "eV"), "bader_CO2": (-0.08, "e"),
    }),
    "VELVOY": (["ZIF-8", "ZIF8"], "ZnC8H10N4",
               ["Zn", "N", "C", "H"], 14.0, 14, {
        "surface_area": (1300.0, "m2/g"),
        "pld": (3.4, "A"), "lcd": (11.6, "A"),
        "henry_CO2": (9.0e-07, "mol/kg/Pa"), "qsat_CO2": (7.0, "mol/kg"),
        "energy_total": (-120.0, "eV"),
        "binding_CO2": (-0.27, "eV"), "bader_CO2": (-0.03, "e"),
    }),
    "PUPJER": (["PUPJER-clean"], "MgC10H4O8", ["Mg", "O", "C", "H"], 16.5, 12,
               {"lcd": (11.35, "A"), "pld": (6.2, "A"),
                "surface_area": (2100.0, "m2/g")}),
    "RUPTED": (["RUPTED-clean"], "ZnC12H8O6", ["Zn", "O", "C", "H"], 12.4, 12,
               {"lcd": (4.59, "A"), "pld": (3.1, "A")}),
    "NORPIV": (["NORPIV-clean"], "CuC14H8O8", ["Cu", "O", "C", "H"], 12.8, 12,
               {"pld": (3.55, "A"), "lcd": (5.4, "A")}),
    "NUYQUU": (["NUYQUU-clean"], "AlC16H10O8", ["Al", "O", "C", "H"], 13.1, 12,
               {"pld": (3.47, "A"), "lcd": (5.1, "A"),
                "band_gap": (2.90, "eV")}),
    "CICYIX": ([], "ZnC22H14N2O6", ["Zn", "O", "C", "N"], 15.8, 14,
               {"henry_N2": (3.7e-07, "mol/kg/Pa"), "qsat_N2": (6.0, "mol/kg"),
                "surface_area": (1500.0, "m2/g"), "pld": (5.2, "A"),
                "lcd": (7.7, "A")}),
    "FIGXEY": ([], "CuC20H12O10", ["Cu", "O", "C", "H"], 16.9, 14,
               {"henry_N2": (8.0e-07, "mol/kg/Pa"), "qsat_N2": (9.0, "mol/kg"),
                "surface_area": (2350.0, "m2/g"), "pld": (7.4, "A"),
                "lcd": (10.9, "A")}),
    "tobmof-7165": ([], "ZnC24H16O8", ["Zn", "O", "C", "H"], 17.3, 14,
                    {"henry_CH4": (2.5e-06, "mol/kg/Pa"),
                     "qsat_CH4": (10.0, "mol/kg"),
                     "henry_H2": (1.0e-07, "mol/kg/Pa"),
                     "qsat_H2": (8.0, "mol/kg"),
                     "pld": (8.3, "A"), "lcd": (12.6, "A")}),
    "tobmof-7187": ([], "CuC26H18O8", ["Cu", "O", "C", "H"], 17.9, 14,
                    {"henry_CH4": (3.2e-06, "mol/kg/Pa"),
                     "qsat_CH4": (12.0, "mol/kg"),
                     "henry_H2": (1.3e-07, "mol/kg/Pa"),
                     "qsat_H2": (9.5, "mol/kg"),
                     "pld": (9.0, "A"), "lcd": (13.8, "A")}),
    "BUKRUW01": ([], "ZnC18H12N4O4", ["Zn", "N", "C", "O"], 14.6, 14,
                 {"diff_O2": (2.66e-04, "cm2/s"), "diff_ea_O2": (700.0, "K"),
                  "pld": (4.8, "A"), "lcd": (6.9, "A")}),
    "MAPCIP": ([], "MgC16H10O10", ["Mg", "O", "C", "H"], 14.9, 14,
               {"diff_O2": (3.01e-04, "cm2/s"), "diff_ea_O2": (650.0, "K"),
                "pld": (5.0, "A"), "lcd": (7.2, "A")}),
    "GUXQAR": ([], "CuC12H6N2O6", ["Cu", "N", "C", "O"], 13.4, 12,
               {"band_gap": (0.07, "eV")}),
    "RURPAW": ([], "ZnC14H8N2O5", ["Zn", "N", "C", "O"], 13.9, 12,
               {"band_gap": (1.14, "eV")}),
    "GIFKEL": ([], "MgC12H6O8", ["Mg", "O", "C", "H"], 14.2, 14,
               {"band_gap": (3.19, "eV"), "energy_total": (-140.0, "eV"),
                "binding_CO2": (-0.20, "eV"), "binding_H2O": (-0.48, "eV"),
                "bader_CO2": (-0.05, "e"), "bader_H2O": (-0.09, "e")}),
    "GAYGAQ": ([], "AlC14H8O9", ["Al", "O", "C", "H"], 14.8, 14,
               {"energy_total": (-160.0, "eV"),
                "binding_CO2": (-0.32, "eV"), "binding_H2O": (-0.33, "eV"),
                "bader_CO2": (-0.06, "e"), "bader_H2O": (-0.10, "e")}),
}


def _place_atoms(structure_id: str, palette: list[str], edge: float,
                 count: int) -> list[Atom]:
    # per-id seed independent of PYTHONHASHSEED
    rng = np.random.default_rng(
        int.from_bytes(structure_id.encode(), "big") % (2**31))
    positions: list[np.ndarray] = []
    atoms: list[Atom] = []
    min_sep_frac = 2.2 / edge
    i = 0
    while len(atoms) < count:
        frac = rng.random(3)
        ok = True
        for other in positions:
            delta = frac - other
            delta -= np.round(delta)
            if float(np.linalg.norm(delta * edge)) < min_sep_frac * edge:
                ok = False
                break
        if not ok:
            continue
        element = palette[i % len(palette)]
        positions.append(frac)
        atoms.append(Atom(element=element,
                          x=round(float(frac[0]), 6),
                          y=round(float(frac[1]), 6),
                          z=round(float(frac[2]), 6),
                          charge=_ELEMENT_CHARGES.get(element, 0.0)))
        i += 1
    return atoms


def build_structure(structure_id: str, spec) -> StructureRecord:
    names, formula, palette, edge, count, descriptors = spec
    return StructureRecord(
        structure_id=structure_id,
        names=names,
        formula=formula,
        atom_count=count,
        lattice=Lattice(edge, edge, edge, 90.0, 90.0, 90.0),
        atoms=_place_atoms(structure_id, palette, edge, count),
        descriptors=dict(descriptors),
        valid=True,
    )


# --- screening table ---------------------------------------------------------------

def build_screening_table(rng: np.random.Generator):
    """3,786 rows constructed so the documented thresholds give
    3,776 valid -> 3,771 small enough -> 1,878 accessible -> top 1,000."""
    n = 3786
    ids = [f"MOF-{i:06d}" for i in range(1, n + 1)]
    order = rng.permutation(n)
    invalid = set(order[:10].tolist())
    big = set(order[10:15].tolist())
    blocked = set(order[15:15 + 1893].tolist())

    rows = []
    for i, sid in enumerate(ids):
        valid = i not in invalid
        atom_count = int(rng.integers(1001, 3000)) if i in big \
            else int(rng.integers(40, 1000))
        if i in blocked:
            pld = round(float(rng.uniform(2.0, 3.79)), 3)
        else:
            pld = round(float(rng.uniform(3.8, 18.0)), 3)
        lcd = round(pld + float(rng.uniform(0.5, 8.0)), 3)
        henry_ch4 = float(f"{10 ** rng.uniform(-8, -5):.4g}")
        henry_co2 = float(f"{10 ** rng.uniform(-8, -5):.4g}")
        rows.append({
            "structure_id": sid, "valid": valid, "atom_count": atom_count,
            "pld": pld, "lcd": lcd, "henry_CH4": henry_ch4,
            "henry_CO2": henry_co2,
        })
    return rows


def screening_shortlist(rows, top=1000):
    survivors = [r for r in rows
                 if r["valid"] and r["atom_count"] <= 1000 and r["pld"] >= 3.8]
    ranked = sorted(survivors, key=lambda r: (-r["henry_CH4"], r["structure_id"]))
    return [r for r in ranked[:top]]


# --- replay/bench tables --------------------------------------------------------------

def _langmuir(henry, qsat, pressure, temperature):
    import math
    henry_t = henry * math.exp(1200.0 * (1.0 / temperature - 1.0 / 298.0))
    b = henry_t / qsat
    q = qsat * b * pressure / (1.0 + b * pressure)
    return round(q * MOLAR_VOLUME, 4)


def build_replay_rows(structures: dict[str, StructureRecord],
                      fan_out: list[dict]):
    """Rows: (tool, structure, task, conditions, metric, value, unit, source)."""
    rows: list[tuple] = []

    def add(tool, sid, task, conditions, metric, value, unit, source):
        rows.append((tool, sid, task, conditions, metric, value, unit, source))

    recorded = "recorded-baseline"

    # geometry
    add("geometry", "RUBTAK", "surface_area", {"probe_radius_A": 1.2},
        "surface_area", "1946.02", "m2/g", recorded)
    for sid, pld, lcd in (("PUPJER", "6.2", "11.35"), ("RUPTED", "3.1", "4.59"),
                          ("NORPIV", "3.55", "5.4"), ("NUYQUU", "3.47", "5.1")):
        add("geometry", sid, "pore_diameter", {}, "pld", pld, "A", recorded)
        add("geometry", sid, "pore_diameter", {}, "lcd", lcd, "A", recorded)

    # gcmc
    add("gcmc", "CICYIX", "gcmc_uptake",
        {"guest": "N2", "temperature_K": 77.0, "pressure_Pa": 200.0},
        "uptake", "75.57", "cm3/g", recorded)
    add("gcmc", "FIGXEY", "gcmc_uptake",
        {"guest": "N2", "temperature_K": 77.0, "pressure_Pa": 200.0},
        "uptake", "150.62", "cm3/g", recorded)
    add("gcmc", "tobmof-7165", "gcmc_uptake",
        {"guest": "CH4", "temperature_K": 298.0, "pressure_Pa": 6.5e6},
        "uptake", "184.56", "cm3/g", recorded)
    add("gcmc", "tobmof-7187", "gcmc_uptake",
        {"guest": "CH4", "temperature_K": 298.0, "pressure_Pa": 6.5e6},
        "uptake", "233.85", "cm3/g", recorded)
    add("gcmc", "tobmof-7165", "gcmc_uptake",
        {"guest": "H2", "temperature_K": 243.0, "pressure_Pa": 1.0e7},
        "uptake", "9.13", "g/L", recorded)
    add("gcmc", "tobmof-7187", "gcmc_uptake",
        {"guest": "H2", "temperature_K": 243.0, "pressure_Pa": 1.0e7},
        "uptake", "10.52", "g/L", recorded)

    # md
    add("md", "BUKRUW01", "diffusion_coefficient",
        {"guest": "O2", "temperature_K": 298.0},
        "diffusion_coefficient", "2.62e-04", "cm2/s", recorded)
    add("md", "MAPCIP", "diffusion_coefficient",
        {"guest": "O2", "temperature_K": 298.0},
        "diffusion_coefficient", "2.97e-04", "cm2/s", recorded)
    add("md", "RUBTAK", "diffusion_coefficient",
        {"guest": "CO2", "temperature_K": 298.0},
        "diffusion_coefficient", "5.8e-06", "cm2/s", recorded)

    # dft band gaps
    for sid, gap in (("GUXQAR", "0.07"), ("RURPAW", "1.14"),
                     ("NUYQUU", "2.90"), ("GIFKEL", "3.19")):
        add("dft", sid, "band_gap", {}, "band_gap", gap, "eV", recorded)

    # binding chains (host opt, guest opt, prescreen, complex opt, binding)
    binding = {
        ("GAYGAQ", "CO2"): -0.32, ("GAYGAQ", "H2O"): -0.33,
        ("GIFKEL", "CO2"): -0.20, ("GIFKEL", "H2O"): -0.48,
        ("FIQCEN", "CO2"): -0.45, ("VELVOY", "CO2"): -0.27,
    }
    guest_energy = {"CO2": -22.0, "H2O": -14.0}
    hosts_done = set()
    guests_done = set()
    from mof_forge.structdb import MoleculeRecord
    from mof_forge.toolkit import mlip_prescreen, sample_configurations

    ff = _forcefield_map()
    for (sid, guest), value in sorted(binding.items()):
        host = structures[sid]
        host_e = host.descriptor("energy_total")
        if sid not in hosts_done:
            add("dft", sid, "geometry_optimization", {}, "energy",
                f"{host_e}", "eV", recorded)
            hosts_done.add(sid)
        if guest not in guests_done:
            add("dft", guest, "geometry_optimization", {}, "energy",
                f"{guest_energy[guest]}", "eV", recorded)
            guests_done.add(guest)
        mol = MoleculeRecord(
            name=guest,
            atoms=[Atom(e, x, y, z, q) for e, x, y, z, q in
                   MOLECULES[guest]["atoms"]],
            requires_electrostatics=MOLECULES[guest]["electrostatics"])
        configs = sample_configurations(host, guest, 10, 42)
        selected, ranked = mlip_prescreen(configs, host, mol, ff)
        conditions = {"guest": guest, "n_configs": 10, "seed": 42}
        add("mlip", sid, "prescreen", conditions, "selected_config",
            selected, "", "computed-surrogate")
        add("mlip", sid, "prescreen", conditions, "min_energy",
            f"{round(float(ranked[0].surrogate_energy), 6)}", "eV",
            "computed-surrogate")
        complex_e = round(host_e + guest_energy[guest] + value, 4)
        add("dft", sid, "complex_optimization", {"guest": guest},
            "energy", f"{complex_e}", "eV", recorded)
        add("dft", sid, "binding_energy", {"guest": guest},
            "binding_energy", f"{value}", "eV", recorded)

    # analysis follow-ups for the two-material comparison
    from mof_forge.toolkit import ATOMIC_NUMBERS
    for sid, transfer in (("FIQCEN", "-0.08"), ("VELVOY", "-0.03")):
        host = structures[sid]
        electrons = sum(ATOMIC_NUMBERS.get(a.element, 0) for a in host.atoms)
        electrons += sum(ATOMIC_NUMBERS.get(e, 0)
                         for e, *_ in MOLECULES["CO2"]["atoms"])
        add("dft", sid, "charge_density", {"guest": "CO2"},
            "total_electrons", f"{float(electrons)}", "e", "computed-surrogate")
        add("dft", sid, "bader_charge", {"guest": "CO2"},
            "charge_transfer", transfer, "e", recorded)

    # screening fan-out gcmc rows for the packaged table's leaders
    for row in fan_out:
        value = _langmuir(row["henry_CH4"], 10.0, 100000.0, 298.0)
        add("gcmc", row["structure_id"], "gcmc_uptake",
            {"guest": "CH4", "temperature_K": 298.0, "pressure_Pa": 100000.0},
            "uptake", f"{value}", "cm3/g", "computed-surrogate")
    return rows


def _forcefield_map():
    from mof_forge.structdb import ForceFieldEntry
    out: dict[str, list[ForceFieldEntry]] = {}
    for species, site, eps, sigma, charge, source in FORCEFIELD_ROWS:
        out.setdefault(species, []).append(ForceFieldEntry(
            species=species, site=site, lj_epsilon=eps, lj_sigma=sigma,
            charge=charge, source=source))
    return out


BENCH_ROWS = [
    ("geometry", "PUPJER", "LCD", "lcd", "A", "11.35",
     "What is the largest cavity diameter of PUPJER?", "core-mof-2019"),
    ("geometry", "RUPTED", "LCD", "lcd", "A", "4.59",
     "What is the largest cavity diameter of RUPTED?", "core-mof-2019"),
    ("geometry", "NORPIV", "PLD", "pld", "A", "3.55",
     "What is the pore-limiting diameter of NORPIV?", "core-mof-2019"),
    ("geometry", "NUYQUU", "PLD", "pld", "A", "3.47",
     "What is the pore-limiting diameter of NUYQUU?", "core-mof-2019"),
    ("gcmc", "CICYIX", "N2 uptake 77K, 200Pa", "uptake", "cm3/g", "75.38",
     "GCMC uptake of N2 in CICYIX at 77 K and 200 Pa", "mofx-db"),
    ("gcmc", "FIGXEY", "N2 uptake 77K, 200Pa", "uptake", "cm3/g", "150.61",
     "GCMC uptake of N2 in FIGXEY at 77 K and 200 Pa", "mofx-db"),
    ("gcmc", "tobmof-7165", "CH4 uptake 298K, 65bar", "uptake", "cm3/g",
     "184.00", "GCMC uptake of CH4 in tobmof-7165 at 298 K and 65 bar",
     "mofx-db"),
    ("gcmc", "tobmof-7187", "CH4 uptake 298K, 65bar", "uptake", "cm3/g",
     "233.00", "GCMC uptake of CH4 in tobmof-7187 at 298 K and 65 bar",
     "mofx-db"),
    ("gcmc", "tobmof-7165", "H2 uptake 243K, 100bar", "uptake", "g/L", "9.50",
     "GCMC uptake of H2 in tobmof-7165 at 243 K and 100 bar", "mofx-db"),
    ("gcmc", "tobmof-7187", "H2 uptake 243K, 100bar", "uptake", "g/L", "11.20",
     "GCMC uptake of H2 in tobmof-7187 at 243 K and 100 bar", "mofx-db"),
    ("md", "BUKRUW01", "O2 diffusivity", "diffusion_coefficient", "cm2/s",
     "2.59e-04", "Diffusion coefficient of O2 in BUKRUW01 at 298 K",
     "jmca-2022-flex"),
    ("md", "MAPCIP", "O2 diffusivity", "diffusion_coefficient", "cm2/s",
     "2.89e-04", "Diffusion coefficient of O2 in MAPCIP at 298 K",
     "jmca-2022-flex"),
    ("dft", "GUXQAR", "bandgap", "band_gap", "eV", "0.08",
     "What is the band gap of GUXQAR?", "qmof-2021"),
    ("dft", "RURPAW", "bandgap", "band_gap", "eV", "1.11",
     "What is the band gap of RURPAW?", "qmof-2021"),
    ("dft", "NUYQUU", "bandgap", "band_gap", "eV", "2.90",
     "What is the band gap of NUYQUU?", "qmof-2021"),
    ("dft", "GIFKEL", "bandgap", "band_gap", "eV", "3.18",
     "What is the band gap of GIFKEL?", "qmof-2021"),
    ("dft", "GAYGAQ", "CO2 binding energy", "binding_energy", "eV", "-0.33",
     "Binding energy of CO2 in GAYGAQ", "odac-2025"),
    ("dft", "GAYGAQ", "H2O binding energy", "binding_energy", "eV", "-0.28",
     "Binding energy of H2O in GAYGAQ", "odac-2025"),
    ("dft", "GIFKEL", "CO2 binding energy", "binding_energy", "eV", "-0.20",
     "Binding energy of CO2 in GIFKEL", "odac-2025"),
    ("dft", "GIFKEL", "H2O binding energy", "binding_energy", "eV", "-0.58",
     "Binding energy of H2O in GIFKEL", "odac-2025"),
]


RULES_TOML = '''# Deck validation rules. Format: docs/rules.md.
# severity: fatal (auto-fix required to run), physics_change (gated on user
# confirmation), cosmetic (auto-fix, no physics impact).

[[rules]]
rule_id = "md-electrostatics"
tool = "md"
severity = "physics_change"
finding = "guest requires electrostatic interactions but the pair style has no coulomb term"
[rules.when]
guest_requires_electrostatics = true
key = "pair_style"
lacks = "coul"
[rules.fix]
key = "pair_style"
set_template = "lj/cut/coul/long {pair_cutoff}"

[[rules]]
rule_id = "md-kspace-companion"
tool = "md"
severity = "fatal"
finding = "long-range coulomb pair style needs a kspace solver"
[[rules.when]]
key = "pair_style"
contains = "coul/long"
[[rules.when]]
key = "kspace_style"
missing = true
[rules.fix]
key = "kspace_style"
set = "pppm 0.0001"

[[rules]]
rule_id = "md-timestep-large"
tool = "md"
severity = "physics_change"
finding = "timestep above 2.0 fs risks integration instability"
[rules.when]
key = "timestep_fs"
gt = 2.0
[rules.fix]
key = "timestep_fs"
set = 1.0

[[rules]]
rule_id = "gcmc-charges-off"
tool = "gcmc"
severity = "fatal"
finding = "polar guest simulated with framework charges disabled"
[rules.when]
guest_requires_electrostatics = true
key = "charges"
equals = "off"
[rules.fix]
key = "charges"
set = "on"

[[rules]]
rule_id = "geometry-probe-positive"
tool = "geometry"
severity = "fatal"
finding = "probe radius must be positive"
[rules.when]
key = "probe_radius_A"
lt = 0.05
[rules.fix]
key = "probe_radius_A"
set = 1.2

[[rules]]
rule_id = "forcefield-alias"
tool = "*"
severity = "cosmetic"
finding = "force-field name normalized to its canonical form"
[rules.when]
key = "forcefield"
equals = "Universal"
[rules.fix]
key = "forcefield"
set = "uff"
'''

CORPUS_FILES = {
    "forcefield_notes.txt": """[Overview]
Generic force fields remain the workhorse for screening porous frameworks.
Lennard-Jones parameters from a universal set transfer acceptably across
carboxylate frameworks. Polar adsorbates are the exception. Quadrupolar and
dipolar species need framework partial charges and a long-range solver.

[Recommended Settings]
For adsorption and transport runs in rigid frameworks we use force field: uff
with a real-space cutoff: 12.5 angstrom. Carbon dioxide and water require
charges on both guest and host. Methane and dinitrogen are usually safe as
uncharged united-atom or two-site models. When a pair style without coulomb
terms is reused for a polar guest, enable the coulomb variant and a mesh
solver before trusting the numbers.

[References]
Internal memo catalogue, entries FF-1 through FF-9.
""",
    "screening_heuristics.txt": """[Screening Heuristics]
Funnels should be ordered cheapest first. Structure validation removes broken
entries at almost no cost. An atom-count ceiling keeps later stages tractable,
and electronic-structure workflows need a far stricter ceiling than Monte
Carlo ones. Geometric accessibility comes next: a pore-limiting diameter below
the guest kinetic diameter means the probe cannot percolate, so the candidate
cannot perform regardless of chemistry. The final ranking stage should use a
low-cost descriptor correlated with the target property. For uptake objectives
the Henry constant is the standard proxy. Keep the shortlist generous; a
thousand candidates is cheap to simulate in parallel.

[References]
Screening cookbook, revisions 3 and 4.
""",
    "md_practices.txt": """[Molecular Dynamics Practices]
A timestep of 1.0 fs is safe for rigid-framework guest diffusion. Larger steps
require constraint algorithms. Equilibrate before production sampling and
report diffusivities from the slope of the mean-squared displacement. Reused
literature settings deserve a consistency pass: a configuration tuned for an
apolar guest silently breaks for a polar one because electrostatics were never
enabled.

[References]
In-house simulation handbook, chapter 7.
""",
}


def write_fixtures(root: Path) -> None:
    rng = np.random.default_rng(7)

    # structures + molecules + forcefields
    (root / "structures").mkdir(parents=True, exist_ok=True)
    (root / "molecules").mkdir(parents=True, exist_ok=True)
    (root / "forcefields").mkdir(parents=True, exist_ok=True)
    (root / "screening").mkdir(parents=True, exist_ok=True)
    (root / "golden").mkdir(parents=True, exist_ok=True)
    (root / "corpus").mkdir(parents=True, exist_ok=True)
    (root / "faults").mkdir(parents=True, exist_ok=True)

    structures: dict[str, StructureRecord] = {}
    for sid, spec in STRUCTURES.items():
        rec = build_structure(sid, spec)
        structures[sid] = rec
        (root / "structures" / f"{sid}.rec").write_text(
            dump_structure(rec), encoding="utf-8")

    # assembled topology+node+linker identifiers mapped to packaged records
    (root / "structures" / "aliases.tsv").write_text(
        "assembled_id\tstructure_id\n"
        "fcu+Zr6O4+bdc\tRUBTAK\n"
        "tbo+Cu2+btc\tFIQCEN\n"
        "sod+Zn1+mim\tVELVOY\n", encoding="utf-8")

    for name, spec in MOLECULES.items():
        lines = [f"id {name}",
                 f"requires_electrostatics {'true' if spec['electrostatics'] else 'false'}",
                 f"atom_count {len(spec['atoms'])}"]
        for element, x, y, z, q in spec["atoms"]:
            lines.append(f"atom {element} {x} {y} {z} {q}")
        (root / "molecules" / f"{name}.rec").write_text(
            "\n".join(lines) + "\n", encoding="utf-8")

    ff_lines = ["species\tsite\tepsilon_K\tsigma_A\tcharge_e\tsource"]
    for row in FORCEFIELD_ROWS:
        species, site, eps, sigma, charge, source = row
        ff_lines.append(f"{species}\t{site}\t{eps}\t{sigma}\t{charge}\t{source}")
    (root / "forcefields" / "library.tsv").write_text(
        "\n".join(ff_lines) + "\n", encoding="utf-8")

    # screening table and fan-out structures
    table = build_screening_table(rng)
    header = ["structure_id", "valid", "atom_count", "pld", "lcd",
              "henry_CH4", "henry_CO2"]
    lines = ["\t".join(header)]
    for row in table:
        lines.append("\t".join([
            row["structure_id"], "true" if row["valid"] else "false",
            str(row["atom_count"]), f"{row['pld']}", f"{row['lcd']}",
            f"{row['henry_CH4']}", f"{row['henry_CO2']}"]))
    (root / "screening" / "descriptors.tsv").write_text(
        "\n".join(lines) + "\n", encoding="utf-8")

    leaders = screening_shortlist(table, top=15)
    for row in leaders:
        sid = row["structure_id"]
        spec = ([], "ZnC12H12O6", ["Zn", "O", "C", "H"], 15.0, 12, {
            "pld": (row["pld"], "A"), "lcd": (row["lcd"], "A"),
            "henry_CH4": (row["henry_CH4"], "mol/kg/Pa"),
            "qsat_CH4": (10.0, "mol/kg"),
            "surface_area": (1200.0, "m2/g"),
        })
        rec = build_structure(sid, spec)
        structures[sid] = rec
        (root / "structures" / f"{sid}.rec").write_text(
            dump_structure(rec), encoding="utf-8")

    # replay + bench tables
    replay_rows = build_replay_rows(structures, leaders[:10])
    lines = ["tool\tstructure_id\ttask\tconditions\tconditions_hash\tmetric"
             "\tvalue\tunit\tsource"]
    for tool, sid, task, conditions, metric, value, unit, source in replay_rows:
        canonical = canonical_conditions(task, conditions)
        lines.append("\t".join([tool, sid, task, canonical,
                                conditions_hash(canonical), metric, value,
                                unit, source]))
    (root / "replay.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["tool\tstructure_id\tproperty\tmetric\tunit\treference_value"
             "\tquery\tsource"]
    for row in BENCH_ROWS:
        lines.append("\t".join(row))
    (root / "bench.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # rules, corpus, faults, goldens
    (root / "rules.toml").write_text(RULES_TOML, encoding="utf-8")
    for name, text in CORPUS_FILES.items():
        (root / "corpus" / name).write_text(text, encoding="utf-8")

    (root / "faults" / "md_missing_key.log").write_text(
        "reading deck\nERROR: missing key steps\n", encoding="utf-8")
    (root / "faults" / "dft_not_converged.log").write_text(
        "scf cycle 60\nSCF DID NOT CONVERGE\n", encoding="utf-8")
    (root / "faults" / "gcmc_truncated.log").write_text(
        "cycle 100 of 10000\n", encoding="utf-8")
    (root / "faults" / "md_segfault.log").write_text(
        "step 5000\nSEGMENTATION FAULT\n", encoding="utf-8")

    (root / "golden" / "geometry_surface_area.deck").write_text(
        "network -ha -sa 1.2 1.2 2000 RUBTAK.cif RUBTAK.sa\n", encoding="utf-8")
    (root / "golden" / "gcmc_ch4_298K_65bar.deck").write_text(
        "task gcmc_uptake\n"
        "structure tobmof-7165\n"
        "guest CH4\n"
        "temperature_K 298.0\n"
        "pressure_Pa 6500000.0\n"
        "cycles_init 10000\n"
        "cycles_prod 10000\n"
        "forcefield uff\n"
        "cutoff_A 12.0\n"
        "charges off\n", encoding="utf-8")
    (root / "golden" / "md_reference_settings.deck").write_text(
        "task diffusion_coefficient\n"
        "structure RUBTAK\n"
        "guest CO2\n"
        "ensemble nvt\n"
        "temperature_K 298.0\n"
        "timestep_fs 1.0\n"
        "steps 100000\n"
        "pair_style lj/cut 12.0\n"
        "forcefield uff\n", encoding="utf-8")

    write_provenance(root)
    print(f"fixtures written under {root}")


def write_provenance(root: Path) -> None:
    text = """# Fixture provenance

Every numeric fixture value is listed here with its source class.

## Reference values (bench.tsv, column reference_value)
Published property values from public databases and datasets, cited by the
source tags in the table:
- core-mof-2019: CoRE MOF 2019 curated geometric descriptors
  (doi:10.1021/acs.jced.9b00835).
- mofx-db: MOFX-DB computational adsorption data
  (doi:10.1021/acs.jced.2c00583).
- jmca-2022-flex: flexible-framework diffusivity study
  (doi:10.1039/D1TA09267G).
- qmof-2021: machine-learned quantum-chemical property database
  (doi:10.1016/j.matt.2021.02.015).
- odac-2025: sorbent-discovery DFT dataset (arXiv:2508.03162).

## Replay values (replay.tsv, column value)
- source `recorded-baseline`: recorded outputs of this engine's regression
  baseline, frozen so the full pipeline replays them bit-for-bit.
- source `computed-surrogate`: values computed by the documented surrogate
  models over the synthetic structures in this tree (regenerable with
  scripts/build_fixtures.py).

## Structures (structures/*.rec)
Synthetic unit cells: atom positions are random placements with a minimum
separation, generated per-id deterministically. They are NOT crystallographic
structures; identifiers and synonyms exist so resolution, consistency checks,
placement sampling, and surrogate models have realistic shapes to work with.
Descriptor blocks combine published reference values (bench rows above) with
invented-but-plausible values needed by the surrogates (qsat_*, diff_*,
energy_total, binding_*, bader_*).

## Molecules (molecules/*.rec) and force fields (forcefields/library.tsv)
Guest geometries and LJ parameters follow standard published sets: TraPPE
(CO2, CH4, simplified N2/O2), SPC/E (H2O); framework elements use UFF-style
parameters. The H2 site and simplifications are fixture conventions, tagged in
the source column.

## Screening table (screening/descriptors.tsv)
CONSTRUCTED regression fixture, not real database content: 3,786 rows built
so the documented thresholds (validity flag, 1,000-atom gcmc ceiling, 3.8 A
CH4 probe) reproduce the stage counts 3,786 -> 3,776 -> 3,771 -> 1,878 and a
1,000-entry shortlist. Regenerate with scripts/build_fixtures.py.

## Probe diameters (screening module data)
Standard kinetic diameters: CH4 3.8, CO2 3.3, N2 3.64, H2 2.89, O2 3.46,
H2O 2.65 (A).

## Fault logs (faults/*.log)
Hand-written log excerpts exercising the failure-pattern table.
"""
    (root / "PROVENANCE.md").write_text(text, encoding="utf-8")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--root", default="fixtures")
    args = parser.parse_args()
    write_fixtures(Path(args.root))
    return 0


if __name__ == "__main__":
    sys.exit(main())
