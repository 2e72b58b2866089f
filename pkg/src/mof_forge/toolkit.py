"""Tool adapters in mock-model and replay modes.

Five built-in adapters (geometry, gcmc, md, dft, mlip) plus the screening
adapter share one contract: ``execute(deck, ...) -> ToolRun`` with a
deterministic log that ends in the adapter's documented success marker.

Model mode computes outputs from cheap, order-preserving surrogates over
fixture descriptors (documented in ``docs/decks.md``); replay mode returns
recorded outputs keyed by (tool, structure, task, conditions-hash) with exact
matching — a missing key is an error, never a silent fallback. Physical
fidelity is a non-goal: the surrogates exist so orchestration logic is what
gets exercised.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FixtureMiss, ModelDomainError, PlacementImpossible, UnknownTool
from .inputgen import InputDeck, fmt_value, render_deck
from .structdb import ForceFieldEntry, MoleculeRecord, StructDB, StructureRecord

BOLTZMANN_EV_PER_K = 8.617333262e-05
MOLAR_VOLUME_CM3_PER_MOLKG = 22.4136  # mol/kg -> cm3(STP)/g
MIN_FRAMEWORK_CLEARANCE = 1.5         # Angstrom, guest placement
PLACEMENT_PROPOSAL_BUDGET = 10_000

SUCCESS_MARKERS: dict[str, str] = {
    "geometry": "== GEOMETRY RUN COMPLETE ==",
    "gcmc": "== GCMC RUN COMPLETE ==",
    "md": "== MD RUN COMPLETE ==",
    "dft": "== DFT RUN COMPLETE ==",
    "mlip": "== MLIP RUN COMPLETE ==",
    "screening": "== SCREENING RUN COMPLETE ==",
    "report": "== REPORT COMPLETE ==",
}

# Conditions that key replay lookups, per task. Only physical conditions
# participate; artifact ids and numerics like cycle counts do not.
REPLAY_CONDITION_KEYS: dict[str, tuple[str, ...]] = {
    "surface_area": ("probe_radius_A",),
    "pore_diameter": (),
    "pore_volume": ("probe_radius_A",),
    "pore_size_distribution": ("probe_radius_A",),
    "gcmc_uptake": ("guest", "temperature_K", "pressure_Pa"),
    "henry_coefficient": ("guest", "temperature_K"),
    "diffusion_coefficient": ("guest", "temperature_K"),
    "interaction_energy": ("guest", "temperature_K"),
    "rdf": ("guest", "temperature_K"),
    "geometry_optimization": (),
    "complex_optimization": ("guest",),
    "binding_energy": ("guest",),
    "band_gap": (),
    "charge_density": ("guest",),
    "bader_charge": ("guest",),
    "prescreen": ("guest", "n_configs", "seed"),
}

ATOMIC_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9,
    "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15, "S": 16,
    "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Sc": 21, "Ti": 22, "V": 23,
    "Cr": 24, "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29, "Zn": 30,
    "Ga": 31, "Ge": 32, "Zr": 40, "Mo": 42, "Ag": 47, "Cd": 48, "In": 49,
}


def canonical_conditions(task: str, values: dict) -> str:
    keys = REPLAY_CONDITION_KEYS.get(task, ())
    parts = []
    for key in sorted(keys):
        if key in values and values[key] is not None:
            v = values[key]
            if isinstance(v, float):
                parts.append(f"{key}={format(v, '.6g')}")
            else:
                parts.append(f"{key}={v}")
    return ";".join(parts)


def conditions_hash(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass
class ToolRun:
    job_id: str
    deck: InputDeck
    workdir: Path | None
    log: str
    outputs: dict[str, tuple[object, str]]
    exit: str  # ok | failed
    duration: float


@dataclass
class ReplayStore:
    """Exact-match replay fixtures from ``fixtures/replay.tsv``."""

    entries: dict[tuple[str, str, str, str], dict[str, tuple[object, str]]] = field(
        default_factory=dict)

    @classmethod
    def load(cls, path: Path | str) -> "ReplayStore":
        store = cls()
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        for line in lines[1:]:
            if not line.strip() or line.startswith("#"):
                continue
            tool, sid, task, conditions, chash, metric, value, unit, _source = \
                line.split("\t")
            expected = conditions_hash(conditions)
            if chash != expected:
                raise ValueError(
                    f"replay fixture hash mismatch for {conditions!r}: "
                    f"{chash} != {expected}")
            key = (tool, sid, task, chash)
            try:
                parsed: object = float(value)
            except ValueError:
                parsed = value
            store.entries.setdefault(key, {})[metric] = (parsed, unit)
        return store

    def lookup(self, tool: str, structure_id: str, task: str,
               chash: str) -> dict[str, tuple[object, str]]:
        key = (tool, structure_id, task, chash)
        if key not in self.entries:
            raise FixtureMiss(f"no replay fixture for {key}")
        return dict(self.entries[key])


@dataclass
class GuestConfiguration:
    config_id: str
    host: str
    guest: str
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    surrogate_energy: float | None = None  # eV, set by the prescreen


# --- guest configuration sampling ------------------------------------------------

def _rotate(atoms_xyz: np.ndarray, q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    rot = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
    return atoms_xyz @ rot.T


def _min_image_cart(delta_frac: np.ndarray, cell: np.ndarray) -> np.ndarray:
    wrapped = delta_frac - np.round(delta_frac)
    return wrapped @ cell


def sample_configurations(host: StructureRecord, guest: str, n: int,
                          seed: int) -> list[GuestConfiguration]:
    """n random placements inside the host cell, each at least 1.5 A from any
    framework atom (minimum image); deterministic under the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cell = np.array(host.lattice.matrix())
    frame_frac = np.array([[a.x, a.y, a.z] for a in host.atoms]) if host.atoms else None

    configs: list[GuestConfiguration] = []
    for i in range(n):
        placed = False
        for _ in range(PLACEMENT_PROPOSAL_BUDGET):
            frac = rng.random(3)
            if frame_frac is not None and len(frame_frac):
                deltas = _min_image_cart(frac - frame_frac, cell)
                if float(np.min(np.linalg.norm(deltas, axis=1))) < MIN_FRAMEWORK_CLEARANCE:
                    continue
            quat = rng.normal(size=4)
            quat = quat / np.linalg.norm(quat)
            cart = frac @ cell
            configs.append(GuestConfiguration(
                config_id=f"cfg-{seed}-{i:03d}",
                host=host.structure_id,
                guest=guest,
                position=tuple(float(c) for c in cart),
                orientation=tuple(float(c) for c in quat),
            ))
            placed = True
            break
        if not placed:
            raise PlacementImpossible(
                f"no admissible site in {host.structure_id} after "
                f"{PLACEMENT_PROPOSAL_BUDGET} proposals (config {i})")
    return configs


def _lj_energy_ev(config: GuestConfiguration, host: StructureRecord,
                  guest_mol: MoleculeRecord,
                  ff: dict[str, list[ForceFieldEntry]]) -> float:
    """Pairwise Lennard-Jones guest-framework energy with Lorentz-Berthelot
    mixing, minimum image, no cutoff."""
    cell = np.array(host.lattice.matrix())
    inv = np.linalg.inv(cell)
    guest_sites = {e.site: e for e in ff[guest_mol.name]}
    offsets = np.array([[a.x, a.y, a.z] for a in guest_mol.atoms])
    rotated = _rotate(offsets, np.array(config.orientation)) + np.array(config.position)

    energy_k = 0.0
    for atom_xyz, atom in zip(rotated, guest_mol.atoms):
        g = guest_sites[atom.element]
        if g.lj_epsilon == 0.0:
            continue
        site_frac = atom_xyz @ inv
        for fa in host.atoms:
            f_entries = ff.get(fa.element)
            if not f_entries:
                continue
            f = f_entries[0]
            delta = _min_image_cart(site_frac - np.array([fa.x, fa.y, fa.z]), cell)
            r = float(np.linalg.norm(delta))
            if r < 0.1:
                return 1e6
            eps = math.sqrt(g.lj_epsilon * f.lj_epsilon)
            sigma = 0.5 * (g.lj_sigma + f.lj_sigma)
            sr6 = (sigma / r) ** 6
            energy_k += 4.0 * eps * (sr6 * sr6 - sr6)
    return energy_k * BOLTZMANN_EV_PER_K


def mlip_prescreen(configs: list[GuestConfiguration], host: StructureRecord,
                   guest_mol: MoleculeRecord,
                   ff: dict[str, list[ForceFieldEntry]]
                   ) -> tuple[str, list[GuestConfiguration]]:
    """Assign surrogate energies and pick the minimum; ties break toward the
    lower config_id, so the selection is invariant under list permutation."""
    if not configs:
        raise ValueError("configs must be non-empty")
    for cfg in configs:
        cfg.surrogate_energy = _lj_energy_ev(cfg, host, guest_mol, ff)
    ranked = sorted(configs, key=lambda c: (c.surrogate_energy, c.config_id))
    return ranked[0].config_id, ranked


# --- surrogate models --------------------------------------------------------------

def _descriptor(rec: StructureRecord, key: str, job_desc: str) -> float:
    value = rec.descriptor(key)
    if value is None:
        raise ModelDomainError(
            f"{job_desc}: structure {rec.structure_id!r} lacks descriptor {key!r}")
    return value


def _langmuir_uptake(rec: StructureRecord, guest: str, pressure_pa: float,
                     temperature_k: float) -> float:
    """Saturating isotherm in cm3(STP)/g; monotone in pressure and linear in
    the Henry limit."""
    if pressure_pa < 0:
        raise ModelDomainError(f"negative pressure {pressure_pa}")
    if temperature_k <= 0:
        raise ModelDomainError(f"non-positive temperature {temperature_k}")
    henry = _descriptor(rec, f"henry_{guest}", "gcmc surrogate")  # mol/kg/Pa
    qsat = _descriptor(rec, f"qsat_{guest}", "gcmc surrogate")    # mol/kg
    # soft temperature dependence of affinity around ambient
    henry_t = henry * math.exp(1200.0 * (1.0 / temperature_k - 1.0 / 298.0))
    if pressure_pa == 0:
        return 0.0
    b = henry_t / qsat
    q_molkg = qsat * b * pressure_pa / (1.0 + b * pressure_pa)
    return q_molkg * MOLAR_VOLUME_CM3_PER_MOLKG


def _arrhenius_diffusivity(rec: StructureRecord, guest: str,
                           temperature_k: float) -> float:
    if temperature_k <= 0:
        raise ModelDomainError(f"non-positive temperature {temperature_k}")
    d0 = _descriptor(rec, f"diff_{guest}", "md surrogate")       # cm2/s at 300 K
    ea = rec.descriptor(f"diff_ea_{guest}") or 600.0             # K
    return d0 * math.exp(-ea * (1.0 / temperature_k - 1.0 / 300.0))


def _interaction_energy_for(deck: InputDeck, db: StructDB) -> float:
    """Surrogate guest-host interaction energy of the prescreen-selected
    configuration, recomputed deterministically from the deck's seed."""
    host = db.structures[str(deck.get("structure"))]
    guest = str(deck.get("guest"))
    mol = db.molecule(guest)
    n = int(deck.get("n_configs", 10))
    seed = int(deck.get("seed", 42))
    configs = sample_configurations(host, guest, n, seed)
    _selected, ranked = mlip_prescreen(configs, host, mol, db.forcefields)
    return float(ranked[0].surrogate_energy)


def _model_outputs(deck: InputDeck, db: StructDB) -> dict[str, tuple[object, str]]:
    task = deck.task
    sid = str(deck.get("structure"))

    if deck.tool == "geometry":
        rec = db.structures[sid]
        if task == "surface_area":
            return {"surface_area": (_descriptor(rec, "surface_area", task), "m2/g")}
        if task == "pore_diameter":
            return {"pld": (_descriptor(rec, "pld", task), "A"),
                    "lcd": (_descriptor(rec, "lcd", task), "A")}
        if task == "pore_volume":
            return {"pore_volume": (_descriptor(rec, "pore_volume", task), "cm3/g")}
        if task == "pore_size_distribution":
            return {"psd_peak": (_descriptor(rec, "lcd", task), "A")}

    if deck.tool == "gcmc":
        rec = db.structures[sid]
        guest = str(deck.get("guest"))
        temperature = float(deck.get("temperature_K"))
        if task == "gcmc_uptake":
            uptake = _langmuir_uptake(rec, guest, float(deck.get("pressure_Pa")),
                                      temperature)
            return {"uptake": (round(uptake, 4), "cm3/g")}
        if task == "henry_coefficient":
            henry = _descriptor(rec, f"henry_{guest}", task)
            return {"henry_coefficient": (henry, "mol/kg/Pa")}

    if deck.tool == "md":
        rec = db.structures[sid]
        guest = str(deck.get("guest"))
        temperature = float(deck.get("temperature_K"))
        if task == "diffusion_coefficient":
            d = _arrhenius_diffusivity(rec, guest, temperature)
            return {"diffusion_coefficient": (float(f"{d:.6g}"), "cm2/s")}
        if task == "interaction_energy":
            base = rec.descriptor(f"interaction_{guest}") or -0.1
            return {"interaction_energy": (base, "eV")}
        if task == "rdf":
            peak = rec.descriptor("lcd") or 5.0
            return {"rdf_peak": (round(peak / 2.0, 4), "A")}

    if deck.tool == "mlip" and task == "prescreen":
        host = db.structures[sid]
        guest = str(deck.get("guest"))
        mol = db.molecule(guest)
        configs = sample_configurations(host, guest, int(deck.get("n_configs")),
                                        int(deck.get("seed")))
        selected, ranked = mlip_prescreen(configs, host, mol, db.forcefields)
        return {"selected_config": (selected, ""),
                "min_energy": (round(float(ranked[0].surrogate_energy), 6), "eV")}

    if deck.tool == "dft":
        if sid in db.structures:
            rec = db.structures[sid]
            base_energy = rec.descriptor("energy_total")
            if base_energy is None:
                base_energy = -5.0 * rec.atom_count
        else:
            mol = db.molecule(sid)
            rec = None
            base_energy = -10.0 * len(mol.atoms)
        if task == "geometry_optimization":
            return {"energy": (round(base_energy, 4), "eV")}
        if task == "band_gap":
            return {"band_gap": (_descriptor(rec, "band_gap", task), "eV")}
        guest = str(deck.get("guest"))
        if task in ("complex_optimization", "binding_energy"):
            e_int = _interaction_energy_for(deck, db)
            base_binding = rec.descriptor(f"binding_{guest}")
            if base_binding is None:
                base_binding = -0.2
            binding = round(base_binding + 0.01 * e_int, 4)
            if task == "binding_energy":
                return {"binding_energy": (binding, "eV")}
            guest_e = -10.0 * len(db.molecule(guest).atoms)
            return {"energy": (round(base_energy + guest_e + binding, 4), "eV")}
        if task == "charge_density":
            electrons = sum(ATOMIC_NUMBERS.get(a.element, 0) for a in rec.atoms)
            electrons += sum(ATOMIC_NUMBERS.get(a.element, 0)
                             for a in db.molecule(guest).atoms)
            return {"total_electrons": (float(electrons), "e")}
        if task == "bader_charge":
            transfer = rec.descriptor(f"bader_{guest}")
            if transfer is None:
                transfer = -0.05
            return {"charge_transfer": (transfer, "e")}

    raise UnknownTool(f"no surrogate for tool {deck.tool!r}, task {task!r}")


# --- adapter entry point --------------------------------------------------------------

def _write_log(deck: InputDeck, outputs: dict[str, tuple[object, str]],
               mode: str) -> str:
    lines = [f"== mof-forge {deck.tool} adapter ({mode}) ==", "deck:"]
    lines.append(render_deck(deck).rstrip("\n"))
    lines.append("outputs:")
    for metric in sorted(outputs):
        value, unit = outputs[metric]
        lines.append(f"{metric} {fmt_value(value)} {unit}".rstrip())
    lines.append(SUCCESS_MARKERS[deck.tool])
    return "\n".join(lines) + "\n"


def execute(deck: InputDeck, mode: str, fixture: ReplayStore | None,
            db: StructDB, job_id: str = "", workdir: Path | None = None) -> ToolRun:
    """Run one adapter. Replay mode returns recorded outputs for the deck's
    replay key; model mode computes them from the surrogates. Identical
    (deck, mode, fixture) always produce identical log bytes."""
    start = time.monotonic()
    if mode == "replay":
        if fixture is None:
            raise FixtureMiss("replay mode without a replay store")
        values = {k: v for k, v in deck.sections}
        canonical = canonical_conditions(deck.task, values)
        outputs = fixture.lookup(deck.tool, str(deck.get("structure")),
                                 deck.task, conditions_hash(canonical))
    elif mode == "model":
        outputs = _model_outputs(deck, db)
    else:
        raise ValueError(f"unknown execution mode {mode!r}")

    log = _write_log(deck, outputs, mode)
    run = ToolRun(
        job_id=job_id, deck=deck, workdir=workdir, log=log,
        outputs=outputs, exit="ok", duration=time.monotonic() - start,
    )
    if workdir is not None:
        workdir.mkdir(parents=True, exist_ok=True)
        (workdir / "deck").write_text(render_deck(deck), encoding="utf-8")
        (workdir / "log").write_text(log, encoding="utf-8")
        (workdir / "out").write_text(
            "".join(f"{m}\t{fmt_value(v)}\t{u}\n"
                    for m, (v, u) in sorted(outputs.items())),
            encoding="utf-8")
    return run


def build_adapter(mode: str, fixture: ReplayStore | None, db: StructDB):
    """Close over the execution context; the executor calls adapters as
    ``fn(deck, job_id, workdir) -> ToolRun``."""
    def adapter(deck: InputDeck, job_id: str = "",
                workdir: Path | None = None) -> ToolRun:
        return execute(deck, mode, fixture, db, job_id=job_id, workdir=workdir)
    return adapter


def external_process_adapter(command: list[str]):
    """Opt-in hook for a real engine: writes the rendered deck to a file,
    runs ``command <deckfile>``, and parses stdout lines of the form
    ``metric<TAB>value<TAB>unit``. Disabled unless explicitly wired into the
    executor's adapter map; the stub/replay adapters stay the default."""
    import subprocess
    import tempfile

    def adapter(deck: InputDeck, job_id: str = "",
                workdir: Path | None = None) -> ToolRun:
        start = time.monotonic()
        base = workdir if workdir is not None else Path(tempfile.mkdtemp())
        base.mkdir(parents=True, exist_ok=True)
        deck_path = base / "deck"
        deck_path.write_text(render_deck(deck), encoding="utf-8")
        proc = subprocess.run([*command, str(deck_path)],
                              capture_output=True, text=True, timeout=600)
        outputs: dict[str, tuple[object, str]] = {}
        for line in proc.stdout.splitlines():
            parts = line.split("\t")
            if len(parts) != 3:
                continue
            metric, raw_value, unit = parts
            try:
                value: object = float(raw_value)
            except ValueError:
                value = raw_value
            outputs[metric] = (value, unit)
        ok = proc.returncode == 0 and bool(outputs)
        marker = SUCCESS_MARKERS.get(deck.tool, "== RUN COMPLETE ==")
        log_tail = marker if ok else f"FATAL: exit {proc.returncode}"
        log = (f"== mof-forge {deck.tool} adapter (external) ==\n"
               f"command: {' '.join(command)}\n"
               f"{proc.stdout}{proc.stderr}\n{log_tail}\n")
        if workdir is not None:
            (base / "log").write_text(log, encoding="utf-8")
        return ToolRun(job_id=job_id, deck=deck, workdir=workdir, log=log,
                       outputs=outputs, exit="ok" if ok else "failed",
                       duration=time.monotonic() - start)
    return adapter
