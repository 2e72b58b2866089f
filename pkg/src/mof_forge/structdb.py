"""Fixture-backed structure, molecule, and force-field database.

Records live in a documented text format (one record per ``.rec`` file, see
``docs/fixtures.md``); force-field site parameters come from a TSV library.
Everything is read-only after load, so lookups are safe under unrestricted
concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import Ambiguous, NotFound, UnknownSpecies

# Overlap threshold: below any physical bond length, so it catches duplicated
# atoms without flagging real geometry.
MIN_ATOM_SEPARATION = 0.5

PERIODIC_TABLE = frozenset(
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu".split()
)


@dataclass(frozen=True)
class Lattice:
    """Cell lengths (Angstrom) and angles (degrees)."""

    a: float
    b: float
    c: float
    alpha: float = 90.0
    beta: float = 90.0
    gamma: float = 90.0

    def volume(self) -> float:
        ca, cb, cg = (math.cos(math.radians(x)) for x in (self.alpha, self.beta, self.gamma))
        factor = 1 - ca * ca - cb * cb - cg * cg + 2 * ca * cb * cg
        if factor <= 0:
            return 0.0
        return self.a * self.b * self.c * math.sqrt(factor)

    def matrix(self) -> list[list[float]]:
        """Row vectors of the cell in Cartesian coordinates."""
        ca, cb, cg = (math.cos(math.radians(x)) for x in (self.alpha, self.beta, self.gamma))
        sg = math.sin(math.radians(self.gamma))
        v = self.volume()
        return [
            [self.a, 0.0, 0.0],
            [self.b * cg, self.b * sg, 0.0],
            [self.c * cb, self.c * (ca - cb * cg) / sg, v / (self.a * self.b * sg)],
        ]


@dataclass(frozen=True)
class Atom:
    element: str
    x: float  # fractional for structures, Cartesian (Angstrom) for molecules
    y: float
    z: float
    charge: float = 0.0


@dataclass
class StructureRecord:
    structure_id: str
    names: list[str] = field(default_factory=list)
    formula: str = ""
    atom_count: int = 0
    lattice: Lattice | None = None
    atoms: list[Atom] = field(default_factory=list)
    descriptors: dict[str, tuple[float, str]] = field(default_factory=dict)
    valid: bool = True

    def descriptor(self, key: str) -> float | None:
        entry = self.descriptors.get(key)
        return entry[0] if entry else None


@dataclass
class MoleculeRecord:
    name: str
    atoms: list[Atom] = field(default_factory=list)
    requires_electrostatics: bool = False

    @property
    def charges(self) -> list[float]:
        return [a.charge for a in self.atoms]

    def net_charge(self) -> float:
        return sum(self.charges)


@dataclass(frozen=True)
class ForceFieldEntry:
    species: str
    site: str
    lj_epsilon: float  # K
    lj_sigma: float    # Angstrom
    charge: float      # e
    source: str = ""


def minimum_image_distance(lattice: Lattice, frac_a: tuple[float, float, float],
                           frac_b: tuple[float, float, float]) -> float:
    """Distance between two fractional positions under the minimum-image
    convention (fractional-wrap form; exact for the orthorhombic cells the
    fixture set uses)."""
    m = lattice.matrix()
    d = [frac_a[i] - frac_b[i] for i in range(3)]
    d = [x - round(x) for x in d]
    cart = [sum(d[j] * m[j][i] for j in range(3)) for i in range(3)]
    return math.sqrt(sum(c * c for c in cart))


def consistency_check(rec: StructureRecord, requires_electrostatics: bool = False) -> list[str]:
    """Pre-simulation sanity checks. Violations are data, not exceptions:
    an empty list means the record passed."""
    violations: list[str] = []
    if not rec.atoms:
        violations.append("no atoms")
        return violations
    if rec.lattice is None or rec.lattice.volume() <= 0:
        violations.append("lattice volume not positive")
    unknown = sorted({a.element for a in rec.atoms} - PERIODIC_TABLE)
    if unknown:
        violations.append(f"unknown elements: {', '.join(unknown)}")
    if rec.lattice is not None and rec.lattice.volume() > 0:
        n = len(rec.atoms)
        for i in range(n):
            for j in range(i + 1, n):
                d = minimum_image_distance(
                    rec.lattice,
                    (rec.atoms[i].x, rec.atoms[i].y, rec.atoms[i].z),
                    (rec.atoms[j].x, rec.atoms[j].y, rec.atoms[j].z),
                )
                if d < MIN_ATOM_SEPARATION:
                    violations.append(
                        f"overlapping atoms: {i} and {j} at {d:.3f} A"
                    )
    if requires_electrostatics and all(a.charge == 0.0 for a in rec.atoms):
        violations.append("missing partial charges for electrostatic run")
    return violations


# --- record file parsing ------------------------------------------------------

def _parse_rec(text: str) -> dict:
    """Parse the shared key/value record format into raw fields."""
    fields: dict = {"names": [], "atoms": [], "descriptors": {}}
    in_descriptors = False
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line == "descriptors":
            in_descriptors = True
            continue
        parts = line.split()
        key = parts[0]
        if in_descriptors:
            # descriptor lines: <key> <value> <unit>
            fields["descriptors"][key] = (float(parts[1]), parts[2] if len(parts) > 2 else "")
            continue
        if key == "atom":
            fields["atoms"].append(Atom(
                element=parts[1],
                x=float(parts[2]), y=float(parts[3]), z=float(parts[4]),
                charge=float(parts[5]) if len(parts) > 5 else 0.0,
            ))
        elif key == "name":
            fields["names"].append(" ".join(parts[1:]))
        elif key == "lattice":
            fields["lattice"] = Lattice(*(float(x) for x in parts[1:7]))
        else:
            fields[key] = " ".join(parts[1:])
    return fields


def _fmt(x: float) -> str:
    return format(x, ".10g")


def dump_structure(rec: StructureRecord) -> str:
    """Render a StructureRecord in the fixture text format.
    ``load_structure`` of the output reproduces the record exactly."""
    lines = [f"id {rec.structure_id}"]
    lines += [f"name {n}" for n in rec.names]
    if rec.formula:
        lines.append(f"formula {rec.formula}")
    if rec.lattice:
        lt = rec.lattice
        lines.append("lattice " + " ".join(_fmt(v) for v in
                                           (lt.a, lt.b, lt.c, lt.alpha, lt.beta, lt.gamma)))
    lines.append(f"valid {'true' if rec.valid else 'false'}")
    lines.append(f"atom_count {rec.atom_count}")
    for a in rec.atoms:
        lines.append(f"atom {a.element} {_fmt(a.x)} {_fmt(a.y)} {_fmt(a.z)} {_fmt(a.charge)}")
    if rec.descriptors:
        lines.append("descriptors")
        for key, (value, unit) in rec.descriptors.items():
            lines.append(f"{key} {_fmt(value)} {unit}".rstrip())
    return "\n".join(lines) + "\n"


def parse_structure(text: str, origin: str = "<string>") -> StructureRecord:
    f = _parse_rec(text)
    rec = StructureRecord(
        structure_id=f["id"],
        names=f["names"],
        formula=f.get("formula", ""),
        atom_count=int(f.get("atom_count", len(f["atoms"]))),
        lattice=f.get("lattice"),
        atoms=f["atoms"],
        descriptors=f["descriptors"],
        valid=f.get("valid", "true").lower() == "true",
    )
    if rec.atoms and rec.atom_count != len(rec.atoms):
        raise ValueError(f"{origin}: atom_count {rec.atom_count} != {len(rec.atoms)} atoms")
    return rec


def load_structure(path: Path) -> StructureRecord:
    return parse_structure(path.read_text(encoding="utf-8"), origin=str(path))


def load_molecule(path: Path) -> MoleculeRecord:
    f = _parse_rec(path.read_text(encoding="utf-8"))
    return MoleculeRecord(
        name=f["id"],
        atoms=f["atoms"],
        requires_electrostatics=f.get("requires_electrostatics", "false").lower() == "true",
    )


class StructDB:
    """In-memory view over the fixture directory.

    Layout: ``<root>/structures/*.rec``, ``<root>/molecules/*.rec``,
    ``<root>/forcefields/*.tsv``.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.structures: dict[str, StructureRecord] = {}
        self.molecules: dict[str, MoleculeRecord] = {}
        self.forcefields: dict[str, list[ForceFieldEntry]] = {}
        self._synonyms: dict[str, str] = {}
        self._load()

    def _load(self) -> None:
        for path in sorted((self.root / "structures").glob("*.rec")):
            rec = load_structure(path)
            self.structures[rec.structure_id] = rec
            for name in rec.names:
                self._synonyms.setdefault(name.lower(), rec.structure_id)
        aliases = self.root / "structures" / "aliases.tsv"
        if aliases.exists():
            for line in aliases.read_text(encoding="utf-8").splitlines()[1:]:
                if not line.strip() or line.startswith("#"):
                    continue
                assembled, sid = line.split("\t")
                self._synonyms.setdefault(assembled.lower(), sid)
        for path in sorted((self.root / "molecules").glob("*.rec")):
            mol = load_molecule(path)
            self.molecules[mol.name] = mol
        ff_dir = self.root / "forcefields"
        if ff_dir.is_dir():
            for path in sorted(ff_dir.glob("*.tsv")):
                self._load_forcefield(path)

    def _load_forcefield(self, path: Path) -> None:
        lines = path.read_text(encoding="utf-8").splitlines()
        for line in lines[1:]:  # skip header
            if not line.strip() or line.startswith("#"):
                continue
            species, site, eps, sigma, charge, source = line.split("\t")
            self.forcefields.setdefault(species, []).append(ForceFieldEntry(
                species=species, site=site,
                lj_epsilon=float(eps), lj_sigma=float(sigma),
                charge=float(charge), source=source,
            ))

    def resolve_identifier(self, raw: str) -> StructureRecord:
        """Exact structure_id match first, then case-insensitive synonym
        (assembled topology+node+linker identifiers resolve through the alias
        table the same way), then formula. File references resolve by stem."""
        raw = raw.strip()
        if not raw:
            raise NotFound("empty identifier")
        if raw.lower().endswith(".cif"):
            return self.resolve_identifier(raw[:-4])
        if raw in self.structures:
            return self.structures[raw]
        sid = self._synonyms.get(raw.lower())
        if sid and sid in self.structures:
            return self.structures[sid]
        by_formula = [r for r in self.structures.values() if r.formula and r.formula == raw]
        if len(by_formula) == 1:
            return by_formula[0]
        if len(by_formula) > 1:
            raise Ambiguous(raw, sorted(r.structure_id for r in by_formula))
        raise NotFound(f"no structure matches {raw!r}")

    def try_resolve(self, raw: str) -> StructureRecord | None:
        try:
            return self.resolve_identifier(raw)
        except (NotFound, Ambiguous):
            return None

    def molecule(self, name: str) -> MoleculeRecord:
        mol = self.molecules.get(name)
        if mol is None:
            raise UnknownSpecies(f"no molecule fixture for {name!r}")
        return mol

    def lookup_forcefield(self, species: str) -> list[ForceFieldEntry]:
        entries = self.forcefields.get(species)
        if not entries:
            raise UnknownSpecies(f"no force-field entry for {species!r}")
        return list(entries)
