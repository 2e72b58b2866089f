"""Independent reference implementations used as test oracles.

Deliberately brute-force and structure-free: these re-derive expected values
without sharing code paths with the package. The chunking reference can also
freeze its output as a golden file (``python3 tests/oracles.py <out.json>``).
"""

from __future__ import annotations

import json
import math
import sys


# --- graph oracles -----------------------------------------------------------------

def kahn_toposort(nodes: list[str], edges: list[tuple[str, str]]) -> list[str] | None:
    """Deterministic Kahn's algorithm (smallest node first); None on cycles."""
    indeg = {n: 0 for n in nodes}
    succs: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        indeg[b] += 1
        succs[a].append(b)
    frontier = sorted(n for n, d in indeg.items() if d == 0)
    order: list[str] = []
    while frontier:
        node = frontier.pop(0)
        order.append(node)
        for nxt in succs[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                frontier.append(nxt)
        frontier.sort()
    if len(order) != len(nodes):
        return None
    return order


# --- geometry oracles ---------------------------------------------------------------

def min_image_distance_27(cell_edge: float, frac_a, frac_b) -> float:
    """Minimum distance over all 27 neighbor images of a cubic cell."""
    best = float("inf")
    for ix in (-1, 0, 1):
        for iy in (-1, 0, 1):
            for iz in (-1, 0, 1):
                dx = (frac_a[0] - frac_b[0] + ix) * cell_edge
                dy = (frac_a[1] - frac_b[1] + iy) * cell_edge
                dz = (frac_a[2] - frac_b[2] + iz) * cell_edge
                best = min(best, math.sqrt(dx * dx + dy * dy + dz * dz))
    return best


def lj_config_energy_ev(config, host, guest_mol, ff) -> float:
    """Re-derive the pairwise LJ guest-framework energy: explicit loops,
    27-image minimum distance, Lorentz-Berthelot mixing."""
    k_to_ev = 8.617333262e-05
    edge = host.lattice.a  # fixture cells are cubic
    guest_params = {e.site: e for e in ff[guest_mol.name]}

    # rotate molecule offsets by the quaternion, then translate
    w, x, y, z = config.orientation
    rows = [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
    total_k = 0.0
    for atom in guest_mol.atoms:
        px = rows[0][0] * atom.x + rows[0][1] * atom.y + rows[0][2] * atom.z
        py = rows[1][0] * atom.x + rows[1][1] * atom.y + rows[1][2] * atom.z
        pz = rows[2][0] * atom.x + rows[2][1] * atom.y + rows[2][2] * atom.z
        site = (px + config.position[0], py + config.position[1],
                pz + config.position[2])
        g = guest_params[atom.element]
        if g.lj_epsilon == 0.0:
            continue
        site_frac = tuple(c / edge for c in site)
        for fa in host.atoms:
            entries = ff.get(fa.element)
            if not entries:
                continue
            f = entries[0]
            r = min_image_distance_27(edge, site_frac, (fa.x, fa.y, fa.z))
            if r < 0.1:
                return 1e6
            eps = math.sqrt(g.lj_epsilon * f.lj_epsilon)
            sigma = 0.5 * (g.lj_sigma + f.lj_sigma)
            sr6 = (sigma / r) ** 6
            total_k += 4.0 * eps * (sr6 * sr6 - sr6)
    return total_k * k_to_ev


# --- retrieval oracles -----------------------------------------------------------------

def brute_force_topk(vectors, query, ids: list[str], k: int) -> list[str]:
    """O(n*d) scan with explicit dot products; ties broken by id."""
    scores = []
    for row, chunk_id in zip(vectors, ids):
        dot = 0.0
        for a, b in zip(row, query):
            dot += float(a) * float(b)
        scores.append((-dot, chunk_id))
    scores.sort()
    return [cid for _neg, cid in scores[:k]]


def reference_chunk_windows(sentences: list[str], max_chars: int,
                            min_chars: int, overlap: int) -> list[list[str]]:
    """Reference implementation of the packing rules, written against the
    documented behavior: greedy packing under the budget, overlap seeding
    (skipped when it would stall or leave no room for a new sentence), and
    forward carry-merge of under-min chunks bounded by the budget."""

    def joined(i, j):
        if i >= j:
            return 0
        return sum(len(s) for s in sentences[i:j]) + (j - i - 1)

    n = len(sentences)
    ranges: list[list[int]] = []
    start = 0
    while start < n:
        end = start + 1
        while end < n and joined(start, end + 1) <= max_chars:
            end += 1
        ranges.append([start, end])
        if end >= n:
            break
        nxt = end - overlap
        if nxt <= start:
            nxt = end
        elif joined(nxt, end + 1) > max_chars:
            nxt = end
        start = nxt

    merged: list[list[int]] = []
    i = 0
    while i < len(ranges):
        s, e = ranges[i]
        while joined(s, e) < min_chars and i + 1 < len(ranges):
            e2 = ranges[i + 1][1]
            if joined(s, e2) > max_chars:
                break
            e = e2
            i += 1
        merged.append([s, e])
        i += 1
    return [sentences[s:e] for s, e in merged]


# --- screening oracle ---------------------------------------------------------------------

def funnel_survivors_conjunction(rows: list[dict], max_atoms: int,
                                 probe: float) -> set[str]:
    """Survivor set as an order-free conjunction of the stage predicates."""
    out = set()
    for row in rows:
        if not row["valid"]:
            continue
        if row["atom_count"] > max_atoms:
            continue
        if row["pld"] < probe:
            continue
        out.add(row["structure_id"])
    return out


# --- golden freezer ------------------------------------------------------------------------

SYNTHETIC_SECTIONS = 3
SYNTHETIC_SENTENCES = 40


def synthetic_document_text() -> str:
    """Three sections of forty fixed-width sentences each (100 chars incl.
    the final period), plus an excluded reference section."""
    lines = []
    for s in range(SYNTHETIC_SECTIONS):
        lines.append(f"[Section {s}]")
        for i in range(SYNTHETIC_SENTENCES):
            body = f"Sentence {s:02d} {i:02d} "
            filler = "x" * (99 - len(body))
            lines.append(body + filler + ".")
        lines.append("")
    lines.append("[References]")
    lines.append("Excluded reference line one. Excluded reference line two.")
    return "\n".join(lines)


def frozen_golden() -> dict:
    text = synthetic_document_text()
    sections: list[dict] = []
    current = None
    for line in text.splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = {"title": line[1:-1], "sentences": []}
            sections.append(current)
        elif line.strip() and current is not None:
            current["sentences"].append(line.strip())
    chunks = []
    for section in sections:
        if section["title"].lower() == "references":
            continue
        for window in reference_chunk_windows(section["sentences"],
                                              max_chars=1500, min_chars=400,
                                              overlap=1):
            chunks.append({
                "section": section["title"],
                "sentences": window,
                "char_len": len(" ".join(window)),
            })
    return {"params": {"max_chars": 1500, "min_chars": 400, "overlap_sents": 1},
            "chunks": chunks}


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "fixtures/golden/chunker_synthetic.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(frozen_golden(), fh, indent=2)
    print(f"wrote {out} ({len(frozen_golden()['chunks'])} chunks)")
