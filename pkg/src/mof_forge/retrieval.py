"""Local retrieval: section-aware chunking, unit-norm embedding, flat index.

Corpus files are plain text with bracketed section headers (``[Section
Title]`` on its own line); reference sections are excluded from chunking.
Within a section, text is split into sentences (terminal punctuation followed
by whitespace and a capital, with an abbreviation stop-list), packed greedily
under a character budget with a sentence-level overlap between consecutive
chunks, and short chunks are carried forward into the next segment.

The built-in embedder hashes lowercase tokens into a fixed 384-dimensional
count vector and L2-normalizes it, so inner-product scores over the index are
cosine similarities. Any embedder with the same ``dims``/``embed`` surface can
be plugged in. Search is exact brute-force over the dense matrix.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (BadParams, CorruptIndex, DimensionMismatch, EmptyIndex,
                     EmptyText)

UNIT_NORM_TOLERANCE = 1e-6
DEFAULT_DIMS = 384

_HEADER = re.compile(r"^\[([^\[\]]+)\]\s*$")
_ABBREVIATIONS = {
    "e.g.", "i.e.", "cf.", "al.", "et al.", "fig.", "figs.", "ref.", "refs.",
    "eq.", "eqs.", "dr.", "mr.", "ms.", "vs.", "no.", "approx.", "ca.",
}


@dataclass(frozen=True)
class Section:
    title: str
    text: str

    @property
    def excluded(self) -> bool:
        return self.title.strip().lower() == "references"


@dataclass(frozen=True)
class Document:
    filename: str
    sections: tuple[Section, ...]


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    filename: str
    section_title: str
    sentences: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.sentences)

    @property
    def char_len(self) -> int:
        return len(self.text)


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    filename: str
    score: float
    text: str


def parse_document(filename: str, text: str) -> Document:
    sections: list[Section] = []
    title = ""
    buffer: list[str] = []

    def flush():
        body = "\n".join(buffer).strip()
        if body:
            sections.append(Section(title, body))

    for line in text.splitlines():
        m = _HEADER.match(line)
        if m:
            flush()
            title = m.group(1).strip()
            buffer = []
        else:
            buffer.append(line)
    flush()
    return Document(filename=filename, sections=tuple(sections))


def split_sentences(text: str) -> list[str]:
    """Terminal punctuation followed by whitespace and a capital letter ends a
    sentence, unless the word carrying the punctuation is a known
    abbreviation. Whitespace is normalized first."""
    normalized = " ".join(text.split())
    if not normalized:
        return []
    sentences: list[str] = []
    start = 0
    for m in re.finditer(r"[.!?]+(?=\s+[A-Z])", normalized):
        end = m.end()
        candidate = normalized[start:end]
        words = candidate.rsplit(" ", 2)
        last = words[-1].lower()
        last_two = " ".join(words[-2:]).lower() if len(words) >= 2 else last
        if last in _ABBREVIATIONS or last_two in _ABBREVIATIONS:
            continue
        sentences.append(candidate)
        start = end + 1
        while start < len(normalized) and normalized[start] == " ":
            start += 1
    tail = normalized[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _joined_len(sents: list[str], start: int, end: int) -> int:
    if start >= end:
        return 0
    return sum(len(s) for s in sents[start:end]) + (end - start - 1)


def _windows(sents: list[str], max_chars: int, min_chars: int,
             overlap_sents: int) -> list[tuple[int, int]]:
    """Half-open sentence index ranges implementing greedy packing, overlap
    seeding, and the carry-buffer merge for under-min chunks."""
    n = len(sents)
    windows: list[tuple[int, int]] = []
    start = 0
    while start < n:
        end = start + 1
        while end < n and _joined_len(sents, start, end + 1) <= max_chars:
            end += 1
        windows.append((start, end))
        if end >= n:
            break
        nxt = end - overlap_sents
        if nxt <= start:
            nxt = end  # overlap would stall progress
        elif _joined_len(sents, nxt, end + 1) > max_chars:
            nxt = end  # overlap leaves no room for a new sentence
        start = nxt

    merged: list[tuple[int, int]] = []
    i = 0
    while i < len(windows):
        s, e = windows[i]
        while _joined_len(sents, s, e) < min_chars and i + 1 < len(windows):
            _s2, e2 = windows[i + 1]
            if _joined_len(sents, s, e2) > max_chars:
                break
            e = e2
            i += 1
        merged.append((s, e))
        i += 1
    return merged


def chunk_document(doc: Document, max_chars: int = 1500, min_chars: int = 400,
                   overlap_sents: int = 1) -> list[Chunk]:
    """Chunk every non-excluded section. A single sentence over the budget
    becomes its own oversized chunk; a final under-min chunk with no following
    segment is emitted as-is."""
    if max_chars <= 0 or min_chars <= 0 or overlap_sents < 0:
        raise BadParams("chunking parameters must be positive")
    if min_chars >= max_chars:
        raise BadParams("min_chars must be smaller than max_chars")
    chunks: list[Chunk] = []
    ordinal = 0
    for section in doc.sections:
        if section.excluded:
            continue
        sents = split_sentences(section.text)
        if not sents:
            continue
        for s, e in _windows(sents, max_chars, min_chars, overlap_sents):
            chunks.append(Chunk(
                chunk_id=f"{doc.filename}#{ordinal:04d}",
                filename=doc.filename,
                section_title=section.title,
                sentences=tuple(sents[s:e]),
            ))
            ordinal += 1
    return chunks


# --- embedding --------------------------------------------------------------------

_TOKEN = re.compile(r"[a-z0-9]+")


class HashedTokenEmbedder:
    """Deterministic bag-of-words embedder: stable 64-bit token hash modulo
    the dimensionality, token counts, then L2 normalization."""

    def __init__(self, dims: int = DEFAULT_DIMS):
        self.dims = dims

    @staticmethod
    def _bucket(token: str, dims: int) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % dims

    def embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dims), dtype=np.float32)
        out = np.zeros((len(texts), self.dims), dtype=np.float64)
        for row, text in enumerate(texts):
            if not text or not text.strip():
                raise EmptyText(f"cannot embed empty text at position {row}")
            tokens = _TOKEN.findall(text.lower())
            if not tokens:
                raise EmptyText(f"text at position {row} has no tokens")
            for token in tokens:
                out[row, self._bucket(token, self.dims)] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        return (out / norms).astype(np.float32)


def embed(texts: list[str], embedder: HashedTokenEmbedder | None = None) -> np.ndarray:
    return (embedder or HashedTokenEmbedder()).embed(texts)


# --- index -----------------------------------------------------------------------

@dataclass
class VectorIndex:
    vectors: np.ndarray                       # (rows, dims) float32, unit-norm
    metadata: list[tuple[str, str, str]]      # (filename, chunk_id, text)
    dims: int

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.metadata):
            raise DimensionMismatch(
                f"{self.vectors.shape[0]} vectors vs {len(self.metadata)} metadata rows")

    @property
    def rows(self) -> int:
        return int(self.vectors.shape[0])


def build_index(chunks: list[Chunk], embedder: HashedTokenEmbedder | None = None,
                file_batch: int = 200, encode_batch: int = 512) -> VectorIndex:
    """Index contents are independent of the batch sizes; batching only
    bounds peak memory."""
    if not chunks:
        raise EmptyIndex("cannot build an index from zero chunks")
    if file_batch < 1 or encode_batch < 1:
        raise BadParams("batch sizes must be >= 1")
    embedder = embedder or HashedTokenEmbedder()
    blocks: list[np.ndarray] = []
    for i in range(0, len(chunks), encode_batch):
        batch = [c.text for c in chunks[i:i + encode_batch]]
        vectors = embedder.embed(batch)
        if vectors.shape[1] != embedder.dims:
            raise DimensionMismatch(
                f"embedder returned dims {vectors.shape[1]}, expected {embedder.dims}")
        blocks.append(vectors.astype(np.float32))
    matrix = np.vstack(blocks)
    metadata = [(c.filename, c.chunk_id, c.text) for c in chunks]
    return VectorIndex(vectors=matrix, metadata=metadata, dims=embedder.dims)


def search(index: VectorIndex, query_text: str, k: int,
           embedder: HashedTokenEmbedder | None = None) -> list[RetrievalHit]:
    """Exact top-k by inner product (cosine under unit norms); ties break on
    chunk_id."""
    if k < 1:
        raise BadParams("k must be >= 1")
    if index.rows == 0:
        raise EmptyIndex("search over an empty index")
    embedder = embedder or HashedTokenEmbedder(index.dims)
    query = embedder.embed([query_text])[0]
    # score in float64: float32 accumulation can reorder near-equal ranks
    scores = index.vectors.astype(np.float64) @ query.astype(np.float64)
    ranked = sorted(
        range(index.rows),
        key=lambda i: (-float(scores[i]), index.metadata[i][1]),
    )[:min(k, index.rows)]
    return [
        RetrievalHit(
            chunk_id=index.metadata[i][1],
            filename=index.metadata[i][0],
            score=float(scores[i]),
            text=index.metadata[i][2],
        )
        for i in ranked
    ]


# --- persistence -------------------------------------------------------------------

_MAGIC = b"MFVI"
_VERSION = 1


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def save_index(index: VectorIndex, directory: Path | str) -> None:
    """Write ``index.vec`` (binary, checksummed) and ``metadata.tsv``."""
    if index.rows == 0:
        raise EmptyIndex("refusing to save an empty index")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = index.vectors.astype("<f4").tobytes()
    digest = hashlib.sha256(payload).digest()
    header = _MAGIC + struct.pack("<II Q", _VERSION, index.dims, index.rows) + digest
    (directory / "index.vec").write_bytes(header + payload)
    lines = [f"rows\t{index.rows}"]
    for filename, chunk_id, text in index.metadata:
        lines.append(f"{_escape(filename)}\t{_escape(chunk_id)}\t{_escape(text)}")
    (directory / "metadata.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(directory: Path | str) -> VectorIndex:
    directory = Path(directory)
    raw = (directory / "index.vec").read_bytes()
    if len(raw) < 52 or raw[:4] != _MAGIC:
        raise CorruptIndex("bad magic or truncated header")
    version, dims, rows = struct.unpack("<II Q", raw[4:20])
    if version != _VERSION:
        raise CorruptIndex(f"unsupported index version {version}")
    digest = raw[20:52]
    payload = raw[52:]
    if len(payload) != rows * dims * 4:
        raise CorruptIndex("payload size does not match header")
    if hashlib.sha256(payload).digest() != digest:
        raise CorruptIndex("checksum mismatch")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(rows, dims).copy()
    lines = (directory / "metadata.tsv").read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("rows\t"):
        raise CorruptIndex("metadata header missing")
    declared = int(lines[0].split("\t")[1])
    entries = [tuple(_unescape(part) for part in line.split("\t"))
               for line in lines[1:] if line]
    if declared != rows or len(entries) != rows:
        raise CorruptIndex("metadata row count mismatch")
    metadata = [(f, c, t) for f, c, t in entries]
    return VectorIndex(vectors=vectors, metadata=metadata, dims=dims)


# --- corpus convenience ---------------------------------------------------------------

def ingest_corpus(corpus_dir: Path | str, max_chars: int = 1500,
                  min_chars: int = 400, overlap_sents: int = 1,
                  file_batch: int = 200) -> list[Chunk]:
    """Read a corpus directory in file batches and chunk every document."""
    corpus_dir = Path(corpus_dir)
    paths = sorted(p for p in corpus_dir.glob("*.txt"))
    chunks: list[Chunk] = []
    for i in range(0, len(paths), file_batch):
        for path in paths[i:i + file_batch]:
            doc = parse_document(path.name, path.read_text(encoding="utf-8"))
            chunks.extend(chunk_document(doc, max_chars, min_chars, overlap_sents))
    return chunks
