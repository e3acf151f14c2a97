"""Document store for grounding explanations in dated private documents.

Documents are split into paragraph-aligned chunks, embedded into unit
vectors and persisted in a small directory-based store. Retrieval keeps
only chunks whose document date lies within ``delta_days`` of the break and
ranks them by ``alpha * cosine + (1 - alpha) * temporal relevance``.

Store layout (all files replaced atomically on write)::

    store.json      {"format": 1, "embedder": ..., "dim": 384}
    manifest.jsonl  one document per line: id, title, date, type, chunks, hash, source
    chunks.jsonl    one chunk per line: doc_id, ordinal, text
    vectors.f32     little-endian float32, ``dim`` values per chunk, chunk order
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from filelock import FileLock

log = logging.getLogger(__name__)

__all__ = [
    "Document",
    "ChunkRecord",
    "RankedChunk",
    "RagConfig",
    "IngestReport",
    "DocumentError",
    "LexicalEmbedder",
    "SentenceTransformerEmbedder",
    "get_embedder",
    "parse_document",
    "chunk_text",
    "chunk_document",
    "temporal_relevance",
    "VectorStore",
]

DIM = 384
FORMAT = 1

_MONTHS = {m: i for i, m in enumerate(
    ["january", "february", "march", "april", "may", "june", "july",
     "august", "september", "october", "november", "december"], 1)}

STOPWORDS = frozenset("""
a an and are as at be been but by for from had has have he her his i if in into is it its
me my of on or our she so than that the their them then there these they this to was we
were what when which who will with you your all any can do does not no yes also over up
""".split())


class DocumentError(ValueError):
    """A document cannot be read, dated or chunked."""


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    date: dt.date
    doc_type: str
    body: str
    source: str = ""

    @property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        for part in (self.title, self.date.isoformat(), self.doc_type, self.body):
            h.update(part.encode("utf-8"))
            h.update(b"\0")
        return h.hexdigest()


@dataclass(frozen=True)
class ChunkRecord:
    doc_id: str
    ordinal: int
    text: str
    title: str
    date: dt.date
    doc_type: str = ""


@dataclass(frozen=True)
class RankedChunk:
    chunk: ChunkRecord
    similarity: float
    temporal: float
    score: float


@dataclass(frozen=True)
class RagConfig:
    alpha: float = 0.7
    delta_days: float = 30.0
    top_k: int = 3
    embedder: str = "lexical"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.delta_days <= 0:
            raise ValueError("delta_days must be positive")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")


@dataclass
class IngestReport:
    added: list[str] = field(default_factory=list)
    replaced: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    chunks_added: int = 0


# ---------------------------------------------------------------------------
# parsing and chunking
# ---------------------------------------------------------------------------


_DATE_LINE = re.compile(r"^\s*Date:\s*(.+?)\s*$", re.MULTILINE)
_TITLE_LINE = re.compile(r"^\s*(?:Subject|Title):\s*(.+?)\s*$", re.MULTILINE)
_NAME_DATE = re.compile(r"_(\d{4}-\d{2}-\d{2})$")


def _parse_date(raw: str) -> dt.date | None:
    raw = raw.strip()
    try:
        return dt.date.fromisoformat(raw[:10])
    except ValueError:
        pass
    m = re.match(r"([A-Za-z]+)\.?\s+(\d{1,2}),?\s+(\d{4})$", raw)
    if m and m.group(1).lower() in _MONTHS:
        try:
            return dt.date(int(m.group(3)), _MONTHS[m.group(1).lower()], int(m.group(2)))
        except ValueError:
            return None
    return None


def parse_document(path: str | Path, doc_type: str | None = None) -> Document:
    """Read a text document and its metadata.

    The date comes from a ``Date:`` line (ISO or ``Month D, YYYY``), falling
    back to a ``_YYYY-MM-DD`` filename suffix. Undated documents are
    rejected. The title is the ``Subject:``/``Title:`` line or else the first
    non-empty line; the type defaults to the filename prefix.
    """
    path = Path(path)
    try:
        body = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DocumentError(f"{path}: cannot read ({exc})") from exc
    if not body.strip():
        raise DocumentError(f"{path}: empty document")
    date = None
    m = _DATE_LINE.search(body)
    if m:
        date = _parse_date(m.group(1))
    if date is None:
        m = _NAME_DATE.search(path.stem)
        if m:
            date = _parse_date(m.group(1))
    if date is None:
        raise DocumentError(f"{path}: no parseable date (add a 'Date: YYYY-MM-DD' line or a _YYYY-MM-DD filename suffix)")
    m = _TITLE_LINE.search(body)
    title = m.group(1) if m else next(line.strip() for line in body.splitlines() if line.strip())
    dtype = doc_type or path.stem.split("_", 1)[0]
    return Document(path.stem, title, date, dtype, body, str(path))


def chunk_text(text: str, max_tokens: int = 256, overlap: int = 32) -> list[str]:
    """Greedy paragraph packing on whitespace tokens.

    Paragraphs (blank-line separated) are packed whole, with their original
    line breaks, while they fit. A paragraph longer than ``max_tokens`` is cut into windows of that size
    advancing by ``max_tokens - overlap``.
    """
    if not max_tokens > overlap >= 0:
        raise ValueError("need max_tokens > overlap >= 0")
    paras = [(p.split(), p.strip()) for p in re.split(r"\n\s*\n", text)]
    paras = [p for p in paras if p[0]]
    if not paras:
        raise DocumentError("empty body")
    chunks: list[str] = []
    cur: list[str] = []
    size = 0

    def flush():
        nonlocal cur, size
        if cur:
            chunks.append("\n\n".join(cur))
        cur, size = [], 0

    for p, raw in paras:
        if len(p) > max_tokens:
            flush()
            step = max_tokens - overlap
            start = 0
            while True:
                chunks.append(" ".join(p[start:start + max_tokens]))
                if start + max_tokens >= len(p):
                    break
                start += step
            continue
        if size + len(p) > max_tokens:
            flush()
        cur.append(raw)
        size += len(p)
    flush()
    return chunks


def chunk_document(doc: Document, max_tokens: int = 256, overlap: int = 32) -> list[str]:
    try:
        return chunk_text(doc.body, max_tokens, overlap)
    except DocumentError as exc:
        raise DocumentError(f"{doc.id}: {exc}") from None


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


_TOKEN = re.compile(r"[a-z0-9]+")


def _normalize(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("embedding provider returned a zero vector")
    return (mat / norms).astype(np.float32)


class LexicalEmbedder:
    """Hashed bag of words: stopword-free token counts in ``dim`` buckets.

    Deterministic across processes (keyed BLAKE2 hashing, not ``hash()``).
    """

    name = "lexical"

    def __init__(self, dim: int = DIM):
        self.dim = dim

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def tokens(self, text: str) -> list[str]:
        return [t for t in _TOKEN.findall(text.lower()) if t not in STOPWORDS]

    def embed(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            toks = self.tokens(text) or [text.strip().lower() or "<empty>"]
            for t in toks:
                out[i, self.bucket(t)] += 1.0
        return _normalize(out)


class SentenceTransformerEmbedder:
    """Dense sentence embeddings; needs the optional ``sentence-transformers``."""

    def __init__(self, model: str = "all-MiniLM-L6-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise RuntimeError("install the 'embeddings' extra to use sentence-transformers") from exc
        self._model = SentenceTransformer(model)
        self.name = f"st:{model}"
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def embed(self, texts) -> np.ndarray:
        vecs = self._model.encode(list(texts), convert_to_numpy=True, normalize_embeddings=False)
        return _normalize(np.asarray(vecs, dtype=float))


def get_embedder(name: str = "lexical"):
    if name == "lexical":
        return LexicalEmbedder()
    if name.startswith("st:"):
        return SentenceTransformerEmbedder(name[3:])
    raise ValueError(f"unknown embedder {name!r}; use 'lexical' or 'st:<model>'")


def temporal_relevance(doc_date, t_i, delta_days: float = 30.0) -> float:
    """Linear decay from 1 at ``t_i`` to 0 at ``delta_days`` away."""
    if delta_days <= 0:
        raise ValueError("delta_days must be positive")
    gap = abs((_as_date(doc_date) - _as_date(t_i)).days)
    return max(0.0, 1.0 - gap / delta_days)


def _as_date(x) -> dt.date:
    if isinstance(x, dt.datetime):
        return x.date()
    if isinstance(x, dt.date):
        return x
    return dt.date.fromisoformat(str(x)[:10])


# ---------------------------------------------------------------------------
# store
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class VectorStore:
    """Persistent chunk store with temporal filtering and hybrid ranking.

    One writer at a time (file lock across processes, thread lock within);
    readers work on an immutable in-memory snapshot.
    """

    def __init__(self, directory: str | Path, cfg: RagConfig | None = None, embedder=None):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg or RagConfig()
        self.embedder = embedder or get_embedder(self.cfg.embedder)
        self._lock = threading.Lock()
        self._flock = FileLock(str(self.dir / ".lock"))
        self._load()

    # -- persistence -------------------------------------------------------

    def _load(self) -> None:
        meta_path = self.dir / "store.json"
        docs, chunks, vecs = {}, [], np.zeros((0, self.embedder.dim), dtype=np.float32)
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            if meta.get("embedder") != self.embedder.name or meta.get("dim") != self.embedder.dim:
                raise ValueError(
                    f"store at {self.dir} was built with {meta.get('embedder')} "
                    f"(dim {meta.get('dim')}), not {self.embedder.name}"
                )
            for line in (self.dir / "manifest.jsonl").read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    docs[rec["id"]] = rec
            for line in (self.dir / "chunks.jsonl").read_text().splitlines():
                if line.strip():
                    chunks.append(json.loads(line))
            raw = np.fromfile(self.dir / "vectors.f32", dtype="<f4")
            vecs = raw.reshape(-1, self.embedder.dim) if raw.size else vecs
            if vecs.shape[0] != len(chunks):
                raise ValueError(f"store at {self.dir} is inconsistent: {len(chunks)} chunks, {vecs.shape[0]} vectors")
        self._docs, self._chunks, self._vecs = docs, chunks, np.asarray(vecs, dtype=np.float32)

    def _save(self, docs: dict, chunks: list, vecs: np.ndarray) -> None:
        _atomic_write(self.dir / "vectors.f32", np.asarray(vecs, dtype="<f4").tobytes())
        _atomic_write(self.dir / "chunks.jsonl",
                      "".join(json.dumps(c, sort_keys=True) + "\n" for c in chunks).encode("utf-8"))
        _atomic_write(self.dir / "manifest.jsonl",
                      "".join(json.dumps(d, sort_keys=True) + "\n" for d in docs.values()).encode("utf-8"))
        _atomic_write(self.dir / "store.json", json.dumps(
            {"format": FORMAT, "embedder": self.embedder.name, "dim": self.embedder.dim}).encode("utf-8"))
        self._docs, self._chunks, self._vecs = docs, chunks, np.asarray(vecs, dtype=np.float32)

    # -- corpus management -------------------------------------------------

    @staticmethod
    def _expand(items) -> list:
        out = []
        for it in items if isinstance(items, (list, tuple)) else [items]:
            if isinstance(it, Document):
                out.append(it)
                continue
            p = Path(it)
            if p.is_dir():
                out.extend(sorted(q for q in p.iterdir() if q.is_file() and q.suffix in (".txt", ".md")))
            else:
                out.append(p)
        return out

    def add_documents(self, items, max_tokens: int = 256, overlap: int = 32) -> IngestReport:
        """Ingest files, directories or ``Document`` objects.

        Everything is parsed and chunked before the store is touched; any
        unreadable or undated input aborts the whole call. Unchanged
        documents (same id and content hash) are skipped, changed ones are
        replaced.
        """
        parsed: list[tuple[Document, list[str]]] = []
        errors = []
        for it in self._expand(items):
            try:
                doc = it if isinstance(it, Document) else parse_document(it)
                parsed.append((doc, chunk_document(doc, max_tokens, overlap)))
            except DocumentError as exc:
                errors.append(str(exc))
        if errors:
            raise DocumentError("; ".join(errors))
        report = IngestReport()
        with self._lock, self._flock:
            self._load()
            docs = dict(self._docs)
            chunks = list(self._chunks)
            vecs = self._vecs
            for doc, texts in parsed:
                h = doc.content_hash
                old = docs.get(doc.id)
                if old is not None and old["hash"] == h:
                    report.skipped.append(doc.id)
                    continue
                if old is not None:
                    keep = np.array([c["doc_id"] != doc.id for c in chunks], dtype=bool)
                    chunks = [c for c, k in zip(chunks, keep) if k]
                    vecs = vecs[keep]
                    report.replaced.append(doc.id)
                else:
                    report.added.append(doc.id)
                new_vecs = self.embedder.embed(texts)
                chunks.extend({"doc_id": doc.id, "ordinal": i, "text": t} for i, t in enumerate(texts))
                vecs = np.vstack([vecs, new_vecs]) if vecs.size else new_vecs
                docs[doc.id] = {
                    "id": doc.id, "title": doc.title, "date": doc.date.isoformat(), "type": doc.doc_type,
                    "chunks": len(texts), "hash": h, "source": doc.source,
                }
                report.chunks_added += len(texts)
            if report.added or report.replaced:
                self._save(docs, chunks, vecs)
        return report

    def delete_by_date(self, start, end) -> int:
        """Remove documents dated within ``[start, end]``; returns how many."""
        start, end = _as_date(start), _as_date(end)
        if start > end:
            raise ValueError("start must not be after end")
        with self._lock, self._flock:
            self._load()
            gone = {i for i, d in self._docs.items() if start <= dt.date.fromisoformat(d["date"]) <= end}
            if not gone:
                return 0
            keep = np.array([c["doc_id"] not in gone for c in self._chunks], dtype=bool)
            docs = {i: d for i, d in self._docs.items() if i not in gone}
            chunks = [c for c, k in zip(self._chunks, keep) if k]
            self._save(docs, chunks, self._vecs[keep] if keep.size else self._vecs)
        return len(gone)

    def stats(self) -> dict:
        size = sum(p.stat().st_size for p in self.dir.iterdir() if p.is_file() and not p.name.startswith("."))
        return {"total_documents": len(self._docs), "total_chunks": len(self._chunks), "store_bytes": size}

    def documents(self) -> list[dict]:
        return sorted(self._docs.values(), key=lambda d: (d["date"], d["id"]))

    # -- retrieval ---------------------------------------------------------

    def retrieve(self, query: str, t_i, top_k: int | None = None, alpha: float | None = None,
                 delta_days: float | None = None) -> list[RankedChunk]:
        """Top chunks from documents dated within ``delta_days`` of ``t_i``."""
        top_k = top_k or self.cfg.top_k
        alpha = self.cfg.alpha if alpha is None else alpha
        delta = self.cfg.delta_days if delta_days is None else delta_days
        t_i = _as_date(t_i)
        with self._lock:
            docs, chunks, vecs = self._docs, self._chunks, self._vecs
        if not chunks:
            return []
        q = self.embedder.embed([query])[0].astype(float)
        ranked = []
        for i, c in enumerate(chunks):
            date = dt.date.fromisoformat(docs[c["doc_id"]]["date"])
            if abs((date - t_i).days) > delta:
                continue
            sim = float(vecs[i].astype(float) @ q)
            temp = temporal_relevance(date, t_i, delta)
            ranked.append((alpha * sim + (1.0 - alpha) * temp, sim, temp, date, c["doc_id"], c["ordinal"], i))
        if not ranked:
            log.warning("no documents dated within %s days of %s", delta, t_i.isoformat())
            return []
        ranked.sort(key=lambda r: (-r[0], r[3], r[4], r[5]))
        return [RankedChunk(self._record_from(docs, chunks, r[6]), r[1], r[2], r[0]) for r in ranked[:top_k]]

    @staticmethod
    def _record_from(docs, chunks, i) -> ChunkRecord:
        c = chunks[i]
        d = docs[c["doc_id"]]
        return ChunkRecord(c["doc_id"], c["ordinal"], c["text"], d["title"], dt.date.fromisoformat(d["date"]), d["type"])
