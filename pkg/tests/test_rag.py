from __future__ import annotations

import datetime as dt
import json
import threading

import numpy as np
import pytest

from breaklens.rag import (
    DIM,
    Document,
    DocumentError,
    LexicalEmbedder,
    RagConfig,
    VectorStore,
    chunk_document,
    chunk_text,
    parse_document,
    temporal_relevance,
)

D0 = dt.date(2022, 7, 1)


def doc(i, date, body, title=None):
    return Document(i, title or i.title(), date, "note", body)


def words(n, prefix="w"):
    return " ".join(f"{prefix}{i}" for i in range(n))


class TestChunking:
    def test_fits(self):
        assert len(chunk_text(words(100))) == 1

    def test_long_paragraph(self):
        toks = words(600).split()
        chunks = chunk_text(" ".join(toks), 256, 32)
        assert len(chunks) == 3
        parts = [c.split() for c in chunks]
        assert parts[0] == toks[:256] and parts[1] == toks[224:480] and parts[2] == toks[448:]
        assert parts[0][-32:] == parts[1][:32]

    def test_paragraphs_packed(self):
        body = "\n\n".join(words(100, p) for p in "abc")
        chunks = chunk_text(body, 256, 32)
        assert len(chunks) == 2
        assert chunks[0] == words(100, "a") + "\n\n" + words(100, "b")

    def test_empty(self):
        with pytest.raises(DocumentError):
            chunk_document(doc("e", D0, "   \n\n "))

    def test_bad_params(self):
        with pytest.raises(ValueError):
            chunk_text("a b", 10, 10)


class TestEmbedder:
    def test_deterministic_unit_norm(self):
        e = LexicalEmbedder()
        v = e.embed(["revenue rose after the launch", "revenue rose after the launch", "x"])
        assert v.shape == (3, DIM)
        assert np.array_equal(v[0], v[1])
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-6)

    def test_disjoint_vocabulary_orthogonal(self):
        e = LexicalEmbedder()
        a, b = "helios launch subscribers growth", "payroll holiday parking badge"
        assert not {e.bucket(t) for t in e.tokens(a)} & {e.bucket(t) for t in e.tokens(b)}
        va, vb = e.embed([a, b])
        assert float(va @ vb) == 0.0

    def test_stopwords_ignored(self):
        e = LexicalEmbedder()
        va, vb = e.embed(["the launch", "launch"])
        assert float(va @ vb) == pytest.approx(1.0)


class TestTemporal:
    @pytest.mark.parametrize("days,expected", [(0, 1.0), (15, 0.5), (-15, 0.5), (30, 0.0), (45, 0.0)])
    def test_spot_values(self, days, expected):
        assert temporal_relevance(D0 + dt.timedelta(days=days), D0, 30) == expected

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            temporal_relevance(D0, D0, 0)


class TestParse:
    def test_date_line_and_title(self, tmp_path):
        p = tmp_path / "memo.txt"
        p.write_text("Subject: Launch memo\nDate: July 20, 2022\n\nBody text here.\n")
        d = parse_document(p)
        assert (d.id, d.title, d.date) == ("memo", "Launch memo", dt.date(2022, 7, 20))

    def test_filename_date(self, tmp_path):
        p = tmp_path / "notes_2022-06-14.txt"
        p.write_text("Quarterly notes\n\nSomething happened.\n")
        d = parse_document(p)
        assert d.date == dt.date(2022, 6, 14) and d.title == "Quarterly notes"

    def test_undated_rejected(self, tmp_path):
        p = tmp_path / "undated.txt"
        p.write_text("No date anywhere.\n")
        with pytest.raises(DocumentError):
            parse_document(p)


class TestStore:
    def test_fresh_stats(self, tmp_path):
        s = VectorStore(tmp_path)
        st = s.stats()
        assert (st["total_documents"], st["total_chunks"]) == (0, 0)

    def test_one_doc_three_chunks(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("big", D0, words(600))])
        st = s.stats()
        assert (st["total_documents"], st["total_chunks"]) == (1, 3)
        assert s.delete_by_date(D0, D0) == 1
        st = s.stats()
        assert (st["total_documents"], st["total_chunks"]) == (0, 0)

    def test_idempotent(self, tmp_path):
        s = VectorStore(tmp_path)
        d = doc("a", D0, "alpha beta gamma")
        s.add_documents([d])
        rep = s.add_documents([d])
        assert rep.skipped == ["a"] and rep.chunks_added == 0
        assert s.stats()["total_chunks"] == 1
        rep = s.add_documents([doc("a", D0, "alpha beta delta")])
        assert rep.replaced == ["a"] and s.stats()["total_chunks"] == 1

    def test_all_or_nothing(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("no date\n")
        s = VectorStore(tmp_path / "store")
        with pytest.raises(DocumentError):
            s.add_documents([doc("good", D0, "fine"), bad])
        assert s.stats()["total_documents"] == 0

    def test_unreadable_path(self, tmp_path):
        with pytest.raises(DocumentError):
            VectorStore(tmp_path / "s").add_documents([tmp_path / "missing_2022-01-01.txt"])

    def test_layout(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("a", D0, "alpha beta"), doc("b", D0, words(300))])
        manifest = [json.loads(l) for l in (tmp_path / "manifest.jsonl").read_text().splitlines()]
        assert {m["id"] for m in manifest} == {"a", "b"}
        assert set(manifest[0]) >= {"id", "title", "date", "type", "chunks", "hash"}
        raw = np.fromfile(tmp_path / "vectors.f32", dtype="<f4")
        assert raw.size == DIM * s.stats()["total_chunks"]

    def test_hybrid_score_recomputes(self, tmp_path):
        s = VectorStore(tmp_path, RagConfig(top_k=10))
        rng = np.random.default_rng(0)
        vocab = ["launch", "revenue", "users", "growth", "office", "payroll", "server", "policy"]
        docs = [doc(f"d{i}", D0 + dt.timedelta(days=int(rng.integers(-40, 41))),
                    " ".join(rng.choice(vocab, 6))) for i in range(20)]
        s.add_documents(docs)
        out = s.retrieve("users growth after launch", D0)
        assert out
        e = LexicalEmbedder()
        q = e.embed(["users growth after launch"])[0]
        for r in out:
            assert r.score == pytest.approx(0.7 * r.similarity + 0.3 * r.temporal, abs=1e-12)
            assert abs((r.chunk.date - D0).days) <= 30
            assert r.temporal == temporal_relevance(r.chunk.date, D0, 30)
            v = e.embed([r.chunk.text])[0]
            assert r.similarity == pytest.approx(float(v.astype(np.float32).astype(float) @ q), abs=1e-6)
        assert [r.score for r in out] == sorted((r.score for r in out), reverse=True)

    def test_formula_examples(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("same", D0, "launch users"), doc("edge", D0 + dt.timedelta(days=30), "launch users")])
        out = {r.chunk.doc_id: r for r in s.retrieve("launch users", D0)}
        assert out["same"].score == pytest.approx(1.0)
        assert out["edge"].score == pytest.approx(0.7)
        assert out["edge"].temporal == 0.0

    def test_ties_earlier_date_then_id(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("b", D0, "x y"), doc("a", D0, "x y"), doc("c", D0 - dt.timedelta(days=3), "x y")])
        ids = [r.chunk.doc_id for r in s.retrieve("x y", D0 - dt.timedelta(days=1), top_k=3, alpha=1.0)]
        assert ids == ["c", "a", "b"]

    def test_monotonicity(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("near", D0 + dt.timedelta(days=2), "launch"), doc("far", D0 + dt.timedelta(days=20), "launch")])
        assert [r.chunk.doc_id for r in s.retrieve("launch", D0)] == ["near", "far"]

    def test_empty_window(self, tmp_path, caplog):
        s = VectorStore(tmp_path)
        s.add_documents([doc("old", dt.date(2000, 1, 1), "launch")])
        assert s.retrieve("launch", D0) == []
        assert "no documents" in caplog.text

    def test_persistence_roundtrip(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc(f"d{i}", D0 + dt.timedelta(days=i), words(50, f"t{i}_")) for i in range(5)])
        before = s.retrieve("t1_3 t2_4", D0)
        again = VectorStore(tmp_path).retrieve("t1_3 t2_4", D0)
        assert before == again

    def test_delete_range(self, tmp_path):
        s = VectorStore(tmp_path)
        s.add_documents([doc("a", D0, "x"), doc("b", D0 + dt.timedelta(days=40), "y")])
        assert s.delete_by_date("1990-01-01", "1990-12-31") == 0
        assert s.delete_by_date(D0, D0) == 1
        assert [d["id"] for d in s.documents()] == ["b"]
        with pytest.raises(ValueError):
            s.delete_by_date("2022-02-01", "2022-01-01")

    def test_concurrent_adds_serialized(self, tmp_path):
        s = VectorStore(tmp_path)
        batches = [[doc(f"t{t}_{i}", D0, words(10, f"t{t}{i}")) for i in range(5)] for t in range(4)]
        threads = [threading.Thread(target=s.add_documents, args=(b,)) for b in batches]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert VectorStore(tmp_path).stats()["total_documents"] == 20


class TestNexoraCorpus:
    def test_31_documents(self, tmp_path, nexora_dir):
        s = VectorStore(tmp_path)
        s.add_documents(nexora_dir / "corpus")
        assert s.stats()["total_documents"] == 31

    def test_delete_july_removes_memo(self, tmp_path, nexora_dir):
        s = VectorStore(tmp_path)
        s.add_documents(nexora_dir / "corpus")
        s.delete_by_date("2022-07-01", "2022-07-31")
        ids = [d["id"] for d in s.documents()]
        assert "memo_project_helios_launch_2022-07-20" not in ids
        out = s.retrieve("Nexora Technologies monthly active users. Upward shift detected around 2022-07-01.", D0)
        assert out and all("Helios" not in r.chunk.text for r in out)
