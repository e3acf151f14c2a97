from __future__ import annotations

import datetime as dt
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest

from breaklens.detectors import Detection
from breaklens.explain import (
    NO_DOCUMENTS,
    BreakContext,
    ChatResponse,
    EchoProvider,
    HttpChatProvider,
    JudgeParseError,
    ProviderError,
    RetryableProviderError,
    build_context,
    complete_with_retry,
    explain_breaks,
    judge_explanation,
    parse_verdict,
    render_judge_prompt,
    render_rag_prompt,
    render_standard_prompt,
)
from breaklens.rag import ChunkRecord, RankedChunk
from breaklens.timeseries import TimeSeries

GOLDEN = Path(__file__).parent / "golden"


def golden(name):
    # golden files carry one trailing newline that the prompts do not
    text = (GOLDEN / name).read_text()
    assert text.endswith("\n")
    return text[:-1]


CTX = BreakContext(
    break_date="1898",
    confidence=0.833,
    magnitude=-247.123,
    direction="downward",
    before_stats={"mean": 1097.75, "std": 150.12345, "trend": "flat"},
    after_stats={"mean": 850.756, "std": 125.5, "trend": "decreasing"},
    data_description="annual Nile river flow",
)

DOCS = [
    RankedChunk(ChunkRecord("dam", 0, "Construction started on the first dam.", "Aswan dam works begin",
                            dt.date(1898, 12, 1), "memo"), 0.5, 0.2, 0.41),
    RankedChunk(ChunkRecord("flood", 0, "Gauges recorded a low flood.", "Flood report",
                            dt.date(1898, 6, 15), "report"), 0.3, 0.1, 0.24),
]


class TestGoldens:
    def test_standard(self):
        req = render_standard_prompt(CTX)
        assert req.system == golden("standard_system.txt")
        assert req.user == golden("standard_user.txt")
        assert (req.temperature, req.max_tokens) == (0.3, 300)

    def test_rag(self):
        req = render_rag_prompt(CTX, DOCS)
        assert req.system == golden("rag_system.txt")
        assert req.user == golden("rag_user.txt")
        assert (req.temperature, req.max_tokens) == (0.3, 400)

    def test_judge(self):
        req = render_judge_prompt("The drop follows construction of the Aswan dam.", "Aswan Low Dam construction")
        assert req.system == golden("judge_system.txt")
        assert req.user == golden("judge_user.txt")
        assert req.temperature == 0.0

    def test_pure(self):
        assert render_standard_prompt(CTX) == render_standard_prompt(CTX)

    def test_rag_empty_docs(self):
        assert "Relevant Documents:\n" + NO_DOCUMENTS + "\n" in render_rag_prompt(CTX, []).user


class TestContext:
    def test_step(self):
        y = np.r_[np.zeros(50), np.full(50, 10.0)]
        ctx = build_context(TimeSeries(y), Detection(50, 0.9, "pelt", 0.0), "x")
        assert ctx.before_stats["mean"] == 0.0 and ctx.after_stats["mean"] == 10.0
        assert ctx.direction == "upward" and ctx.magnitude == 10.0
        assert ctx.before_stats["trend"] == "flat"

    def test_too_close_to_edge(self):
        with pytest.raises(ValueError):
            build_context(TimeSeries(np.arange(20.0)), Detection(2, 0.5, "pelt", 0.0), "x")

    def test_nile(self, nile):
        ctx = build_context(nile, Detection(27, 0.9, "pelt", 0.0), "Nile")
        assert ctx.break_date == "1898"
        assert ctx.before_stats["mean"] > ctx.after_stats["mean"]
        assert ctx.direction == "downward"
        assert ctx.before_stats["mean"] == pytest.approx(nile.values[:27].mean())
        assert ctx.after_stats["std"] == pytest.approx(nile.values[27:57].std(ddof=1))

    def test_trend_labels(self):
        y = np.r_[np.arange(30.0), 100 - np.arange(30.0)]
        ctx = build_context(TimeSeries(y), Detection(30, 0.5, "pelt", 0.0), "x")
        assert (ctx.before_stats["trend"], ctx.after_stats["trend"]) == ("increasing", "decreasing")


class Flaky:
    def __init__(self, failures, exc=TimeoutError):
        self.failures, self.exc, self.calls = failures, exc, 0

    def complete(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.exc("slow")
        return ChatResponse("ok")


class TestProviders:
    def test_retry_twice_then_success(self):
        p, waits = Flaky(2), []
        assert complete_with_retry(p, render_standard_prompt(CTX), sleep=waits.append).text == "ok"
        assert p.calls == 3 and waits == [0.5, 1.0]

    def test_retry_exhausted(self):
        with pytest.raises(RetryableProviderError):
            complete_with_retry(Flaky(3, RetryableProviderError), render_standard_prompt(CTX), sleep=lambda s: None)

    def test_from_env_missing(self, monkeypatch):
        for k in ("LLM_API_KEY", "LLM_ENDPOINT", "LLM_DEPLOYMENT"):
            monkeypatch.delenv(k, raising=False)
        with pytest.raises(ProviderError):
            HttpChatProvider.from_env()

    def test_http_wire_format(self):
        seen = {}

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                seen["body"] = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                seen["auth"] = self.headers["Authorization"]
                out = json.dumps({"choices": [{"message": {"content": "Dam construction."}}]}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(out)))
                self.end_headers()
                self.wfile.write(out)

            def log_message(self, *a):
                pass

        srv = HTTPServer(("127.0.0.1", 0), Handler)
        th = threading.Thread(target=srv.serve_forever, daemon=True)
        th.start()
        try:
            p = HttpChatProvider(f"http://127.0.0.1:{srv.server_port}/chat", "k", "model-x", timeout=5)
            resp = p.complete(render_standard_prompt(CTX))
        finally:
            srv.shutdown()
        assert resp.text == "Dam construction."
        body = seen["body"]
        assert body["model"] == "model-x" and body["temperature"] == 0.3 and body["max_tokens"] == 300
        assert [m["role"] for m in body["messages"]] == ["system", "user"]
        assert seen["auth"] == "Bearer k"

    def test_http_server_error_is_retryable(self):
        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                self.send_response(503)
                self.end_headers()

            def log_message(self, *a):
                pass

        srv = HTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=srv.serve_forever, daemon=True).start()
        try:
            p = HttpChatProvider(f"http://127.0.0.1:{srv.server_port}/", "k", "m", timeout=5)
            with pytest.raises(RetryableProviderError):
                p.complete(render_standard_prompt(CTX))
        finally:
            srv.shutdown()


class TestPipeline:
    def series(self):
        y = np.r_[np.zeros(40), np.full(40, 5.0), np.full(40, 1.0)]
        stamps = tuple(dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(120))
        return TimeSeries(y, stamps)

    def breaks(self):
        return [Detection(k, 0.8, "pelt", 0.0) for k in (40, 80, 100)]

    def test_echo_contains_date(self):
        out = explain_breaks(self.breaks()[:1], self.series(), "daily sales", EchoProvider())
        assert "2020-02-10" in out[0].explanation and out[0].ok

    def test_order_preserved(self):
        out = explain_breaks(self.breaks(), self.series(), "daily sales", EchoProvider(), max_workers=3)
        assert [e.brk.index for e in out] == [40, 80, 100]
        assert all(e.mode == "standard" for e in out)

    def test_no_breaks_no_calls(self):
        p = Flaky(0)
        assert explain_breaks([], self.series(), "x", p) == []
        assert p.calls == 0

    def test_failure_is_recorded(self):
        out = explain_breaks(self.breaks()[:1], self.series(), "x", Flaky(5), sleep=lambda s: None)
        assert not out[0].ok and out[0].explanation == ""

    def test_breaks_not_mutated(self):
        br = self.breaks()
        before = list(br)
        out = explain_breaks(br, self.series(), "x", EchoProvider())
        assert br == before and [e.brk for e in out] == before

    def test_rag_mode(self):
        class Retriever:
            def retrieve(self, query, date):
                self.query = query
                return DOCS

        r = Retriever()
        out = explain_breaks(self.breaks()[:1], self.series(), "daily sales", EchoProvider(), mode="rag", retriever=r)
        assert out[0].retrieved_ids == ("dam", "flood")
        assert "Aswan dam works begin" in out[0].explanation
        assert "daily sales" in r.query

    def test_rag_needs_retriever(self):
        with pytest.raises(ValueError):
            explain_breaks(self.breaks(), self.series(), "x", EchoProvider(), mode="rag")


class TestJudge:
    @pytest.mark.parametrize("text,verdict", [
        ("CORRECT", "CORRECT"),
        ("The answer is INCORRECT.", "INCORRECT"),
        ("correct", "CORRECT"),
        ("INCORRECT, not CORRECT", "INCORRECT"),
    ])
    def test_parse(self, text, verdict):
        assert parse_verdict(text) == verdict

    @pytest.mark.parametrize("text", ["maybe", "", "incorrectly"])
    def test_garbage(self, text):
        with pytest.raises(JudgeParseError):
            parse_verdict(text)

    def test_judge_with_stub(self):
        class Stub:
            def complete(self, request):
                assert request.temperature == 0.0
                return ChatResponse("CORRECT")

        assert judge_explanation("e", "g", Stub()) == "CORRECT"
