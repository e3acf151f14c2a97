"""Natural-language explanations of detected breaks.

Builds the statistical context around a break, renders the chat prompts
(standard, document-grounded and judge), and talks to any chat-completion
endpoint that speaks the common JSON wire format. A local echo provider
stands in for a real model in tests and offline runs.
"""

from __future__ import annotations

import json
import logging
import os
import re
import socket
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from breaklens.timeseries import TimeSeries

log = logging.getLogger(__name__)

__all__ = [
    "BreakContext",
    "ChatRequest",
    "ChatResponse",
    "ExplainedBreak",
    "ChatProvider",
    "EchoProvider",
    "HttpChatProvider",
    "ProviderError",
    "RetryableProviderError",
    "JudgeParseError",
    "build_context",
    "build_query",
    "render_standard_prompt",
    "render_rag_prompt",
    "render_judge_prompt",
    "format_documents",
    "complete_with_retry",
    "explain_breaks",
    "judge_explanation",
    "parse_verdict",
    "NO_DOCUMENTS",
]

WINDOW = 30
MIN_WINDOW = 3
EXPLAIN_TEMPERATURE = 0.3
STANDARD_MAX_TOKENS = 300
RAG_MAX_TOKENS = 400
JUDGE_TEMPERATURE = 0.0
JUDGE_MAX_TOKENS = 10

NO_DOCUMENTS = "No relevant documents retrieved."

STANDARD_SYSTEM = """You are a data analyst expert in time series analysis.

Your task is to explain structural breaks - significant, persistent changes in time series data.

Provide clear, concise explanations that:
1. Describe what changed (magnitude and direction)
2. Suggest possible causes based on the timing and statistical evidence
3. Think of possible external events near the break date (e.g. macro, policy, company news..), flagging speculation if unsure
4. Assess the significance of the change
5. Avoid speculation beyond what the data supports

Be specific and professional."""

STANDARD_USER = """Analyze this structural break in {data_description}:

Break Details:
- Date: {break_date}
- Confidence: {confidence:.1%}
- Magnitude: {magnitude:.2f} ({direction} shift)

Before Break (30-day window):
- Mean: {before_stats[mean]:.2f}
- Std Dev: {before_stats[std]:.2f}
- Trend: {before_stats[trend]}

After Break (30-day window):
- Mean: {after_stats[mean]:.2f}
- Std Dev: {after_stats[std]:.2f}
- Trend: {after_stats[trend]}

Provide a brief explanation of this structural break."""

RAG_SYSTEM = """You are a data analyst expert in time series analysis.

You have access to relevant documents that may explain the structural break.

When explaining:
1. Connect the statistical evidence to events in the documents
2. Be specific about which information supports your explanation
3. Distinguish between correlation and likely causation
4. Keep explanations concise and actionable"""

RAG_USER = """Analyze this structural break with additional context:

Break Information:
- Date: {break_date}
- Confidence: {confidence}
- Magnitude: {magnitude}
- Direction: {direction}

Relevant Documents:
{document_context}

Explain this break using both the statistical evidence and document context. Be specific about how the documents relate to the observed change."""

JUDGE_SYSTEM = """You are an expert evaluator assessing the quality of changepoint explanations. Your task is to determine whether a generated explanation correctly identifies the underlying event that caused a structural break in time series data.

You will receive:
1. The LLM's explanation of a detected changepoint
2. The ground truth event that actually caused the changepoint

Evaluate whether the explanation correctly identifies the core causal event. The explanation does not need to match the ground truth word-for-word, but must identify the same fundamental event or cause.

Output only: CORRECT or INCORRECT"""

JUDGE_USER = """Evaluate the following changepoint explanation:

LLM Explanation:
{llm_explanation}

Ground Truth Event:
{ground_truth_event}

Does the explanation correctly identify the event that caused the changepoint?
Output only: CORRECT or INCORRECT"""


# ---------------------------------------------------------------------------
# context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BreakContext:
    break_date: str
    confidence: float
    magnitude: float
    direction: str
    before_stats: dict
    after_stats: dict
    data_description: str
    index: int = -1


def _window_stats(w: np.ndarray) -> dict:
    sd = float(w.std(ddof=1)) if w.size > 1 else 0.0
    x = np.arange(w.size, dtype=float)
    slope = float(np.polyfit(x, w, 1)[0]) if w.size > 1 else 0.0
    if slope == 0.0 or abs(slope) < 0.01 * sd:
        trend = "flat"
    else:
        trend = "increasing" if slope > 0 else "decreasing"
    return {"mean": float(w.mean()), "std": sd, "trend": trend}


def build_context(ts: TimeSeries, brk, description: str, window: int = WINDOW) -> BreakContext:
    """Summary statistics of the windows on either side of a break.

    ``brk`` is anything with ``index`` and ``confidence`` (an ensemble break
    or a single-method detection). Windows hold up to ``window`` observations
    and never cross the break.
    """
    k = int(brk.index)
    y = np.asarray(ts.values, dtype=float)
    before, after = y[max(0, k - window):k], y[k:k + window]
    if before.size < MIN_WINDOW or after.size < MIN_WINDOW:
        raise ValueError(f"break at index {k} leaves fewer than {MIN_WINDOW} points on one side")
    magnitude = float(after.mean() - before.mean())
    return BreakContext(
        break_date=ts.label(k),
        confidence=float(brk.confidence),
        magnitude=magnitude,
        direction="upward" if magnitude >= 0 else "downward",
        before_stats=_window_stats(before),
        after_stats=_window_stats(after),
        data_description=description,
        index=k,
    )


# ---------------------------------------------------------------------------
# prompts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float = EXPLAIN_TEMPERATURE
    max_tokens: int = STANDARD_MAX_TOKENS


@dataclass(frozen=True)
class ChatResponse:
    text: str
    meta: dict = field(default_factory=dict)


def render_standard_prompt(ctx: BreakContext) -> ChatRequest:
    user = STANDARD_USER.format(
        data_description=ctx.data_description,
        break_date=ctx.break_date,
        confidence=ctx.confidence,
        magnitude=ctx.magnitude,
        direction=ctx.direction,
        before_stats=ctx.before_stats,
        after_stats=ctx.after_stats,
    )
    return ChatRequest(STANDARD_SYSTEM, user, EXPLAIN_TEMPERATURE, STANDARD_MAX_TOKENS)


def format_documents(docs) -> str:
    """Numbered document block; each entry gives title, date and chunk text."""
    if not docs:
        return NO_DOCUMENTS
    parts = []
    for i, rc in enumerate(docs, 1):
        ch = getattr(rc, "chunk", rc)
        parts.append(f"[{i}] {ch.title} ({ch.date.isoformat()})\n{ch.text}")
    return "\n\n".join(parts)


def render_rag_prompt(ctx: BreakContext, docs) -> ChatRequest:
    user = RAG_USER.format(
        break_date=ctx.break_date,
        confidence=f"{ctx.confidence:.1%}",
        magnitude=f"{ctx.magnitude:.2f}",
        direction=ctx.direction,
        document_context=format_documents(docs),
    )
    return ChatRequest(RAG_SYSTEM, user, EXPLAIN_TEMPERATURE, RAG_MAX_TOKENS)


def render_judge_prompt(explanation: str, ground_truth: str) -> ChatRequest:
    user = JUDGE_USER.format(llm_explanation=explanation, ground_truth_event=ground_truth)
    return ChatRequest(JUDGE_SYSTEM, user, JUDGE_TEMPERATURE, JUDGE_MAX_TOKENS)


# ---------------------------------------------------------------------------
# providers
# ---------------------------------------------------------------------------


class ProviderError(RuntimeError):
    """Chat call failed in a way retrying will not fix."""


class RetryableProviderError(ProviderError):
    """Timeouts, rate limits and server-side errors."""


class ChatProvider(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class EchoProvider:
    """Offline stand-in that answers with the prompt it was given."""

    name = "echo"

    def complete(self, request: ChatRequest) -> ChatResponse:
        return ChatResponse(f"[echo] {request.user}", {"provider": "echo"})


class HttpChatProvider:
    """OpenAI-compatible chat-completion client over plain HTTP.

    ``endpoint`` is the full URL that accepts the POST. The key is sent both
    as a bearer token and as an ``api-key`` header so the same client works
    against hosted and Azure-style deployments.
    """

    name = "http"

    def __init__(self, endpoint: str, api_key: str, deployment: str, timeout: float = 60.0):
        if not endpoint or not api_key or not deployment:
            raise ProviderError("endpoint, api key and deployment are all required")
        self.endpoint = endpoint
        self.api_key = api_key
        self.deployment = deployment
        self.timeout = timeout

    @classmethod
    def from_env(cls, timeout: float = 60.0) -> "HttpChatProvider":
        env = {k: os.environ.get(k, "") for k in ("LLM_API_KEY", "LLM_ENDPOINT", "LLM_DEPLOYMENT")}
        missing = [k for k, v in env.items() if not v]
        if missing:
            raise ProviderError(f"missing environment variables: {', '.join(missing)}")
        return cls(env["LLM_ENDPOINT"], env["LLM_API_KEY"], env["LLM_DEPLOYMENT"], timeout)

    def _body(self, request: ChatRequest) -> bytes:
        return json.dumps({
            "model": self.deployment,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }).encode("utf-8")

    def complete(self, request: ChatRequest) -> ChatResponse:
        req = urllib.request.Request(
            self.endpoint,
            data=self._body(request),
            method="POST",
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
                "api-key": self.api_key,
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode("utf-8", "replace")[:200]
            if exc.code == 429 or exc.code >= 500:
                raise RetryableProviderError(f"HTTP {exc.code}: {detail}") from exc
            raise ProviderError(f"HTTP {exc.code}: {detail}") from exc
        except (urllib.error.URLError, socket.timeout, TimeoutError, ConnectionError) as exc:
            raise RetryableProviderError(f"transport error: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProviderError(f"invalid JSON response: {exc}") from exc
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("response has no choices[0].message.content") from exc
        if not text or not str(text).strip():
            raise ProviderError("empty completion")
        return ChatResponse(str(text), {"provider": "http", "model": payload.get("model", self.deployment)})


def complete_with_retry(provider, request: ChatRequest, retries: int = 2, backoff: float = 0.5, sleep=time.sleep) -> ChatResponse:
    """Call the provider, retrying transient failures with exponential backoff."""
    attempt = 0
    while True:
        try:
            resp = provider.complete(request)
        except (RetryableProviderError, TimeoutError) as exc:
            if attempt >= retries:
                raise
            delay = backoff * (2 ** attempt)
            log.info("transient provider error (%s); retrying in %.2fs", exc, delay)
            sleep(delay)
            attempt += 1
            continue
        if not resp.text or not resp.text.strip():
            raise ProviderError("empty completion")
        return resp


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplainedBreak:
    brk: object
    explanation: str
    mode: str
    context: BreakContext | None = None
    request: ChatRequest | None = None
    retrieved_ids: tuple[str, ...] = ()
    retrieved_titles: tuple[str, ...] = ()
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def build_query(description: str, direction: str, date_label: str) -> str:
    """Retrieval query: the data description plus a sentence on the change."""
    return f"{description}. {direction.capitalize()} shift detected around {date_label}."


def explain_breaks(breaks, ts: TimeSeries, description: str, provider, mode: str = "standard",
                   retriever=None, max_workers: int = 2, retries: int = 2, backoff: float = 0.5,
                   sleep=time.sleep) -> list[ExplainedBreak]:
    """One chat call per break; failures are recorded on the break, not raised.

    In ``rag`` mode ``retriever.retrieve(query, date)`` supplies the ranked
    chunks placed into the prompt.
    """
    if mode not in ("standard", "rag"):
        raise ValueError("mode must be 'standard' or 'rag'")
    if mode == "rag" and retriever is None:
        raise ValueError("rag mode needs a retriever")
    breaks = list(breaks)
    if not breaks:
        return []

    def one(brk) -> ExplainedBreak:
        try:
            ctx = build_context(ts, brk, description)
        except ValueError as exc:
            return ExplainedBreak(brk, "", mode, error=str(exc))
        ids: tuple = ()
        titles: tuple = ()
        if mode == "rag":
            date = ts.date_at(ctx.index)
            if date is None:
                return ExplainedBreak(brk, "", mode, ctx, error="rag mode needs a dated series")
            docs = retriever.retrieve(build_query(description, ctx.direction, ctx.break_date), date)
            ids = tuple(rc.chunk.doc_id for rc in docs)
            titles = tuple(rc.chunk.title for rc in docs)
            req = render_rag_prompt(ctx, docs)
        else:
            req = render_standard_prompt(ctx)
        try:
            resp = complete_with_retry(provider, req, retries, backoff, sleep)
        except Exception as exc:  # recorded per break
            log.warning("explanation failed for break at %s: %s", ctx.break_date, exc)
            return ExplainedBreak(brk, "", mode, ctx, req, ids, titles, error=str(exc))
        return ExplainedBreak(brk, resp.text.strip(), mode, ctx, req, ids, titles)

    if max_workers > 1 and len(breaks) > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            return list(pool.map(one, breaks))
    return [one(b) for b in breaks]


class JudgeParseError(ValueError):
    """Judge reply contains neither CORRECT nor INCORRECT."""


_VERDICT = re.compile(r"\b(INCORRECT|CORRECT)\b", re.IGNORECASE)


def parse_verdict(text: str) -> str:
    m = _VERDICT.search(text or "")
    if not m:
        raise JudgeParseError(f"unparseable verdict: {text!r}")
    return m.group(1).upper()


def judge_explanation(explanation: str, ground_truth: str, provider, retries: int = 2, sleep=time.sleep) -> str:
    """Ask a judge model whether an explanation names the true cause."""
    resp = complete_with_retry(provider, render_judge_prompt(explanation, ground_truth), retries, sleep=sleep)
    return parse_verdict(resp.text)
