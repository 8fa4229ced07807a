"""Probabilistic comment classification: shared contract, remote client, mock.

Every backend answers one wire protocol (HTTP POST or a child process
speaking one JSON object per line):

    request  {"model": "...", "comments": ["..."], "labels": ["increase", "decrease", "neutral"]}
    response {"probabilities": [[u, v, w], ...], "unrelated": [bool, ...]?}

The remote client adds batching, bounded retries with exponential backoff,
and fallback-model switching. A deterministic keyword classifier serves as
the test double.
"""

from __future__ import annotations

import json
import re
import subprocess
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable, Protocol, Sequence

from .corpus import SurveyRecord

WIRE_LABELS = ("increase", "decrease", "neutral")
PROMPT_VERSION = "v1"

_SUM_TOLERANCE = 1e-6


class HardLabel:
    INCREASE = "Increase"
    DECREASE = "Decrease"
    NEUTRAL = "Neutral"
    UNRELATED = "Unrelated"


@dataclass(frozen=True)
class ClassProbabilities:
    """Per-comment (increase, decrease, neutral) probabilities.

    The all-zero triple is the unrelated encoding: the comment carries no
    wage signal at all and is excluded from index computation. A triple
    with zero directional mass but positive neutral mass, such as the
    one-hot (0, 0, 1), is a confidently neutral wage comment, not an
    unrelated one.
    """

    u: float
    v: float
    w: float

    def __post_init__(self) -> None:
        for value in (self.u, self.v, self.w):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"probability out of range: {value}")
        total = self.u + self.v + self.w
        if total != 0.0 and abs(total - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"probabilities must sum to 0 or 1, got {total}")

    def is_unrelated(self) -> bool:
        return self.u == 0.0 and self.v == 0.0 and self.w == 0.0

    def hard_label(self) -> str:
        """Argmax label; exact ties resolve to Neutral (a balanced comment).

        Unrelated takes precedence whenever both directional probabilities
        are zero.
        """
        if self.is_unrelated():
            return HardLabel.UNRELATED
        if self.w >= self.u and self.w >= self.v:
            return HardLabel.NEUTRAL
        if self.u == self.v:
            return HardLabel.NEUTRAL
        return HardLabel.INCREASE if self.u > self.v else HardLabel.DECREASE

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.w)


UNRELATED = ClassProbabilities(0.0, 0.0, 0.0)


def normalize_triple(u: float, v: float, w: float) -> ClassProbabilities:
    """Scale a raw backend triple to sum exactly 1 (verbatim ratios).

    The all-zero triple passes through as the unrelated encoding. Tiny
    negative components (backend noise) clamp to zero; genuinely negative
    values are rejected.
    """
    values = []
    for value in (u, v, w):
        if value < -1e-9:
            raise ValueError(f"negative probability from backend: {value}")
        values.append(max(0.0, float(value)))
    total = sum(values)
    if total == 0.0:
        return UNRELATED
    return ClassProbabilities(values[0] / total, values[1] / total, values[2] / total)


@dataclass(frozen=True)
class ClassifiedComment:
    record: SurveyRecord
    probs: ClassProbabilities
    backend_id: str
    hard_label: str
    failed: bool = False

    @property
    def excluded(self) -> bool:
        return self.failed or self.probs.is_unrelated()


@dataclass(frozen=True)
class BackendSpec:
    """Remote classifier endpoint description.

    ``endpoint`` is either an http(s) URL or a child-process command line;
    transport is inferred from the prefix.
    """

    endpoint: str
    model_id: str
    fallback_model_id: str | None = None
    batch_size: int = 32
    max_retries: int = 2
    timeout: float = 30.0
    retry_base_delay: float = 0.1

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class TransportError(RuntimeError):
    """A wire call failed (connection, timeout, or malformed response)."""


Transport = Callable[[dict], dict]


class HttpTransport:
    def __init__(self, url: str, timeout: float):
        self.url = url
        self.timeout = timeout

    def __call__(self, payload: dict) -> dict:
        body = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                return json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise TransportError(f"http call to {self.url} failed: {exc}") from exc


class SubprocessTransport:
    """Line-JSON protocol against a long-lived child process.

    The request/response round trip is serialized; concurrent callers
    queue on one lock rather than interleaving lines on the pipe.
    """

    def __init__(self, command: str, timeout: float):
        self.command = command
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                shell=True,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def __call__(self, payload: dict) -> dict:
        with self._lock:
            proc = self._ensure_process()
            try:
                assert proc.stdin is not None and proc.stdout is not None
                proc.stdin.write(json.dumps(payload) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise TransportError(f"child process call failed: {exc}") from exc
        if not line:
            raise TransportError(f"child process {self.command!r} closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise TransportError(f"malformed child process line: {exc}") from exc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()  # type: ignore[union-attr]
            self._proc.wait(timeout=5)
        self._proc = None


def transport_for(spec: BackendSpec) -> Transport:
    if spec.endpoint.startswith(("http://", "https://")):
        return HttpTransport(spec.endpoint, spec.timeout)
    return SubprocessTransport(spec.endpoint, spec.timeout)


@dataclass
class BatchResult:
    """Position-aligned classification output for one list of comments."""

    probs: list[ClassProbabilities]
    failed: list[bool]
    wire_calls: int = 0

    @property
    def failure_count(self) -> int:
        return sum(self.failed)


class Classifier(Protocol):
    backend_id: str

    def classify_batch(self, comments: Sequence[str]) -> BatchResult: ...


_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class KeywordRule:
    keywords: frozenset[str]
    triple: ClassProbabilities


class KeywordClassifier:
    """Deterministic first-rule-wins keyword classifier (test double).

    A rule fires when any of its keywords appears as a token of the
    lowercased comment; rules are tried in declaration order and the first
    match wins. Comments matching no rule are unrelated.
    """

    def __init__(self, rules: Sequence[tuple[Iterable[str], tuple[float, float, float]]],
                 backend_id: str = "keyword-mock"):
        self.backend_id = backend_id
        self.rules = [
            KeywordRule(frozenset(k.lower() for k in keywords), ClassProbabilities(*triple))
            for keywords, triple in rules
        ]

    def classify_one(self, comment: str) -> ClassProbabilities:
        tokens = set(_TOKEN_RE.findall(comment.lower()))
        for rule in self.rules:
            if rule.keywords & tokens:
                return rule.triple
        return UNRELATED

    def classify_batch(self, comments: Sequence[str]) -> BatchResult:
        probs = [self.classify_one(c) for c in comments]
        return BatchResult(probs=probs, failed=[False] * len(probs), wire_calls=0)


def mock_keyword_classifier(
    rules: Sequence[tuple[Iterable[str], tuple[float, float, float]]],
    backend_id: str = "keyword-mock",
) -> KeywordClassifier:
    return KeywordClassifier(rules, backend_id=backend_id)


DEFAULT_KEYWORD_RULES: tuple[tuple[tuple[str, ...], tuple[float, float, float]], ...] = (
    (("raise", "raised", "raises", "bonus", "bonuses", "increase", "increased"), (1.0, 0.0, 0.0)),
    (("cut", "cuts", "reduction", "reduced", "decrease", "decreased"), (0.0, 1.0, 0.0)),
    (("wage", "wages", "salary", "salaries", "pay"), (0.0, 0.0, 1.0)),
)


def default_keyword_classifier(backend_id: str = "keyword-mock") -> KeywordClassifier:
    return KeywordClassifier(DEFAULT_KEYWORD_RULES, backend_id=backend_id)


class RemoteClassifier:
    """Wire-protocol client with batching, retries, and model fallback."""

    def __init__(self, spec: BackendSpec, transport: Transport | None = None,
                 backend_id: str | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.spec = spec
        self.backend_id = backend_id or spec.model_id
        self.transport = transport if transport is not None else transport_for(spec)
        self._sleep = sleep

    def _call_model(self, comments: Sequence[str], model_id: str) -> tuple[list[ClassProbabilities] | None, int]:
        """One model's bounded attempts on one batch; returns (probs, calls)."""
        calls = 0
        payload = {"model": model_id, "comments": list(comments), "labels": list(WIRE_LABELS)}
        for attempt in range(self.spec.max_retries + 1):
            if attempt > 0 and self.spec.retry_base_delay > 0:
                self._sleep(self.spec.retry_base_delay * 2 ** (attempt - 1))
            calls += 1
            try:
                response = self.transport(payload)
                return self._parse_response(response, len(comments)), calls
            except TransportError:
                continue
        return None, calls

    @staticmethod
    def _parse_response(response: dict, expected: int) -> list[ClassProbabilities]:
        rows = response.get("probabilities")
        if not isinstance(rows, list) or len(rows) != expected:
            raise TransportError(f"malformed response: expected {expected} probability rows")
        unrelated = response.get("unrelated")
        if unrelated is not None and len(unrelated) != expected:
            raise TransportError("malformed response: unrelated mask length mismatch")
        out = []
        for i, row in enumerate(rows):
            if unrelated is not None and unrelated[i]:
                out.append(UNRELATED)
                continue
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise TransportError(f"malformed probability row: {row!r}")
            out.append(normalize_triple(*row))
        return out

    def _classify_chunk(self, chunk: Sequence[str]) -> tuple[list[ClassProbabilities], list[bool], int]:
        calls = 0
        models = [self.spec.model_id]
        if self.spec.fallback_model_id:
            models.append(self.spec.fallback_model_id)
        for model_id in models:
            probs, model_calls = self._call_model(chunk, model_id)
            calls += model_calls
            if probs is not None:
                return probs, [False] * len(chunk), calls
        return [UNRELATED] * len(chunk), [True] * len(chunk), calls

    def classify_batch(self, comments: Sequence[str], parallelism: int = 1) -> BatchResult:
        if not comments:
            return BatchResult([], [], 0)
        if any(not c for c in comments):
            raise ValueError("comments must be non-empty")
        size = self.spec.batch_size
        chunks = [comments[i: i + size] for i in range(0, len(comments), size)]
        if parallelism > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                outcomes = list(pool.map(self._classify_chunk, chunks))
        else:
            outcomes = [self._classify_chunk(chunk) for chunk in chunks]
        probs: list[ClassProbabilities] = []
        failed: list[bool] = []
        calls = 0
        for chunk_probs, chunk_failed, chunk_calls in outcomes:
            probs.extend(chunk_probs)
            failed.extend(chunk_failed)
            calls += chunk_calls
        return BatchResult(probs=probs, failed=failed, wire_calls=calls)


def classify_batch(comments: Sequence[str], backend: BackendSpec,
                   transport: Transport | None = None,
                   parallelism: int = 1) -> BatchResult:
    """Classify a list of comments against a remote backend spec."""
    if not comments:
        raise ValueError("comments must be non-empty")
    client = RemoteClassifier(backend, transport=transport)
    return client.classify_batch(comments, parallelism=parallelism)


def classify_month(records: Sequence[SurveyRecord], classifier: Classifier,
                   **kwargs) -> list[ClassifiedComment]:
    """Classify one month's records; failed items are annotated and tallied.

    Failed comments carry the unrelated triple plus ``failed=True`` so the
    index stage can exclude and report them separately.
    """
    if not records:
        return []
    months = {r.month for r in records}
    if len(months) > 1:
        raise ValueError(f"records span several months: {sorted(map(str, months))}")
    result = classifier.classify_batch([r.text for r in records], **kwargs)
    classified = []
    for record, probs, failed in zip(records, result.probs, result.failed):
        label = HardLabel.UNRELATED if failed else probs.hard_label()
        classified.append(
            ClassifiedComment(
                record=record,
                probs=probs,
                backend_id=classifier.backend_id,
                hard_label=label,
                failed=failed,
            )
        )
    return classified


def prompt_template() -> str:
    """The shipped classification prompt template ({comment} placeholder)."""
    return resources.files("wsi").joinpath("assets/prompt_v1.txt").read_text(encoding="utf-8")
