"""Pluggable factual-consistency scoring.

Ships a deterministic lexical scorer for offline runs, a remote HTTP client
speaking the shared /score protocol, and a thread-safe memo cache. Every
scorer returns values in [0, 1] and treats empty evidence as 0 by
definition, without consulting the backend.
"""
from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass

import requests

from .errors import ContractError, ProtocolError, ScoringError

ENDPOINT_ENV_VAR = "CALF_SCORER_ENDPOINT"

# Function words ignored when extracting a claim's content words.
STOPWORDS = frozenset(
    """
    a an the is are was were be been being am do does did done have has had
    i you he she it we they me him them my your his her its our their
    this that these those there here of in on at by for with to from as
    and or but nor not no yes if then than so too very such own same
    can could will would shall should may might must what which who whom
    whose when where how why all any both each few more most other some
    also about into over under again once only
    """.split()
)

_WORD = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class ConsistencyScore:
    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ContractError(f"consistency score {self.value!r} outside [0,1]")


@dataclass(frozen=True)
class ScorerConfig:
    kind: str = "lexical"
    endpoint: str | None = None
    binarize_threshold: float = 0.5
    timeout: float = 10.0
    cache_enabled: bool = True
    max_inflight: int = 8
    retries: int = 2

    def __post_init__(self) -> None:
        if self.kind not in ("lexical", "remote"):
            raise ContractError(f"unknown scorer kind {self.kind!r}")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ContractError("binarize_threshold must lie strictly between 0 and 1")
        if self.kind == "remote" and not self.resolved_endpoint():
            raise ContractError(
                f"remote scorer needs an endpoint (flag, config, or {ENDPOINT_ENV_VAR})"
            )
        if self.kind == "lexical" and self.endpoint:
            raise ContractError("endpoint is only meaningful for the remote scorer")

    def resolved_endpoint(self) -> str | None:
        return self.endpoint or os.environ.get(ENDPOINT_ENV_VAR) or None


def binarize(score: ConsistencyScore | float, threshold: float) -> int:
    """1 iff the score reaches the threshold; ties count as consistent."""
    if not 0.0 < threshold < 1.0:
        raise ContractError("threshold must lie strictly between 0 and 1")
    value = score.value if isinstance(score, ConsistencyScore) else float(score)
    return 1 if value >= threshold else 0


class Scorer:
    """Base scorer: validates the call contract, delegates to _score_batch.

    Implementations must tolerate concurrent calls.
    """

    def score(self, claim: str, evidence: str) -> ConsistencyScore:
        return self.score_many([(claim, evidence)])[0]

    def score_many(self, pairs: list[tuple[str, str]]) -> list[ConsistencyScore]:
        for claim, _ in pairs:
            if not claim.strip():
                raise ContractError("claim is empty after whitespace trim")
        out: list[ConsistencyScore | None] = [None] * len(pairs)
        todo: list[tuple[int, str, str]] = []
        for i, (claim, evidence) in enumerate(pairs):
            if not evidence:
                out[i] = ConsistencyScore(0.0)
            else:
                todo.append((i, claim, evidence))
        if todo:
            scored = self._score_batch([(c, e) for _, c, e in todo])
            if len(scored) != len(todo):
                raise ProtocolError(
                    f"scorer returned {len(scored)} values for {len(todo)} pairs"
                )
            for (i, _, _), s in zip(todo, scored):
                out[i] = s
        return [s for s in out if s is not None]

    def _score_batch(self, pairs: list[tuple[str, str]]) -> list[ConsistencyScore]:
        raise NotImplementedError


def content_words(text: str) -> frozenset[str]:
    return frozenset(w for w in _WORD.findall(text.lower()) if w not in STOPWORDS)


class LexicalScorer(Scorer):
    """Content-word overlap: |content(claim) ∩ words(evidence)| / |content(claim)|.

    Case-folded, order-free, deterministic. A claim with no content words
    scores 0: nothing verifiable is treated as unsupported.
    """

    def _score_batch(self, pairs: list[tuple[str, str]]) -> list[ConsistencyScore]:
        out = []
        for claim, evidence in pairs:
            cw = content_words(claim)
            if not cw:
                out.append(ConsistencyScore(0.0))
                continue
            ew = frozenset(_WORD.findall(evidence.lower()))
            out.append(ConsistencyScore(len(cw & ew) / len(cw)))
        return out


class CachingScorer(Scorer):
    """Memoizes by (claim, evidence). Entries are whole values only; a miss
    recomputed by two racing threads stores the same deterministic result.
    """

    def __init__(self, inner: Scorer):
        self.inner = inner
        self._cache: dict[tuple[str, str], ConsistencyScore] = {}
        self._lock = threading.Lock()

    def _score_batch(self, pairs: list[tuple[str, str]]) -> list[ConsistencyScore]:
        out: list[ConsistencyScore | None] = [None] * len(pairs)
        misses: list[tuple[int, tuple[str, str]]] = []
        with self._lock:
            for i, key in enumerate(pairs):
                hit = self._cache.get(key)
                if hit is not None:
                    out[i] = hit
                else:
                    misses.append((i, key))
        if misses:
            # Deduplicate within the batch so one wire call serves repeats.
            unique: dict[tuple[str, str], list[int]] = {}
            for orig_i, key in misses:
                unique.setdefault(key, []).append(orig_i)
            fresh = self.inner._score_batch(list(unique))
            if len(fresh) != len(unique):
                raise ProtocolError(
                    f"scorer returned {len(fresh)} values for {len(unique)} pairs"
                )
            with self._lock:
                for key, value in zip(unique, fresh):
                    self._cache[key] = value
                    for i in unique[key]:
                        out[i] = value
        return [s for s in out if s is not None]

    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)


class RemoteScorer(Scorer):
    """Client for the shared /score wire protocol.

    Transport failures raise a retryable ScoringError after bounded retries;
    malformed or out-of-range responses raise ProtocolError. In-flight
    requests are bounded by a semaphore.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        max_inflight: int = 8,
        retries: int = 2,
    ):
        if not endpoint:
            raise ContractError("remote scorer needs a nonempty endpoint")
        base = endpoint.rstrip("/")
        self.url = base if base.endswith("/score") else base + "/score"
        self.timeout = timeout
        self.retries = retries
        self._gate = threading.Semaphore(max_inflight)

    def _post(self, payload: dict) -> requests.Response:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with self._gate:
                    return requests.post(self.url, json=payload, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(0.05 * (attempt + 1))
        raise ScoringError(f"scorer unreachable at {self.url}: {last}", retryable=True)

    def _score_batch(self, pairs: list[tuple[str, str]]) -> list[ConsistencyScore]:
        payload = {"pairs": [{"claim": c, "evidence": e} for c, e in pairs]}
        resp = self._post(payload)
        if resp.status_code != 200:
            detail = ""
            try:
                detail = resp.json().get("error", "")
            except ValueError:
                detail = resp.text[:200]
            raise ScoringError(
                f"scorer returned HTTP {resp.status_code}: {detail}",
                retryable=resp.status_code >= 500,
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"scorer response is not JSON: {exc}") from exc
        scores = body.get("scores") if isinstance(body, dict) else None
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise ProtocolError(
                f"expected {len(pairs)} scores, got {scores!r:.200}"
            )
        out = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool) or not 0 <= s <= 1:
                raise ProtocolError(f"score {s!r} outside [0,1]")
            out.append(ConsistencyScore(float(s)))
        return out


def evidence_for(passages, citations) -> str:
    """Concatenate cited passages ascending by index, title then text."""
    cited = sorted(citations)
    by_index = {p.index: p for p in passages}
    parts = []
    for k in cited:
        p = by_index.get(k)
        if p is None:
            raise ContractError(f"citation [{k}] has no matching passage")
        parts.append(f"{p.title}. {p.text}")
    return " ".join(parts)


def build_scorer(config: ScorerConfig) -> Scorer:
    if config.kind == "lexical":
        scorer: Scorer = LexicalScorer()
    else:
        scorer = RemoteScorer(
            endpoint=config.resolved_endpoint() or "",
            timeout=config.timeout,
            max_inflight=config.max_inflight,
            retries=config.retries,
        )
    if config.cache_enabled:
        scorer = CachingScorer(scorer)
    return scorer
