"""Token-importance attribution for a black-box consistency scorer.

Each answer sentence is treated as a cooperative game: the players are the
sentence's scorer tokens, a coalition's value is the consistency score of
the text spelled by the kept tokens (in original order) against the
sentence's cited evidence, and the empty coalition is worth 0. Exact
Shapley values enumerate all 2^n coalitions; past the exact limit a seeded
permutation-sampling estimator takes over. Per-sentence values are min-max
normalized and concatenated into the answer-level weight vector U, with a
weight of exactly 1 at each citation-marker position.
"""
from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .corpus import CitedAnswer, Passage, render_answer
from .errors import CalfError, ContractError, ScoringError
from .fcm import Scorer, evidence_for
from .seeding import stable_seed
from .tokenizers import Token, Tokenization, detokenize, tokenize_scorer

DEFAULT_EXACT_LIMIT = 12
DEFAULT_MC_SAMPLES = 2000

_TERMINAL_OR_QUOTE = set(".!?\"'”’»")


@dataclass(frozen=True)
class ShapleyResult:
    """Per-player attributions plus the anchors they must bracket."""

    values: tuple[float, ...]
    base: float
    full: float
    method: str
    samples: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class WeightsConfig:
    exact_limit: int = DEFAULT_EXACT_LIMIT
    mc_samples: int = DEFAULT_MC_SAMPLES
    master_seed: int = 0
    instance_id: str = ""

    def __post_init__(self) -> None:
        if self.exact_limit < 1:
            raise ContractError("exact_limit must be >= 1")
        if self.mc_samples < 1:
            raise ContractError("mc_samples must be >= 1")


@dataclass(frozen=True)
class SentenceWeights:
    """Debug record for one sentence: raw and normalized player weights."""

    tokens: tuple[str, ...]
    values: tuple[float, ...]
    normalized: tuple[float, ...]
    method: str


@dataclass(frozen=True)
class AnswerWeightsU:
    """Answer-level weight vector over scorer tokens plus citation slots.

    ``tokens`` spells the canonically rendered answer: each sentence's
    scorer tokens with its citation markers (ascending) inserted before the
    trailing punctuation run. ``weights`` is aligned 1:1; marker positions
    carry exactly 1.0.
    """

    tokens: tuple[Token, ...]
    weights: tuple[float, ...]
    sentences: tuple[SentenceWeights, ...]
    rendered_text: str

    def as_tokenization(self) -> Tokenization:
        return Tokenization(tokens=self.tokens, source_text=self.rendered_text)

    def content_weights(self) -> list[float]:
        """Weights for non-marker tokens only, the input to weight mapping."""
        return [w for t, w in zip(self.tokens, self.weights) if not t.is_citation_marker]

    def to_debug_dict(self) -> dict:
        return {
            "sentences": [
                {
                    "tokens": list(s.tokens),
                    "values": list(s.values),
                    "normalized": list(s.normalized),
                    "method": s.method,
                }
                for s in self.sentences
            ]
        }


def _players(claim_tokens: Tokenization) -> list[int]:
    return [
        i
        for i, t in enumerate(claim_tokens.tokens)
        if not t.is_special and not t.is_citation_marker
    ]


def _coalition_text(claim_tokens: Tokenization, kept: list[int]) -> str:
    toks = tuple(claim_tokens.tokens[i] for i in kept)
    return detokenize(Tokenization(tokens=toks, source_text=""))


def shapley_weights(n: int) -> list[float]:
    """Exact coefficients s!(n-s-1)!/n! for s = 0..n-1.

    Computed from integer factorials and rounded once by float division,
    so both kernel backends consume identical doubles.
    """
    n_fact = math.factorial(n)
    return [math.factorial(s) * math.factorial(n - s - 1) / n_fact for s in range(n)]


def coalition_table(
    claim_tokens: Tokenization, evidence: str, scorer: Scorer, players: list[int]
) -> array:
    """Dense v(S) table indexed by player bitmask; v(empty) = 0 by definition."""
    n = len(players)
    size = 1 << n
    texts: list[str] = [""] * size
    for mask in range(1, size):
        kept = [players[p] for p in range(n) if mask & (1 << p)]
        texts[mask] = _coalition_text(claim_tokens, kept)
    scored = scorer.score_many([(texts[m], evidence) for m in range(1, size)])
    table = array("d", [0.0] * size)
    for m in range(1, size):
        table[m] = scored[m - 1].value
    return table


def shapley_exact(
    claim_tokens: Tokenization,
    evidence: str,
    scorer: Scorer,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
) -> ShapleyResult:
    """Exact Shapley values by full subset enumeration."""
    players = _players(claim_tokens)
    n = len(players)
    if n < 1:
        raise ContractError("claim has no scoreable tokens")
    if n > exact_limit:
        raise ContractError(
            f"{n} tokens exceed the exact enumeration limit {exact_limit}; "
            "use shapley_mc"
        )
    table = coalition_table(claim_tokens, evidence, scorer, players)
    weights = array("d", shapley_weights(n))
    values = _kernels.aggregate_shapley(table, n, weights)
    return ShapleyResult(
        values=tuple(values), base=0.0, full=table[(1 << n) - 1], method="exact"
    )


def shapley_mc(
    claim_tokens: Tokenization,
    evidence: str,
    scorer: Scorer,
    samples: int,
    seed: int,
) -> ShapleyResult:
    """Permutation-sampling Shapley estimate; deterministic given the seed."""
    if samples < 1:
        raise ContractError("samples must be >= 1")
    players = _players(claim_tokens)
    n = len(players)
    if n < 1:
        raise ContractError("claim has no scoreable tokens")
    rng = np.random.default_rng(seed)
    acc = [0.0] * n
    full_value = 0.0
    for _ in range(samples):
        perm = rng.permutation(n)
        kept_flags = [False] * n
        texts: list[str] = []
        for p in perm:
            kept_flags[p] = True
            kept = [players[q] for q in range(n) if kept_flags[q]]
            texts.append(_coalition_text(claim_tokens, kept))
        scored = scorer.score_many([(t, evidence) for t in texts])
        prev = 0.0
        for pos, p in enumerate(perm):
            cur = scored[pos].value
            acc[p] += cur - prev
            prev = cur
        full_value = prev
    values = tuple(a / samples for a in acc)
    return ShapleyResult(
        values=values,
        base=0.0,
        full=full_value,
        method="monte_carlo",
        samples=samples,
        seed=seed,
    )


def normalize_sentence(values: list[float] | tuple[float, ...]) -> list[float]:
    """Min-max normalize; a constant vector maps to all ones.

    The extremes are exact: the minimum maps to 0.0 and the maximum to 1.0
    bit-for-bit, because x - x == 0 and d / d == 1 in IEEE arithmetic.
    """
    if not values:
        raise ContractError("cannot normalize an empty value list")
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [1.0] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def _marker_insert_point(tokens: list[Token]) -> int:
    """Index before the trailing punctuation run, where markers belong."""
    i = len(tokens)
    while i > 0:
        stripped = tokens[i - 1].surface.strip()
        if stripped and set(stripped) <= _TERMINAL_OR_QUOTE:
            i -= 1
        else:
            break
    return i


def sentence_seed(config: WeightsConfig, sentence_index: int) -> int:
    return stable_seed(config.master_seed, config.instance_id, sentence_index)


def answer_weights(
    answer: CitedAnswer,
    passages: list[Passage] | tuple[Passage, ...],
    scorer: Scorer,
    config: WeightsConfig | None = None,
) -> AnswerWeightsU:
    """Assemble U: per-sentence normalized Shapley values, concatenated,
    with weight 1.0 inserted at every citation-marker position.

    Sentences within the exact limit are enumerated exactly; longer ones
    use the seeded Monte-Carlo estimator. An uncited sentence scores 0
    against empty evidence for every coalition, which normalizes to all
    ones (a constant-importance sentence is kept, not zeroed out).
    """
    cfg = config or WeightsConfig()
    all_tokens: list[Token] = []
    all_weights: list[float] = []
    records: list[SentenceWeights] = []

    for si, sentence in enumerate(answer.sentences):
        toks = tokenize_scorer(sentence.text_without_citations)
        evidence = evidence_for(passages, sentence.citations)
        try:
            n = len(_players(toks))
            if n <= cfg.exact_limit:
                result = shapley_exact(toks, evidence, scorer, exact_limit=cfg.exact_limit)
            else:
                result = shapley_mc(
                    toks, evidence, scorer,
                    samples=cfg.mc_samples,
                    seed=sentence_seed(cfg, si),
                )
        except CalfError as exc:
            if isinstance(exc, ScoringError):
                raise ScoringError(f"sentence {si}: {exc}", retryable=exc.retryable) from exc
            raise type(exc)(f"sentence {si}: {exc}") from exc
        normalized = normalize_sentence(result.values)
        records.append(
            SentenceWeights(
                tokens=toks.surfaces(),
                values=result.values,
                normalized=tuple(normalized),
                method=result.method,
            )
        )

        sent_tokens = list(toks.tokens)
        sent_weights = list(normalized)
        insert_at = _marker_insert_point(sent_tokens)
        for k in sorted(sentence.citations):
            at_start = insert_at == 0 and not all_tokens
            surface = f"[{k}]" if at_start else f" [{k}]"
            sent_tokens.insert(insert_at, Token(surface=surface, is_citation_marker=True))
            sent_weights.insert(insert_at, 1.0)
            insert_at += 1
        if all_tokens and sent_tokens:
            # Sentences are joined by one space in the rendered answer; the
            # scorer convention folds it into the next token's surface.
            first = sent_tokens[0]
            if not first.surface.startswith(" "):
                sent_tokens[0] = replace(first, surface=" " + first.surface)
        all_tokens.extend(sent_tokens)
        all_weights.extend(sent_weights)

    return AnswerWeightsU(
        tokens=tuple(all_tokens),
        weights=tuple(all_weights),
        sentences=tuple(records),
        rendered_text=render_answer(answer),
    )
