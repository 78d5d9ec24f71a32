"""Quality gating and citation/correctness metrics.

Two metric families over the same scorer: the continuous forms drive the
training-data gate, the binary forms drive evaluation reports. The gate
passes a candidate only when citation recall, citation precision, and
correctness all strictly exceed the threshold θ, and θ itself is walked
down a fixed schedule until enough candidates pass.

Conventions the formulas force: consistency against an empty citation set
is 0, so a sentence's sole citation is never "irrelevant" (removing it
leaves nothing supporting the sentence, and 1 - 0 = 1 wins the max). Both
variants keep that literal reading; the binary rules restate it per
citation. Sentences without citations drag recall down but are excluded
from the precision denominator.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import CitedAnswer, Passage, strip_citations
from .errors import ContractError, GateWarning, ScoringError
from .fcm import Scorer, binarize, evidence_for

THETA_START = 0.9
THETA_STEP = 0.1
MIN_VIABLE_SIZE = 3
DEFAULT_FACT_THRESHOLD = 0.5


@dataclass(frozen=True)
class GateMetrics:
    citation_recall: float
    citation_precision: float
    correctness: float
    grounded_correctness: float
    passed: bool
    theta_used: float

    def as_dict(self) -> dict:
        return {
            "citation_recall": self.citation_recall,
            "citation_precision": self.citation_precision,
            "correctness": self.correctness,
            "grounded_correctness": self.grounded_correctness,
            "passed": self.passed,
            "theta_used": self.theta_used,
        }


def _phi(scorer: Scorer, claim: str, evidence: str, sentence_index: int) -> float:
    try:
        return scorer.score(claim, evidence).value
    except ScoringError as exc:
        raise ScoringError(f"sentence {sentence_index}: {exc}", retryable=exc.retryable) from exc


def citation_recall(
    answer: CitedAnswer, passages: tuple[Passage, ...] | list[Passage], scorer: Scorer
) -> float:
    """Mean per-sentence consistency against the jointly cited passages.

    A sentence with no citations contributes 0: empty evidence scores 0 by
    the scorer contract.
    """
    if not answer.sentences:
        raise ContractError("answer has no sentences")
    total = 0.0
    for i, s in enumerate(answer.sentences):
        total += _phi(scorer, s.text_without_citations, evidence_for(passages, s.citations), i)
    return total / len(answer.sentences)


def citation_precision(
    answer: CitedAnswer, passages: tuple[Passage, ...] | list[Passage], scorer: Scorer
) -> float:
    """Mean per-citation relevance over sentences that cite anything.

    A citation c counts max(phi(s, c), 1 - phi(s, rest)): it is relevant if
    it supports the sentence alone, or if the remaining citations do not.
    """
    cited = [(i, s) for i, s in enumerate(answer.sentences) if s.citations]
    if not cited:
        warnings.warn("answer has no citations; precision defined as 0", GateWarning)
        return 0.0
    sentence_terms = []
    for i, s in cited:
        claim = s.text_without_citations
        inner = 0.0
        for c in sorted(s.citations):
            alone = _phi(scorer, claim, evidence_for(passages, {c}), i)
            rest = _phi(scorer, claim, evidence_for(passages, s.citations - {c}), i)
            inner += max(alone, 1.0 - rest)
        sentence_terms.append(inner / len(s.citations))
    return sum(sentence_terms) / len(sentence_terms)


def citation_recall_binary(
    answer: CitedAnswer,
    passages: tuple[Passage, ...] | list[Passage],
    scorer: Scorer,
    threshold: float = DEFAULT_FACT_THRESHOLD,
) -> float:
    """Fraction of sentences whose joint citations support them at threshold."""
    if not answer.sentences:
        raise ContractError("answer has no sentences")
    hits = 0
    for i, s in enumerate(answer.sentences):
        if not s.citations:
            continue
        joint = _phi(scorer, s.text_without_citations, evidence_for(passages, s.citations), i)
        hits += binarize(joint, threshold)
    return hits / len(answer.sentences)


def citation_precision_binary(
    answer: CitedAnswer,
    passages: tuple[Passage, ...] | list[Passage],
    scorer: Scorer,
    threshold: float = DEFAULT_FACT_THRESHOLD,
) -> float:
    """Fraction of citations that are not irrelevant.

    c is irrelevant iff it does not support the sentence alone and the
    remaining citations do support it.
    """
    total = 0
    relevant = 0
    for i, s in enumerate(answer.sentences):
        claim = s.text_without_citations
        for c in sorted(s.citations):
            total += 1
            alone = binarize(
                _phi(scorer, claim, evidence_for(passages, {c}), i), threshold
            )
            rest = binarize(
                _phi(scorer, claim, evidence_for(passages, s.citations - {c}), i),
                threshold,
            )
            if not (alone == 0 and rest == 1):
                relevant += 1
    if total == 0:
        warnings.warn("answer has no citations; precision defined as 0", GateWarning)
        return 0.0
    return relevant / total


def correctness(
    answer: CitedAnswer,
    facts: tuple[str, ...] | list[str] | None,
    scorer: Scorer,
    fact_threshold: float = DEFAULT_FACT_THRESHOLD,
) -> float:
    """Fraction of atomic facts supported by the answer text at threshold.

    Fact-free instances are vacuously correct (1.0, with a warning); the
    gate then rests on the citation conditions alone.
    """
    if not facts:
        warnings.warn("no facts given; correctness defined as 1.0", GateWarning)
        return 1.0
    evidence = strip_citations(answer.full_text)
    hits = sum(binarize(scorer.score(f, evidence), fact_threshold) for f in facts)
    return hits / len(facts)


def grounded_correctness(
    answer: CitedAnswer,
    facts: tuple[str, ...] | list[str] | None,
    passages: tuple[Passage, ...] | list[Passage],
    scorer: Scorer,
    fact_threshold: float = DEFAULT_FACT_THRESHOLD,
) -> float:
    """Like correctness, but a fact also needs support from the passages."""
    if not facts:
        warnings.warn("no facts given; grounded correctness defined as 1.0", GateWarning)
        return 1.0
    answer_ev = strip_citations(answer.full_text)
    passage_ev = evidence_for(passages, {p.index for p in passages})
    hits = 0
    for f in facts:
        in_answer = binarize(scorer.score(f, answer_ev), fact_threshold)
        in_passages = binarize(scorer.score(f, passage_ev), fact_threshold)
        hits += in_answer & in_passages
    return hits / len(facts)


def quality_gate(
    candidate: CitedAnswer,
    facts: tuple[str, ...] | list[str] | None,
    passages: tuple[Passage, ...] | list[Passage],
    scorer: Scorer,
    theta: float,
    fact_threshold: float = DEFAULT_FACT_THRESHOLD,
) -> GateMetrics:
    """Score one candidate and apply the strict-inequality gate at theta."""
    if not 0.0 < theta < 1.0:
        raise ContractError("theta must lie strictly between 0 and 1")
    recall = citation_recall(candidate, passages, scorer)
    precision = citation_precision(candidate, passages, scorer)
    correct = correctness(candidate, facts, scorer, fact_threshold)
    grounded = grounded_correctness(candidate, facts, passages, scorer, fact_threshold)
    return GateMetrics(
        citation_recall=recall,
        citation_precision=precision,
        correctness=correct,
        grounded_correctness=grounded,
        passed=recall > theta and precision > theta and correct > theta,
        theta_used=theta,
    )


def _at_theta(metrics: GateMetrics, theta: float) -> GateMetrics:
    return GateMetrics(
        citation_recall=metrics.citation_recall,
        citation_precision=metrics.citation_precision,
        correctness=metrics.correctness,
        grounded_correctness=metrics.grounded_correctness,
        passed=(
            metrics.citation_recall > theta
            and metrics.citation_precision > theta
            and metrics.correctness > theta
        ),
        theta_used=theta,
    )


@dataclass(frozen=True)
class ThresholdResult:
    theta: float
    passing: tuple[int, ...]
    metrics: tuple[GateMetrics, ...]


def theta_schedule(start: float = THETA_START, step: float = THETA_STEP) -> list[float]:
    """The descending thresholds tried by the dynamic gate, stopping above 0."""
    out = []
    theta = start
    while theta > 0.0 + 1e-9:
        out.append(round(theta, 6))
        theta = round(theta - step, 6)
    return out


def dynamic_threshold(
    candidates: list[tuple[str, CitedAnswer]],
    facts_map: dict[str, tuple[str, ...] | None],
    passages_map: dict[str, tuple[Passage, ...]],
    scorer: Scorer,
    min_size: int = MIN_VIABLE_SIZE,
    theta_start: float = THETA_START,
    theta_step: float = THETA_STEP,
    fact_threshold: float = DEFAULT_FACT_THRESHOLD,
    jobs: int = 1,
) -> ThresholdResult:
    """Walk θ down the schedule until at least min_size candidates pass.

    Metrics are computed once per candidate; only the pass decision moves
    with θ. If even the last scheduled θ admits fewer than min_size, that θ
    is returned with the undersized passing set and a warning. Candidates
    may be scored in parallel; results are assembled in input order so the
    outcome is independent of jobs.
    """
    if min_size < 1:
        raise ContractError("min_size must be >= 1")
    schedule = theta_schedule(theta_start, theta_step)
    if not schedule:
        raise ContractError("empty theta schedule")

    def measure(item: tuple[str, CitedAnswer]) -> GateMetrics:
        instance_id, answer = item
        return quality_gate(
            answer,
            facts_map.get(instance_id),
            passages_map[instance_id],
            scorer,
            theta=schedule[0],
            fact_threshold=fact_threshold,
        )

    if jobs > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            measured = list(pool.map(measure, candidates))
    else:
        measured = [measure(c) for c in candidates]

    chosen = schedule[-1]
    for theta in schedule:
        count = sum(
            1
            for m in measured
            if m.citation_recall > theta
            and m.citation_precision > theta
            and m.correctness > theta
        )
        if count >= min_size:
            chosen = theta
            break
    final = tuple(_at_theta(m, chosen) for m in measured)
    passing = tuple(i for i, m in enumerate(final) if m.passed)
    if len(passing) < min_size:
        warnings.warn(
            f"only {len(passing)} candidates pass at the final theta {chosen}",
            GateWarning,
        )
    return ThresholdResult(theta=chosen, passing=passing, metrics=final)


def _f1(recall: float, precision: float) -> float:
    if recall + precision == 0.0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def evaluate_answer(
    answer: CitedAnswer,
    facts: tuple[str, ...] | None,
    passages: tuple[Passage, ...],
    scorer: Scorer,
    threshold: float = DEFAULT_FACT_THRESHOLD,
) -> dict:
    """All metrics for one answer, continuous and binary, plus binary F1."""
    rb = citation_recall_binary(answer, passages, scorer, threshold)
    pb = citation_precision_binary(answer, passages, scorer, threshold)
    return {
        "citation_recall": citation_recall(answer, passages, scorer),
        "citation_precision": citation_precision(answer, passages, scorer),
        "citation_recall_binary": rb,
        "citation_precision_binary": pb,
        "citation_f1_binary": _f1(rb, pb),
        "correctness": correctness(answer, facts, scorer, threshold),
        "grounded_correctness": grounded_correctness(
            answer, facts, passages, scorer, threshold
        ),
    }


def evaluate_corpus(
    items: list[tuple[str, CitedAnswer, tuple[str, ...] | None, tuple[Passage, ...]]],
    scorer: Scorer,
    threshold: float = DEFAULT_FACT_THRESHOLD,
    jobs: int = 1,
) -> dict:
    """Per-instance metrics plus corpus aggregates.

    Aggregates are unweighted means over instances; the aggregate F1 is the
    harmonic mean of the aggregate binary recall and precision.
    """
    if not items:
        raise ContractError("nothing to evaluate")

    def one(item) -> dict:
        instance_id, answer, facts, passages = item
        row = {"instance_id": instance_id}
        row.update(evaluate_answer(answer, facts, passages, scorer, threshold))
        return row

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(item) for item in items]

    keys = [
        "citation_recall",
        "citation_precision",
        "citation_recall_binary",
        "citation_precision_binary",
        "correctness",
        "grounded_correctness",
    ]
    aggregate = {k: sum(r[k] for r in rows) / len(rows) for k in keys}
    aggregate["citation_f1_binary"] = _f1(
        aggregate["citation_recall_binary"], aggregate["citation_precision_binary"]
    )
    return {"instances": rows, "aggregate": aggregate, "count": len(rows)}
