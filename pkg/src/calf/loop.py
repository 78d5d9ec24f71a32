"""Iteration controller: ingest candidates, diversify citations, gate,
weight, and emit training data.

Candidate answers arrive from an external generator as JSONL; each
iteration expands them with two citation-resampled variants, walks the
dynamic threshold over the expanded pool, computes token weights for
everything accepted, and appends to the accumulated training set. Every
random draw is seeded by a stable hash of (master seed, purpose, iteration,
instance id, answer text), so thread count and scheduling cannot change any
output byte.
"""
from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib.resources import files
from typing import Iterable, Sequence

import numpy as np

from .align import align_spans, map_weights
from .corpus import (
    CitedAnswer,
    Instance,
    Passage,
    Sentence,
    iter_jsonl,
    parse_answer,
    render_answer,
    render_sentence,
)
from .errors import CitationWarning, ContractError, DataError, GateWarning, ParseError
from .fcm import Scorer, ScorerConfig, build_scorer
from .gate import (
    GateMetrics,
    MIN_VIABLE_SIZE,
    THETA_START,
    THETA_STEP,
    dynamic_threshold,
)
from .seeding import stable_seed
from .shapley import DEFAULT_EXACT_LIMIT, DEFAULT_MC_SAMPLES, WeightsConfig, answer_weights
from .tokenizers import Token, Tokenization, tokenize_model

DEFAULT_MAX_ITERATIONS = 8
DEFAULT_EOS_WEIGHT = 0.02
DEFAULT_INSTANCE_CAP = 1000
EOS_SURFACE = "</s>"

ORIGIN_INGESTED = "ingested"
ORIGIN_REPLACEMENT = "citation_replacement"
ORIGIN_SEED = "seed"


@dataclass(frozen=True)
class LoopConfig:
    """Run-wide knobs; the shipped default config file mirrors these fields."""

    master_seed: int = 0
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    min_viable_size: int = MIN_VIABLE_SIZE
    theta_start: float = THETA_START
    theta_step: float = THETA_STEP
    exact_limit: int = DEFAULT_EXACT_LIMIT
    mc_samples: int = DEFAULT_MC_SAMPLES
    eos_weight: float = DEFAULT_EOS_WEIGHT
    instance_cap: int = DEFAULT_INSTANCE_CAP
    jobs: int = 1
    scorer: ScorerConfig = field(default_factory=ScorerConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.eos_weight <= 1.0:
            raise ContractError("eos_weight must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be >= 1")
        if self.jobs < 1:
            raise ContractError("jobs must be >= 1")

    def to_dict(self, include_jobs: bool = True) -> dict:
        d = {
            "master_seed": self.master_seed,
            "max_iterations": self.max_iterations,
            "min_viable_size": self.min_viable_size,
            "theta_start": self.theta_start,
            "theta_step": self.theta_step,
            "exact_limit": self.exact_limit,
            "mc_samples": self.mc_samples,
            "eos_weight": self.eos_weight,
            "instance_cap": self.instance_cap,
            "scorer": {
                "kind": self.scorer.kind,
                "endpoint": self.scorer.endpoint,
                "binarize_threshold": self.scorer.binarize_threshold,
                "timeout": self.scorer.timeout,
                "cache_enabled": self.scorer.cache_enabled,
                "max_inflight": self.scorer.max_inflight,
                "retries": self.scorer.retries,
            },
        }
        if include_jobs:
            d["jobs"] = self.jobs
        return d


def default_config() -> LoopConfig:
    raw = json.loads(
        (files("calf") / "data" / "default_config.json").read_text(encoding="utf-8")
    )
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> LoopConfig:
    if not isinstance(raw, dict):
        raise DataError("config must be a JSON object")
    scorer_raw = raw.get("scorer", {})
    known_scorer = {"kind", "endpoint", "binarize_threshold", "timeout", "cache_enabled",
                    "max_inflight", "retries"}
    unknown = set(scorer_raw) - known_scorer
    if unknown:
        raise DataError(f"unknown scorer config keys: {sorted(unknown)}")
    scorer = ScorerConfig(**scorer_raw)
    known = {"master_seed", "max_iterations", "min_viable_size", "theta_start",
             "theta_step", "exact_limit", "mc_samples", "eos_weight", "instance_cap",
             "jobs"}
    unknown = set(raw) - known - {"scorer"}
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    return LoopConfig(**{k: raw[k] for k in known if k in raw}, scorer=scorer)


def load_config(path: str) -> LoopConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open: {exc}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON: {exc.msg}", path=path, line=exc.lineno) from exc
    return config_from_dict(raw)


@dataclass(frozen=True)
class ScoredCandidate:
    instance_id: str
    answer: CitedAnswer
    metrics: GateMetrics
    origin: str

    def __post_init__(self) -> None:
        if self.origin not in (ORIGIN_INGESTED, ORIGIN_REPLACEMENT):
            raise ContractError(f"unknown candidate origin {self.origin!r}")


@dataclass(frozen=True)
class TrainingExample:
    instance_id: str
    prompt_text: str
    answer_text: str
    model_tokens: Tokenization
    weights: tuple[float, ...]
    origin: str

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.model_tokens.tokens):
            raise ContractError(
                f"{len(self.weights)} weights for {len(self.model_tokens.tokens)} tokens"
            )

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "prompt": self.prompt_text,
            "answer": self.answer_text,
            "tokens": [t.surface for t in self.model_tokens.tokens],
            "weights": list(self.weights),
            "origin": self.origin,
        }


@dataclass(frozen=True)
class IterationState:
    """Progress of the filtering loop; history drives the stop decision.

    ``thetas`` records the dynamic threshold each iteration settled on,
    parallel to ``history``.
    """

    k: int = 0
    history: tuple[tuple[int, int], ...] = ()
    accepted: tuple[ScoredCandidate, ...] = ()
    examples: tuple[TrainingExample, ...] = ()
    thetas: tuple[float, ...] = ()
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self) -> None:
        if len(self.history) != self.k:
            raise ContractError(f"history length {len(self.history)} != k {self.k}")
        if len(self.thetas) != self.k:
            raise ContractError(f"thetas length {len(self.thetas)} != k {self.k}")
        for filtered, total in self.history:
            if filtered > total:
                raise ContractError(f"filtered {filtered} exceeds candidates {total}")


def render_prompt(instance: Instance) -> str:
    """The fixed prompt template: question, indexed passages, answer cue."""
    lines = [f"Question: {instance.question}"]
    for p in instance.passages:
        lines.append(f"[{p.index}] {p.title}: {p.text}")
    lines.append("Answer:")
    return "\n".join(lines)


def diversify_citations(
    candidate: CitedAnswer,
    passages: Sequence[Passage],
    seed: int,
) -> list[CitedAnswer]:
    """Two variants of the candidate with citation sets resampled.

    Each sentence's set is redrawn at the same cardinality, without
    replacement, with passage probability proportional to retrieval_score
    (uniform when all scores are zero). A sentence citing more passages
    than exist is kept unchanged with a warning.
    """
    if not any(s.citations for s in candidate.sentences):
        raise ContractError("candidate has no cited sentence to diversify")
    indices = np.array([p.index for p in passages], dtype=np.int64)
    mass = np.array([p.retrieval_score for p in passages], dtype=np.float64)
    total = float(mass.sum())
    if total <= 0.0:
        probs = np.full(len(passages), 1.0 / len(passages))
    else:
        probs = mass / total
    rng = np.random.default_rng(seed)
    # Kept sentences may cite outside the passage list (the overcited case);
    # the re-parse below must not strip those markers.
    valid = frozenset(int(i) for i in indices) | frozenset(
        c for s in candidate.sentences for c in s.citations
    )

    variants: list[CitedAnswer] = []
    for _ in range(2):
        new_sentences: list[Sentence] = []
        for s in candidate.sentences:
            k = len(s.citations)
            if k == 0:
                new_sentences.append(s)
                continue
            if k > len(passages):
                warnings.warn(
                    f"sentence cites {k} passages but only {len(passages)} exist; kept",
                    CitationWarning,
                )
                new_sentences.append(s)
                continue
            draw = rng.choice(indices, size=k, replace=False, p=probs)
            new_sentences.append(
                Sentence(
                    text_without_citations=s.text_without_citations,
                    citations=frozenset(int(i) for i in draw),
                    raw_span=s.raw_span,
                )
            )
        # Re-render and re-parse so raw spans describe the variant's text.
        variant_text = " ".join(render_sentence(s) for s in new_sentences)
        variants.append(parse_answer(variant_text, valid))
    return variants


def build_training_example(
    instance: Instance,
    answer: CitedAnswer,
    scorer: Scorer,
    config: LoopConfig,
    origin: str,
) -> TrainingExample:
    """Weights for one accepted answer, mapped onto the model tokenization.

    The scorer-side weight vector U is aligned to the model tokens; an EOS
    token is appended with the fixed small weight so short outputs are not
    rewarded.
    """
    wcfg = WeightsConfig(
        exact_limit=config.exact_limit,
        mc_samples=config.mc_samples,
        master_seed=config.master_seed,
        instance_id=instance.id,
    )
    u = answer_weights(answer, instance.passages, scorer, wcfg)
    model_toks = tokenize_model(u.rendered_text)
    alignment = align_spans(u.as_tokenization(), model_toks)
    w = map_weights(u.content_weights(), alignment, model_toks)
    tokens = model_toks.tokens + (Token(surface=EOS_SURFACE, is_special=True),)
    weights = tuple(w) + (config.eos_weight,)
    return TrainingExample(
        instance_id=instance.id,
        prompt_text=render_prompt(instance),
        answer_text=u.rendered_text,
        model_tokens=Tokenization(tokens=tokens, source_text=u.rendered_text),
        weights=weights,
        origin=origin,
    )


def ratio(entry: tuple[int, int]) -> float:
    filtered, total = entry
    return filtered / total if total else 0.0


def should_stop(state: IterationState) -> bool:
    """Stop at the iteration cap, or when the filtered proportion declines."""
    if state.k >= state.max_iterations:
        return True
    if state.k >= 2:
        return ratio(state.history[state.k - 1]) < ratio(state.history[state.k - 2])
    return False


def run_iteration(
    state: IterationState,
    candidates: list[tuple[Instance, CitedAnswer]],
    scorer: Scorer,
    config: LoopConfig,
) -> IterationState:
    """One filtering pass: expand, gate at the dynamic threshold, weight.

    Candidates past the per-iteration cap are dropped in input order. A
    candidate with no citations cannot be diversified and enters the pool
    alone, with a warning.
    """
    if not candidates:
        raise ContractError("run_iteration needs at least one candidate")
    if len(candidates) > config.instance_cap:
        warnings.warn(
            f"capping {len(candidates)} candidates to {config.instance_cap}",
            GateWarning,
        )
        candidates = candidates[: config.instance_cap]

    expanded: list[tuple[Instance, CitedAnswer, str]] = []
    for instance, answer in candidates:
        expanded.append((instance, answer, ORIGIN_INGESTED))
        if not any(s.citations for s in answer.sentences):
            warnings.warn(
                f"candidate for {instance.id!r} has no citations; not diversified",
                CitationWarning,
            )
            continue
        seed = stable_seed(
            config.master_seed, "diversify", state.k, instance.id, render_answer(answer)
        )
        for variant in diversify_citations(answer, instance.passages, seed):
            expanded.append((instance, variant, ORIGIN_REPLACEMENT))

    facts_map = {inst.id: inst.facts for inst, _, _ in expanded}
    passages_map = {inst.id: inst.passages for inst, _, _ in expanded}
    result = dynamic_threshold(
        [(inst.id, ans) for inst, ans, _ in expanded],
        facts_map,
        passages_map,
        scorer,
        min_size=config.min_viable_size,
        theta_start=config.theta_start,
        theta_step=config.theta_step,
        fact_threshold=config.scorer.binarize_threshold,
        jobs=config.jobs,
    )

    newly_accepted = tuple(
        ScoredCandidate(
            instance_id=expanded[i][0].id,
            answer=expanded[i][1],
            metrics=result.metrics[i],
            origin=expanded[i][2],
        )
        for i in result.passing
    )
    if not newly_accepted:
        warnings.warn(f"iteration {state.k} accepted zero candidates", GateWarning)

    def weigh(i: int) -> TrainingExample:
        instance, answer, origin = expanded[i]
        return build_training_example(instance, answer, scorer, config, origin)

    if config.jobs > 1 and len(result.passing) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            new_examples = tuple(pool.map(weigh, result.passing))
    else:
        new_examples = tuple(weigh(i) for i in result.passing)

    return replace(
        state,
        k=state.k + 1,
        history=state.history + ((len(newly_accepted), len(expanded)),),
        accepted=state.accepted + newly_accepted,
        examples=state.examples + new_examples,
        thetas=state.thetas + (result.theta,),
    )


def seed_examples(
    instances: Iterable[Instance], scorer: Scorer, config: LoopConfig
) -> tuple[TrainingExample, ...]:
    """Weight the gold answers of the few-shot seed set the same way."""
    out = []
    for inst in instances:
        if inst.gold_answer is None:
            continue
        answer = parse_answer(inst.gold_answer, inst.citation_indices)
        out.append(build_training_example(inst, answer, scorer, config, ORIGIN_SEED))
    return tuple(out)


def emit_training_set(
    accepted_examples: Sequence[TrainingExample],
    seed_set: Sequence[TrainingExample],
    out_path: str,
) -> None:
    """Write the union of seed and accepted examples as canonical JSONL.

    Duplicate (instance_id, origin, answer) triples collapse to one line;
    ordering is total, so reruns are byte-identical.
    """
    merged: dict[tuple[str, str, str], TrainingExample] = {}
    for ex in list(seed_set) + list(accepted_examples):
        merged.setdefault((ex.instance_id, ex.origin, ex.answer_text), ex)
    ordered = sorted(merged.values(), key=lambda e: (e.instance_id, e.origin, e.answer_text))
    if not ordered:
        raise ContractError("nothing to emit: no accepted examples and no seed set")
    from .manifest import atomic_write_text

    lines = [json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":")) for e in ordered]
    atomic_write_text(out_path, "\n".join(lines) + "\n")


def load_candidates(
    path: str, instances_by_id: dict[str, Instance]
) -> list[tuple[Instance, CitedAnswer]]:
    """Read candidate JSONL; unparseable answers are skipped with a warning."""
    out: list[tuple[Instance, CitedAnswer]] = []
    for lineno, obj in iter_jsonl(path):
        if not isinstance(obj, dict):
            raise DataError("expected a JSON object", path=path, line=lineno)
        for key in ("instance_id", "answer"):
            if key not in obj or not isinstance(obj[key], str):
                raise DataError(
                    f"missing or non-string field {key!r}", path=path, line=lineno
                )
        instance = instances_by_id.get(obj["instance_id"])
        if instance is None:
            raise DataError(
                f"unknown instance_id {obj['instance_id']!r}", path=path, line=lineno
            )
        try:
            answer = parse_answer(obj["answer"], instance.citation_indices)
        except ParseError as exc:
            warnings.warn(
                f"{path}:{lineno}: skipping unparseable candidate: {exc}",
                CitationWarning,
            )
            continue
        out.append((instance, answer))
    return out


@dataclass(frozen=True)
class LoopOutcome:
    state: IterationState
    iteration_files: tuple[str, ...]
    final_file: str


def run_loop(
    instances: Sequence[Instance],
    candidate_paths: Sequence[str],
    config: LoopConfig,
    out_dir: str,
    scorer: Scorer | None = None,
) -> LoopOutcome:
    """Drive the full loop over per-iteration candidate files.

    Iteration k consumes candidate_paths[k]; the loop stops early when
    should_stop fires. After every iteration the accumulated training set
    (seed + all accepted so far) is rewritten, and the final set is also
    written under a stable name.
    """
    if not candidate_paths:
        raise ContractError("run_loop needs at least one candidate file")
    os.makedirs(out_dir, exist_ok=True)
    scorer = scorer or build_scorer(config.scorer)
    instances_by_id = {i.id: i for i in instances}
    if len(instances_by_id) != len(instances):
        raise DataError("duplicate instance ids in corpus")

    seeds = seed_examples(instances, scorer, config)
    state = IterationState(max_iterations=config.max_iterations)
    files_written: list[str] = []

    for path in candidate_paths:
        if should_stop(state):
            break
        candidates = load_candidates(path, instances_by_id)
        if not candidates:
            warnings.warn(f"{path} contains no usable candidates; stopping", GateWarning)
            break
        state = run_iteration(state, candidates, scorer, config)
        if seeds or state.examples:
            iter_path = os.path.join(out_dir, f"training_set_iter{state.k - 1}.jsonl")
            emit_training_set(state.examples, seeds, iter_path)
            files_written.append(iter_path)

    final_path = os.path.join(out_dir, "training_set.jsonl")
    emit_training_set(state.examples, seeds, final_path)
    return LoopOutcome(
        state=state,
        iteration_files=tuple(files_written),
        final_file=final_path,
    )
