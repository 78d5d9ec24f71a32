"""Offline candidate generation in the loop's candidate JSONL schema.

Each output line is {"instance_id": ..., "answer": ...} where the answer
carries inline citation markers referring to the instance's passage
indices. The backend here is a deterministic template sampler over the
instance's own passages (plus the gold answer when present); a hosted
text-generation model would slot in at build_candidates with the same
output contract.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass

logger = logging.getLogger(__name__)

_SENTENCE_END = re.compile(r"[.!?]")


@dataclass(frozen=True)
class SamplingConfig:
    n_candidates: int = 4
    seed: int = 0
    max_sentences: int = 2

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ValueError(f"n_candidates must be >= 1, got {self.n_candidates}")
        if self.max_sentences < 1:
            raise ValueError(f"max_sentences must be >= 1, got {self.max_sentences}")


def _instance_rng(seed: int, instance_id: str) -> random.Random:
    # hash() is salted per process; a digest keeps runs reproducible.
    digest = hashlib.sha256(f"{seed}:{instance_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _first_sentence(text: str) -> str:
    head = _SENTENCE_END.split(text, maxsplit=1)[0].strip()
    return head


def _passage_claims(passages: list[dict]) -> list[tuple[int, str]]:
    claims = []
    for p in passages:
        sentence = _first_sentence(p["text"])
        if sentence:
            claims.append((int(p["index"]), sentence))
    return claims


def build_candidates(instance: dict, config: SamplingConfig) -> list[str]:
    """Distinct cited answers sampled from the instance's own material."""
    claims = _passage_claims(instance["passages"])
    if not claims:
        raise ValueError("no usable passage text")
    rng = _instance_rng(config.seed, instance["id"])
    answers: list[str] = []
    seen: set[str] = set()

    def add(answer: str) -> None:
        if answer not in seen:
            seen.add(answer)
            answers.append(answer)

    gold = instance.get("gold_answer")
    if isinstance(gold, str) and gold.strip():
        add(gold.strip())
    attempts = 0
    while len(answers) < config.n_candidates and attempts < config.n_candidates * 20:
        attempts += 1
        k = rng.randint(1, min(config.max_sentences, len(claims)))
        chosen = rng.sample(claims, k)
        add(" ".join(f"{sentence} [{index}]." for index, sentence in chosen))
    return answers[: config.n_candidates]


def generate_candidates(
    instances_path: str, out_path: str, config: SamplingConfig
) -> int:
    """Write candidate JSONL; returns the number of lines written.

    A broken instance (bad JSON, missing fields, empty passages) is skipped
    with a log entry instead of failing the whole file.
    """
    lines: list[str] = []
    with open(instances_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                instance = json.loads(raw)
                if not isinstance(instance, dict):
                    raise ValueError("instance line must be a JSON object")
                for answer in build_candidates(instance, config):
                    lines.append(
                        json.dumps(
                            {"instance_id": instance["id"], "answer": answer},
                            sort_keys=True,
                        )
                    )
            except (ValueError, KeyError, TypeError) as exc:
                logger.warning("skipping instance at line %d: %s", lineno, exc)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)
