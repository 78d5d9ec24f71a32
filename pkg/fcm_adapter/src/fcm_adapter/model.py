"""Consistency-model backends.

A backend is anything with score_batch(pairs) -> list[float]. The shipped
backend is a deterministic lexical stand-in, so the service runs without
model downloads; a real pretrained consistency model plugs in through
load_model with its own identifier.
"""
from __future__ import annotations

import logging
import re

logger = logging.getLogger(__name__)

_WORD = re.compile(r"[a-z0-9]+")

# Function words carry no factual content; scoring ignores them on both sides.
_STOPWORDS = frozenset(
    "a an the and or but if then is are was were be been being of in on at to "
    "for with as by from it its this that these those he she they we you i".split()
)


class ModelLoadError(RuntimeError):
    """Raised when the configured model cannot be loaded; aborts startup."""


def _content_words(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in _STOPWORDS}


class OfflineLexicalModel:
    """Fraction of the claim's content words present in the evidence.

    Deterministic and dependency-free. Scores land in [0,1] by construction;
    a claim with no content words scores 0.
    """

    identifier = "offline-lexical"

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[float]:
        out = []
        for claim, evidence in pairs:
            claim_words = _content_words(claim)
            if not claim_words:
                out.append(0.0)
                continue
            evidence_words = _content_words(evidence)
            out.append(len(claim_words & evidence_words) / len(claim_words))
        return out


def load_model(identifier: str, device: str = "cpu"):
    """Instantiate the configured backend; unknown identifiers abort startup.

    A real AlignScore-class checkpoint would be resolved and moved to
    ``device`` here; this build ships only the offline backend.
    """
    if identifier == "offline-lexical":
        return OfflineLexicalModel()
    raise ModelLoadError(
        f"unknown model {identifier!r}; available: offline-lexical"
    )


def clamp_scores(raw: list[float]) -> list[float]:
    """Force scores into [0,1], logging each violation.

    A wrapped model occasionally emits values slightly outside the range;
    the wire contract is strict, so out-of-range values are clamped rather
    than forwarded.
    """
    out = []
    for i, value in enumerate(raw):
        clamped = min(1.0, max(0.0, float(value)))
        if clamped != value:
            logger.warning("score %d out of range (%r); clamped to %s", i, value, clamped)
        out.append(clamped)
    return out
