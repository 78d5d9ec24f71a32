"""Minimal-span alignment between two tokenizations of the same text.

Surfaces are compared after removing whitespace and space markers. Pairs
close at the earliest point the two running buffers coincide, which yields
the unique minimal decomposition in time linear in total character count.

Pair indices refer to the *filtered* token sequences (special and
citation-marker tokens removed); ``scorer_indices`` / ``model_indices``
translate filtered positions back to positions in the original token
lists. Markers can sit between, or even inside, content spans on the model
side, so original-coordinate spans would not be contiguous.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import AlignmentError, ContractError
from .tokenizers import SPACE_MARKER, Token, Tokenization

Span = tuple[int, int]


def normalize_surface(surface: str) -> str:
    """Strip whitespace and space markers so both conventions compare equal."""
    return "".join(ch for ch in surface if not ch.isspace() and ch != SPACE_MARKER)


def _alignable(tokens: tuple[Token, ...]) -> tuple[list[str], list[int]]:
    surfaces: list[str] = []
    indices: list[int] = []
    for i, tok in enumerate(tokens):
        if tok.is_special or tok.is_citation_marker:
            continue
        norm = normalize_surface(tok.surface)
        if not norm:
            raise AlignmentError(
                f"token {i} ({tok.surface!r}) is empty after space normalization"
            )
        surfaces.append(norm)
        indices.append(i)
    return surfaces, indices


@dataclass(frozen=True)
class SpanAlignment:
    """Paired half-open spans over the filtered token sequences."""

    pairs: tuple[tuple[Span, Span], ...]
    scorer_indices: tuple[int, ...]
    model_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        # Pairs must tile both filtered sequences in order, no gaps.
        sa_pos = ma_pos = 0
        for (slo, shi), (mlo, mhi) in self.pairs:
            if slo != sa_pos or mlo != ma_pos or shi <= slo or mhi <= mlo:
                raise ContractError(f"malformed span pair (({slo},{shi}),({mlo},{mhi}))")
            sa_pos, ma_pos = shi, mhi
        if sa_pos != len(self.scorer_indices) or ma_pos != len(self.model_indices):
            raise ContractError("span pairs do not cover all alignable tokens")

    @property
    def scorer_token_count(self) -> int:
        return len(self.scorer_indices)


def _common_prefix_len(a: str, b: str) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


def align_spans(scorer_toks: Tokenization, model_toks: Tokenization) -> SpanAlignment:
    """Compute the minimal-span alignment between two tokenizations.

    Raises :class:`AlignmentError` when the normalized character streams
    disagree, reporting the unmatched remainder of both running buffers.
    """
    sa, s_idx = _alignable(scorer_toks.tokens)
    ma, m_idx = _alignable(model_toks.tokens)

    pairs: list[tuple[Span, Span]] = []
    i = j = 0

    def fail(abuf: str, bbuf: str) -> AlignmentError:
        cp = _common_prefix_len(abuf, bbuf)
        return AlignmentError(
            "tokenizations disagree after space normalization",
            residual_a=abuf[cp:],
            residual_b=bbuf[cp:],
        )

    while i < len(sa) or j < len(ma):
        start_i, start_j = i, j
        abuf = bbuf = ""
        while True:
            if abuf and len(abuf) == len(bbuf):
                # Incremental checks below guarantee equality here.
                pairs.append(((start_i, i), (start_j, j)))
                break
            if len(abuf) <= len(bbuf):
                if i >= len(sa):
                    raise fail(abuf, bbuf)
                piece = sa[i]
                # Verify the new piece against the already-buffered region of
                # the other side; each character is compared at most twice
                # overall, keeping the whole pass linear.
                overlap = bbuf[len(abuf) : len(abuf) + len(piece)]
                if piece[: len(overlap)] != overlap:
                    raise fail(abuf + piece, bbuf)
                abuf += piece
                i += 1
            else:
                if j >= len(ma):
                    raise fail(abuf, bbuf)
                piece = ma[j]
                overlap = abuf[len(bbuf) : len(bbuf) + len(piece)]
                if piece[: len(overlap)] != overlap:
                    raise fail(abuf, bbuf + piece)
                bbuf += piece
                j += 1

    return SpanAlignment(
        pairs=tuple(pairs), scorer_indices=tuple(s_idx), model_indices=tuple(m_idx)
    )


def map_weights(
    U: list[float], alignment: SpanAlignment, model_toks: Tokenization
) -> list[float]:
    """Carry scorer-token weights onto model tokens through the alignment.

    Every model token in a pair gets the arithmetic mean of the paired
    scorer-token weights. Citation markers get exactly 1.0. Special tokens
    also get 1.0; callers that append an EOS token override its weight.
    """
    if len(U) != alignment.scorer_token_count:
        raise ContractError(
            f"got {len(U)} weights for {alignment.scorer_token_count} aligned scorer tokens"
        )
    out: list[float | None] = [None] * len(model_toks.tokens)
    for tok_i, tok in enumerate(model_toks.tokens):
        if tok.is_citation_marker or tok.is_special:
            out[tok_i] = 1.0
    for (slo, shi), (mlo, mhi) in alignment.pairs:
        mean = sum(U[slo:shi]) / (shi - slo)
        for f in range(mlo, mhi):
            out[alignment.model_indices[f]] = mean
    missing = [i for i, w in enumerate(out) if w is None]
    if missing:
        raise ContractError(f"alignment does not cover model tokens {missing}")
    return [float(w) for w in out]  # type: ignore[arg-type]
