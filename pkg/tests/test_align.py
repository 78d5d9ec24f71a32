"""Minimal-span alignment and weight mapping."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calf.align import SpanAlignment, align_spans, map_weights, normalize_surface
from calf.errors import AlignmentError, ContractError
from calf.tokenizers import Token, Tokenization, tokenize_model, tokenize_scorer
from oracles import minimal_alignment_oracle


def toks(*surfaces, markers=(), specials=()):
    return Tokenization(
        tokens=tuple(
            Token(
                surface=s,
                is_citation_marker=(i in markers),
                is_special=(i in specials),
            )
            for i, s in enumerate(surfaces)
        ),
        source_text="",
    )


def span_surfaces(alignment, scorer):
    surfaces = [normalize_surface(t.surface) for t in scorer.tokens]
    return tuple(
        "".join(surfaces[alignment.scorer_indices[f]] for f in range(slo, shi))
        for (slo, shi), _ in alignment.pairs
    )


class TestAnchoredExample:
    def test_mawsynram_pairs(self):
        a = align_spans(toks("Maw", "syn", "ram"), toks("_M", "aws", "yn", "ram"))
        assert a.pairs == (((0, 2), (0, 3)), ((2, 3), (3, 4)))

    def test_mawsynram_span_surfaces(self):
        scorer = toks("Maw", "syn", "ram")
        a = align_spans(scorer, toks("_M", "aws", "yn", "ram"))
        assert span_surfaces(a, scorer) == ("Mawsyn", "ram")

    def test_identity_alignment(self):
        a = align_spans(tokenize_scorer("a b"), tokenize_scorer("a b"))
        assert a.pairs == (((0, 1), (0, 1)), ((1, 2), (1, 2)))

    def test_offset_cut(self):
        a = align_spans(toks("ab", "c"), toks("a", "bc"))
        assert a.pairs == (((0, 2), (0, 2)),)

    def test_live_tokenizers_agree_on_real_text(self):
        text = "Mawsynram is the wettest place"
        a = align_spans(tokenize_scorer(text), tokenize_model(text))
        assert a.pairs[0] == ((0, 2), (0, 3))  # Maw+syn vs M+aws+yn

    def test_empty_both_sides(self):
        a = align_spans(toks(), toks())
        assert a.pairs == ()


class TestFilteredCoordinates:
    def test_markers_are_skipped(self):
        scorer = toks("x", "y")
        model = toks("x", "[1]", "y", markers={1})
        a = align_spans(scorer, model)
        assert a.pairs == (((0, 1), (0, 1)), ((1, 2), (1, 2)))
        assert a.model_indices == (0, 2)

    def test_marker_inside_content_span(self):
        # One scorer token spans model tokens that surround a marker.
        scorer = toks("xy")
        model = toks("x", "[1]", "y", markers={1})
        a = align_spans(scorer, model)
        assert a.pairs == (((0, 1), (0, 2)),)
        assert a.model_indices == (0, 2)

    def test_specials_are_skipped(self):
        scorer = toks("a")
        model = toks("</s>", "a", specials={0})
        a = align_spans(scorer, model)
        assert a.pairs == (((0, 1), (0, 1)),)
        assert a.model_indices == (1,)

    def test_blank_content_token_rejected(self):
        with pytest.raises(AlignmentError):
            align_spans(toks("a"), toks("_", "a"))


class TestAlignmentErrors:
    def test_mismatch_reports_residuals(self):
        with pytest.raises(AlignmentError) as err:
            align_spans(toks("abc"), toks("abd"))
        assert err.value.residual_a.startswith("c")
        assert err.value.residual_b.startswith("d")

    def test_one_side_longer(self):
        with pytest.raises(AlignmentError):
            align_spans(toks("ab"), toks("ab", "c"))

    def test_one_side_empty(self):
        with pytest.raises(AlignmentError):
            align_spans(toks("a"), toks())


class TestSpanAlignmentInvariant:
    def test_gap_rejected(self):
        with pytest.raises(ContractError):
            SpanAlignment(
                pairs=(((0, 1), (0, 1)), ((2, 3), (1, 2))),
                scorer_indices=(0, 1, 2),
                model_indices=(0, 1),
            )

    def test_partial_cover_rejected(self):
        with pytest.raises(ContractError):
            SpanAlignment(
                pairs=(((0, 1), (0, 1)),),
                scorer_indices=(0, 1),
                model_indices=(0,),
            )


def random_pair(rng, max_tokens=12):
    """A random string cut twice into at most max_tokens pieces per side."""
    word = "".join(rng.choice("abc") for _ in range(rng.randint(2, 14)))

    def cuts():
        k = rng.randint(0, min(len(word) - 1, max_tokens - 1))
        points = sorted(rng.sample(range(1, len(word)), k))
        return [word[i:j] for i, j in zip([0] + points, points + [len(word)])]

    return cuts(), cuts()


class TestOracleEquivalence:
    def test_random_pairs_match_exhaustive_search(self):
        rng = random.Random(2024)
        for _ in range(60):
            left, right = random_pair(rng)
            got = align_spans(toks(*left), toks(*right))
            expected = minimal_alignment_oracle(left, right)
            assert expected is not None
            assert list(got.pairs) == expected

    def test_pairs_are_unsplittable(self):
        rng = random.Random(77)
        for _ in range(40):
            left, right = random_pair(rng)
            a = align_spans(toks(*left), toks(*right))
            for (slo, shi), (mlo, mhi) in a.pairs:
                for s_cut in range(slo + 1, shi):
                    for m_cut in range(mlo + 1, mhi):
                        assert "".join(left[slo:s_cut]) != "".join(right[mlo:m_cut])


class TestMapWeights:
    def test_many_to_one_takes_mean(self):
        scorer = toks("a", "b", "cd")
        model = toks("abcd")
        a = align_spans(scorer, model)
        w = map_weights([0.3, 0.6, 0.9], a, model)
        assert w == [pytest.approx((0.3 + 0.6 + 0.9) / 3)]

    def test_one_to_many_broadcasts(self):
        scorer = toks("King")
        model = toks("K", "ing")
        a = align_spans(scorer, model)
        assert map_weights([0.7], a, model) == [0.7, 0.7]

    def test_identity_preserves_weights(self):
        scorer = toks("a", "b")
        model = toks("a", "b")
        a = align_spans(scorer, model)
        assert map_weights([0.2, 0.8], a, model) == [0.2, 0.8]

    def test_citation_marker_gets_exactly_one(self):
        scorer = toks("x", "y")
        model = toks("x", "[2]", "y", markers={1})
        a = align_spans(scorer, model)
        assert map_weights([0.0, 0.5], a, model) == [0.0, 1.0, 0.5]

    def test_length_mismatch_rejected(self):
        scorer = toks("a")
        model = toks("a")
        a = align_spans(scorer, model)
        with pytest.raises(ContractError):
            map_weights([0.1, 0.2], a, model)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8),
        st.integers(min_value=0, max_value=10_000),
    )
    @settings(max_examples=100)
    def test_range_preservation(self, u, seed):
        """Every mapped non-marker weight stays within [min(U), max(U)]."""
        rng = random.Random(seed)
        word = "".join(rng.choice("ab") for _ in range(len(u)))
        left = [word[i] for i in range(len(u))]
        k = rng.randint(0, len(word) - 1)
        points = sorted(rng.sample(range(1, len(word)), k)) if k else []
        right = [word[i:j] for i, j in zip([0] + points, points + [len(word)])]
        model = toks(*right)
        a = align_spans(toks(*left), model)
        w = map_weights(u, a, model)
        assert all(min(u) - 1e-12 <= x <= max(u) + 1e-12 for x in w)
