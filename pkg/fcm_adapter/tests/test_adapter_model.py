"""Backend loading, the offline scorer, and score clamping."""
from __future__ import annotations

import logging

import pytest

from fcm_adapter.model import (
    ModelLoadError,
    OfflineLexicalModel,
    clamp_scores,
    load_model,
)


class TestLoadModel:
    def test_offline_lexical(self):
        assert isinstance(load_model("offline-lexical"), OfflineLexicalModel)

    def test_unknown_identifier_aborts(self):
        with pytest.raises(ModelLoadError):
            load_model("alignscore-large")


class TestOfflineLexicalModel:
    def test_full_and_zero_overlap(self):
        model = OfflineLexicalModel()
        full, none = model.score_batch(
            [("rain falls", "rain falls on stone"), ("rain falls", "zebra grass")]
        )
        assert full == 1.0
        assert none == 0.0

    def test_partial_overlap(self):
        model = OfflineLexicalModel()
        [score] = model.score_batch([("rain falls hard", "rain stone")])
        assert score == pytest.approx(1 / 3)

    def test_identity_beats_unrelated(self):
        # Sanity fixture for the wrapped model: self-support dominates.
        model = OfflineLexicalModel()
        same, other = model.score_batch(
            [("the moon is bright", "the moon is bright"),
             ("the moon is bright", "tax law changed in 1987")]
        )
        assert same >= other

    def test_stopword_only_claim(self):
        model = OfflineLexicalModel()
        assert model.score_batch([("it is the", "anything")]) == [0.0]

    def test_deterministic(self):
        model = OfflineLexicalModel()
        pairs = [("rain falls", "rain falls"), ("fog", "fog and mud")]
        assert model.score_batch(pairs) == model.score_batch(pairs)


class TestClampScores:
    def test_in_range_untouched(self):
        assert clamp_scores([0.0, 0.5, 1.0]) == [0.0, 0.5, 1.0]

    def test_out_of_range_clamped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="fcm_adapter.model"):
            assert clamp_scores([1.5, -0.2, 0.5]) == [1.0, 0.0, 0.5]
        assert sum("clamped" in r.message for r in caplog.records) == 2
