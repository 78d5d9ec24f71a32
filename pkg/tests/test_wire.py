"""Wire-protocol conformance checker and its canned batches."""
from __future__ import annotations

import pytest

from calf.errors import ContractError, DataError
from calf.testing import (
    ReferenceServer,
    check_score_endpoint,
    load_wire_batches,
    score_url,
)


class TestCannedBatches:
    def test_ten_batches_ship_with_the_package(self):
        batches = load_wire_batches()
        assert len(batches) == 10

    def test_every_pair_is_well_formed(self):
        for batch in load_wire_batches():
            assert batch
            for pair in batch:
                assert set(pair) == {"claim", "evidence"}
                assert pair["claim"].strip()
                assert pair["evidence"]

    def test_batches_include_a_duplicate_pair(self):
        # Duplicates exercise caching layers without changing wire semantics.
        seen = set()
        dup = False
        for batch in load_wire_batches():
            for pair in batch:
                key = (pair["claim"], pair["evidence"])
                dup = dup or key in seen
                seen.add(key)
        assert dup


class TestScoreUrl:
    def test_suffix_rules(self):
        assert score_url("http://h:1") == "http://h:1/score"
        assert score_url("http://h:1/") == "http://h:1/score"
        assert score_url("http://h:1/score") == "http://h:1/score"

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            score_url("")


class TestConformance:
    def test_reference_server_passes(self):
        with ReferenceServer() as base:
            problems = check_score_endpoint(base)
        assert problems == []

    def test_custom_batches(self):
        batches = [[{"claim": "water boils", "evidence": "Water boils."}]]
        with ReferenceServer() as base:
            assert check_score_endpoint(base, batches=batches) == []

    def test_dead_endpoint_reports_problems(self):
        problems = check_score_endpoint("http://127.0.0.1:9", timeout=0.2)
        assert problems
        assert any("batch 1" in p for p in problems)


class TestLoadWireBatchesValidation:
    def test_malformed_file_rejected(self, tmp_path):
        bad = tmp_path / "batches.json"
        bad.write_text('[{"claim": "not wrapped in a batch"}]')
        with pytest.raises(DataError):
            load_wire_batches(str(bad))

    def test_non_list_rejected(self, tmp_path):
        bad = tmp_path / "batches.json"
        bad.write_text('{"batches": []}')
        with pytest.raises(DataError):
            load_wire_batches(str(bad))
