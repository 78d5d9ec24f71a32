"""Command-line surface: exit codes, outputs, manifests, overrides."""
from __future__ import annotations

import json
import os

import pytest

from calf import __version__
from calf.cli import main
from calf.corpus import load_instances
from calf.loop import load_candidates
from calf.manifest import verify_manifest
from calf.trainer import load_checkpoint
from conftest import FIXTURES

INSTANCES = str(FIXTURES / "instances.jsonl")
CANDIDATES0 = str(FIXTURES / "candidates_iter0.jsonl")
CANDIDATES1 = str(FIXTURES / "candidates_iter1.jsonl")


def stdout_lines(capsys):
    out = capsys.readouterr().out
    return [line for line in out.splitlines() if line]


class TestParser:
    def test_unknown_flag_prints_usage_and_exits_1(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["align", "--bogus"])
        assert err.value.code == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 1

    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 1

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
        assert f"calf {__version__}" in capsys.readouterr().out


class TestExitCodes:
    def test_missing_input_file_is_2(self, capsys):
        code = main(["eval", "--instances", "/nonexistent.jsonl",
                     "--answers", CANDIDATES0])
        assert code == 2
        assert "eval" in capsys.readouterr().err

    def test_contract_violation_is_1(self, capsys):
        # A binarization threshold outside (0, 1) breaks the scorer contract.
        code = main(["eval", "--instances", INSTANCES, "--answers", CANDIDATES0,
                     "--threshold", "1.5"])
        assert code == 1

    def test_malformed_jsonl_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("this is not json\n", encoding="utf-8")
        code = main(["eval", "--instances", str(bad), "--answers", CANDIDATES0])
        assert code == 2

    def test_bad_config_file_is_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"theta_strat": 0.9}', encoding="utf-8")
        code = main(["eval", "--config", str(cfg),
                     "--instances", INSTANCES, "--answers", CANDIDATES0])
        assert code == 2
        assert "theta_strat" in capsys.readouterr().err


class TestAlign:
    def test_stdout_has_one_record_per_answer(self, capsys):
        instances = load_instances(INSTANCES)
        expected = len(load_candidates(CANDIDATES0, {i.id: i for i in instances}))
        assert main(["align", "--instances", INSTANCES, "--answers", CANDIDATES0]) == 0
        lines = stdout_lines(capsys)
        assert len(lines) == expected
        for line in lines:
            record = json.loads(line)
            assert set(record) >= {"instance_id", "scorer_tokens", "model_tokens", "pairs"}
            for (slo, shi), (mlo, mhi) in record["pairs"]:
                assert 0 <= slo < shi <= len(record["scorer_tokens"])
                assert 0 <= mlo < mhi <= len(record["model_tokens"])

    def test_out_file_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "align.jsonl"
        assert main(["align", "--instances", INSTANCES, "--answers", CANDIDATES0,
                     "--out", str(out)]) == 0
        assert out.exists()
        manifest_path = str(out) + ".manifest.json"
        assert verify_manifest(manifest_path) == []
        data = json.loads(open(manifest_path).read())
        assert data["command"] == "align"
        assert list(data["outputs"]) == ["align.jsonl"]


class TestShap:
    def test_weights_are_normalized_per_sentence(self, capsys):
        assert main(["shap", "--instances", INSTANCES, "--answers", CANDIDATES1]) == 0
        lines = stdout_lines(capsys)
        assert lines
        for line in lines:
            record = json.loads(line)
            for sentence in record["sentences"]:
                values = sentence["normalized"]
                assert all(0.0 <= v <= 1.0 for v in values)
                assert sentence["method"] in ("exact", "monte_carlo")
                assert len(sentence["tokens"]) == len(values)


class TestFilter:
    def test_summary_and_output(self, tmp_path, capsys):
        out = tmp_path / "passed.jsonl"
        code = main(["filter", "--instances", INSTANCES,
                     "--candidates", CANDIDATES0, "--out", str(out)])
        assert code == 0
        summary = json.loads(stdout_lines(capsys)[-1])
        assert set(summary) == {"theta", "candidates", "accepted"}
        assert 0.0 < summary["theta"] <= 0.9
        assert 0 < summary["accepted"] <= summary["candidates"]
        kept = [json.loads(l) for l in out.read_text().splitlines() if l]
        assert len(kept) == summary["accepted"]
        assert verify_manifest(str(out) + ".manifest.json") == []


class TestWeights:
    def test_training_set_schema(self, tmp_path, capsys):
        out = tmp_path / "train.jsonl"
        assert main(["weights", "--instances", INSTANCES, "--answers", CANDIDATES1,
                     "--out", str(out)]) == 0
        rows = [json.loads(l) for l in out.read_text().splitlines() if l]
        assert rows
        for row in rows:
            assert set(row) == {"instance_id", "prompt", "answer", "tokens",
                                "weights", "origin"}
            assert len(row["tokens"]) == len(row["weights"])
            assert row["tokens"][-1] == "</s>"
            assert row["weights"][-1] == 0.02
            assert all(0.0 <= w <= 1.0 for w in row["weights"])
        assert verify_manifest(str(out) + ".manifest.json") == []

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        blobs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            assert main(["weights", "--instances", INSTANCES,
                         "--answers", CANDIDATES1, "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


class TestLoop:
    def test_full_run_writes_everything(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = main(["loop", "--instances", INSTANCES,
                     "--candidates", CANDIDATES0, CANDIDATES1,
                     "--out", str(out_dir)])
        assert code == 0
        report = json.loads(stdout_lines(capsys)[-1])
        assert report["iterations"] == len(report["history"]) == len(report["thetas"])
        assert report["iterations"] >= 1
        for name in ("training_set.jsonl", "loop_report.json", "manifest.json"):
            assert (out_dir / name).exists()
        for k in range(report["iterations"]):
            assert (out_dir / f"training_set_iter{k}.jsonl").exists()
        assert verify_manifest(str(out_dir / "manifest.json")) == []

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        blobs = []
        for name in ("run_a", "run_b"):
            out_dir = tmp_path / name
            assert main(["loop", "--instances", INSTANCES,
                         "--candidates", CANDIDATES0, CANDIDATES1,
                         "--out", str(out_dir)]) == 0
            blobs.append(
                (
                    (out_dir / "training_set.jsonl").read_bytes(),
                    (out_dir / "manifest.json").read_bytes(),
                )
            )
        assert blobs[0] == blobs[1]


@pytest.fixture()
def training_set(tmp_path_factory):
    path = tmp_path_factory.mktemp("ts") / "train.jsonl"
    code = main(["weights", "--instances", INSTANCES, "--answers", CANDIDATES1,
                 "--out", str(path)])
    assert code == 0
    return str(path)


class TestTrainToy:
    def test_outputs_and_manifest(self, tmp_path, training_set, capsys):
        out_dir = tmp_path / "model"
        code = main(["train-toy", "--train-set", training_set, "--out", str(out_dir),
                     "--steps", "5", "--lr", "0.1"])
        assert code == 0
        summary = json.loads(stdout_lines(capsys)[-1])
        assert summary["steps"] == 5
        assert summary["final_loss"] > 0.0
        ckpt = load_checkpoint(str(out_dir / "checkpoint.json"))
        assert len(ckpt.vocab) > 2
        trace_lines = (out_dir / "trace.csv").read_text().splitlines()
        assert trace_lines[0] == "step,loss"
        assert len(trace_lines) == 1 + 5
        assert verify_manifest(str(out_dir / "manifest.json")) == []

    def test_nll_mode_smoke(self, tmp_path, training_set, capsys):
        out_dir = tmp_path / "model"
        assert main(["train-toy", "--train-set", training_set, "--out", str(out_dir),
                     "--steps", "2", "--loss", "nll"]) == 0

    def test_empty_training_set_is_2(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        assert main(["train-toy", "--train-set", str(empty),
                     "--out", str(tmp_path / "m")]) == 2


class TestEval:
    def test_report_shape(self, capsys):
        assert main(["eval", "--instances", INSTANCES, "--answers", CANDIDATES1]) == 0
        report = json.loads(stdout_lines(capsys)[-1])
        assert set(report) == {"instances", "aggregate", "count"}
        assert report["count"] == len(report["instances"])
        assert set(report["aggregate"]) == {
            "citation_recall",
            "citation_precision",
            "citation_recall_binary",
            "citation_precision_binary",
            "correctness",
            "grounded_correctness",
            "citation_f1_binary",
        }

    def test_jobs_flag_does_not_change_report(self, capsys):
        assert main(["eval", "--instances", INSTANCES, "--answers", CANDIDATES1]) == 0
        single = stdout_lines(capsys)[-1]
        assert main(["eval", "--instances", INSTANCES, "--answers", CANDIDATES1,
                     "--jobs", "4"]) == 0
        assert stdout_lines(capsys)[-1] == single


def one_instance_corpus(tmp_path):
    instances = tmp_path / "one.jsonl"
    answers = tmp_path / "one_answers.jsonl"
    src = load_instances(INSTANCES)[0]
    with open(INSTANCES, encoding="utf-8") as fh:
        instances.write_text(fh.readline(), encoding="utf-8")
    answers.write_text(
        json.dumps({"instance_id": src.id, "answer": src.gold_answer}) + "\n",
        encoding="utf-8",
    )
    return str(instances), str(answers)


class TestConfigPrecedence:
    def test_scorer_flag_overrides_remote_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps({"scorer": {"kind": "remote", "endpoint": "http://127.0.0.1:9"}}),
            encoding="utf-8",
        )
        instances, answers = one_instance_corpus(tmp_path)
        # The dead endpoint from the config must never be contacted.
        code = main(["eval", "--config", str(cfg), "--scorer", "lexical",
                     "--instances", instances, "--answers", answers])
        assert code == 0

    def test_remote_config_without_override_fails(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps({"scorer": {"kind": "remote", "endpoint": "http://127.0.0.1:9"}}),
            encoding="utf-8",
        )
        instances, answers = one_instance_corpus(tmp_path)
        code = main(["eval", "--config", str(cfg),
                     "--instances", instances, "--answers", answers])
        assert code == 2

    def test_endpoint_flag_forces_remote(self, tmp_path, capsys):
        instances, answers = one_instance_corpus(tmp_path)
        code = main(["eval", "--endpoint", "http://127.0.0.1:9",
                     "--instances", instances, "--answers", answers])
        assert code == 2

    def test_scorer_remote_with_endpoint_flag_reaches_network(self, tmp_path, capsys):
        # Both flags together must survive config validation (exit 2, a
        # scoring failure at the dead endpoint, not exit 1 at resolution).
        instances, answers = one_instance_corpus(tmp_path)
        code = main(["eval", "--scorer", "remote", "--endpoint", "http://127.0.0.1:9",
                     "--instances", instances, "--answers", answers])
        assert code == 2

    def test_seed_override_lands_in_manifest(self, tmp_path, capsys):
        out = tmp_path / "w.jsonl"
        assert main(["weights", "--instances", INSTANCES, "--answers", CANDIDATES1,
                     "--out", str(out), "--seed", "99"]) == 0
        data = json.loads(open(str(out) + ".manifest.json").read())
        assert data["master_seed"] == 99
        assert data["config"]["master_seed"] == 99

    def test_jobs_never_recorded_in_manifest(self, tmp_path, capsys):
        out = tmp_path / "w.jsonl"
        assert main(["weights", "--instances", INSTANCES, "--answers", CANDIDATES1,
                     "--out", str(out), "--jobs", "4"]) == 0
        data = json.loads(open(str(out) + ".manifest.json").read())
        assert "jobs" not in data["config"]
