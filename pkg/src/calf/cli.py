"""Command-line entry point.

Subcommands expose each pipeline stage for inspection (align, shap,
filter, weights), the full filtering loop, the toy trainer, and the
evaluation report. Every run that writes files also writes a manifest with
input/output digests; outputs are byte-stable across reruns and worker
counts.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import replace

from . import __version__
from .align import align_spans
from .corpus import load_instances, render_answer, strip_citations
from .errors import (
    CalfError,
    ContractError,
    DataError,
    ParseError,
    ProtocolError,
    ScoringError,
)
from .fcm import build_scorer
from .gate import dynamic_threshold, evaluate_corpus
from .loop import (
    LoopConfig,
    TrainingExample,
    default_config,
    load_candidates,
    load_config,
    run_loop,
)
from .manifest import RunManifest, canonical_json, file_digest
from .manifest import atomic_write_text
from .shapley import WeightsConfig, answer_weights
from .tokenizers import Token, Tokenization, tokenize_model, tokenize_scorer

_MARKER_SURFACE = re.compile(r"\s?\[\d+\]$")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract wants usage + exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="calf", description=__doc__)
    parser.add_argument("--version", action="version", version=f"calf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser, needs_scorer: bool = True) -> None:
        p.add_argument("--config", help="JSON config file overlaying the defaults")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--jobs", type=int, help="worker parallelism (never changes output)")
        if needs_scorer:
            p.add_argument("--scorer", choices=["lexical", "remote"], help="scorer kind")
            p.add_argument("--endpoint", help="remote scorer URL (or CALF_SCORER_ENDPOINT)")
            p.add_argument("--threshold", type=float, help="binarization threshold")

    p_align = sub.add_parser("align", help="dump cross-tokenizer span alignments")
    p_align.add_argument("--instances", required=True)
    p_align.add_argument("--answers", required=True)
    p_align.add_argument("--out")
    common(p_align, needs_scorer=False)

    p_shap = sub.add_parser("shap", help="dump per-sentence token weight attributions")
    p_shap.add_argument("--instances", required=True)
    p_shap.add_argument("--answers", required=True)
    p_shap.add_argument("--out")
    common(p_shap)

    p_filter = sub.add_parser("filter", help="one dynamic-threshold gating pass")
    p_filter.add_argument("--instances", required=True)
    p_filter.add_argument("--candidates", required=True)
    p_filter.add_argument("--out")
    common(p_filter)

    p_weights = sub.add_parser("weights", help="emit training examples with weights")
    p_weights.add_argument("--instances", required=True)
    p_weights.add_argument("--answers", required=True)
    p_weights.add_argument("--out", required=True)
    common(p_weights)

    p_loop = sub.add_parser("loop", help="full generate-filter-weight loop")
    p_loop.add_argument("--instances", required=True)
    p_loop.add_argument("--candidates", required=True, nargs="+",
                        help="one candidate JSONL per iteration, in order")
    p_loop.add_argument("--out", required=True, help="output directory")
    common(p_loop)

    p_train = sub.add_parser("train-toy", help="train the toy LM on a training set")
    p_train.add_argument("--train-set", required=True, dest="train_set")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--steps", type=int, default=100)
    p_train.add_argument("--lr", type=float, default=0.05)
    p_train.add_argument("--loss", choices=["nll", "focused"], default="focused")
    common(p_train, needs_scorer=False)

    p_eval = sub.add_parser("eval", help="citation and correctness report")
    p_eval.add_argument("--instances", required=True)
    p_eval.add_argument("--answers", required=True)
    p_eval.add_argument("--out")
    common(p_eval)

    return parser


def _resolve_config(args: argparse.Namespace) -> LoopConfig:
    config = load_config(args.config) if getattr(args, "config", None) else default_config()
    if getattr(args, "seed", None) is not None:
        config = replace(config, master_seed=args.seed)
    if getattr(args, "jobs", None) is not None:
        config = replace(config, jobs=args.jobs)
    scorer_cfg = config.scorer
    # Collect scorer overrides and apply them in one replace: the config
    # dataclass validates on construction, so partial combinations (kind
    # flipped to remote before the endpoint flag lands) must never exist.
    changes: dict[str, object] = {}
    if getattr(args, "scorer", None):
        changes["kind"] = args.scorer
        changes["endpoint"] = scorer_cfg.endpoint if args.scorer == "remote" else None
    if getattr(args, "endpoint", None):
        changes["kind"] = "remote"
        changes["endpoint"] = args.endpoint
    if getattr(args, "threshold", None) is not None:
        changes["binarize_threshold"] = args.threshold
    if changes:
        config = replace(config, scorer=replace(scorer_cfg, **changes))
    return config


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _write_manifest(
    path: str, command: str, config: LoopConfig, inputs: list[str], outputs: list[str]
) -> None:
    RunManifest(
        tool_version=__version__,
        command=command,
        master_seed=config.master_seed,
        config=config.to_dict(include_jobs=False),
        inputs={p: file_digest(p) for p in sorted(inputs)},
        outputs={p: file_digest(p) for p in sorted(outputs)},
    ).write(path)


def _cmd_align(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    instances = load_instances(args.instances)
    pairs = load_candidates(args.answers, {i.id: i for i in instances})
    lines = []
    for instance, answer in pairs:
        rendered = render_answer(answer)
        scorer_toks = tokenize_scorer(strip_citations(rendered))
        model_toks = tokenize_model(rendered)
        alignment = align_spans(scorer_toks, model_toks)
        lines.append(
            canonical_json(
                {
                    "instance_id": instance.id,
                    "scorer_tokens": list(scorer_toks.surfaces()),
                    "model_tokens": list(model_toks.surfaces()),
                    "pairs": [
                        [[slo, shi], [mlo, mhi]]
                        for (slo, shi), (mlo, mhi) in alignment.pairs
                    ],
                    "scorer_indices": list(alignment.scorer_indices),
                    "model_indices": list(alignment.model_indices),
                }
            )
        )
    _emit("\n".join(lines), args.out)
    if args.out:
        _write_manifest(
            args.out + ".manifest.json", "align", config,
            [args.instances, args.answers], [args.out],
        )
    return 0


def _cmd_shap(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scorer = build_scorer(config.scorer)
    instances = load_instances(args.instances)
    pairs = load_candidates(args.answers, {i.id: i for i in instances})
    lines = []
    for instance, answer in pairs:
        u = answer_weights(
            answer,
            instance.passages,
            scorer,
            WeightsConfig(
                exact_limit=config.exact_limit,
                mc_samples=config.mc_samples,
                master_seed=config.master_seed,
                instance_id=instance.id,
            ),
        )
        lines.append(canonical_json({"instance_id": instance.id, **u.to_debug_dict()}))
    _emit("\n".join(lines), args.out)
    if args.out:
        _write_manifest(
            args.out + ".manifest.json", "shap", config,
            [args.instances, args.answers], [args.out],
        )
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scorer = build_scorer(config.scorer)
    instances = load_instances(args.instances)
    by_id = {i.id: i for i in instances}
    pairs = load_candidates(args.candidates, by_id)
    result = dynamic_threshold(
        [(inst.id, ans) for inst, ans in pairs],
        {inst.id: inst.facts for inst, _ in pairs},
        {inst.id: inst.passages for inst, _ in pairs},
        scorer,
        min_size=config.min_viable_size,
        theta_start=config.theta_start,
        theta_step=config.theta_step,
        fact_threshold=config.scorer.binarize_threshold,
        jobs=config.jobs,
    )
    if args.out:
        lines = []
        for i in result.passing:
            inst, ans = pairs[i]
            lines.append(
                canonical_json(
                    {
                        "instance_id": inst.id,
                        "answer": render_answer(ans),
                        "metrics": result.metrics[i].as_dict(),
                    }
                )
            )
        atomic_write_text(args.out, "\n".join(lines) + "\n" if lines else "")
        _write_manifest(
            args.out + ".manifest.json", "filter", config,
            [args.instances, args.candidates], [args.out],
        )
    summary = {
        "theta": result.theta,
        "candidates": len(pairs),
        "accepted": len(result.passing),
    }
    sys.stdout.write(canonical_json(summary) + "\n")
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    from .loop import build_training_example, emit_training_set

    config = _resolve_config(args)
    scorer = build_scorer(config.scorer)
    instances = load_instances(args.instances)
    pairs = load_candidates(args.answers, {i.id: i for i in instances})
    examples = [
        build_training_example(inst, ans, scorer, config, origin="ingested")
        for inst, ans in pairs
    ]
    emit_training_set(examples, [], args.out)
    _write_manifest(
        args.out + ".manifest.json", "weights", config,
        [args.instances, args.answers], [args.out],
    )
    return 0


def _cmd_loop(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    instances = load_instances(args.instances)
    outcome = run_loop(instances, args.candidates, config, args.out)
    report = {
        "iterations": outcome.state.k,
        "history": [list(h) for h in outcome.state.history],
        "thetas": list(outcome.state.thetas),
        "accepted": len(outcome.state.accepted),
        "examples": len(outcome.state.examples),
    }
    report_path = os.path.join(args.out, "loop_report.json")
    atomic_write_text(report_path, canonical_json(report) + "\n")
    outputs = list(outcome.iteration_files) + [outcome.final_file, report_path]
    _write_manifest(
        os.path.join(args.out, "manifest.json"), "loop", config,
        [args.instances] + list(args.candidates), outputs,
    )
    sys.stdout.write(canonical_json(report) + "\n")
    return 0


def _load_training_set(path: str) -> list[TrainingExample]:
    from .corpus import iter_jsonl
    from .trainer import BOS_SURFACE, EOS_SURFACE

    examples = []
    for lineno, obj in iter_jsonl(path):
        try:
            tokens = tuple(
                Token(
                    surface=s,
                    is_special=s in (BOS_SURFACE, EOS_SURFACE),
                    is_citation_marker=bool(_MARKER_SURFACE.match(s)),
                )
                for s in obj["tokens"]
            )
            examples.append(
                TrainingExample(
                    instance_id=obj["instance_id"],
                    prompt_text=obj["prompt"],
                    answer_text=obj["answer"],
                    model_tokens=Tokenization(tokens=tokens, source_text=obj["answer"]),
                    weights=tuple(float(w) for w in obj["weights"]),
                    origin=obj["origin"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad training example: {exc}", path=path, line=lineno) from exc
    if not examples:
        raise DataError("training set is empty", path=path)
    return examples


def _cmd_train_toy(args: argparse.Namespace) -> int:
    from .trainer import (
        TrainConfig,
        build_vocabulary,
        new_toy_lm,
        save_checkpoint,
        trace_csv,
        train,
    )

    config = _resolve_config(args)
    dataset = _load_training_set(args.train_set)
    model = new_toy_lm(build_vocabulary(dataset), seed=config.master_seed)
    tcfg = TrainConfig(
        learning_rate=args.lr,
        steps=args.steps,
        loss_mode=args.loss,
        seed=config.master_seed,
    )
    trained, trace = train(model, dataset, tcfg)
    os.makedirs(args.out, exist_ok=True)
    ckpt = os.path.join(args.out, "checkpoint.json")
    trace_path = os.path.join(args.out, "trace.csv")
    save_checkpoint(trained, ckpt)
    atomic_write_text(trace_path, trace_csv(trace))
    _write_manifest(
        os.path.join(args.out, "manifest.json"), "train-toy", config,
        [args.train_set], [ckpt, trace_path],
    )
    final_loss = trace[-1][1] if trace else None
    sys.stdout.write(canonical_json({"steps": args.steps, "final_loss": final_loss}) + "\n")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scorer = build_scorer(config.scorer)
    instances = load_instances(args.instances)
    pairs = load_candidates(args.answers, {i.id: i for i in instances})
    if not pairs:
        raise DataError("no evaluable answers", path=args.answers)
    report = evaluate_corpus(
        [(inst.id, ans, inst.facts, inst.passages) for inst, ans in pairs],
        scorer,
        threshold=config.scorer.binarize_threshold,
        jobs=config.jobs,
    )
    text = canonical_json(report)
    sys.stdout.write(text + "\n")
    if args.out:
        atomic_write_text(args.out, text + "\n")
        _write_manifest(
            args.out + ".manifest.json", "eval", config,
            [args.instances, args.answers], [args.out],
        )
    return 0


_COMMANDS = {
    "align": _cmd_align,
    "shap": _cmd_shap,
    "filter": _cmd_filter,
    "weights": _cmd_weights,
    "loop": _cmd_loop,
    "train-toy": _cmd_train_toy,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ContractError as exc:
        print(f"calf {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DataError, ParseError, ScoringError, ProtocolError) as exc:
        print(f"calf {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"calf {args.command}: {exc}", file=sys.stderr)
        return 2
    except CalfError as exc:
        print(f"calf {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
