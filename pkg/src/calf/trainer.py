"""A tiny autoregressive LM exercising the weighted-loss machinery.

The model predicts the next token from the concatenated embeddings of a
fixed-width context window through a single linear layer and softmax.
That is deliberately the smallest architecture with shared parameters
where down-weighting filler tokens measurably helps the heavily weighted
ones, while every gradient stays hand-derivable.

Loss conventions: the stream is [BOS] + prompt tokens + answer tokens, the
loss runs over answer positions only, and both losses normalize by the
answer length |y|. The focused loss multiplies each position's NLL by its
example weight; with all weights 1 it reduces to the plain NLL exactly,
gradients included.

Training is full-batch plain gradient descent in float64 with a fixed
reduction order, so identical inputs give bit-identical parameters.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DataError, TrainingDivergedError
from .loop import TrainingExample
from .manifest import atomic_write_text
from .seeding import stable_seed
from .tokenizers import Token, Tokenization, tokenize_model

BOS_SURFACE = "<s>"
EOS_SURFACE = "</s>"
DEFAULT_CONTEXT_WINDOW = 2
DEFAULT_EMBED_DIM = 12


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    steps: int = 100
    eos_weight: float = 0.02
    loss_mode: str = "focused"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be positive")
        if self.steps < 0:
            raise ContractError("steps must be >= 0")
        if not 0.0 < self.eos_weight <= 1.0:
            raise ContractError("eos_weight must lie in (0, 1]")
        if self.loss_mode not in ("nll", "focused"):
            raise ContractError(f"unknown loss_mode {self.loss_mode!r}")


@dataclass(frozen=True)
class ToyLM:
    """vocab maps id -> surface; embed is (V, d); out_w is (window*d, V)."""

    vocab: tuple[str, ...]
    context_window: int
    embed: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if len(set(self.vocab)) != len(self.vocab):
            raise ContractError("vocabulary has duplicate surfaces")
        v, d = self.embed.shape
        if v != len(self.vocab) or self.out_w.shape != (self.context_window * d, v):
            raise ContractError("parameter shapes are inconsistent")

    @property
    def token_to_id(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.vocab)}

    def copy(self) -> ToyLM:
        return ToyLM(
            vocab=self.vocab,
            context_window=self.context_window,
            embed=self.embed.copy(),
            out_w=self.out_w.copy(),
            out_b=self.out_b.copy(),
            seed=self.seed,
        )


def new_toy_lm(
    content_vocab,
    context_window: int = DEFAULT_CONTEXT_WINDOW,
    embed_dim: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
) -> ToyLM:
    """Fresh model over the given surfaces plus BOS/EOS, seeded init."""
    vocab = []
    for special in (BOS_SURFACE, EOS_SURFACE):
        if special not in content_vocab:
            vocab.append(special)
    vocab.extend(sorted(set(content_vocab)))
    rng = np.random.default_rng(seed)
    v = len(vocab)
    return ToyLM(
        vocab=tuple(vocab),
        context_window=context_window,
        embed=rng.standard_normal((v, embed_dim)) * 0.1,
        out_w=rng.standard_normal((context_window * embed_dim, v)) * 0.1,
        out_b=np.zeros(v),
        seed=seed,
    )


def build_vocabulary(examples) -> list[str]:
    """Every surface a model will meet in these examples' streams."""
    surfaces: set[str] = set()
    for ex in examples:
        surfaces.update(t.surface for t in tokenize_model(ex.prompt_text).tokens)
        surfaces.update(t.surface for t in ex.model_tokens.tokens)
    surfaces.discard(BOS_SURFACE)
    surfaces.discard(EOS_SURFACE)
    return sorted(surfaces)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def _stream_ids(model: ToyLM, example: TrainingExample) -> tuple[list[int], int]:
    """Token ids of [BOS] + prompt + answer; returns (ids, answer_start)."""
    t2i = model.token_to_id
    ids: list[int] = []
    if BOS_SURFACE in t2i:
        ids.append(t2i[BOS_SURFACE])
    prompt_tokens = tokenize_model(example.prompt_text).tokens if example.prompt_text else ()
    for tok in prompt_tokens:
        if tok.surface not in t2i:
            raise ContractError(f"token {tok.surface!r} not in vocabulary")
        ids.append(t2i[tok.surface])
    answer_start = len(ids)
    for tok in example.model_tokens.tokens:
        if tok.surface not in t2i:
            raise ContractError(f"token {tok.surface!r} not in vocabulary")
        ids.append(t2i[tok.surface])
    return ids, answer_start


def _context(ids: list[int], pos: int, window: int, pad_id: int) -> list[int]:
    ctx = ids[max(0, pos - window) : pos]
    return [pad_id] * (window - len(ctx)) + ctx


def _position_nlls(model: ToyLM, example: TrainingExample) -> np.ndarray:
    """NLL of each answer token under the current parameters."""
    ids, answer_start = _stream_ids(model, example)
    pad_id = model.token_to_id.get(BOS_SURFACE, 0)
    out = np.empty(len(ids) - answer_start)
    for j, pos in enumerate(range(answer_start, len(ids))):
        ctx = _context(ids, pos, model.context_window, pad_id)
        x = model.embed[ctx].reshape(-1)
        probs = _softmax(x @ model.out_w + model.out_b)
        # A fully underflowed target probability yields inf, which the
        # divergence check in train() turns into an error; the numpy
        # warning would be noise on that path.
        with np.errstate(divide="ignore"):
            out[j] = -np.log(probs[ids[pos]])
    return out


def _answer_weights(example: TrainingExample, loss_mode: str) -> np.ndarray:
    n = len(example.model_tokens.tokens)
    if loss_mode == "nll":
        return np.ones(n)
    if len(example.weights) != n:
        raise ContractError(
            f"{len(example.weights)} weights for {n} answer tokens"
        )
    return np.asarray(example.weights, dtype=np.float64)


def nll_loss(model: ToyLM, example: TrainingExample) -> float:
    """Mean NLL over answer tokens (prompt positions carry no loss)."""
    nlls = _position_nlls(model, example)
    if nlls.size == 0:
        raise ContractError("example has no answer tokens")
    return float(nlls.sum() / nlls.size)


def focused_loss(model: ToyLM, example: TrainingExample) -> float:
    """Per-token NLL scaled by the example's relevance weights, mean over |y|."""
    nlls = _position_nlls(model, example)
    if nlls.size == 0:
        raise ContractError("example has no answer tokens")
    w = _answer_weights(example, "focused")
    return float((w * nlls).sum() / nlls.size)


def gradients(model: ToyLM, example: TrainingExample, loss_mode: str) -> dict[str, np.ndarray]:
    """Analytic gradients of the selected loss for one example.

    Per answer position t: dlogits = (p - onehot(y_t)) * w_t / |y|, pushed
    through the linear layer and back into the context embeddings.
    """
    if loss_mode not in ("nll", "focused"):
        raise ContractError(f"unknown loss_mode {loss_mode!r}")
    ids, answer_start = _stream_ids(model, example)
    n_answer = len(ids) - answer_start
    if n_answer == 0:
        raise ContractError("example has no answer tokens")
    w = _answer_weights(example, loss_mode)
    pad_id = model.token_to_id.get(BOS_SURFACE, 0)
    d = model.embed.shape[1]

    g_embed = np.zeros_like(model.embed)
    g_out_w = np.zeros_like(model.out_w)
    g_out_b = np.zeros_like(model.out_b)

    for j, pos in enumerate(range(answer_start, len(ids))):
        ctx = _context(ids, pos, model.context_window, pad_id)
        x = model.embed[ctx].reshape(-1)
        probs = _softmax(x @ model.out_w + model.out_b)
        dlogits = probs.copy()
        dlogits[ids[pos]] -= 1.0
        dlogits *= w[j] / n_answer
        g_out_w += np.outer(x, dlogits)
        g_out_b += dlogits
        dx = model.out_w @ dlogits
        for slot, token_id in enumerate(ctx):
            g_embed[token_id] += dx[slot * d : (slot + 1) * d]
    return {"embed": g_embed, "out_w": g_out_w, "out_b": g_out_b}


def train(
    model: ToyLM, dataset: list[TrainingExample], config: TrainConfig
) -> tuple[ToyLM, list[tuple[int, float]]]:
    """Full-batch gradient descent; returns (new model, per-step loss trace).

    The loss recorded at step s is the pre-update batch mean. Gradients are
    averaged over the dataset in its given order, so runs are bit-identical
    for identical inputs.
    """
    if not dataset:
        raise ContractError("dataset is empty")
    current = model.copy()
    loss_fn = nll_loss if config.loss_mode == "nll" else focused_loss
    trace: list[tuple[int, float]] = []
    for step in range(config.steps):
        total = {
            "embed": np.zeros_like(current.embed),
            "out_w": np.zeros_like(current.out_w),
            "out_b": np.zeros_like(current.out_b),
        }
        batch_loss = 0.0
        for ex in dataset:
            batch_loss += loss_fn(current, ex)
            g = gradients(current, ex, config.loss_mode)
            for key in total:
                total[key] += g[key]
        batch_loss /= len(dataset)
        if not np.isfinite(batch_loss):
            raise TrainingDivergedError(step=step, loss=batch_loss)
        trace.append((step, batch_loss))
        scale = config.learning_rate / len(dataset)
        current = ToyLM(
            vocab=current.vocab,
            context_window=current.context_window,
            embed=current.embed - scale * total["embed"],
            out_w=current.out_w - scale * total["out_w"],
            out_b=current.out_b - scale * total["out_b"],
            seed=current.seed,
        )
    return current, trace


def mean_nll_at(model: ToyLM, dataset: list[TrainingExample], positions) -> float:
    """Mean NLL over chosen answer positions, e.g. the designated fact slots.

    ``positions[i]`` lists answer-token indices for dataset[i].
    """
    values = []
    for ex, pos_list in zip(dataset, positions):
        nlls = _position_nlls(model, ex)
        values.extend(float(nlls[p]) for p in pos_list)
    if not values:
        raise ContractError("no positions selected")
    return sum(values) / len(values)


def save_checkpoint(model: ToyLM, path: str) -> None:
    payload = {
        "vocab": list(model.vocab),
        "context_window": model.context_window,
        "embed_dim": model.embed.shape[1],
        "seed": model.seed,
        "embed": model.embed.tolist(),
        "out_w": model.out_w.tolist(),
        "out_b": model.out_b.tolist(),
    }
    atomic_write_text(path, json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def load_checkpoint(path: str) -> ToyLM:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open: {exc}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON: {exc.msg}", path=path) from exc
    try:
        return ToyLM(
            vocab=tuple(payload["vocab"]),
            context_window=int(payload["context_window"]),
            embed=np.asarray(payload["embed"], dtype=np.float64),
            out_w=np.asarray(payload["out_w"], dtype=np.float64),
            out_b=np.asarray(payload["out_b"], dtype=np.float64),
            seed=int(payload["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad checkpoint: {exc}", path=path) from exc


def trace_csv(trace: list[tuple[int, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "loss"])
    for step, loss in trace:
        writer.writerow([step, repr(loss)])
    return buf.getvalue()


def synthetic_contrast_corpus(
    seed: int,
    n_questions: int = 6,
    fillers_per_answer: int = 3,
    n_filler_words: int = 8,
) -> tuple[list[TrainingExample], list[list[int]]]:
    """A corpus where each question's fact continuation competes with
    down-weighted filler continuations of the same prompt.

    Question qi contributes one fact example ([fact<qi>, EOS], fact weight
    1.0) plus fillers_per_answer examples answering the same prompt with a
    randomly drawn filler token at weight 0.1. The conflict is the point:
    uniform training splits the next-token mass evenly across all observed
    continuations, focused training concentrates it on the fact. Returns
    the examples and, per example, the answer positions holding fact
    tokens (empty for filler examples).
    """
    rng = np.random.default_rng(stable_seed(seed, "contrast-corpus"))
    examples: list[TrainingExample] = []
    fact_positions: list[list[int]] = []

    def add(qi: int, surface: str, weight: float) -> None:
        tokens = (Token(surface=surface), Token(surface=EOS_SURFACE, is_special=True))
        examples.append(
            TrainingExample(
                instance_id=f"syn-{qi}",
                prompt_text=f"q{qi}",
                answer_text=surface,
                model_tokens=Tokenization(tokens=tokens, source_text=surface),
                weights=(weight, 0.02),
                origin="seed",
            )
        )

    for qi in range(n_questions):
        add(qi, f"fact{qi}", 1.0)
        fact_positions.append([0])
        for z in rng.integers(0, n_filler_words, size=fillers_per_answer):
            add(qi, f"filler{int(z)}", 0.1)
            fact_positions.append([])
    return examples, fact_positions
